#pragma once

// Exact potential theory for simple random walk killed on exiting the ball.
//
// Conventions (strict-interior ball, walk killed at the first step outside):
//   h(x)        = P_x[tau_0 < tau_M], with h == 0 outside and h(0) == 1;
//   exit_time(x)= E_x[tau_M], solving u = 1 + Pu with u == 0 outside;
//   g_row0(x)   = G_M(0,x) = expected visits of the killed walk from 0 to x,
//                 the visit at time 0 included (so sum_x G_M(0,x) = E_0[tau_M]).
// On the line these are exact: h(x) = (M-|x|)/M, E_0[tau_M] = M^2 and
// G_M(0,0) = M.
//
// Systems with at most kDirectSolveMaxSites unknowns go through a sparse
// direct factorization; larger ones use conjugate gradients with a residual
// tolerance well below the 1e-10 promised to callers.

#include <utility>
#include <vector>

#include "arw/lattice.hpp"

namespace arw::potential {

constexpr int32_t kDirectSolveMaxSites = 20'000;

struct GreenTable {
  std::vector<double> h;          // P_x[tau_0 < tau_M]
  std::vector<double> g_row0;     // G_M(0, x)
  std::vector<double> exit_time;  // E_x[tau_M]
  double g00 = 0.0;               // G_M(0, 0)
};

std::vector<double> solve_hitting(const lattice::Ball& ball);
std::vector<double> solve_exit_time(const lattice::Ball& ball);
std::pair<std::vector<double>, double> green_row(const lattice::Ball& ball);

// All three solves over one ball; exit_time and the Green row share a
// factorization.
GreenTable build_green_table(const lattice::Ball& ball);

// Sum_x h(x) = E[L-hat]. Cross-checks the Green identity
// sum_x h(x) == exit_time(0)/g00 to 1e-8 relative and throws
// std::runtime_error on mismatch (a solver misconfiguration, not a caller
// error).
double elhat_exact(const GreenTable& table, const lattice::Ball& ball);

}  // namespace arw::potential
