#include "arw/potential.hpp"

#include <Eigen/Sparse>
#include <cmath>
#include <stdexcept>

namespace arw::potential {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Vec = Eigen::VectorXd;

// I - P on the ball, with transitions to the exterior dropped (killing).
// Excluding `skip` removes that site's row and column, which is how the
// Dirichlet condition h(0) = 1 enters the hitting system.
SpMat assemble(const lattice::Ball& ball, int32_t skip) {
  const int32_t n = ball.size();
  const double inv_deg = 1.0 / (2.0 * ball.dims());
  auto reduced = [&](int32_t id) {
    return skip >= 0 && id > skip ? id - 1 : id;
  };
  const int32_t dim = skip >= 0 ? n - 1 : n;

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(dim) * (2 * ball.dims() + 1));
  for (int32_t s = 0; s < n; ++s) {
    if (s == skip) continue;
    trip.emplace_back(reduced(s), reduced(s), 1.0);
    for (int32_t nb : ball.neighbor_row(s)) {
      if (nb < 0 || nb == skip) continue;
      trip.emplace_back(reduced(s), reduced(nb), -inv_deg);
    }
  }
  SpMat mat(dim, dim);
  mat.setFromTriplets(trip.begin(), trip.end());
  return mat;
}

class KilledWalkSolver {
 public:
  explicit KilledWalkSolver(const SpMat& mat) : mat_(mat) {
    if (mat.rows() <= kDirectSolveMaxSites) {
      direct_.compute(mat_);
      if (direct_.info() != Eigen::Success)
        throw std::runtime_error("potential: factorization failed");
      use_direct_ = true;
    } else {
      cg_.setTolerance(1e-13);
      cg_.setMaxIterations(50'000);
      cg_.compute(mat_);
    }
  }

  Vec solve(const Vec& rhs) const {
    Vec x;
    if (use_direct_)
      x = direct_.solve(rhs);
    else
      x = cg_.solve(rhs);
    const double resid = (mat_ * x - rhs).cwiseAbs().maxCoeff();
    if (!(resid <= 1e-8 * (1.0 + rhs.cwiseAbs().maxCoeff())))
      throw std::runtime_error("potential: solver residual too large");
    return x;
  }

 private:
  SpMat mat_;
  bool use_direct_ = false;
  Eigen::SimplicialLDLT<SpMat> direct_;
  Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg_;
};

std::vector<double> to_std(const Vec& v) {
  return {v.data(), v.data() + v.size()};
}

}  // namespace

std::vector<double> solve_hitting(const lattice::Ball& ball) {
  const int32_t n = ball.size();
  const int32_t origin = ball.origin_id();
  std::vector<double> h(n, 0.0);
  h[origin] = 1.0;
  if (n == 1) return h;

  const double inv_deg = 1.0 / (2.0 * ball.dims());
  Vec rhs = Vec::Zero(n - 1);
  for (int32_t s = 0; s < n; ++s) {
    if (s == origin) continue;
    for (int32_t nb : ball.neighbor_row(s))
      if (nb == origin) rhs[s > origin ? s - 1 : s] += inv_deg;
  }
  const KilledWalkSolver solver(assemble(ball, origin));
  const Vec x = solver.solve(rhs);
  for (int32_t s = 0; s < n; ++s)
    if (s != origin) h[s] = x[s > origin ? s - 1 : s];
  return h;
}

std::vector<double> solve_exit_time(const lattice::Ball& ball) {
  const KilledWalkSolver solver(assemble(ball, -1));
  return to_std(solver.solve(Vec::Ones(ball.size())));
}

std::pair<std::vector<double>, double> green_row(const lattice::Ball& ball) {
  const KilledWalkSolver solver(assemble(ball, -1));
  Vec rhs = Vec::Zero(ball.size());
  rhs[ball.origin_id()] = 1.0;
  Vec g = solver.solve(rhs);
  return {to_std(g), g[ball.origin_id()]};
}

GreenTable build_green_table(const lattice::Ball& ball) {
  GreenTable table;
  table.h = solve_hitting(ball);

  const KilledWalkSolver solver(assemble(ball, -1));
  table.exit_time = to_std(solver.solve(Vec::Ones(ball.size())));
  Vec rhs = Vec::Zero(ball.size());
  rhs[ball.origin_id()] = 1.0;
  const Vec g = solver.solve(rhs);
  table.g_row0 = to_std(g);
  table.g00 = g[ball.origin_id()];
  return table;
}

double elhat_exact(const GreenTable& table, const lattice::Ball& ball) {
  double sum = 0.0, comp = 0.0;  // Kahan
  for (double v : table.h) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  const double via_green = table.exit_time[ball.origin_id()] / table.g00;
  if (!(std::abs(sum - via_green) <= 1e-8 * std::max(1.0, std::abs(via_green))))
    throw std::runtime_error(
        "elhat_exact: sum of hitting probabilities disagrees with "
        "exit_time(0)/g00");
  return sum;
}

}  // namespace arw::potential
