#pragma once

// Finite lattice balls in Z^d with dense site indexing.
//
// A Ball is the strict interior {x : ||x|| < M} (euclidean or sup norm).
// With this convention the killed-walk quantities on the line are exact:
// G_M(0,0) = M and E_0[tau_M] = M^2, which the rest of the code relies on.
// Sites are listed in lexicographic order and indexed by a dense int32 id;
// every other module works on flat arrays keyed by that id.

#include <cstdint>
#include <span>
#include <vector>

namespace arw::lattice {

using Point = std::vector<int32_t>;

enum class Norm { euclidean, sup };

// The 2d nearest neighbors of x, axis by axis, minus before plus:
// d=2: (x0-1,x1), (x0+1,x1), (x0,x1-1), (x0,x1+1).
// Jump directions elsewhere index into this order.
std::vector<Point> neighbors(const Point& x);

class Ball {
 public:
  // Throws std::invalid_argument for dims < 1, radius < 1, or domains too
  // large to index.
  Ball(int dims, int radius, Norm norm);

  int dims() const { return dims_; }
  int radius() const { return radius_; }
  Norm norm() const { return norm_; }

  int32_t size() const { return static_cast<int32_t>(sites_.size()); }
  const std::vector<Point>& sites() const { return sites_; }
  const Point& site(int32_t id) const { return sites_[id]; }

  int32_t origin_id() const { return origin_id_; }

  // Dense id of x, or -1 if x is not in the ball. Throws on dimension
  // mismatch.
  int32_t index_of(const Point& x) const;
  bool contains(const Point& x) const { return index_of(x) >= 0; }

  // Neighbor ids in the fixed direction order; -1 marks a site outside the
  // ball (the absorbing exterior).
  int32_t neighbor_id(int32_t site, int dir) const {
    return neighbor_ids_[static_cast<size_t>(site) * 2 * dims_ + dir];
  }
  std::span<const int32_t> neighbor_row(int32_t site) const {
    return {neighbor_ids_.data() + static_cast<size_t>(site) * 2 * dims_,
            static_cast<size_t>(2 * dims_)};
  }

 private:
  int64_t cube_key(const Point& x) const;

  int dims_;
  int radius_;
  Norm norm_;
  std::vector<Point> sites_;
  std::vector<int32_t> cube_index_;    // (2M-1)^d lookup, -1 outside ball
  std::vector<int32_t> neighbor_ids_;  // size() * 2d, row-major
  int32_t origin_id_ = -1;
  int64_t cube_side_ = 0;
};

}  // namespace arw::lattice
