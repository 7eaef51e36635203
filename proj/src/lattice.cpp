#include "arw/lattice.hpp"

#include <algorithm>
#include <stdexcept>

namespace arw::lattice {

namespace {

// Largest cube (2M-1)^d we are willing to index densely.
constexpr int64_t kMaxCubeVolume = 50'000'000;

void enumerate(int dims, int radius, Norm norm, Point& current, int axis,
               int64_t norm_acc, std::vector<Point>& out) {
  const int lo = -(radius - 1);
  const int hi = radius - 1;
  for (int c = lo; c <= hi; ++c) {
    if (norm == Norm::euclidean) {
      const int64_t acc = norm_acc + static_cast<int64_t>(c) * c;
      if (acc >= static_cast<int64_t>(radius) * radius) continue;
      current[axis] = c;
      if (axis + 1 == dims)
        out.push_back(current);
      else
        enumerate(dims, radius, norm, current, axis + 1, acc, out);
    } else {
      current[axis] = c;
      if (axis + 1 == dims)
        out.push_back(current);
      else
        enumerate(dims, radius, norm, current, axis + 1, 0, out);
    }
  }
}

}  // namespace

std::vector<Point> neighbors(const Point& x) {
  std::vector<Point> out;
  out.reserve(2 * x.size());
  for (size_t axis = 0; axis < x.size(); ++axis) {
    for (int sign : {-1, +1}) {
      Point y = x;
      y[axis] += sign;
      out.push_back(std::move(y));
    }
  }
  return out;
}

Ball::Ball(int dims, int radius, Norm norm)
    : dims_(dims), radius_(radius), norm_(norm) {
  if (dims < 1) throw std::invalid_argument("Ball: dims must be >= 1");
  if (radius < 1) throw std::invalid_argument("Ball: radius must be >= 1");

  cube_side_ = 2 * static_cast<int64_t>(radius) - 1;
  int64_t volume = 1;
  for (int i = 0; i < dims; ++i) {
    volume *= cube_side_;
    if (volume > kMaxCubeVolume)
      throw std::invalid_argument("Ball: domain too large to index");
  }

  Point scratch(dims, 0);
  enumerate(dims, radius, norm, scratch, 0, 0, sites_);
  // Recursion on ascending coordinates yields lexicographic order already.

  cube_index_.assign(volume, -1);
  for (int32_t id = 0; id < size(); ++id) cube_index_[cube_key(sites_[id])] = id;

  origin_id_ = index_of(Point(dims, 0));

  neighbor_ids_.assign(static_cast<size_t>(size()) * 2 * dims, -1);
  for (int32_t id = 0; id < size(); ++id) {
    Point y = sites_[id];
    for (int axis = 0; axis < dims; ++axis) {
      for (int s = 0; s < 2; ++s) {
        const int sign = s == 0 ? -1 : +1;
        y[axis] += sign;
        neighbor_ids_[static_cast<size_t>(id) * 2 * dims + 2 * axis + s] =
            index_of(y);
        y[axis] -= sign;
      }
    }
  }
}

int64_t Ball::cube_key(const Point& x) const {
  int64_t key = 0;
  for (int i = 0; i < dims_; ++i)
    key = key * cube_side_ + (x[i] + radius_ - 1);
  return key;
}

int32_t Ball::index_of(const Point& x) const {
  if (static_cast<int>(x.size()) != dims_)
    throw std::invalid_argument("Ball::index_of: dimension mismatch");
  for (int i = 0; i < dims_; ++i)
    if (x[i] <= -radius_ || x[i] >= radius_) return -1;
  return cube_index_[cube_key(x)];
}

}  // namespace arw::lattice
