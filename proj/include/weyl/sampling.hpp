#pragma once

#include <cstdint>
#include <vector>

#include "weyl/expr.hpp"

namespace weyl {

/// Halton sequence with a seeded Cranley-Patterson rotation. Deterministic for
/// a given (dim, seed).
class QuasiRandomSampler {
 public:
  QuasiRandomSampler(int dim, std::uint64_t seed);

  /// Next point of [0,1)^dim.
  std::vector<double> next_unit();
  /// Next point inside the chart box, kept a small margin away from the faces.
  Point next(const Chart& chart);

  /// `count` points in the box.
  static std::vector<Point> points(const Chart& chart, int count, std::uint64_t seed);

 private:
  int dim_;
  std::uint64_t index_ = 1;
  std::vector<double> shift_;
};

}  // namespace weyl
