#include "weyl/sampling.hpp"

#include <array>
#include <cmath>
#include <random>

namespace weyl {

namespace {

constexpr std::array<int, 6> kPrimes = {2, 3, 5, 7, 11, 13};

double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base;
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % static_cast<std::uint64_t>(base));
    i /= static_cast<std::uint64_t>(base);
    f *= inv;
  }
  return r;
}

}  // namespace

QuasiRandomSampler::QuasiRandomSampler(int dim, std::uint64_t seed) : dim_(dim) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  shift_.resize(static_cast<std::size_t>(dim));
  for (double& s : shift_) s = u(rng);
}

std::vector<double> QuasiRandomSampler::next_unit() {
  std::vector<double> u(static_cast<std::size_t>(dim_));
  for (int k = 0; k < dim_; ++k) {
    const double v = radical_inverse(index_, kPrimes[static_cast<std::size_t>(k)]) +
                     shift_[static_cast<std::size_t>(k)];
    u[static_cast<std::size_t>(k)] = v - std::floor(v);
  }
  ++index_;
  return u;
}

Point QuasiRandomSampler::next(const Chart& chart) {
  std::vector<double> u = next_unit();
  for (double& v : u) v = 1e-6 + (1.0 - 2e-6) * v;
  return chart.at_unit(u);
}

std::vector<Point> QuasiRandomSampler::points(const Chart& chart, int count, std::uint64_t seed) {
  QuasiRandomSampler s(chart.dim(), seed);
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(s.next(chart));
  return out;
}

}  // namespace weyl
