#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include "cofactor_lab/linalg.hpp"

namespace coflab {

class QuadratureError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Adaptive Gauss-Kronrod (G7,K15) on [a,b] to an absolute tolerance.
double integrate_gk(const std::function<double(double)>& f, double a, double b,
                    double abs_tol = 1e-10, int max_depth = 48);

/// Line integral of a 1-form along the polyline base -> waypoints... -> target.
/// `omega(q)` returns the covariant components at q.
double line_integral(const std::function<VecD(const VecD&)>& omega, const VecD& base,
                     const VecD& target, const std::vector<VecD>& waypoints = {},
                     double abs_tol = 1e-10);

/// Deterministic, platform-independent sampling. mt19937_64 output is fully
/// specified by the standard; doubles are derived from the top 53 bits only.
class SampleRng {
public:
  explicit SampleRng(std::uint64_t seed) : eng_(seed) {}
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

private:
  std::mt19937_64 eng_;
};

/// `count` points uniform in the box [lo, hi], coordinates drawn in order.
std::vector<VecD> sample_box(const VecD& lo, const VecD& hi, int count, std::uint64_t seed);

/// Runs fn(i) for i in [0, count). Splits across threads capped by the
/// COFACTOR_LAB_THREADS environment variable; results must be written to
/// per-index slots so the outcome is independent of the split.
void parallel_for(int count, const std::function<void(int)>& fn);

/// Central finite difference d/dx of a scalar function, 2nd order.
double central_diff(const std::function<double(double)>& f, double x, double h);

/// 5-point central difference, 4th order.
double central_diff5(const std::function<double(double)>& f, double x, double h);

inline double fd_step(double x, double base = 1e-5) { return base * (1.0 + std::abs(x)); }

}  // namespace coflab
