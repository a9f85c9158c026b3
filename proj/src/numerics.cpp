#include "cofactor_lab/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace coflab {

namespace {

// Kronrod-15 abscissae/weights on [-1,1]; the Gauss-7 weights pair with the
// odd-indexed nodes.
constexpr double kXgk[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769, -0.741531185599394,
    -0.586087235467691, -0.405845151377397, -0.207784955007898, 0.0,
    0.207784955007898,  0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};
constexpr double kWk[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
constexpr double kWg[7] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                           0.417959183673469, 0.381830050505119, 0.279705391489277,
                           0.129484966168870};

struct GkResult {
  double value;
  double error;
};

GkResult gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double k = 0.0, g = 0.0;
  for (int i = 0; i < 15; ++i) {
    const double v = f(c + h * kXgk[i]);
    k += kWk[i] * v;
    if (i % 2 == 1) g += kWg[i / 2] * v;
  }
  return {k * h, std::abs((k - g) * h)};
}

double integrate_rec(const std::function<double(double)>& f, double a, double b, double tol,
                     int depth, int max_depth) {
  GkResult r = gk15(f, a, b);
  // the relative floor keeps huge-magnitude integrands (blow-up monitoring)
  // from subdividing forever chasing an unreachable absolute tolerance
  if (r.error <= tol || r.error <= 1e-14 * std::abs(r.value)) return r.value;
  if (depth >= max_depth) {
    throw QuadratureError("quadrature failed to converge (error " + std::to_string(r.error) +
                          " above tolerance " + std::to_string(tol) + ")");
  }
  const double c = 0.5 * (a + b);
  return integrate_rec(f, a, c, 0.5 * tol, depth + 1, max_depth) +
         integrate_rec(f, c, b, 0.5 * tol, depth + 1, max_depth);
}

}  // namespace

double integrate_gk(const std::function<double(double)>& f, double a, double b, double abs_tol,
                    int max_depth) {
  if (a == b) return 0.0;
  return integrate_rec(f, a, b, abs_tol, 0, max_depth);
}

double line_integral(const std::function<VecD(const VecD&)>& omega, const VecD& base,
                     const VecD& target, const std::vector<VecD>& waypoints, double abs_tol) {
  std::vector<VecD> pts;
  pts.push_back(base);
  for (const auto& w : waypoints) pts.push_back(w);
  pts.push_back(target);

  const std::size_t dim = base.size();
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < pts.size(); ++s) {
    const VecD& p0 = pts[s];
    const VecD& p1 = pts[s + 1];
    VecD dir(dim);
    bool degenerate = true;
    for (std::size_t i = 0; i < dim; ++i) {
      dir[i] = p1[i] - p0[i];
      if (dir[i] != 0.0) degenerate = false;
    }
    if (degenerate) continue;
    auto f = [&](double t) {
      VecD q(dim);
      for (std::size_t i = 0; i < dim; ++i) q[i] = p0[i] + t * dir[i];
      return dot(omega(q), dir);
    };
    total += integrate_gk(f, 0.0, 1.0, abs_tol);
  }
  return total;
}

std::vector<VecD> sample_box(const VecD& lo, const VecD& hi, int count, std::uint64_t seed) {
  SampleRng rng(seed);
  std::vector<VecD> pts(count);
  for (int k = 0; k < count; ++k) {
    VecD q(lo.size());
    for (std::size_t i = 0; i < lo.size(); ++i) q[i] = rng.uniform(lo[i], hi[i]);
    pts[k] = std::move(q);
  }
  return pts;
}

namespace {

int thread_cap() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("COFACTOR_LAB_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1 && static_cast<unsigned>(cap) < hw) hw = static_cast<unsigned>(cap);
  }
  return static_cast<int>(hw);
}

}  // namespace

void parallel_for(int count, const std::function<void(int)>& fn) {
  const int workers = std::min(thread_cap(), count);
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr first_error = nullptr;
  std::mutex err_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (int i = w; i < count; i += workers) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

double central_diff(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

double central_diff5(const std::function<double(double)>& f, double x, double h) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12.0 * h);
}

}  // namespace coflab
