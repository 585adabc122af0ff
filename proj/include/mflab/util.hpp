#pragma once
// Small shared utilities: deterministic RNG, hashing, worker pool, line fits.
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace mflab {

// splitmix64; used both as a generator and to expand seeds into streams.
// State transitions are pure 64-bit arithmetic, so sequences are identical
// across platforms (unlike std::uniform_real_distribution).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0,1)
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [a,b)
  double uniform(double a, double b) { return a + (b - a) * next_double(); }

  // derive an independent stream for a labelled subtask
  Rng fork(std::uint64_t label) {
    Rng r(state_ ^ (0xa0761d6478bd642fULL * (label + 1)));
    r.next_u64();
    return r;
  }

 private:
  std::uint64_t state_;
};

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline int worker_count() {
  if (const char* env = std::getenv("LAB_WORKERS")) {
    int w = std::atoi(env);
    if (w >= 1) return w;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : int(hc);
}

// Splits [0,n) into contiguous ranges across at most worker_count() threads.
// Each index must write only its own outputs; results are then independent
// of the thread count, so parallel runs reproduce serial runs exactly.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  int workers = worker_count();
  if (workers <= 1 || n < 2) {
    body(0, n);
    return;
  }
  std::size_t chunk = (n + workers - 1) / std::size_t(workers);
  std::vector<std::thread> threads;
  for (std::size_t lo = 0; lo < n; lo += chunk) {
    std::size_t hi = lo + chunk < n ? lo + chunk : n;
    threads.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& t : threads) t.join();
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Ordinary least squares y = slope*x + intercept. Needs >= 2 points; the
// callers that fit convergence rates enforce >= 3 themselves.
inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line: need >= 2 matched points");
  double n = double(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  double den = n * sxx - sx * sx;
  if (den == 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  double ss_tot = syy - sy * sy / n;
  double ss_res = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double e = y[i] - (f.slope * x[i] + f.intercept);
    ss_res += e * e;
  }
  f.r_squared = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return f;
}

}  // namespace mflab
