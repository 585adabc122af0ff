#include "mflab/grid.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <string>

namespace mflab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

bool factors_over_235(int n) {
  for (int p : {2, 3, 5})
    while (n % p == 0) n /= p;
  return n == 1;
}

}  // namespace

void GridSpec::validate() const {
  if (dim < 1 || dim > 3) throw std::invalid_argument("GridSpec: dim must be 1, 2 or 3");
  if (n < 8) throw std::invalid_argument("GridSpec: n must be at least 8");
  if (n % 2 != 0) throw std::invalid_argument("GridSpec: n must be even");
  if (!factors_over_235(n))
    throw std::invalid_argument("GridSpec: n must factor over {2,3,5}, got " + std::to_string(n));
  if (!(box_length > 0.0) || !std::isfinite(box_length))
    throw std::invalid_argument("GridSpec: box_length must be positive");
  if (!(dealias_fraction > 0.0) || dealias_fraction > 1.0)
    throw std::invalid_argument("GridSpec: dealias_fraction must lie in (0,1]");
}

std::size_t GridSpec::cell_count() const {
  std::size_t c = 1;
  for (int d = 0; d < dim; ++d) c *= static_cast<std::size_t>(n);
  return c;
}

double GridSpec::cell_volume() const {
  double v = 1.0;
  for (int d = 0; d < dim; ++d) v *= spacing();
  return v;
}

double GridSpec::wavenumber(int index) const { return kTwoPi * mode(index) / box_length; }

int GridSpec::max_kept_mode() const {
  return static_cast<int>(std::floor(dealias_fraction * (n / 2)));
}

ScalarField::ScalarField(const GridSpec& g) : grid(g), values(g.cell_count(), 0.0) {
  g.validate();
}

double& ScalarField::at(int i, int j, int k) { return values[flat_index(grid, i, j, k)]; }
double ScalarField::at(int i, int j, int k) const { return values[flat_index(grid, i, j, k)]; }

double ScalarField::integral() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * grid.cell_volume();
}

double ScalarField::min_value() const {
  double m = values.empty() ? 0.0 : values[0];
  for (double v : values) m = std::min(m, v);
  return m;
}

double ScalarField::max_value() const {
  double m = values.empty() ? 0.0 : values[0];
  for (double v : values) m = std::max(m, v);
  return m;
}

void ScalarField::normalize_density() {
  const double total = integral();
  if (!(total > 0.0) || !std::isfinite(total))
    throw std::invalid_argument("normalize_density: field must have positive integral");
  for (double& v : values) v /= total;
}

VectorField::VectorField(const GridSpec& g) : grid(g) {
  g.validate();
  for (int c = 0; c < g.dim; ++c) comp[c].assign(g.cell_count(), 0.0);
}

double VectorField::max_abs() const {
  double m = 0.0;
  for (int c = 0; c < grid.dim; ++c)
    for (double v : comp[c]) m = std::max(m, std::abs(v));
  return m;
}

WaveField::WaveField(const GridSpec& g, double hbar_) : grid(g), hbar(hbar_), values(g.cell_count()) {
  g.validate();
  if (!(hbar > 0.0)) throw std::invalid_argument("WaveField: hbar must be positive");
}

double WaveField::norm_l2() const {
  double s = 0.0;
  for (const auto& z : values) s += std::norm(z);
  return std::sqrt(s * grid.cell_volume());
}

void WaveField::normalize() {
  const double nrm = norm_l2();
  if (!(nrm > 0.0)) throw std::invalid_argument("WaveField::normalize: zero state");
  for (auto& z : values) z /= nrm;
}

std::size_t flat_index(const GridSpec& g, int i, int j, int k) {
  const auto n = static_cast<std::size_t>(g.n);
  switch (g.dim) {
    case 1: return static_cast<std::size_t>(i);
    case 2: return static_cast<std::size_t>(i) * n + j;
    default: return (static_cast<std::size_t>(i) * n + j) * n + k;
  }
}

std::array<int, 3> axis_indices(const GridSpec& g, std::size_t flat) {
  const auto n = static_cast<std::size_t>(g.n);
  std::array<int, 3> idx{0, 0, 0};
  for (int d = g.dim - 1; d >= 0; --d) {
    idx[d] = static_cast<int>(flat % n);
    flat /= n;
  }
  return idx;
}

std::array<double, 3> grid_point(const GridSpec& g, std::size_t flat) {
  const auto idx = axis_indices(g, flat);
  const double h = g.spacing();
  return {idx[0] * h, idx[1] * h, idx[2] * h};
}

// ---------------------------------------------------------------------------
// FFTW plumbing. Plans are cached per (dim, n, sign) and reused through the
// new-array interface; creation is serialized because the FFTW planner is not
// thread safe. FFTW_ESTIMATE keeps planning deterministic across runs.
namespace {

struct PlanKey {
  int dim;
  int n;
  int sign;
  bool operator<(const PlanKey& o) const {
    if (dim != o.dim) return dim < o.dim;
    if (n != o.n) return n < o.n;
    return sign < o.sign;
  }
};

std::mutex g_plan_mutex;
std::map<PlanKey, fftw_plan>& plan_cache() {
  static std::map<PlanKey, fftw_plan> cache;
  return cache;
}

fftw_plan acquire_plan(const GridSpec& g, int sign) {
  const PlanKey key{g.dim, g.n, sign};
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto& cache = plan_cache();
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  std::vector<std::complex<double>> scratch(g.cell_count());
  int sizes[3] = {g.n, g.n, g.n};
  auto* ptr = reinterpret_cast<fftw_complex*>(scratch.data());
  fftw_plan plan =
      fftw_plan_dft(g.dim, sizes, ptr, ptr, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
  if (plan == nullptr) throw std::runtime_error("fftw_plan_dft failed");
  cache.emplace(key, plan);
  return plan;
}

void execute(const GridSpec& g, int sign, std::vector<std::complex<double>>& a) {
  if (a.size() != g.cell_count())
    throw std::invalid_argument("fft: buffer size does not match grid");
  fftw_plan plan = acquire_plan(g, sign);
  auto* ptr = reinterpret_cast<fftw_complex*>(a.data());
  fftw_execute_dft(plan, ptr, ptr);
}

}  // namespace

void fft_forward_inplace(const GridSpec& g, std::vector<std::complex<double>>& a) {
  execute(g, FFTW_FORWARD, a);
}

void fft_inverse_inplace(const GridSpec& g, std::vector<std::complex<double>>& a) {
  execute(g, FFTW_BACKWARD, a);
  const double scale = 1.0 / static_cast<double>(g.cell_count());
  for (auto& z : a) z *= scale;
}

std::vector<std::complex<double>> forward_transform(const ScalarField& f) {
  std::vector<std::complex<double>> a(f.values.begin(), f.values.end());
  fft_forward_inplace(f.grid, a);
  return a;
}

std::vector<std::complex<double>> forward_transform(const WaveField& f) {
  std::vector<std::complex<double>> a = f.values;
  fft_forward_inplace(f.grid, a);
  return a;
}

ScalarField inverse_transform_real(const GridSpec& g, std::vector<std::complex<double>> spectrum) {
  fft_inverse_inplace(g, spectrum);
  ScalarField out(g);
  for (std::size_t i = 0; i < spectrum.size(); ++i) out.values[i] = spectrum[i].real();
  return out;
}

WaveField inverse_transform_wave(const GridSpec& g, double hbar,
                                 std::vector<std::complex<double>> spectrum) {
  fft_inverse_inplace(g, spectrum);
  WaveField out(g, hbar);
  out.values = std::move(spectrum);
  return out;
}

void apply_dealias(const GridSpec& g, std::vector<std::complex<double>>& spectrum) {
  if (spectrum.size() != g.cell_count())
    throw std::invalid_argument("apply_dealias: buffer size does not match grid");
  const int keep = g.max_kept_mode();
  std::vector<bool> pass(g.n);
  for (int i = 0; i < g.n; ++i) pass[i] = std::abs(g.mode(i)) <= keep;

  const std::size_t cells = g.cell_count();
  for (std::size_t f = 0; f < cells; ++f) {
    const auto idx = axis_indices(g, f);
    bool ok = true;
    for (int d = 0; d < g.dim; ++d) ok = ok && pass[idx[d]];
    if (!ok) spectrum[f] = 0.0;
  }
}

ScalarField dealias(const ScalarField& f) {
  auto spec = forward_transform(f);
  apply_dealias(f.grid, spec);
  return inverse_transform_real(f.grid, std::move(spec));
}

VectorField spectral_gradient(const ScalarField& f) {
  const GridSpec& g = f.grid;
  auto spec = forward_transform(f);
  apply_dealias(g, spec);

  // ik multiplier per axis; m = -n/2 has no conjugate partner and is dropped
  // so that derivatives of real data stay real.
  std::vector<double> kval(g.n);
  for (int i = 0; i < g.n; ++i) kval[i] = (g.mode(i) == -g.n / 2) ? 0.0 : g.wavenumber(i);

  VectorField out(g);
  const std::size_t cells = g.cell_count();
  std::vector<std::complex<double>> work(cells);
  for (int c = 0; c < g.dim; ++c) {
    for (std::size_t f2 = 0; f2 < cells; ++f2) {
      const auto idx = axis_indices(g, f2);
      work[f2] = std::complex<double>(0.0, kval[idx[c]]) * spec[f2];
    }
    fft_inverse_inplace(g, work);
    for (std::size_t f2 = 0; f2 < cells; ++f2) out.comp[c][f2] = work[f2].real();
  }
  return out;
}

std::array<std::vector<std::complex<double>>, 3> wave_gradient(const WaveField& psi) {
  const GridSpec& g = psi.grid;
  auto spec = forward_transform(psi);

  std::vector<double> kval(g.n);
  for (int i = 0; i < g.n; ++i) kval[i] = (g.mode(i) == -g.n / 2) ? 0.0 : g.wavenumber(i);

  std::array<std::vector<std::complex<double>>, 3> out;
  const std::size_t cells = g.cell_count();
  for (int c = 0; c < g.dim; ++c) {
    out[c].resize(cells);
    for (std::size_t f = 0; f < cells; ++f) {
      const auto idx = axis_indices(g, f);
      out[c][f] = std::complex<double>(0.0, kval[idx[c]]) * spec[f];
    }
    fft_inverse_inplace(g, out[c]);
  }
  return out;
}

ScalarField spectral_divergence(const VectorField& v) {
  const GridSpec& g = v.grid;
  std::vector<double> kval(g.n);
  for (int i = 0; i < g.n; ++i) kval[i] = (g.mode(i) == -g.n / 2) ? 0.0 : g.wavenumber(i);

  const std::size_t cells = g.cell_count();
  std::vector<std::complex<double>> acc(cells, 0.0);
  for (int c = 0; c < g.dim; ++c) {
    std::vector<std::complex<double>> spec(v.comp[c].begin(), v.comp[c].end());
    fft_forward_inplace(g, spec);
    apply_dealias(g, spec);
    for (std::size_t f = 0; f < cells; ++f) {
      const auto idx = axis_indices(g, f);
      acc[f] += std::complex<double>(0.0, kval[idx[c]]) * spec[f];
    }
  }
  return inverse_transform_real(g, std::move(acc));
}

ScalarField poisson_solve(const ScalarField& source) {
  const GridSpec& g = source.grid;
  auto spec = forward_transform(source);

  std::vector<double> kval(g.n);
  for (int i = 0; i < g.n; ++i) kval[i] = g.wavenumber(i);

  const std::size_t cells = g.cell_count();
  for (std::size_t f = 0; f < cells; ++f) {
    const auto idx = axis_indices(g, f);
    double k2 = 0.0;
    for (int d = 0; d < g.dim; ++d) k2 += kval[idx[d]] * kval[idx[d]];
    spec[f] = (k2 > 0.0) ? spec[f] / k2 : 0.0;  // zero mode absorbed by background
  }
  return inverse_transform_real(g, std::move(spec));
}

VectorField coulomb_force_field(const ScalarField& rho) {
  return spectral_gradient(poisson_solve(rho));
}

double inner(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid == b.grid)) throw std::invalid_argument("inner: grids differ");
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) s += a.values[i] * b.values[i];
  return s * a.grid.cell_volume();
}

double spectral_norm_sq(const GridSpec& g, const std::vector<std::complex<double>>& spectrum) {
  double s = 0.0;
  for (const auto& z : spectrum) s += std::norm(z);
  return s * g.cell_volume() / static_cast<double>(g.cell_count());
}

}  // namespace mflab
