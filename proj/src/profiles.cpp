#include "mflab/profiles.hpp"

#include <cmath>
#include <set>
#include <stdexcept>
#include <vector>

namespace mflab {

namespace {

// parameter fetch with typo rejection: every key must be consumed
class ParamReader {
 public:
  explicit ParamReader(const ProfileSpec& p) : spec_(p) {}

  double get(const std::string& key, double fallback) {
    seen_.insert(key);
    auto it = spec_.params.find(key);
    return it == spec_.params.end() ? fallback : it->second;
  }

  void finish() const {
    for (const auto& kv : spec_.params)
      if (!seen_.count(kv.first))
        throw std::invalid_argument("profile '" + spec_.name +
                                    "': unknown parameter '" + kv.first + "'");
  }

 private:
  const ProfileSpec& spec_;
  std::set<std::string> seen_;
};

// one periodic axis of a periodized gaussian, centered at c, unit-mass up to
// the overall normalization applied later
std::vector<double> axis_gaussian(const GridSpec& g, double sigma, double c) {
  const double L = g.box_length;
  // images until the nearest tail is below double round-off everywhere
  const int images = static_cast<int>(std::ceil(0.5 + 40.0 * sigma / L));
  std::vector<double> out(g.n, 0.0);
  for (int i = 0; i < g.n; ++i) {
    const double x = i * g.spacing();
    for (int m = -images; m <= images; ++m) {
      const double d = x - c + m * L;
      out[i] += std::exp(-d * d / (2.0 * sigma * sigma));
    }
  }
  return out;
}

std::array<double, 3> read_center(ParamReader& r, const GridSpec& g) {
  std::array<double, 3> c = {0.0, 0.0, 0.0};
  const char* keys[3] = {"center_x", "center_y", "center_z"};
  for (int a = 0; a < g.dim; ++a) c[a] = r.get(keys[a], 0.5 * g.box_length);
  return c;
}

double check_sigma(double sigma, const GridSpec& g) {
  if (!(sigma > 0.0) || !(sigma <= g.box_length))
    throw std::invalid_argument("gaussian profile needs 0 < sigma <= box_length");
  return sigma;
}

double check_floor(double w) {
  if (!(w >= 0.0) || !(w < 1.0))
    throw std::invalid_argument("floor_weight must lie in [0, 1)");
  return w;
}

// mix with the uniform density and normalize; keeps strict positivity for
// floor_weight > 0 even where the gaussian tail underflows
void floor_and_normalize(ScalarField& rho, double floor_weight) {
  double total = rho.integral();
  if (!(total > 0.0)) throw std::invalid_argument("profile density degenerate");
  const double vol = std::pow(rho.grid.box_length, rho.grid.dim);
  for (double& v : rho.values)
    v = (1.0 - floor_weight) * v / total + floor_weight / vol;
}

// taper T(r) = exp(1 - 1/(1-r^2)) on r < 1, zero outside; T(0) = 1
double taper(double r) {
  if (r >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - r * r));
}

// dT/dr
double taper_prime(double r) {
  if (r >= 1.0) return 0.0;
  const double s = 1.0 - r * r;
  return taper(r) * (-2.0 * r / (s * s));
}

// minimum-image displacement of grid point i from center c
std::array<double, 3> displacement(const GridSpec& g, std::size_t flat,
                                   const std::array<double, 3>& c) {
  const auto idx = axis_indices(g, flat);
  std::array<double, 3> d = {0.0, 0.0, 0.0};
  for (int a = 0; a < g.dim; ++a) {
    double s = idx[a] * g.spacing() - c[a];
    s -= g.box_length * std::round(s / g.box_length);
    d[a] = s;
  }
  return d;
}

struct QuadraticBump {
  double amplitude = 0.0;
  double radius = 0.0;
  std::array<double, 3> center = {0.0, 0.0, 0.0};
};

QuadraticBump read_quadratic_bump(const GridSpec& g, const ProfileSpec& p) {
  ParamReader r(p);
  QuadraticBump q;
  q.amplitude = r.get("amplitude", 0.1);
  q.radius = r.get("radius", 0.4 * g.box_length);
  q.center = read_center(r, g);
  r.finish();
  if (!std::isfinite(q.amplitude))
    throw std::invalid_argument("quadratic_bump amplitude must be finite");
  if (!(q.radius > 0.0) || !(q.radius < 0.5 * g.box_length))
    throw std::invalid_argument(
        "quadratic_bump radius must lie in (0, box_length / 2)");
  return q;
}

}  // namespace

ScalarField build_density(const GridSpec& g, const ProfileSpec& p) {
  g.validate();
  ScalarField rho(g);
  if (p.name == "uniform") {
    ParamReader r(p);
    r.finish();
    const double vol = std::pow(g.box_length, g.dim);
    for (double& v : rho.values) v = 1.0 / vol;
    return rho;
  }
  if (p.name == "gaussian") {
    ParamReader r(p);
    const double sigma = check_sigma(r.get("sigma", g.box_length / 16.0), g);
    const double floor_weight = check_floor(r.get("floor_weight", 1e-3));
    const auto c = read_center(r, g);
    r.finish();
    std::array<std::vector<double>, 3> axes;
    for (int a = 0; a < g.dim; ++a) axes[a] = axis_gaussian(g, sigma, c[a]);
    for (std::size_t f = 0; f < rho.values.size(); ++f) {
      const auto idx = axis_indices(g, f);
      double v = 1.0;
      for (int a = 0; a < g.dim; ++a) v *= axes[a][idx[a]];
      rho.values[f] = v;
    }
    floor_and_normalize(rho, floor_weight);
    return rho;
  }
  if (p.name == "gaussian_pair") {
    ParamReader r(p);
    const double sigma = check_sigma(r.get("sigma", g.box_length / 16.0), g);
    const double sep = r.get("separation", 0.25 * g.box_length);
    const double floor_weight = check_floor(r.get("floor_weight", 1e-3));
    r.finish();
    if (!(sep > 0.0) || !(sep < g.box_length))
      throw std::invalid_argument(
          "gaussian_pair separation must lie in (0, box_length)");
    // two humps along the first axis, symmetric about the box center
    const double mid = 0.5 * g.box_length;
    const auto left = axis_gaussian(g, sigma, mid - 0.5 * sep);
    const auto right = axis_gaussian(g, sigma, mid + 0.5 * sep);
    std::array<std::vector<double>, 3> axes;
    axes[0].resize(g.n);
    for (int i = 0; i < g.n; ++i) axes[0][i] = 0.5 * (left[i] + right[i]);
    for (int a = 1; a < g.dim; ++a) axes[a] = axis_gaussian(g, sigma, mid);
    for (std::size_t f = 0; f < rho.values.size(); ++f) {
      const auto idx = axis_indices(g, f);
      double v = 1.0;
      for (int a = 0; a < g.dim; ++a) v *= axes[a][idx[a]];
      rho.values[f] = v;
    }
    floor_and_normalize(rho, floor_weight);
    return rho;
  }
  throw std::invalid_argument("unknown density profile '" + p.name + "'");
}

ScalarField build_phase(const GridSpec& g, const ProfileSpec& p) {
  g.validate();
  ScalarField s(g);
  if (p.name == "zero") {
    ParamReader r(p);
    r.finish();
    return s;
  }
  if (p.name == "quadratic_bump") {
    const QuadraticBump q = read_quadratic_bump(g, p);
    for (std::size_t f = 0; f < s.values.size(); ++f) {
      const auto d = displacement(g, f, q.center);
      double r2 = 0.0;
      for (int a = 0; a < g.dim; ++a) r2 += d[a] * d[a];
      const double r = std::sqrt(r2) / q.radius;
      s.values[f] = 0.5 * q.amplitude * r2 * taper(r);
    }
    return s;
  }
  throw std::invalid_argument("unknown phase profile '" + p.name + "'");
}

VectorField phase_velocity(const GridSpec& g, const ProfileSpec& p) {
  g.validate();
  VectorField u(g);
  if (p.name == "zero") {
    ParamReader r(p);
    r.finish();
    return u;
  }
  if (p.name == "quadratic_bump") {
    const QuadraticBump q = read_quadratic_bump(g, p);
    for (std::size_t f = 0; f < u.comp[0].size(); ++f) {
      const auto d = displacement(g, f, q.center);
      double r2 = 0.0;
      for (int a = 0; a < g.dim; ++a) r2 += d[a] * d[a];
      const double dist = std::sqrt(r2);
      const double r = dist / q.radius;
      if (r >= 1.0 || dist == 0.0) continue;
      // grad of (a/2) r2 T(r): radial chain rule through r = |d| / R
      const double scale =
          q.amplitude * taper(r) +
          0.5 * q.amplitude * r2 * taper_prime(r) / (q.radius * dist);
      for (int a = 0; a < g.dim; ++a) u.comp[a][f] = scale * d[a];
    }
    return u;
  }
  throw std::invalid_argument("unknown phase profile '" + p.name + "'");
}

}  // namespace mflab
