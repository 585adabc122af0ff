#include "mflab/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace mflab {
namespace {

// Kronrod-15 abscissae on [-1,1] (positive half) and weights; the odd-index
// abscissae form the embedded Gauss-7 rule.
const double kXgk[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0};
const double kWgk[8] = {
    0.0229353220105292, 0.0630920926299785, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278};
const double kWg[4] = {
    0.1294849661688697, 0.2797053914892767, 0.3818300505051189,
    0.4179591836734694};

struct Panel {
  double a, b;
  double value;  // K15
  double error;  // |K15 - G7|
};

Panel evaluate_panel(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double kronrod = kWgk[7] * f(c);
  double gauss = kWg[3] * f(c);
  for (int i = 0; i < 7; ++i) {
    double fy = f(c - h * kXgk[i]) + f(c + h * kXgk[i]);
    kronrod += kWgk[i] * fy;
    if (i % 2 == 1) gauss += kWg[i / 2] * fy;
  }
  return Panel{a, b, kronrod * h, std::abs((kronrod - gauss) * h)};
}

}  // namespace

QuadResult integrate_gk(const std::function<double(double)>& f, double a, double b,
                        double rel_tol, double abs_tol, int max_panels) {
  std::vector<Panel> panels;
  panels.push_back(evaluate_panel(f, a, b));
  int evals = 15;
  for (;;) {
    double total = 0.0, err = 0.0;
    std::size_t worst = 0;
    for (std::size_t i = 0; i < panels.size(); ++i) {
      total += panels[i].value;
      err += panels[i].error;
      if (panels[i].error > panels[worst].error) worst = i;
    }
    double target = std::max(abs_tol, rel_tol * std::abs(total));
    if (err <= target || panels[worst].error == 0.0)
      return QuadResult{total, err, evals};
    if (int(panels.size()) >= max_panels)
      throw std::runtime_error("integrate_gk: panel budget exhausted, error " +
                               std::to_string(err) + " > target " +
                               std::to_string(target));
    Panel w = panels[worst];
    double mid = 0.5 * (w.a + w.b);
    panels[worst] = evaluate_panel(f, w.a, mid);
    panels.push_back(evaluate_panel(f, mid, w.b));
    evals += 30;
  }
}

}  // namespace mflab
