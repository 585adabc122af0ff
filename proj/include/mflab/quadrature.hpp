#pragma once
// Adaptive Gauss-Kronrod (G7,K15) quadrature on finite intervals.
#include <functional>

namespace mflab {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // accumulated |K15 - G7| over accepted panels
  int evaluations = 0;
};

// Integrates f over [a,b], bisecting the worst panel until the global error
// estimate drops under max(abs_tol, rel_tol*|value|) or the panel budget is
// exhausted. Throws std::runtime_error on non-convergence.
QuadResult integrate_gk(const std::function<double(double)>& f, double a, double b,
                        double rel_tol = 1e-10, double abs_tol = 0.0,
                        int max_panels = 400);

}  // namespace mflab
