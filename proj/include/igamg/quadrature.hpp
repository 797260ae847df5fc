#pragma once

#include <vector>

namespace igamg {

struct QuadratureRule {
  std::vector<double> points;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [a,b]; exact for polynomials of degree 2n-1.
QuadratureRule gauss_legendre(int n, double a = 0.0, double b = 1.0);

}  // namespace igamg
