#pragma once

// Independent re-implementations of the benchmark formulas in their native
// (unscaled) coordinates, shared by unit and acceptance tests.

#include <array>
#include <cmath>

namespace oracle {

inline double branin(double x, double theta) {
  const double pi = std::acos(-1.0);
  const double b = 5.1 / (4 * pi * pi), c = 5 / pi, t = 1 / (8 * pi);
  const double inner = theta - b * std::pow(x, 2) + c * x - 6;
  return std::pow(inner, 2) + 10 * (1 - t) * std::cos(x) + 10;
}

inline double sinus_linear(double z) {
  return std::sin(5 * std::pow(z, 2) * std::acos(-1.0)) + z / 2;
}

inline double eggholder(double x, double theta) {
  return -(theta + 47) * std::sin(std::sqrt(std::fabs(theta + x / 2 + 47))) -
         x * std::sin(std::sqrt(std::fabs(x - (theta + 47))));
}

inline double hartmann3(const std::array<double, 3>& z) {
  const double alpha[] = {1.0, 1.2, 3.0, 3.2};
  const double a[][3] = {{3, 10, 30}, {0.1, 10, 35}, {3, 10, 30}, {0.1, 10, 35}};
  const double p[][3] = {{3689, 1170, 2673}, {4699, 4387, 7470}, {1091, 8732, 5547}, {381, 5743, 8828}};
  double sum = 0;
  for (int i = 0; i < 4; ++i) {
    double inner = 0;
    for (int j = 0; j < 3; ++j) inner += a[i][j] * std::pow(z[j] - 1e-4 * p[i][j], 2);
    sum += alpha[i] * std::exp(-inner);
  }
  return sum;
}

inline double polynomial(double z1, double z2) {
  using std::pow;
  return 2 * pow(z1, 6) - 12.2 * pow(z1, 5) + 21.2 * pow(z1, 4) + 6.2 * z1 - 6.4 * pow(z1, 3) -
         4.7 * pow(z1, 2) + pow(z2, 6) - 11 * pow(z2, 5) + 43.3 * pow(z2, 4) - 10 * z2 -
         74.8 * pow(z2, 3) + 56.9 * pow(z2, 2) - 4.1 * z1 * z2 - 0.1 * pow(z2, 2) * pow(z1, 2) +
         0.4 * pow(z2, 2) * z1 + 0.4 * pow(z1, 2) * z2;
}

}  // namespace oracle
