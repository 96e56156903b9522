#include "dynef/basis.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dynef {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

BasisBank BasisBank::raised_cosine(int k, int tau) {
  if (k < 1) throw std::invalid_argument("basis count K must be >= 1");
  if (tau < 1) throw std::invalid_argument("memory tau must be >= 1");
  const double span = std::log(static_cast<double>(tau));  // phi ranges over [0, span]
  std::vector<double> values(static_cast<std::size_t>(k) * tau);
  for (int b = 0; b < k; ++b) {
    double center, width;
    if (k == 1) {
      center = span / 2.0;
      width = span;
    } else {
      width = span / (k - 1);
      center = b * width;
    }
    for (int delta = 1; delta <= tau; ++delta) {
      double phi = std::log(static_cast<double>(delta));
      double v;
      if (width == 0.0) {
        v = (phi == center) ? 1.0 : 0.0;
      } else if (std::abs(phi - center) <= width) {
        v = 0.5 * (1.0 + std::cos(kPi * (phi - center) / width));
      } else {
        v = 0.0;
      }
      values[static_cast<std::size_t>(b) * tau + (delta - 1)] =
          std::min(1.0, std::max(0.0, v));
    }
  }
  return BasisBank(k, tau, std::move(values));
}

BasisBank BasisBank::custom(std::vector<std::vector<double>> rows) {
  if (rows.empty()) throw std::invalid_argument("custom basis needs at least one row");
  const std::size_t tau = rows.front().size();
  if (tau == 0) throw std::invalid_argument("custom basis needs tau >= 1");
  std::vector<double> values;
  values.reserve(rows.size() * tau);
  for (const auto& row : rows) {
    if (row.size() != tau) throw std::invalid_argument("custom basis table is ragged");
    for (double v : row) {
      if (!std::isfinite(v)) throw std::invalid_argument("custom basis value not finite");
      values.push_back(v);
    }
  }
  return BasisBank(static_cast<int>(rows.size()), static_cast<int>(tau), std::move(values));
}

}  // namespace dynef
