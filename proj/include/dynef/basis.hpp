#pragma once

#include <span>
#include <vector>

namespace dynef {

/// K fixed temporal basis functions a_k[delta] on support delta = 1..tau,
/// precomputed as a dense K x tau table. Immutable.
class BasisBank {
 public:
  /// Log-warped raised cosines: a_k(delta) = 0.5*(1 + cos(pi*(phi - c_k)/w))
  /// for |phi - c_k| <= w and 0 otherwise, with phi = ln(delta). Centers are
  /// equally spaced on [ln 1, ln tau] with width w equal to the center
  /// spacing; for K = 1 the single center sits at the midpoint with
  /// w = ln(tau), so the basis covers the entire support.
  static BasisBank raised_cosine(int k, int tau);

  /// Wraps a user-provided K x tau table verbatim.
  static BasisBank custom(std::vector<std::vector<double>> values);

  int n_basis() const { return k_; }
  int memory() const { return tau_; }

  /// a_k[delta], delta in [1, tau]
  double value(int k, int delta) const { return values_[k * tau_ + (delta - 1)]; }

  /// taps of basis k: [a_k[1], ..., a_k[tau]]
  std::span<const double> taps(int k) const {
    return {values_.data() + static_cast<std::size_t>(k) * tau_, static_cast<std::size_t>(tau_)};
  }

 private:
  BasisBank(int k, int tau, std::vector<double> values)
      : k_(k), tau_(tau), values_(std::move(values)) {}

  int k_;
  int tau_;
  std::vector<double> values_;  // row-major K x tau
};

}  // namespace dynef
