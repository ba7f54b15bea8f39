#pragma once

#include <limits>
#include <ostream>

namespace bceh {

/// A value in R ∪ {+∞}. Divergence is a first-class outcome rather than a huge double.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr ExtendedReal(double v) : value_(v) {}  // NOLINT(google-explicit-constructor)

  static constexpr ExtendedReal infinity() {
    ExtendedReal r;
    r.infinite_ = true;
    r.value_ = std::numeric_limits<double>::infinity();
    return r;
  }

  constexpr bool is_finite() const { return !infinite_; }
  constexpr bool is_infinite() const { return infinite_; }

  /// Finite value; +inf as a double when infinite.
  constexpr double value() const { return value_; }

  friend constexpr bool operator==(const ExtendedReal& a, const ExtendedReal& b) {
    return a.infinite_ == b.infinite_ && (a.infinite_ || a.value_ == b.value_);
  }

  friend constexpr bool operator<(const ExtendedReal& a, const ExtendedReal& b) {
    if (a.infinite_) return false;
    if (b.infinite_) return true;
    return a.value_ < b.value_;
  }

  friend std::ostream& operator<<(std::ostream& os, const ExtendedReal& x) {
    if (x.infinite_) return os << "+inf";
    return os << x.value_;
  }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

inline ExtendedReal max(const ExtendedReal& a, const ExtendedReal& b) { return a < b ? b : a; }

}  // namespace bceh
