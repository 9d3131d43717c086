#pragma once

// Reservoir spectral densities J(u) >= 0 on the full real line. The density
// is the only coupling input a reservoir channel carries; closed-form
// families and tabulated data with linear interpolation are supported. Every
// density carries an exponential decay envelope J(u) <= amp * e^{-rate|u|}
// valid beyond |u| >= cutoff, used to truncate integrals.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace sfent {

struct DecayEnvelope {
  double amp = 0.0;
  double rate = 0.0;    // > 0
  double cutoff = 0.0;  // envelope valid for |u| >= cutoff

  // Radius R such that the envelope tail integral beyond R is below tol.
  double support_radius(double tol) const {
    if (amp <= 0.0) return cutoff;
    double r = std::log(amp / (tol * rate)) / rate;
    return std::max(cutoff, std::max(r, 0.0));
  }
};

class SpectralDensity {
 public:
  enum class Kind { FlatExp, GaussWindow, Tabulated };

  // J(u) = amp * e^{-|u|/corr}
  static SpectralDensity flat_exp(double amp, double corr) {
    if (amp < 0 || corr <= 0) throw std::invalid_argument("flat-exp: need amp >= 0, corr > 0");
    SpectralDensity d;
    d.kind_ = Kind::FlatExp;
    d.amp_ = amp;
    d.p1_ = corr;
    d.envelope_ = {amp, 1.0 / corr, 0.0};
    d.symmetric_ = true;
    return d;
  }

  // J(u) = amp * e^{-((|u| - center)/width)^2}
  static SpectralDensity gauss_window(double amp, double center, double width) {
    if (amp < 0 || width <= 0 || center < 0)
      throw std::invalid_argument("gauss-window: need amp >= 0, width > 0, center >= 0");
    SpectralDensity d;
    d.kind_ = Kind::GaussWindow;
    d.amp_ = amp;
    d.p1_ = center;
    d.p2_ = width;
    // e^{-((x-c)/w)^2} <= e^{-(x-c)/w * k} once (x-c)/w >= k; take k = 2.
    d.envelope_ = {amp * std::exp(2.0 * center / width + 4.0), 2.0 / width,
                   center + 2.0 * width};
    d.symmetric_ = true;
    return d;
  }

  // Piecewise-linear table on a strictly increasing grid; zero outside the
  // covered range. The caller must supply the decay envelope.
  static SpectralDensity tabulated(std::vector<double> u, std::vector<double> j,
                                   DecayEnvelope envelope) {
    if (u.size() != j.size() || u.size() < 2)
      throw std::invalid_argument("tabulated density: need >= 2 rows");
    for (size_t i = 0; i + 1 < u.size(); ++i)
      if (!(u[i] < u[i + 1]))
        throw std::invalid_argument("tabulated density: grid must be strictly increasing");
    for (double v : j)
      if (v < 0.0) throw std::invalid_argument("tabulated density: J < 0");
    SpectralDensity d;
    d.kind_ = Kind::Tabulated;
    d.us_ = std::move(u);
    d.js_ = std::move(j);
    d.envelope_ = envelope;
    d.symmetric_ = d.table_symmetric();
    return d;
  }

  double operator()(double u) const {
    switch (kind_) {
      case Kind::FlatExp:
        return amp_ * std::exp(-std::abs(u) / p1_);
      case Kind::GaussWindow: {
        const double x = (std::abs(u) - p1_) / p2_;
        return amp_ * std::exp(-x * x);
      }
      case Kind::Tabulated: {
        if (u <= us_.front() || u >= us_.back()) {
          if (u == us_.front()) return js_.front();
          if (u == us_.back()) return js_.back();
          return 0.0;
        }
        auto it = std::upper_bound(us_.begin(), us_.end(), u);
        size_t hi = static_cast<size_t>(it - us_.begin());
        size_t lo = hi - 1;
        const double w = (u - us_[lo]) / (us_[hi] - us_[lo]);
        return (1.0 - w) * js_[lo] + w * js_[hi];
      }
    }
    return 0.0;
  }

  Kind kind() const { return kind_; }
  const DecayEnvelope& envelope() const { return envelope_; }
  bool symmetric() const { return symmetric_; }

  // Points where J is not smooth; quadratures split panels here.
  std::vector<double> breakpoints() const {
    switch (kind_) {
      case Kind::FlatExp:
        return {0.0};
      case Kind::GaussWindow:
        return {-p1_, 0.0, p1_};
      case Kind::Tabulated:
        return us_;
    }
    return {};
  }

  // Grid coverage for tabulated data (infinite for closed forms).
  double coverage() const {
    if (kind_ != Kind::Tabulated) return std::numeric_limits<double>::infinity();
    return std::min(-us_.front(), us_.back());
  }

  // Radius beyond which integrals of J may be truncated with error < tol.
  // Requires usable decay metadata.
  double truncation_radius(double tol) const {
    if (!(envelope_.rate > 0.0) || envelope_.amp < 0.0)
      throw std::runtime_error("cannot truncate integral: missing decay metadata");
    if (kind_ == Kind::Tabulated)
      return std::max(std::abs(us_.front()), us_.back());
    return envelope_.support_radius(tol);
  }

  std::string family_name() const {
    switch (kind_) {
      case Kind::FlatExp: return "flat-exp";
      case Kind::GaussWindow: return "gauss-window";
      case Kind::Tabulated: return "tabulated";
    }
    return "?";
  }

  double param_amp() const { return amp_; }
  double param1() const { return p1_; }
  double param2() const { return p2_; }
  const std::vector<double>& table_u() const { return us_; }
  const std::vector<double>& table_j() const { return js_; }

 private:
  bool table_symmetric() const {
    const double lo = us_.front(), hi = us_.back();
    const double r = std::min(-lo, hi);
    if (r <= 0) return false;
    for (int k = 0; k <= 32; ++k) {
      const double u = r * k / 32.0;
      if (std::abs((*this)(u) - (*this)(-u)) > 1e-12 * (1.0 + std::abs((*this)(u))))
        return false;
    }
    return true;
  }

  Kind kind_ = Kind::FlatExp;
  double amp_ = 0.0, p1_ = 1.0, p2_ = 1.0;
  std::vector<double> us_, js_;
  DecayEnvelope envelope_;
  bool symmetric_ = true;
};

}  // namespace sfent
