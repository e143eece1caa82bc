#pragma once
// Small numeric helpers: running moments and the standard normal quantile.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace ttbell {

/// Welford accumulator for mean and sample variance.
struct RunningStats {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d1 = x - mean;
    mean += d1 / static_cast<double>(n);
    m2 += d1 * (x - mean);
  }

  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double stddev() const { return std::sqrt(variance()); }
  double stderr_mean() const {
    return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
  }
};

inline double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) throw std::invalid_argument("mean_of: empty input");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

inline double sample_stddev(const std::vector<double>& xs) {
  RunningStats st;
  for (double x : xs) st.add(x);
  return st.stddev();
}

/// Inverse standard normal CDF for p in (0, 1).  Acklam's rational
/// approximation refined by one Halley step of erfc where the step is
/// representable; relative error near machine precision in that range,
/// ~1e-9 in the extreme tails beyond it.
inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("norm_quantile: p outside (0,1)");
  static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                              -2.759285104469687e+02, 1.383577518672690e+02,
                              -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                              -2.400758277161838e+00, -2.549732539343734e+00,
                              4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double p_low = 0.02425;
  double x;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - p_low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  // Halley refinement; skipped where exp(x^2/2) or erfc would overflow/underflow.
  if (std::abs(x) < 36.0) {
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    x -= u / (1.0 + x * u / 2.0);
  }
  return x;
}

/// sigma such that the one-sided normal tail beyond sigma has probability
/// 2^-logp.  Handles logp far past double underflow via an asymptotic
/// expansion of the tail in log space.
inline double sigma_from_log2_tail(double logp) {
  const double ln2 = std::log(2.0);
  if (logp <= 0.0) return 0.0;  // tail probability >= 1: no evidence
  if (logp <= 900.0) {
    const double p = std::exp2(-logp);
    return std::max(0.0, -norm_quantile(p));
  }
  // Solve -s^2/2 - ln s - ln(2*pi)/2 + ln(1 - 1/s^2 + 3/s^4) = -logp*ln2.
  double s = std::sqrt(2.0 * logp * ln2);
  for (int it = 0; it < 8; ++it) {
    const double corr = 1.0 - 1.0 / (s * s) + 3.0 / (s * s * s * s);
    const double f = -s * s / 2.0 - std::log(s) - 0.5 * std::log(2.0 * M_PI) +
                     std::log(corr) + logp * ln2;
    const double dcorr = 2.0 / (s * s * s) - 12.0 / (s * s * s * s * s);
    const double fp = -s - 1.0 / s + dcorr / corr;
    s -= f / fp;
  }
  return s;
}

/// -log2 of the one-sided normal tail beyond sigma (inverse of the above).
inline double log2_tail_from_sigma(double sigma) {
  const double ln2 = std::log(2.0);
  if (sigma < 36.0) {
    const double p = 0.5 * std::erfc(sigma / std::sqrt(2.0));
    return -std::log2(p);
  }
  const double s = sigma;
  const double corr = 1.0 - 1.0 / (s * s) + 3.0 / (s * s * s * s);
  const double ln_tail = -s * s / 2.0 - std::log(s) - 0.5 * std::log(2.0 * M_PI) +
                         std::log(corr);
  return -ln_tail / ln2;
}

}  // namespace ttbell
