#ifndef TEMPERFILT_LOG_MATH_HPP
#define TEMPERFILT_LOG_MATH_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace temperfilt {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(sum(exp(v))) with max-shift. All-(-inf) input yields -inf, never NaN.
inline double logsumexp(std::span<const double> v)
{
    if (v.empty()) return kNegInf;
    const double m = *std::max_element(v.begin(), v.end());
    if (m == kNegInf) return kNegInf;
    if (m == std::numeric_limits<double>::infinity()) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

/// exponent * log(p) with the conventions 0^0 = 1 and 0^a = 0 for a > 0.
inline double tempered_log(double p, double exponent)
{
    if (exponent == 0.0) return 0.0;
    if (p <= 0.0) return kNegInf;
    return exponent * std::log(p);
}

/// Subtracts logsumexp in place and returns the subtracted value.
inline double log_normalize(std::vector<double>& v)
{
    const double z = logsumexp(v);
    if (z == kNegInf) return z;
    for (double& x : v) x -= z;
    return z;
}

/// exp(v - logsumexp(v)); entries at -inf map to exactly 0.
inline std::vector<double> softmax(std::span<const double> v)
{
    const double z = logsumexp(v);
    std::vector<double> out(v.size(), 0.0);
    if (z == kNegInf) return out;
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::exp(v[i] - z);
    return out;
}

}  // namespace temperfilt

#endif  // TEMPERFILT_LOG_MATH_HPP
