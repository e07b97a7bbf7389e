#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace cmem {

template <class T>
double sample_mean(std::span<const T> x) {
    if (x.empty()) return 0.0;
    double s = 0.0;
    for (const T& v : x) s += static_cast<double>(v);
    return s / static_cast<double>(x.size());
}

/// Unbiased sample variance (denominator n - 1); 0 for fewer than two values.
template <class T>
double sample_variance(std::span<const T> x) {
    if (x.size() < 2) return 0.0;
    const double m = sample_mean(x);
    double s = 0.0;
    for (const T& v : x) {
        const double d = static_cast<double>(v) - m;
        s += d * d;
    }
    return s / static_cast<double>(x.size() - 1);
}

/**
 * @brief Sample autocorrelations at lags 1..max_lag.
 *
 * Uses the usual estimator with the full-sample mean and denominator
 * sum (x_t - mean)^2. Returns zeros for a constant series.
 */
template <class T>
std::vector<double> sample_acf(std::span<const T> x, std::size_t max_lag) {
    std::vector<double> out(max_lag, 0.0);
    const std::size_t n = x.size();
    if (n == 0) return out;
    const double m = sample_mean(x);
    double c0 = 0.0;
    for (const T& v : x) c0 += (static_cast<double>(v) - m) * (static_cast<double>(v) - m);
    if (c0 <= 0.0) return out;
    for (std::size_t k = 1; k <= max_lag && k < n; ++k) {
        double ck = 0.0;
        for (std::size_t t = k; t < n; ++t)
            ck += (static_cast<double>(x[t]) - m) * (static_cast<double>(x[t - k]) - m);
        out[k - 1] = ck / c0;
    }
    return out;
}

}  // namespace cmem
