#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "mcastle/errors.hpp"

namespace mcastle {

inline double mean_of(const std::vector<double>& xs) {
    if (xs.empty()) raise(Errc::domain, "mean of empty sample");
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

inline double median_of(std::vector<double> xs) {
    if (xs.empty()) raise(Errc::domain, "median of empty sample");
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// Ranks with ties averaged (midranks).
inline std::vector<double> midranks(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double r = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

// Spearman rank correlation with midranks; 0 when either margin is constant.
inline double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) raise(Errc::validation, "mismatched sample sizes");
    if (x.size() < 2) raise(Errc::domain, "need at least two pairs");
    const std::vector<double> rx = midranks(x), ry = midranks(y);
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

// One-sided p-value for rho < 0 via the t approximation.
inline double spearman_p_negative(double rho, std::size_t n) {
    if (n < 3) return 1.0;
    const double denom = 1.0 - rho * rho;
    if (denom <= 1e-15) return rho < 0.0 ? 0.0 : 1.0;
    const double t = rho * std::sqrt(static_cast<double>(n - 2) / denom);
    boost::math::students_t dist(static_cast<double>(n - 2));
    return boost::math::cdf(dist, t);
}

inline double spearman_p_positive(double rho, std::size_t n) {
    return 1.0 - spearman_p_negative(rho, n);
}

// Exact one-sided paired sign test: p of seeing >= wins successes among
// wins + losses fair coin flips. Ties are dropped by the caller.
inline double sign_test_p(std::size_t wins, std::size_t losses) {
    const std::size_t n = wins + losses;
    if (n == 0) return 1.0;
    boost::math::binomial dist(static_cast<double>(n), 0.5);
    if (wins == 0) return 1.0;
    return boost::math::cdf(boost::math::complement(dist, static_cast<double>(wins) - 1.0));
}

}  // namespace mcastle
