#include "vpp/special_functions.hpp"

#include <cmath>
#include <algorithm>
#include <limits>
#include <numbers>

namespace vpp::math {

namespace {

constexpr double kTwoOverSqrtPi = 2.0 / 1.7724538509055160273;  // 2/sqrt(pi)
constexpr double kSeriesLimit = 2.5;
// Below this erfc = 1 - erf loses nothing; above it the subtraction cancels.
constexpr double kFractionLimit = 0.5;

double erf_series(double x) {
    // erf(x) = 2/sqrt(pi) exp(-x^2) sum_n 2^n x^(2n+1) / (1*3*...*(2n+1))
    const double x2 = x * x;
    double term = x;
    double sum = x;
    for (int n = 1; n < 500; ++n) {
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if (std::abs(term) < 1e-17 * std::abs(sum)) {
            break;
        }
    }
    return kTwoOverSqrtPi * std::exp(-x2) * sum;
}

// erfc(x) for x >= kFractionLimit, modified Lentz evaluation of
// erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...)))).
double erfc_continued_fraction(double x) {
    constexpr double tiny = 1e-300;
    double f = tiny;
    double c = f;
    double d = 0.0;
    for (int j = 1; j < 5000; ++j) {
        const double a = j == 1 ? 1.0 : 0.5 * (j - 1);
        d = x + a * d;
        if (d == 0.0) {
            d = tiny;
        }
        c = x + a / c;
        if (c == 0.0) {
            c = tiny;
        }
        d = 1.0 / d;
        const double delta = c * d;
        f *= delta;
        if (std::abs(delta - 1.0) < 1e-16) {
            break;
        }
    }
    return std::exp(-x * x) * std::numbers::inv_sqrtpi * f;
}

}  // namespace

double erf(double x) {
    if (std::isnan(x)) {
        return x;
    }
    const double ax = std::abs(x);
    if (ax > 6.0) {
        return x < 0.0 ? -1.0 : 1.0;  // 1 - erf(6) < 2e-17
    }
    const double r = ax < kSeriesLimit ? erf_series(ax) : 1.0 - erfc_continued_fraction(ax);
    return x < 0.0 ? -r : r;
}

double erfc(double x) {
    if (std::isnan(x)) {
        return x;
    }
    if (x > 27.3) {
        return 0.0;  // below the smallest subnormal
    }
    if (x < -6.0) {
        return 2.0;
    }
    if (x >= kFractionLimit) {
        return erfc_continued_fraction(x);
    }
    if (x <= -kSeriesLimit) {
        return 2.0 - erfc_continued_fraction(-x);
    }
    return 1.0 - erf(x);
}

double erfc_inv(double q) {
    if (std::isnan(q)) {
        return q;
    }
    if (q < 0.0 || q > 2.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (q == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    if (q == 2.0) {
        return -std::numeric_limits<double>::infinity();
    }
    if (q == 1.0) {
        return 0.0;
    }
    if (q > 1.0) {
        return -erfc_inv(2.0 - q);
    }
    // Start right of the root: erfc(x) < exp(-x^2) for x > 0, so
    // sqrt(-log q) overshoots; near q = 1 add the linear term.
    double x = std::sqrt(-std::log(q)) + 0.9 * (1.0 - q);
    const double log_q = std::log(q);
    double last_step = std::numeric_limits<double>::infinity();
    for (int it = 0; it < 100; ++it) {
        const double e = erfc(x);
        if (e <= 0.0) {
            x *= 0.5;
            continue;
        }
        const double g = std::log(e) - log_q;
        const double slope = -kTwoOverSqrtPi * std::exp(-x * x) / e;
        const double step = g / slope;
        x -= step;
        if (std::abs(step) <= 4e-16 * std::max(1.0, std::abs(x)) ||
            std::abs(step) >= std::abs(last_step)) {
            break;
        }
        last_step = step;
    }
    return x;
}

double erf_inv(double y) {
    if (std::isnan(y)) {
        return y;
    }
    if (y < 0.0) {
        return -erf_inv(-y);
    }
    if (y > 1.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    return erfc_inv(1.0 - y);
}

double normal_cdf(double z) { return 0.5 * erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) { return -std::numbers::sqrt2 * erfc_inv(2.0 * p); }

}  // namespace vpp::math
