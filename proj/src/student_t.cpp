#include "divexp/student_t.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace divexp::stats {

namespace {

constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;
constexpr int kMaxIterations = 1000;

// Continued fraction for I_x(a, b); converges quickly for x < (a + 1) / (a + b + 2).
double beta_continued_fraction(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIterations; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) return h;
    }
    throw std::runtime_error("incomplete beta continued fraction did not converge");
}

// I_x(a, b) given both x and y = 1 - x, so callers can pass an exact complement.
double incomplete_beta_xy(double a, double b, double x, double y) {
    if (x <= 0.0) return 0.0;
    if (y <= 0.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log(y);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, y) / b;
}

void check_dof(double dof) {
    if (!(dof > 0.0) || !std::isfinite(dof)) throw std::invalid_argument("degrees of freedom must be positive");
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("incomplete beta needs a, b > 0");
    if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("incomplete beta needs 0 <= x <= 1");
    return incomplete_beta_xy(a, b, x, 1.0 - x);
}

double student_t_pdf(double t, double dof) {
    check_dof(dof);
    const double log_norm = std::lgamma((dof + 1.0) / 2.0) - std::lgamma(dof / 2.0) -
                            0.5 * std::log(dof * std::numbers::pi);
    return std::exp(log_norm - (dof + 1.0) / 2.0 * std::log1p(t * t / dof));
}

double student_t_upper_tail(double t, double dof) {
    check_dof(dof);
    if (std::isnan(t)) throw std::invalid_argument("t statistic is NaN");
    if (t == std::numeric_limits<double>::infinity()) return 0.0;
    if (t == -std::numeric_limits<double>::infinity()) return 1.0;
    const double t2 = t * t;
    // P(|T| > |t|) = I_{dof / (dof + t^2)}(dof / 2, 1 / 2)
    const double two_sided = incomplete_beta_xy(dof / 2.0, 0.5, dof / (dof + t2), t2 / (dof + t2));
    return t >= 0.0 ? 0.5 * two_sided : 1.0 - 0.5 * two_sided;
}

double student_t_cdf(double t, double dof) { return student_t_upper_tail(-t, dof); }

double student_t_quantile(double p, double dof) {
    check_dof(dof);
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantile probability must lie in (0, 1)");
    if (p == 0.5) return 0.0;
    if (p < 0.5) return -student_t_quantile(1.0 - p, dof);
    const double tail = 1.0 - p;

    double lo = 0.0;
    double hi = 1.0;
    while (student_t_upper_tail(hi, dof) > tail) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e300) throw std::runtime_error("student t quantile bracket diverged");
    }
    // Safeguarded Newton on the upper tail, which is decreasing in t.
    double t = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double f = student_t_upper_tail(t, dof) - tail;
        if (f > 0.0) {
            lo = t;
        } else {
            hi = t;
        }
        const double pdf = student_t_pdf(t, dof);
        double next = pdf > 0.0 ? t + f / pdf : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - t) <= 1e-15 * std::max(1.0, std::abs(t)) || hi - lo <= 1e-15 * std::max(1.0, hi)) {
            return next;
        }
        t = next;
    }
    return t;
}

}  // namespace divexp::stats
