#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace revutil::special {

namespace detail {

// Continued fraction for the incomplete beta function, evaluated with the
// modified Lentz method. Converges quickly for x < (a + 1) / (a + b + 2).
inline double beta_continued_fraction(double a, double b, double x)
{
    constexpr int kMaxIterations = 10000;
    constexpr double kEps = 1e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny)
        d = kTiny;
    d = 1.0 / d;
    double h = d;

    for (int m = 1; m <= kMaxIterations; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny)
            d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny)
            c = kTiny;
        d = 1.0 / d;
        h *= d * c;

        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny)
            d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny)
            c = kTiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kEps)
            return h;
    }
    return h;
}

} // namespace detail

/// Regularized incomplete beta I_x(a, b) with the complement y = 1 - x
/// supplied by the caller, so that x close to 1 keeps full precision.
inline double incomplete_beta(double a, double b, double x, double y)
{
    if (!(a > 0.0) || !(b > 0.0))
        throw std::domain_error("incomplete_beta: shape parameters must be positive");
    if (!(x >= 0.0 && x <= 1.0) || !(y >= 0.0 && y <= 1.0))
        throw std::domain_error("incomplete_beta: x outside [0, 1]");
    if (x == 0.0)
        return 0.0;
    if (y == 0.0)
        return 1.0;

    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log(y);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * detail::beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * detail::beta_continued_fraction(b, a, y) / b;
}

/// Regularized incomplete beta I_x(a, b) for a, b > 0 and x in [0, 1].
inline double incomplete_beta(double a, double b, double x)
{
    return incomplete_beta(a, b, x, 1.0 - x);
}

/// Two-tailed p-value P(|T| >= |t|) for Student's t with `dof` degrees of
/// freedom (dof may be fractional).
inline double student_t_two_tailed_p(double t, double dof)
{
    if (!(dof > 0.0))
        throw std::domain_error("student_t_two_tailed_p: dof must be positive");
    if (std::isinf(t))
        return 0.0;
    const double t2 = t * t;
    return incomplete_beta(0.5 * dof, 0.5, dof / (dof + t2), t2 / (dof + t2));
}

} // namespace revutil::special
