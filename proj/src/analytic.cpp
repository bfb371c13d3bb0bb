#include "perfrec/analytic.hpp"

#include <cmath>
#include <sstream>

#include "perfrec/errors.hpp"

namespace perfrec::analytic {

double erf_approx(double x, const ErfCoefficients& c) {
    if (x == 0.0) return 0.0;
    const double ax = std::abs(x);
    const double t = 1.0 / (1.0 + c.p * ax);
    double poly = 0.0;
    for (auto it = c.a.rbegin(); it != c.a.rend(); ++it) poly = (poly + *it) * t;
    const double y = 1.0 - poly * std::exp(-ax * ax);
    return x < 0.0 ? -y : y;
}

double normal_cdf(double x, const ErfCoefficients& c) { return 0.5 * (1.0 + erf_approx(x / std::sqrt(2.0), c)); }

double ex1_conditional(int degree, int github) {
    if (degree == 1 && github == 1) return 1.0 - kEx1DegreeThreshold;  // P(U_L > 0.45)
    if (degree == 0 && github == 1) return 1.0;
    if (degree == 0 && github == 0) return 0.0;
    if (degree == 1 && github == 0) throw Error("zero-probability observation");
    throw Error("example-1 features are binary");
}

double ex1_post_conditional() {
    // U_L | rejected ~ Unif(0, 0.55); after do(D=1), L^p = 1[U_L > 0.45].
    return (kEx1NoDegreeThreshold - kEx1DegreeThreshold) / kEx1NoDegreeThreshold;
}

double ex1_post_mixture(double post_weight) {
    if (post_weight < 0.0 || post_weight > 1.0) throw Error("post weight must lie in [0, 1]");
    return post_weight * ex1_post_conditional() + (1.0 - post_weight) * ex1_conditional(1, 1);
}

double ex2_h(double x_cause, double x_effect, const ErfCoefficients& c) {
    return normal_cdf((x_cause + x_effect) / std::sqrt(2.0), c);
}

double ex2_cause_only(double x_cause, const ErfCoefficients& c) { return normal_cdf(x_cause, c); }

double ex2_post_mixture(double x_cause, double x_effect, double beta, const ErfCoefficients& c) {
    if (!(beta > 0.0 && beta <= 1.0)) throw Error("beta must lie in (0, 1]");
    return (1.0 - beta) * ex2_h(x_cause, x_effect, c) + beta * ex2_cause_only(x_cause, c);
}

namespace {

double reference_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::string fmt(double v) {
    std::ostringstream out;
    out.precision(8);
    out << v;
    return out.str();
}

}  // namespace

std::vector<CheckResult> verify_all(const ErfCoefficients& c) {
    std::vector<CheckResult> out;
    auto check = [&out](std::string name, bool ok, std::string detail = {}) {
        out.push_back({std::move(name), ok, std::move(detail)});
    };

    check("ex1_conditional(1,1) = 0.55", ex1_conditional(1, 1) == 0.55, fmt(ex1_conditional(1, 1)));
    check("ex1_conditional(0,1) = 1", ex1_conditional(0, 1) == 1.0);
    check("ex1_conditional(0,0) = 0", ex1_conditional(0, 0) == 0.0);
    bool threw = false;
    try {
        ex1_conditional(1, 0);
    } catch (const Error&) {
        threw = true;
    }
    check("ex1_conditional(1,0) rejected as zero-probability", threw);

    check("ex1_post_mixture(0) = 0.55", std::abs(ex1_post_mixture(0.0) - 0.55) < 1e-15);
    check("ex1_post_mixture(1) = 0.1/0.55", std::abs(ex1_post_mixture(1.0) - 0.1 / 0.55) < 1e-15,
          fmt(ex1_post_mixture(1.0)));
    const double mix = ex1_post_mixture(0.2);
    check("ex1_post_mixture(0.2) evaluates to 0.476364", std::abs(mix - (0.2 * 0.1 / 0.55 + 0.8 * 0.55)) < 1e-15 &&
                                                             std::abs(mix - 0.4763636) < 1e-6,
          fmt(mix));
    check("ex1 mixture below t_c (evaluated " + fmt(mix) + ", printed " + fmt(kEx1PrintedMixture) + ")",
          mix < kEx1DecisionThreshold && kEx1PrintedMixture < kEx1DecisionThreshold);

    check("Phi(0) = 0.5 exactly", normal_cdf(0.0, c) == 0.5);
    double worst = 0.0;
    bool monotone = true;
    bool symmetric = true;
    double prev = -1.0;
    for (int i = -600; i <= 600; ++i) {
        const double x = i / 100.0;
        const double v = normal_cdf(x, c);
        worst = std::max(worst, std::abs(v - reference_cdf(x)));
        monotone = monotone && v >= prev;
        symmetric = symmetric && std::abs(normal_cdf(-x, c) - (1.0 - v)) < 1e-15;
        prev = v;
    }
    check("Phi within 1e-6 of erfc reference on [-6, 6]", worst <= 1e-6, "max |err| = " + fmt(worst));
    check("Phi monotone", monotone);
    check("Phi(-t) = 1 - Phi(t)", symmetric);

    check("ex2_h(0,0) = 0.5", ex2_h(0.0, 0.0, c) == 0.5);
    const double h11 = ex2_h(1.0, 1.0, c);
    check("ex2_h(1,1) = Phi(sqrt 2) ~ 0.92135", std::abs(h11 - reference_cdf(std::sqrt(2.0))) <= 1e-6, fmt(h11));
    bool boundary = true;
    bool swap = true;
    for (int i = -20; i <= 20; ++i) {
        const double a = i * 0.173;
        boundary = boundary && ex2_h(a, -a, c) == 0.5;
        swap = swap && ex2_h(a, 0.31 * i - 1.0, c) == ex2_h(0.31 * i - 1.0, a, c);
    }
    check("ex2_h exactly 0.5 on x_C = -x_E", boundary);
    check("ex2_h symmetric in its arguments", swap);

    const double pm = ex2_post_mixture(-1.0, 1.0, 0.5, c);
    check("ex2_post_mixture(-1, 1, 0.5) ~ 0.3293", std::abs(pm - (0.25 + 0.5 * reference_cdf(-1.0))) <= 1e-6,
          fmt(pm));
    bool invalidated = true;
    for (int i = 1; i <= 30; ++i)
        for (int b = 1; b <= 10; ++b) {
            const double xc = -0.1 * i;
            invalidated = invalidated && ex2_post_mixture(xc, -xc, 0.1 * b, c) < 0.5;
        }
    check("boundary points with x_C < 0 invalidated for all beta", invalidated);
    check("ex2_post_mixture beta -> 0 recovers h",
          std::abs(ex2_post_mixture(-0.7, 1.3, 1e-12, c) - ex2_h(-0.7, 1.3, c)) < 1e-10);
    return out;
}

}  // namespace perfrec::analytic
