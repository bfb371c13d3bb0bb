#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

namespace perfrec::analytic {

/// Coefficients of the rational erf approximation
///   erf(x) ~ 1 - (a1 t + a2 t^2 + a3 t^3 + a4 t^4 + a5 t^5) exp(-x^2),  t = 1/(1 + p x)
/// for x >= 0 (Abramowitz & Stegun 7.1.26, |error| <= 1.5e-7), extended by
/// odd symmetry. The normal CDF built on it is within 7.5e-8 of exact.
struct ErfCoefficients {
    double p = 0.3275911;
    std::array<double, 5> a{0.254829592, -0.284496736, 1.421413741, -1.453152027, 1.061405429};
};

double erf_approx(double x, const ErfCoefficients& c = {});
/// Standard normal CDF; Phi(0) is exactly 0.5.
double normal_cdf(double x, const ErfCoefficients& c = {});

// Degree (D) / qualification (L) / GitHub activity (G) example.
inline constexpr double kEx1DegreeThreshold = 0.45;
inline constexpr double kEx1NoDegreeThreshold = 0.55;
inline constexpr double kEx1DecisionThreshold = 0.5;
/// The mixture value printed alongside the closed-form expression; kept for
/// reporting next to the directly evaluated number.
inline constexpr double kEx1PrintedMixture = 0.4844;

/// P(L = 1 | X = (degree, github)). Throws for (1, 0), which has probability 0.
double ex1_conditional(int degree, int github);
/// P(L^p = 1 | X^p = (1,1), rejected) for applicants who acquired a degree.
double ex1_post_conditional();
/// post_weight * P(L^p=1 | (1,1)) + (1 - post_weight) * P(L=1 | (1,1)).
double ex1_post_mixture(double post_weight);

// Gaussian chain X_C -> Y -> X_E with standard normal noise and L = 1[Y >= 0].
/// h(x) = Phi((x_C + x_E) / sqrt 2).
double ex2_h(double x_cause, double x_effect, const ErfCoefficients& c = {});
/// P(L = 1 | X_C = x_C) = Phi(x_C).
double ex2_cause_only(double x_cause, const ErfCoefficients& c = {});
/// (1 - beta) h(x) + beta Phi(x_C); beta must lie in (0, 1].
double ex2_post_mixture(double x_cause, double x_effect, double beta, const ErfCoefficients& c = {});

struct CheckResult {
    std::string name;
    bool passed;
    std::string detail;
};

/// Every oracle assertion, evaluated with the given Phi coefficients.
std::vector<CheckResult> verify_all(const ErfCoefficients& c = {});

}  // namespace perfrec::analytic
