#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "perfrec/random.hpp"

namespace perfrec {

class NoiseLaw;

/// Binomial(n, p) shifted so that its mean is `mean`.
struct ShiftedBinomial {
    int n = 0;
    double p = 0.5;
    double mean = 0.0;
    double offset() const { return mean - n * p; }
};

/// sigma == 0 denotes a point mass at mu.
struct Gaussian {
    double mu = 0.0;
    double sigma = 1.0;
};

struct Uniform {
    double lo = 0.0;
    double hi = 1.0;
};

struct Bernoulli {
    double p = 0.5;
};

struct Mixture {
    std::vector<double> weights;
    std::vector<NoiseLaw> components;
};

/// Weighted support point of a finite-support law.
struct Atom {
    double value;
    double prob;
};

/// Exogenous noise distribution of one SCM node.
class NoiseLaw {
public:
    using Variant = std::variant<ShiftedBinomial, Gaussian, Uniform, Bernoulli, Mixture>;

    NoiseLaw();
    NoiseLaw(ShiftedBinomial law);
    NoiseLaw(Gaussian law);
    NoiseLaw(Uniform law);
    NoiseLaw(Bernoulli law);
    NoiseLaw(Mixture law);

    static NoiseLaw point(double value) { return Gaussian{value, 0.0}; }

    const Variant& variant() const { return law_; }

    double sample(Stream& rng) const;
    /// Support points with probabilities, sorted by value, or nullopt for
    /// continuous laws.
    const std::optional<std::vector<Atom>>& atoms() const { return atoms_; }
    bool finite() const { return atoms_.has_value(); }
    /// Snap to the nearest support atom within `tol`; nullopt when none.
    std::optional<Atom> match(double value, double tol = 1e-9) const;
    /// Probability mass (finite laws) or density (continuous laws).
    double likelihood(double value) const;
    double mean() const;
    double variance() const;
    std::string describe() const;

private:
    Variant law_;
    std::optional<std::vector<Atom>> atoms_;
};

}  // namespace perfrec
