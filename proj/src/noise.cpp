#include "perfrec/noise.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>

#include "perfrec/errors.hpp"

namespace perfrec {

namespace {

double binomial_pmf(int n, double p, int k) {
    const double log_choose = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    double lp = log_choose;
    if (k > 0) lp += k * std::log(p);
    if (n - k > 0) lp += (n - k) * std::log1p(-p);
    return std::exp(lp);
}

std::optional<std::vector<Atom>> compute_atoms(const NoiseLaw::Variant& law) {
    return std::visit(
        [](const auto& l) -> std::optional<std::vector<Atom>> {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, ShiftedBinomial>) {
                std::vector<Atom> out;
                for (int k = 0; k <= l.n; ++k) {
                    const double pr = binomial_pmf(l.n, l.p, k);
                    if (pr > 0.0) out.push_back({k + l.offset(), pr});
                }
                return out;
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                if (l.sigma == 0.0) return std::vector<Atom>{{l.mu, 1.0}};
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, Uniform>) {
                return std::nullopt;
            } else if constexpr (std::is_same_v<T, Bernoulli>) {
                std::vector<Atom> out;
                if (l.p < 1.0) out.push_back({0.0, 1.0 - l.p});
                if (l.p > 0.0) out.push_back({1.0, l.p});
                return out;
            } else {
                std::map<double, double> merged;
                for (std::size_t i = 0; i < l.components.size(); ++i) {
                    const auto& sub = l.components[i].atoms();
                    if (!sub) return std::nullopt;
                    for (const Atom& a : *sub) merged[a.value] += l.weights[i] * a.prob;
                }
                std::vector<Atom> out;
                for (const auto& [v, pr] : merged) out.push_back({v, pr});
                return out;
            }
        },
        law);
}

}  // namespace

NoiseLaw::NoiseLaw() : NoiseLaw(Gaussian{0.0, 0.0}) {}

NoiseLaw::NoiseLaw(ShiftedBinomial law) : law_(law) {
    if (law.n < 0 || law.p < 0.0 || law.p > 1.0) throw Error("invalid ShBin parameters");
    atoms_ = compute_atoms(law_);
}

NoiseLaw::NoiseLaw(Gaussian law) : law_(law) {
    if (!(law.sigma >= 0.0) || !std::isfinite(law.mu)) throw Error("invalid Gaussian parameters");
    atoms_ = compute_atoms(law_);
}

NoiseLaw::NoiseLaw(Uniform law) : law_(law) {
    if (!(law.hi > law.lo)) throw Error("invalid Uniform bounds");
}

NoiseLaw::NoiseLaw(Bernoulli law) : law_(law) {
    if (law.p < 0.0 || law.p > 1.0) throw Error("invalid Bernoulli parameter");
    atoms_ = compute_atoms(law_);
}

NoiseLaw::NoiseLaw(Mixture law) : law_(std::move(law)) {
    const auto& m = std::get<Mixture>(law_);
    if (m.weights.size() != m.components.size() || m.weights.empty()) throw Error("mixture weight/component mismatch");
    const double total = std::accumulate(m.weights.begin(), m.weights.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9 || std::any_of(m.weights.begin(), m.weights.end(), [](double w) { return w < 0; }))
        throw Error("mixture weights must be nonnegative and sum to 1");
    const bool any_finite = std::any_of(m.components.begin(), m.components.end(), [](const NoiseLaw& c) { return c.finite(); });
    const bool all_finite = std::all_of(m.components.begin(), m.components.end(), [](const NoiseLaw& c) { return c.finite(); });
    if (any_finite && !all_finite) throw Error("mixtures of discrete and continuous laws are not supported");
    atoms_ = compute_atoms(law_);
}

double NoiseLaw::sample(Stream& rng) const {
    return std::visit(
        [&rng](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, ShiftedBinomial>) {
                return rng.binomial(l.n, l.p) + l.offset();
            } else if constexpr (std::is_same_v<T, Gaussian>) {
                return l.sigma == 0.0 ? l.mu : rng.normal(l.mu, l.sigma);
            } else if constexpr (std::is_same_v<T, Uniform>) {
                return rng.uniform(l.lo, l.hi);
            } else if constexpr (std::is_same_v<T, Bernoulli>) {
                return rng.bernoulli(l.p) ? 1.0 : 0.0;
            } else {
                const std::size_t k = rng.categorical(l.weights, 1.0);
                return l.components[k].sample(rng);
            }
        },
        law_);
}

std::optional<Atom> NoiseLaw::match(double value, double tol) const {
    if (!atoms_) return std::nullopt;
    const auto& a = *atoms_;
    auto it = std::lower_bound(a.begin(), a.end(), value, [](const Atom& x, double v) { return x.value < v; });
    std::optional<Atom> best;
    for (auto cand : {it, it == a.begin() ? a.end() : std::prev(it)}) {
        if (cand == a.end()) continue;
        if (std::abs(cand->value - value) <= tol * std::max(1.0, std::abs(value)))
            if (!best || std::abs(cand->value - value) < std::abs(best->value - value)) best = *cand;
    }
    return best;
}

double NoiseLaw::likelihood(double value) const {
    if (atoms_) {
        const auto m = match(value);
        return m ? m->prob : 0.0;
    }
    return std::visit(
        [value](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Gaussian>) {
                const double z = (value - l.mu) / l.sigma;
                return std::exp(-0.5 * z * z) / (l.sigma * std::sqrt(2.0 * std::numbers::pi));
            } else if constexpr (std::is_same_v<T, Uniform>) {
                constexpr double tol = 1e-9;
                return (value >= l.lo - tol && value <= l.hi + tol) ? 1.0 / (l.hi - l.lo) : 0.0;
            } else if constexpr (std::is_same_v<T, Mixture>) {
                double d = 0.0;
                for (std::size_t i = 0; i < l.components.size(); ++i) d += l.weights[i] * l.components[i].likelihood(value);
                return d;
            } else {
                return 0.0;  // finite laws handled above
            }
        },
        law_);
}

double NoiseLaw::mean() const {
    if (atoms_) {
        double m = 0.0;
        for (const Atom& a : *atoms_) m += a.value * a.prob;
        return m;
    }
    return std::visit(
        [](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Gaussian>) return l.mu;
            else if constexpr (std::is_same_v<T, Uniform>) return 0.5 * (l.lo + l.hi);
            else if constexpr (std::is_same_v<T, Mixture>) {
                double m = 0.0;
                for (std::size_t i = 0; i < l.components.size(); ++i) m += l.weights[i] * l.components[i].mean();
                return m;
            } else return 0.0;
        },
        law_);
}

double NoiseLaw::variance() const {
    const double mu = mean();
    if (atoms_) {
        double v = 0.0;
        for (const Atom& a : *atoms_) v += (a.value - mu) * (a.value - mu) * a.prob;
        return v;
    }
    return std::visit(
        [mu](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Gaussian>) return l.sigma * l.sigma;
            else if constexpr (std::is_same_v<T, Uniform>) return (l.hi - l.lo) * (l.hi - l.lo) / 12.0;
            else if constexpr (std::is_same_v<T, Mixture>) {
                double second = 0.0;
                for (std::size_t i = 0; i < l.components.size(); ++i) {
                    const double cm = l.components[i].mean();
                    second += l.weights[i] * (l.components[i].variance() + cm * cm);
                }
                return second - mu * mu;
            } else return 0.0;
        },
        law_);
}

std::string NoiseLaw::describe() const {
    std::ostringstream out;
    std::visit(
        [&out](const auto& l) {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, ShiftedBinomial>) out << "ShBin(" << l.n << ", " << l.p << ", " << l.mean << ")";
            else if constexpr (std::is_same_v<T, Gaussian>) out << "N(" << l.mu << ", " << l.sigma << ")";
            else if constexpr (std::is_same_v<T, Uniform>) out << "Unif(" << l.lo << ", " << l.hi << ")";
            else if constexpr (std::is_same_v<T, Bernoulli>) out << "Bern(" << l.p << ")";
            else {
                for (std::size_t i = 0; i < l.components.size(); ++i)
                    out << (i ? " + " : "") << l.weights[i] << " " << l.components[i].describe();
            }
        },
        law_);
    return out.str();
}

}  // namespace perfrec
