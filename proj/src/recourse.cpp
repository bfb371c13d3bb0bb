#include "perfrec/recourse.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <set>
#include <tuple>

#include "perfrec/errors.hpp"

namespace perfrec {

std::string to_string(Method m) {
    switch (m) {
        case Method::CE: return "CE";
        case Method::indCR: return "indCR";
        case Method::subCR: return "subCR";
        case Method::indICR: return "indICR";
        case Method::subICR: return "subICR";
    }
    return "?";
}

Method parse_method(std::string_view name) {
    for (Method m : all_methods())
        if (to_string(m) == name) return m;
    throw Error("unknown method '" + std::string(name) + "' (expected CE, indCR, subCR, indICR or subICR)");
}

const std::vector<Method>& all_methods() {
    static const std::vector<Method> methods{Method::CE, Method::indCR, Method::subCR, Method::indICR, Method::subICR};
    return methods;
}

bool is_individualized(Method m) { return m == Method::indCR || m == Method::indICR; }
bool targets_improvement(Method m) { return m == Method::indICR || m == Method::subICR; }

std::string to_string(Penalty p) { return p == Penalty::hinge ? "hinge" : "literal"; }

Penalty parse_penalty(std::string_view name) {
    if (name == "hinge") return Penalty::hinge;
    if (name == "literal") return Penalty::literal;
    throw Error("unknown penalty shape '" + std::string(name) + "' (expected hinge or literal)");
}

// ---------------------------------------------------------------------------
// Costs and domains

CostModel CostModel::from_calibration(const Scm& scm, const Dataset& calibration) {
    const auto& graph = scm.graph();
    const std::size_t d = graph.features().size();
    if (calibration.empty() || calibration.n_features() != d) throw Error("calibration sample does not match the SCM");
    CostModel out;
    out.pi.assign(d, 0);
    std::size_t rank = 0;
    for (NodeId v : graph.dag().topological_order())
        if (v != graph.target()) out.pi[graph.feature_position(v)] = ++rank;
    out.variance.assign(d, 0.0);
    out.gamma.assign(d, 0.0);
    const double n = static_cast<double>(calibration.size());
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (const auto& row : calibration.x) mean += row[j];
        mean /= n;
        double ss = 0.0;
        for (const auto& row : calibration.x) ss += (row[j] - mean) * (row[j] - mean);
        out.variance[j] = ss / n;
        if (!(out.variance[j] > 0.0))
            throw Error("feature '" + calibration.feature_names[j] + "' has zero variance; cost weight undefined");
        out.gamma[j] = 1.0 / (static_cast<double>(out.pi[j]) * out.variance[j]);
    }
    return out;
}

CostModel CostModel::from_gamma(std::vector<double> gamma) {
    for (double g : gamma)
        if (!(g > 0.0) || !std::isfinite(g)) throw Error("cost weights must be positive and finite");
    CostModel out;
    out.pi.resize(gamma.size());
    for (std::size_t j = 0; j < gamma.size(); ++j) out.pi[j] = j + 1;
    out.variance.assign(gamma.size(), 0.0);
    out.gamma = std::move(gamma);
    return out;
}

std::vector<FeatureDomain> domains_from_sample(const Dataset& calibration, bool categorical) {
    if (calibration.empty()) throw Error("empty calibration sample");
    const std::size_t d = calibration.n_features();
    std::vector<FeatureDomain> out(d);
    const double n = static_cast<double>(calibration.size());
    for (std::size_t j = 0; j < d; ++j) {
        FeatureDomain& dom = out[j];
        dom.lo = std::numeric_limits<double>::infinity();
        dom.hi = -dom.lo;
        double mean = 0.0;
        std::set<double> values;
        for (const auto& row : calibration.x) {
            dom.lo = std::min(dom.lo, row[j]);
            dom.hi = std::max(dom.hi, row[j]);
            mean += row[j];
            if (categorical) values.insert(row[j]);
        }
        mean /= n;
        double ss = 0.0;
        for (const auto& row : calibration.x) ss += (row[j] - mean) * (row[j] - mean);
        dom.stddev = std::sqrt(ss / n);
        dom.support.assign(values.begin(), values.end());
    }
    return out;
}

void OptimizerConfig::validate(std::size_t n_features) const {
    auto prob = [](double p, const char* what) {
        if (!(p >= 0.0 && p <= 1.0)) throw Error(std::string(what) + " must lie in [0, 1]");
    };
    prob(crossover, "crossover probability");
    prob(mutation, "mutation probability");
    prob(gene_mutation, "per-gene mutation rate");
    if (!(lambda > 0.0)) throw Error("penalty weight lambda must be positive");
    if (population < 2 || generations == 0 || tournament == 0) throw Error("invalid population settings");
    if (elitism >= population) throw Error("elitism must be smaller than the population");
    if (domains.size() != n_features) throw Error("optimizer needs one domain per feature");
}

Action Action::none(Method m) {
    Action a;
    a.kind = m == Method::CE ? Kind::point : Kind::intervention;
    a.method = m;
    return a;
}

std::string Action::serialize(const Scm& scm) const {
    nlohmann::json j;
    j["method"] = to_string(method);
    j["kind"] = kind == Kind::point ? "point" : "intervention";
    std::vector<std::string> names;
    for (NodeId t : intervention.targets) names.push_back(scm.graph().dag().name(t));
    j["targets"] = names;
    j["values"] = intervention.values;
    if (kind == Kind::point) j["point"] = point;
    j["success"] = success;
    j["cost"] = cost;
    j["feasible"] = feasible;
    return j.dump();
}

namespace {

double intervention_cost(const CostModel& model, const CausalGraph& graph, std::span<const double> x,
                         const Intervention& iv) {
    double c = 0.0;
    for (std::size_t i = 0; i < iv.targets.size(); ++i) {
        const std::size_t j = graph.feature_position(iv.targets[i]);
        c += model.gamma[j] * (x[j] - iv.values[i]) * (x[j] - iv.values[i]);
    }
    return c;
}

}  // namespace

double cost(const CostModel& model, const CausalGraph& graph, std::span<const double> x, const Action& action) {
    if (action.kind == Action::Kind::intervention) return intervention_cost(model, graph, x, action.intervention);
    if (action.point.empty()) return 0.0;
    double c = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) c += model.gamma[j] * (x[j] - action.point[j]) * (x[j] - action.point[j]);
    return c;
}

// ---------------------------------------------------------------------------
// Success probabilities

SuccessEstimator::SuccessEstimator(const RecourseProblem& problem, Row x, Stream rng)
    : problem_(problem), x_(std::move(x)), rng_(std::move(rng)), values_(problem.scm->graph().dag().size()) {
    if (!problem.scm || !problem.classifier) throw Error("recourse problem needs an SCM and a classifier");
    if (x_.size() != problem.scm->n_features()) throw Error("feature row has wrong length");
}

double SuccessEstimator::event(const std::vector<double>& values) const {
    const Scm& scm = *problem_.scm;
    if (targets_improvement(problem_.method)) return scm.label(values[scm.graph().target()]);
    return problem_.classifier->decide(scm.features_of(values));
}

double SuccessEstimator::expectation(const Posterior& post, const Intervention& intervention) {
    const Scm& scm = *problem_.scm;
    const double p = post.expectation([&](const NoiseVector& u) {
        scm.propagate(u, values_, &intervention);
        return event(values_);
    });
    // Normalized weights can sum to 1 + ulp.
    return std::clamp(p, 0.0, 1.0);
}

double SuccessEstimator::operator()(const Action& action) {
    const Scm& scm = *problem_.scm;
    if (action.kind == Action::Kind::point) return problem_.classifier->decide(action.point.empty() ? x_ : action.point);
    scm.validate(action.intervention);
    AbductionOptions opts;
    opts.particles = problem_.samples;
    opts.enumeration_cap = problem_.enumeration_cap;
    if (is_individualized(problem_.method)) {
        if (!individual_) individual_ = abduction_posterior(scm, x_, opts, rng_);
        return expectation(*individual_, action.intervention);
    }
    std::vector<bool> key(values_.size(), false);
    for (NodeId t : action.intervention.targets) key[t] = true;
    auto it = subpopulation_.find(key);
    if (it == subpopulation_.end())
        it = subpopulation_.emplace(key, subpopulation_posterior(scm, x_, action.intervention, opts, rng_)).first;
    return expectation(it->second, subpopulation_intervention(scm, x_, action.intervention));
}

double success_probability(const RecourseProblem& problem, std::span<const double> x, const Action& action,
                           Stream& rng) {
    SuccessEstimator est(problem, Row(x.begin(), x.end()), Stream(rng.engine()()));
    return est(action);
}

// ---------------------------------------------------------------------------
// Evolutionary search

namespace {

struct Genome {
    std::vector<char> active;
    std::vector<double> value;
};

struct Evaluation {
    double fitness = 0.0;
    double success = 0.0;
    double cost = 0.0;
    std::size_t n_targets = 0;
};

using Key = std::vector<double>;

class Search {
public:
    Search(const RecourseProblem& problem, std::span<const double> x, const OptimizerConfig& config, Stream& rng)
        : problem_(problem), config_(config), rng_(rng), x_(x.begin(), x.end()),
          estimator_(problem, x_, Stream(rng.engine()())), d_(x.size()) {}

    Action run() {
        std::vector<Genome> pop;
        pop.push_back(Genome{std::vector<char>(d_, 0), x_});
        while (pop.size() < config_.population) pop.push_back(random_genome());

        for (std::size_t gen = 0;; ++gen) {
            std::vector<std::pair<Evaluation, std::size_t>> scored;
            for (std::size_t i = 0; i < pop.size(); ++i) scored.emplace_back(evaluate(pop[i]), i);
            std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
                return std::tie(a.first.fitness, a.first.n_targets) < std::tie(b.first.fitness, b.first.n_targets);
            });
            if (gen + 1 >= config_.generations) break;

            std::vector<Genome> next;
            for (std::size_t e = 0; e < config_.elitism; ++e) next.push_back(pop[scored[e].second]);
            std::vector<double> fitness(pop.size());
            for (const auto& [ev, i] : scored) fitness[i] = ev.fitness;
            while (next.size() < config_.population) {
                Genome a = pop[tournament(fitness)];
                Genome b = pop[tournament(fitness)];
                if (rng_.bernoulli(config_.crossover)) crossover(a, b);
                if (rng_.bernoulli(config_.mutation)) mutate(a);
                if (rng_.bernoulli(config_.mutation)) mutate(b);
                next.push_back(std::move(a));
                if (next.size() < config_.population) next.push_back(std::move(b));
            }
            pop = std::move(next);
        }
        return finish();
    }

private:
    Genome random_genome() {
        Genome g{std::vector<char>(d_), std::vector<double>(d_)};
        for (std::size_t j = 0; j < d_; ++j) {
            g.active[j] = rng_.bernoulli(0.5) ? 1 : 0;
            g.value[j] = draw_value(j);
        }
        return g;
    }

    double draw_value(std::size_t j) {
        const FeatureDomain& dom = config_.domains[j];
        if (dom.categorical()) return dom.support[rng_.index(dom.support.size())];
        return dom.hi > dom.lo ? rng_.uniform(dom.lo, dom.hi) : dom.lo;
    }

    std::size_t tournament(const std::vector<double>& fitness) {
        std::size_t best = rng_.index(fitness.size());
        for (std::size_t k = 1; k < config_.tournament; ++k) {
            const std::size_t c = rng_.index(fitness.size());
            if (fitness[c] < fitness[best]) best = c;
        }
        return best;
    }

    void crossover(Genome& a, Genome& b) {
        for (std::size_t j = 0; j < d_; ++j)
            if (rng_.bernoulli(0.5)) {
                std::swap(a.active[j], b.active[j]);
                std::swap(a.value[j], b.value[j]);
            }
    }

    void mutate(Genome& g) {
        for (std::size_t j = 0; j < d_; ++j) {
            if (rng_.bernoulli(config_.gene_mutation)) g.active[j] = !g.active[j];
            if (rng_.bernoulli(config_.gene_mutation)) {
                const FeatureDomain& dom = config_.domains[j];
                if (dom.categorical()) {
                    g.value[j] = dom.support[rng_.index(dom.support.size())];
                } else {
                    const double sigma = 0.25 * (dom.stddev > 0.0 ? dom.stddev : 1.0);
                    g.value[j] = std::clamp(g.value[j] + rng_.normal(0.0, sigma), dom.lo, dom.hi);
                }
            }
        }
    }

    Key key_of(const Genome& g) const {
        Key k(2 * d_, 0.0);
        for (std::size_t j = 0; j < d_; ++j) {
            bool on = g.active[j] != 0;
            // A point change to the current value is no change.
            if (on && problem_.method == Method::CE && g.value[j] == x_[j]) on = false;
            k[2 * j] = on ? 1.0 : 0.0;
            k[2 * j + 1] = on ? g.value[j] : 0.0;
        }
        return k;
    }

    Action action_of(const Key& k) const {
        const auto& features = problem_.scm->graph().features();
        Action a = Action::none(problem_.method);
        if (problem_.method == Method::CE) {
            a.point = x_;
            for (std::size_t j = 0; j < d_; ++j)
                if (k[2 * j] != 0.0) a.point[j] = k[2 * j + 1];
        } else {
            for (std::size_t j = 0; j < d_; ++j)
                if (k[2 * j] != 0.0) {
                    a.intervention.targets.push_back(features[j]);
                    a.intervention.values.push_back(k[2 * j + 1]);
                }
        }
        return a;
    }

    double action_cost(const Action& a) const {
        return cost(problem_.cost, problem_.scm->graph(), x_, a);
    }

    Evaluation evaluate(const Genome& g) { return evaluate_key(key_of(g)); }

    Evaluation evaluate_key(const Key& k) {
        if (const auto it = cache_.find(k); it != cache_.end()) return it->second;
        const Action a = action_of(k);
        Evaluation ev;
        ev.success = estimator_(a);
        ev.cost = action_cost(a);
        for (std::size_t j = 0; j < d_; ++j) ev.n_targets += k[2 * j] != 0.0;
        const double gap = problem_.target_success - ev.success;
        const double pen = config_.penalty == Penalty::hinge ? std::max(0.0, gap) : gap;
        ev.fitness = ev.cost + config_.lambda * pen;
        cache_.emplace(k, ev);
        return ev;
    }

    bool feasible(const Evaluation& ev) const { return ev.success >= problem_.target_success - 1e-12; }

    // Tighten a feasible key: drop changes that are not needed, then pull
    // continuous values towards the applicant's own values.
    Key polish(Key k) {
        for (std::size_t j = 0; j < d_; ++j) {
            if (k[2 * j] == 0.0) continue;
            Key trial = k;
            trial[2 * j] = trial[2 * j + 1] = 0.0;
            const Evaluation ev = evaluate_key(trial);
            if (feasible(ev) && ev.cost <= evaluate_key(k).cost) k = trial;
        }
        for (std::size_t j = 0; j < d_; ++j) {
            if (k[2 * j] == 0.0 || config_.domains[j].categorical()) continue;
            const double target = k[2 * j + 1];
            double lo = 0.0, hi = 1.0;  // fraction of the move towards target
            for (int it = 0; it < 30; ++it) {
                const double mid = 0.5 * (lo + hi);
                Key trial = k;
                trial[2 * j + 1] = x_[j] + mid * (target - x_[j]);
                if (feasible(evaluate_key(trial))) hi = mid;
                else lo = mid;
            }
            k[2 * j + 1] = x_[j] + hi * (target - x_[j]);
        }
        return k;
    }

    Action finish() {
        // Cheapest feasible key per target set, each polished; else the
        // lowest-fitness key overall.
        std::map<std::vector<bool>, Key> per_set;
        const Key* fallback = nullptr;
        auto order = [](const Evaluation& a, const Evaluation& b, bool by_cost) {
            const double x = by_cost ? a.cost : a.fitness, y = by_cost ? b.cost : b.fitness;
            return std::tie(x, a.n_targets) < std::tie(y, b.n_targets);
        };
        for (const auto& [k, ev] : cache_) {
            if (!fallback || order(ev, cache_.at(*fallback), false)) fallback = &k;
            if (!feasible(ev)) continue;
            std::vector<bool> set(d_);
            for (std::size_t j = 0; j < d_; ++j) set[j] = k[2 * j] != 0.0;
            const auto it = per_set.find(set);
            if (it == per_set.end() || order(ev, cache_.at(it->second), true)) per_set[set] = k;
        }
        Key chosen = *fallback;
        if (!per_set.empty()) {
            std::vector<Key> polished;
            for (const auto& [set, k] : per_set) polished.push_back(polish(k));
            chosen = polished.front();
            for (const Key& k : polished)
                if (order(evaluate_key(k), evaluate_key(chosen), true)) chosen = k;
        }
        const Evaluation ev = evaluate_key(chosen);
        Action a = action_of(chosen);
        a.success = ev.success;
        a.cost = ev.cost;
        a.feasible = feasible(ev);
        return a;
    }

    const RecourseProblem& problem_;
    const OptimizerConfig& config_;
    Stream& rng_;
    Row x_;
    SuccessEstimator estimator_;
    std::size_t d_;
    std::map<Key, Evaluation> cache_;
};

}  // namespace

Action evolutionary_search(const RecourseProblem& problem, std::span<const double> x, const OptimizerConfig& config,
                           Stream& rng) {
    if (!problem.scm || !problem.classifier) throw Error("recourse problem needs an SCM and a classifier");
    if (!(problem.target_success > 0.0 && problem.target_success <= 1.0))
        throw Error("target success probability must lie in (0, 1]");
    config.validate(x.size());
    return Search(problem, x, config, rng).run();
}

Action recommend(const RecourseProblem& problem, std::span<const double> x, const OptimizerConfig& config,
                 Stream& rng) {
    if (problem.classifier->decide(x)) {
        Action a = Action::none(problem.method);
        a.success = success_probability(problem, x, a, rng);
        return a;
    }
    return evolutionary_search(problem, x, config, rng);
}

}  // namespace perfrec
