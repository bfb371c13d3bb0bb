#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perfrec/models.hpp"
#include "perfrec/scm.hpp"

namespace perfrec {

enum class Method { CE, indCR, subCR, indICR, subICR };

std::string to_string(Method m);
Method parse_method(std::string_view name);
const std::vector<Method>& all_methods();
bool is_individualized(Method m);
/// ICR variants score the true post-recourse label instead of the prediction.
bool targets_improvement(Method m);

/// gamma_j = 1 / (pi_j sigma_j^2) with pi_j the 1-based topological position
/// of feature j among the features.
struct CostModel {
    std::vector<double> gamma;
    std::vector<std::size_t> pi;
    std::vector<double> variance;

    static CostModel from_calibration(const Scm& scm, const Dataset& calibration);
    static CostModel from_gamma(std::vector<double> gamma);
};

/// Search range of one feature's value gene.
struct FeatureDomain {
    double lo = 0.0;
    double hi = 0.0;
    double stddev = 0.0;
    std::vector<double> support;  // nonempty for categorical features

    bool categorical() const { return !support.empty(); }
};

/// Bounds, spread and (when `categorical`) the sorted distinct values of each
/// feature column.
std::vector<FeatureDomain> domains_from_sample(const Dataset& calibration, bool categorical);

struct Action {
    enum class Kind { point, intervention };

    Kind kind = Kind::intervention;
    Method method = Method::indCR;
    Row point;  // CE: the full counterfactual row
    Intervention intervention;
    double success = 1.0;
    double cost = 0.0;
    bool feasible = true;

    static Action none(Method m);
    bool empty() const { return kind == Kind::intervention && intervention.empty(); }
    /// JSON with method, target names, values, success and cost.
    std::string serialize(const Scm& scm) const;
};

struct RecourseProblem {
    const Scm* scm = nullptr;
    const Classifier* classifier = nullptr;
    CostModel cost;
    Method method = Method::indCR;
    double target_success = 0.9;
    /// Noise particles per probability estimate (posteriors that can be
    /// enumerated exactly are used in full instead).
    std::size_t samples = 1000;
    std::size_t enumeration_cap = 64;
};

enum class Penalty { hinge, literal };

std::string to_string(Penalty p);
Penalty parse_penalty(std::string_view name);

struct OptimizerConfig {
    std::size_t population = 25;
    std::size_t generations = 25;
    double crossover = 0.5;
    double mutation = 0.5;
    double gene_mutation = 0.2;
    double lambda = 1e4;
    Penalty penalty = Penalty::hinge;
    std::size_t tournament = 3;
    std::size_t elitism = 1;
    std::vector<FeatureDomain> domains;

    void validate(std::size_t n_features) const;
};

/// CE: weighted squared distance over all coordinates; interventions: over
/// the targets only.
double cost(const CostModel& model, const CausalGraph& graph, std::span<const double> x, const Action& action);

/// Success-probability oracle for one applicant. Posteriors are computed
/// once per applicant (individualized) or per target set (subpopulation) and
/// reused across candidate actions.
class SuccessEstimator {
public:
    SuccessEstimator(const RecourseProblem& problem, Row x, Stream rng);

    double operator()(const Action& action);
    const Row& x() const { return x_; }

private:
    double event(const std::vector<double>& values) const;
    double expectation(const Posterior& post, const Intervention& intervention);

    const RecourseProblem& problem_;
    Row x_;
    Stream rng_;
    std::optional<Posterior> individual_;
    std::map<std::vector<bool>, Posterior> subpopulation_;
    std::vector<double> values_;
};

double success_probability(const RecourseProblem& problem, std::span<const double> x, const Action& action,
                           Stream& rng);

/// Genetic search over (indicator, value) gene pairs per feature; returns the
/// cheapest action meeting the target success, else the best-fitness one
/// with `feasible` cleared.
Action evolutionary_search(const RecourseProblem& problem, std::span<const double> x, const OptimizerConfig& config,
                           Stream& rng);

/// do(∅) for accepted applicants, otherwise the search result.
Action recommend(const RecourseProblem& problem, std::span<const double> x, const OptimizerConfig& config,
                 Stream& rng);

}  // namespace perfrec
