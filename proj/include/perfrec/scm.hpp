#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perfrec/dataset.hpp"
#include "perfrec/graph.hpp"
#include "perfrec/noise.hpp"
#include "perfrec/random.hpp"

namespace perfrec {

using NoiseVector = std::vector<double>;  // one value per graph node

/// x_j := evaluate(parent values, u_j). `invert_noise` (optional) recovers u_j
/// from the parents and x_j; it may return nullopt where the inverse is not
/// unique, in which case finite-support noise is enumerated instead.
struct StructuralEquation {
    using Evaluate = std::function<double(std::span<const double> parents, double noise)>;
    using Invert = std::function<std::optional<double>(std::span<const double> parents, double value)>;

    Evaluate evaluate;
    Invert invert_noise;

    /// x := u.
    static StructuralEquation identity();
    /// x := intercept + coef . parents + u.
    static StructuralEquation linear(std::vector<double> coef, double intercept = 0.0);
};

struct NodeModel {
    std::vector<std::string> parents;  // order in which `evaluate` receives parent values
    StructuralEquation equation;
    NoiseLaw noise;

    static NodeModel root(NoiseLaw law) { return {{}, StructuralEquation::identity(), std::move(law)}; }
};

/// do({X_i = theta_i}); node ids refer to the SCM's graph. Empty means do(∅).
struct Intervention {
    std::vector<NodeId> targets;
    std::vector<double> values;

    bool empty() const { return targets.empty(); }
    std::optional<double> value_of(NodeId id) const;
};

/// Structural causal model with binarized target L := 1[Y >= label_threshold].
/// Immutable; every sampling call takes an explicit stream.
class Scm {
public:
    Scm(CausalGraph graph, const std::map<std::string, NodeModel>& nodes, double label_threshold);

    const CausalGraph& graph() const { return graph_; }
    const NoiseLaw& noise_law(NodeId id) const { return nodes_.at(id).noise; }
    const StructuralEquation& equation(NodeId id) const { return nodes_.at(id).equation; }
    /// Parent ids in the order the node's equation expects them.
    const std::vector<NodeId>& equation_parents(NodeId id) const { return nodes_.at(id).parents; }
    double label_threshold() const { return threshold_; }
    int label(double y) const { return y >= threshold_ ? 1 : 0; }
    std::size_t n_features() const { return graph_.features().size(); }
    std::vector<std::string> feature_names() const { return graph_.feature_names(); }
    bool finite_support() const;
    std::optional<double> clamp(NodeId id) const { return nodes_.at(id).clamp; }

    Scm with_label_threshold(double t) const;
    /// New SCM with constant equations at the targets; this one is unchanged.
    Scm intervene(const Intervention& intervention) const;
    void validate(const Intervention& intervention) const;

    double evaluate_node(NodeId id, std::span<const double> values, double noise) const;

    /// Evaluate all nodes in topological order for the given noise; nodes
    /// clamped in this SCM or targeted by `extra` take their fixed values.
    void propagate(std::span<const double> noise, std::span<double> values, const Intervention* extra = nullptr) const;
    Row features_of(std::span<const double> values) const;

    NoiseVector sample_noise(Stream& rng) const;
    Dataset sample(std::size_t n, Stream& rng) const;
    /// One row from a given noise vector under an optional intervention.
    void simulate_into(Dataset& out, const NoiseVector& noise, const Intervention* extra = nullptr) const;

private:
    struct Node {
        std::vector<NodeId> parents;
        StructuralEquation equation;
        NoiseLaw noise;
        std::optional<double> clamp;
    };

    CausalGraph graph_;
    std::vector<Node> nodes_;
    double threshold_;
};

struct AbductionOptions {
    std::size_t particles = 1000;
    /// Exact enumeration when the product of the unobserved noise supports is
    /// at most this many combinations.
    std::size_t enumeration_cap = 64;
};

/// Weighted noise particles representing P(U | evidence). Weights are
/// normalized. `exact` marks a full enumeration of a finite posterior.
struct Posterior {
    std::vector<NoiseVector> particles;
    std::vector<double> weights;
    bool exact = false;

    std::vector<NoiseVector> draw(std::size_t m, Stream& rng) const;

    template <class F>
    double expectation(F&& f) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < particles.size(); ++i) acc += weights[i] * f(particles[i]);
        return acc;
    }
};

/// Likelihood-weighted noise posterior given observed node values
/// (`evidence[id]` set for observed nodes). Nodes flagged in `ignore` are
/// neither enumerated nor weighted; they must not be ancestors of evidence.
/// Throws InfeasibleObservation when no noise reproduces the evidence.
Posterior infer_noise(const Scm& scm, const std::vector<std::optional<double>>& evidence,
                      const std::vector<bool>& ignore, const AbductionOptions& options, Stream& rng);

/// P(U | X = x) for a full feature row.
Posterior abduction_posterior(const Scm& scm, std::span<const double> x, const AbductionOptions& options, Stream& rng);
std::vector<NoiseVector> abduct(const Scm& scm, std::span<const double> x, std::size_t m, Stream& rng,
                                const AbductionOptions& options = {});

/// Abduction, intervention, simulation with the same noise.
Dataset counterfactual_sample(const Scm& scm, std::span<const double> x, const Intervention& intervention,
                              std::size_t m, Stream& rng, const AbductionOptions& options = {});

/// Features that are neither intervened upon nor descendants of a target.
std::vector<NodeId> nondescendant_features(const Scm& scm, const Intervention& intervention);

/// Posterior over noise given only the nondescendant features of the
/// intervention; intervened nodes' noise is ignored.
Posterior subpopulation_posterior(const Scm& scm, std::span<const double> x, const Intervention& intervention,
                                  const AbductionOptions& options, Stream& rng);
/// Intervention extended with clamps of every nondescendant feature to x.
Intervention subpopulation_intervention(const Scm& scm, std::span<const double> x, const Intervention& intervention);
Dataset subpop_sample(const Scm& scm, std::span<const double> x, const Intervention& intervention, std::size_t m,
                      Stream& rng, const AbductionOptions& options = {});

/// Exact joint law of (features, label) for finite-support SCMs.
struct FiniteCell {
    double mass = 0.0;
    double positive = 0.0;  // P(L = 1, X = x)
    double conditional() const { return mass > 0.0 ? positive / mass : 0.0; }
};
using FiniteDistribution = std::map<Row, FiniteCell>;

/// Enumerates every noise combination; throws if the SCM has continuous noise
/// or more than `cap` combinations.
FiniteDistribution enumerate_joint(const Scm& scm, std::size_t cap = 100000);

/// Least-squares linear equation per node on its parents with a Gaussian
/// residual; roots get a Gaussian marginal. The label threshold is the
/// sample median of the target column.
Scm fit_linear_gaussian(const CausalGraph& graph, const Table& data);

/// numpy-style median (mean of the two middle order statistics).
double median(std::vector<double> values);

}  // namespace perfrec
