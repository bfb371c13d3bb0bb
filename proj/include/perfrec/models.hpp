#pragma once

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "perfrec/dataset.hpp"
#include "perfrec/scm.hpp"

namespace perfrec {

enum class Backend { tree, logistic, oracle };

std::string to_string(Backend b);

struct TreeParams {
    std::size_t max_depth = 0;  // 0: unbounded
    std::size_t min_samples_leaf = 1;
};

struct LogisticParams {
    double learning_rate = 1.0;  // initial step; backtracking adapts it
    std::size_t max_iterations = 200000;
    double tolerance = 1e-6;  // on the gradient norm of the mean loss
    double l2 = 0.0;
};

/// CART tree with gini splits; a leaf scores the label frequency of its rows.
struct DecisionTree {
    struct Node {
        int feature = -1;  // -1 for leaves
        double threshold = 0.0;  // go left iff x[feature] <= threshold
        int left = -1;
        int right = -1;
        double value = 0.0;
        std::size_t samples = 0;
    };
    std::vector<Node> nodes;

    double predict(std::span<const double> x) const;
    std::size_t depth() const;
};

struct LogisticModel {
    std::vector<double> weights;
    double intercept = 0.0;
    std::size_t iterations = 0;
    double gradient_norm = 0.0;

    double predict(std::span<const double> x) const;
};

using Scorer = std::function<double(std::span<const double>)>;

/// Probabilistic scorer h(x) with decision 1[h(x) >= threshold].
class Classifier {
public:
    Classifier(DecisionTree tree, double threshold = 0.5);
    Classifier(LogisticModel model, double threshold = 0.5);
    static Classifier oracle(Scorer scorer, double threshold = 0.5);

    double score(std::span<const double> x) const;
    int decide(std::span<const double> x) const { return score(x) >= threshold_ ? 1 : 0; }
    double threshold() const { return threshold_; }
    Backend backend() const;
    Classifier with_threshold(double t) const;

    const DecisionTree* tree() const { return std::get_if<DecisionTree>(&impl_); }
    const LogisticModel* logistic() const { return std::get_if<LogisticModel>(&impl_); }

    double accuracy(const Dataset& data) const;
    double acceptance_rate(const std::vector<Row>& rows) const;

    /// JSON document: nested split records for trees, a weight list for
    /// logistic models. Oracle scorers serialize only their threshold.
    std::string serialize() const;

private:
    struct OracleScorer {
        Scorer fn;
    };
    Classifier(std::variant<DecisionTree, LogisticModel, OracleScorer> impl, double threshold);

    std::variant<DecisionTree, LogisticModel, OracleScorer> impl_;
    double threshold_;
};

/// Greedy CART; ties broken by lowest feature index, then lowest threshold.
/// A single-class dataset yields a constant scorer.
Classifier fit_tree(const Dataset& data, const TreeParams& params = {}, double threshold = 0.5);

/// Maximum likelihood by gradient descent with backtracking line search.
/// Throws if the gradient norm is still above tolerance at the iteration cap.
Classifier fit_logistic(const Dataset& data, const LogisticParams& params = {}, double threshold = 0.5);

/// Mean log-loss (+ l2/2 |w|^2) at params = (w_1..w_d, b); fills `grad` when given.
double logistic_objective(const Dataset& data, std::span<const double> params, double l2,
                          std::vector<double>* grad = nullptr);

/// Concatenation of equally sized parts; the post-recourse part is one third.
Dataset assemble_refit_set(const Dataset& pre_accepted, const Dataset& pre_rejected_matched,
                           const Dataset& post_recourse);

struct MixtureSpec {
    double alpha = 1.0;  // weight of the pre-recourse component

    explicit MixtureSpec(double a);
};

/// Exact P(L^m = 1 | X^m = x) for alpha * pre + (1 - alpha) * post, where both
/// components are joint laws of (X, L) with finite support.
double mixture_conditional(const FiniteDistribution& pre, const FiniteDistribution& post, MixtureSpec spec,
                           const Row& x);

struct ValidityViolation {
    Row x;
    double alpha;
    double conditional;
};

/// Checks decide_mixture(x) >= decide_pre(x) for all x in `points` and alpha
/// on an evenly spaced grid over [0, 1] with `grid_points` points.
std::vector<ValidityViolation> performative_validity_violations(const FiniteDistribution& pre,
                                                                const FiniteDistribution& post,
                                                                const std::vector<Row>& points, double threshold,
                                                                std::size_t grid_points = 11);

}  // namespace perfrec
