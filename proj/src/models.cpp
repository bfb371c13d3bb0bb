#include "perfrec/models.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>

#include "perfrec/errors.hpp"

namespace perfrec {

std::string to_string(Backend b) {
    switch (b) {
        case Backend::tree: return "tree";
        case Backend::logistic: return "logistic";
        case Backend::oracle: return "oracle";
    }
    return "?";
}

double DecisionTree::predict(std::span<const double> x) const {
    if (nodes.empty()) return 0.0;
    std::size_t i = 0;
    while (nodes[i].feature >= 0) {
        const Node& n = nodes[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return nodes[i].value;
}

std::size_t DecisionTree::depth() const {
    if (nodes.empty()) return 0;
    std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
    std::size_t best = 0;
    while (!stack.empty()) {
        const auto [i, d] = stack.back();
        stack.pop_back();
        best = std::max(best, d);
        if (nodes[i].feature >= 0) {
            stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
            stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
        }
    }
    return best;
}

namespace {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace

double LogisticModel::predict(std::span<const double> x) const {
    double z = intercept;
    for (std::size_t i = 0; i < weights.size(); ++i) z += weights[i] * x[i];
    return sigmoid(z);
}

Classifier::Classifier(std::variant<DecisionTree, LogisticModel, OracleScorer> impl, double threshold)
    : impl_(std::move(impl)), threshold_(threshold) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error("decision threshold must lie in [0, 1]");
}

Classifier::Classifier(DecisionTree tree, double threshold) : Classifier(decltype(impl_){std::move(tree)}, threshold) {}
Classifier::Classifier(LogisticModel model, double threshold)
    : Classifier(decltype(impl_){std::move(model)}, threshold) {}

Classifier Classifier::oracle(Scorer scorer, double threshold) {
    return Classifier(decltype(impl_){OracleScorer{std::move(scorer)}}, threshold);
}

double Classifier::score(std::span<const double> x) const {
    return std::visit(
        [x](const auto& m) -> double {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, OracleScorer>) return std::clamp(m.fn(x), 0.0, 1.0);
            else return m.predict(x);
        },
        impl_);
}

Backend Classifier::backend() const {
    if (std::holds_alternative<DecisionTree>(impl_)) return Backend::tree;
    if (std::holds_alternative<LogisticModel>(impl_)) return Backend::logistic;
    return Backend::oracle;
}

Classifier Classifier::with_threshold(double t) const { return Classifier(impl_, t); }

double Classifier::accuracy(const Dataset& data) const {
    if (data.empty()) return 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i) hits += decide(data.x[i]) == data.label[i];
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

double Classifier::acceptance_rate(const std::vector<Row>& rows) const {
    if (rows.empty()) return 0.0;
    std::size_t acc = 0;
    for (const auto& r : rows) acc += decide(r);
    return static_cast<double>(acc) / static_cast<double>(rows.size());
}

namespace {

nlohmann::json tree_json(const DecisionTree& t, std::size_t i) {
    const auto& n = t.nodes[i];
    if (n.feature < 0) return {{"leaf", n.value}, {"samples", n.samples}};
    return {{"feature", n.feature},
            {"threshold", n.threshold},
            {"samples", n.samples},
            {"left", tree_json(t, static_cast<std::size_t>(n.left))},
            {"right", tree_json(t, static_cast<std::size_t>(n.right))}};
}

}  // namespace

std::string Classifier::serialize() const {
    nlohmann::json j;
    j["backend"] = to_string(backend());
    j["threshold"] = threshold_;
    if (const auto* t = tree()) j["tree"] = t->nodes.empty() ? nlohmann::json() : tree_json(*t, 0);
    if (const auto* l = logistic()) {
        j["weights"] = l->weights;
        j["intercept"] = l->intercept;
    }
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// CART

namespace {

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const Dataset& data, const TreeParams& params) : data_(data), params_(params) {}

    DecisionTree build() {
        std::vector<std::size_t> idx(data_.size());
        std::iota(idx.begin(), idx.end(), 0);
        grow(idx, 0);
        return std::move(tree_);
    }

private:
    int grow(std::vector<std::size_t>& idx, std::size_t depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        double pos = 0.0;
        for (std::size_t i : idx) pos += data_.label[i];
        const double n = static_cast<double>(idx.size());
        tree_.nodes[id].value = idx.empty() ? 0.0 : pos / n;
        tree_.nodes[id].samples = idx.size();

        const bool pure = pos == 0.0 || pos == n;
        if (pure || (params_.max_depth > 0 && depth >= params_.max_depth) || idx.size() < 2 * params_.min_samples_leaf)
            return id;
        const SplitChoice split = best_split(idx, pos);
        if (split.feature < 0) return id;

        std::vector<std::size_t> left, right;
        for (std::size_t i : idx)
            (data_.x[i][static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right).push_back(i);
        idx.clear();
        idx.shrink_to_fit();
        tree_.nodes[id].feature = split.feature;
        tree_.nodes[id].threshold = split.threshold;
        const int l = grow(left, depth + 1);
        tree_.nodes[id].left = l;
        const int r = grow(right, depth + 1);
        tree_.nodes[id].right = r;
        return id;
    }

    SplitChoice best_split(const std::vector<std::size_t>& idx, double pos_total) const {
        SplitChoice best;
        best.impurity = std::numeric_limits<double>::infinity();
        const std::size_t n = idx.size();
        const std::size_t min_leaf = std::max<std::size_t>(params_.min_samples_leaf, 1);
        std::vector<std::pair<double, int>> col(n);
        for (std::size_t f = 0; f < data_.n_features(); ++f) {
            for (std::size_t k = 0; k < n; ++k) col[k] = {data_.x[idx[k]][f], data_.label[idx[k]]};
            std::sort(col.begin(), col.end());
            double left_pos = 0.0;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                left_pos += col[k].second;
                if (col[k].first == col[k + 1].first) continue;
                const double nl = static_cast<double>(k + 1);
                const double nr = static_cast<double>(n - k - 1);
                if (k + 1 < min_leaf || n - k - 1 < min_leaf) continue;
                const double pl = left_pos / nl;
                const double pr = (pos_total - left_pos) / nr;
                // weighted gini: nl * 2 pl (1 - pl) + nr * 2 pr (1 - pr)
                const double impurity = nl * 2.0 * pl * (1.0 - pl) + nr * 2.0 * pr * (1.0 - pr);
                if (impurity < best.impurity - 1e-12) {
                    best.impurity = impurity;
                    best.feature = static_cast<int>(f);
                    best.threshold = 0.5 * (col[k].first + col[k + 1].first);
                }
            }
        }
        return best;
    }

    const Dataset& data_;
    const TreeParams& params_;
    DecisionTree tree_;
};

}  // namespace

Classifier fit_tree(const Dataset& data, const TreeParams& params, double threshold) {
    if (data.empty()) throw Error("cannot fit a tree on an empty dataset");
    if (params.min_samples_leaf == 0) throw Error("min_samples_leaf must be positive");
    return Classifier(TreeBuilder(data, params).build(), threshold);
}

// ---------------------------------------------------------------------------
// Logistic regression

double logistic_objective(const Dataset& data, std::span<const double> params, double l2, std::vector<double>* grad) {
    const std::size_t d = data.n_features();
    if (params.size() != d + 1) throw Error("logistic parameter vector has wrong length");
    if (grad) grad->assign(d + 1, 0.0);
    double loss = 0.0;
    const double n = static_cast<double>(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        double z = params[d];
        for (std::size_t j = 0; j < d; ++j) z += params[j] * data.x[i][j];
        const double yl = data.label[i];
        // log(1 + e^z) - y z, computed stably
        loss += (z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z))) - yl * z;
        if (grad) {
            const double r = sigmoid(z) - yl;
            for (std::size_t j = 0; j < d; ++j) (*grad)[j] += r * data.x[i][j];
            (*grad)[d] += r;
        }
    }
    loss /= n;
    double reg = 0.0;
    for (std::size_t j = 0; j < d; ++j) reg += params[j] * params[j];
    loss += 0.5 * l2 * reg;
    if (grad) {
        for (double& g : *grad) g /= n;
        for (std::size_t j = 0; j < d; ++j) (*grad)[j] += l2 * params[j];
    }
    return loss;
}

Classifier fit_logistic(const Dataset& data, const LogisticParams& params, double threshold) {
    if (data.empty()) throw Error("cannot fit logistic regression on an empty dataset");
    if (!(params.tolerance > 0.0) || params.max_iterations == 0) throw Error("invalid logistic parameters");
    const std::size_t d = data.n_features();
    std::vector<double> w(d + 1, 0.0), grad, trial(d + 1), trial_grad;
    double loss = logistic_objective(data, w, params.l2, &grad);
    double step = params.learning_rate;
    std::size_t it = 0;
    double gnorm = 0.0;
    for (; it < params.max_iterations; ++it) {
        double g2 = 0.0;
        for (double g : grad) g2 += g * g;
        gnorm = std::sqrt(g2);
        if (gnorm < params.tolerance) break;
        // Armijo backtracking
        double trial_loss = 0.0;
        for (int halvings = 0;; ++halvings) {
            for (std::size_t j = 0; j <= d; ++j) trial[j] = w[j] - step * grad[j];
            trial_loss = logistic_objective(data, trial, params.l2, &trial_grad);
            if (trial_loss <= loss - 1e-4 * step * g2 || halvings > 60) break;
            step *= 0.5;
        }
        w.swap(trial);
        grad.swap(trial_grad);
        loss = trial_loss;
        step *= 1.5;
    }
    if (gnorm >= params.tolerance)
        throw Error("logistic regression did not converge; gradient norm " + std::to_string(gnorm));
    LogisticModel m;
    m.weights.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(d));
    m.intercept = w[d];
    m.iterations = it;
    m.gradient_norm = gnorm;
    return Classifier(std::move(m), threshold);
}

// ---------------------------------------------------------------------------
// Mixtures

Dataset assemble_refit_set(const Dataset& pre_accepted, const Dataset& pre_rejected_matched,
                           const Dataset& post_recourse) {
    if (pre_accepted.size() != pre_rejected_matched.size() || pre_accepted.size() != post_recourse.size())
        throw Error("refit parts must have equal row counts (" + std::to_string(pre_accepted.size()) + ", " +
                    std::to_string(pre_rejected_matched.size()) + ", " + std::to_string(post_recourse.size()) + ")");
    Dataset out;
    out.feature_names = post_recourse.feature_names.empty() ? pre_accepted.feature_names : post_recourse.feature_names;
    for (const Dataset* part : {&pre_accepted, &pre_rejected_matched, &post_recourse}) {
        Dataset stripped = *part;
        stripped.noise.clear();
        if (stripped.feature_names.empty()) stripped.feature_names = out.feature_names;
        out.append(stripped);
    }
    return out;
}

MixtureSpec::MixtureSpec(double a) : alpha(a) {
    if (!(a >= 0.0 && a <= 1.0)) throw Error("mixture weight alpha must lie in [0, 1]");
}

double mixture_conditional(const FiniteDistribution& pre, const FiniteDistribution& post, MixtureSpec spec,
                           const Row& x) {
    const auto a = pre.find(x);
    const auto b = post.find(x);
    double mass = 0.0;
    double positive = 0.0;
    if (a != pre.end()) {
        mass += spec.alpha * a->second.mass;
        positive += spec.alpha * a->second.positive;
    }
    if (b != post.end()) {
        mass += (1.0 - spec.alpha) * b->second.mass;
        positive += (1.0 - spec.alpha) * b->second.positive;
    }
    if (a == pre.end() && b == post.end()) throw Error("observation outside both supports");
    if (!(mass > 0.0)) throw Error("observation has zero mixture mass");
    return positive / mass;
}

std::vector<ValidityViolation> performative_validity_violations(const FiniteDistribution& pre,
                                                                const FiniteDistribution& post,
                                                                const std::vector<Row>& points, double threshold,
                                                                std::size_t grid_points) {
    if (grid_points < 2) throw Error("alpha grid needs at least two points");
    std::vector<ValidityViolation> out;
    for (const Row& x : points) {
        const auto it = pre.find(x);
        if (it == pre.end()) continue;
        const int pre_decision = it->second.conditional() >= threshold ? 1 : 0;
        for (std::size_t g = 0; g < grid_points; ++g) {
            const double alpha = static_cast<double>(g) / static_cast<double>(grid_points - 1);
            if (alpha < 1.0 && post.find(x) == post.end() && alpha == 0.0) continue;  // no mass at x
            double cond = 0.0;
            try {
                cond = mixture_conditional(pre, post, MixtureSpec(alpha), x);
            } catch (const Error&) {
                continue;
            }
            const int mixed = cond >= threshold ? 1 : 0;
            if (mixed < pre_decision) out.push_back({x, alpha, cond});
        }
    }
    return out;
}

}  // namespace perfrec
