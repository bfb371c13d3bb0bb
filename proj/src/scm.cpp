#include "perfrec/scm.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "perfrec/errors.hpp"

namespace perfrec {

namespace {

constexpr double kMatchTol = 1e-9;

bool same_value(double a, double b) { return std::abs(a - b) <= kMatchTol * std::max(1.0, std::abs(b)); }

}  // namespace

StructuralEquation StructuralEquation::identity() {
    return {[](std::span<const double>, double u) { return u; },
            [](std::span<const double>, double x) -> std::optional<double> { return x; }};
}

StructuralEquation StructuralEquation::linear(std::vector<double> coef, double intercept) {
    auto eval = [coef, intercept](std::span<const double> pa, double u) {
        double v = intercept + u;
        for (std::size_t i = 0; i < coef.size(); ++i) v += coef[i] * pa[i];
        return v;
    };
    auto inv = [coef, intercept](std::span<const double> pa, double x) -> std::optional<double> {
        double v = x - intercept;
        for (std::size_t i = 0; i < coef.size(); ++i) v -= coef[i] * pa[i];
        return v;
    };
    return {eval, inv};
}

std::optional<double> Intervention::value_of(NodeId id) const {
    for (std::size_t i = 0; i < targets.size(); ++i)
        if (targets[i] == id) return values[i];
    return std::nullopt;
}

Scm::Scm(CausalGraph graph, const std::map<std::string, NodeModel>& nodes, double label_threshold)
    : graph_(std::move(graph)), nodes_(graph_.dag().size()), threshold_(label_threshold) {
    if (!std::isfinite(threshold_)) throw Error("label threshold must be finite");
    const Dag& dag = graph_.dag();
    for (const auto& [name, model] : nodes) dag.index(name);
    for (NodeId v = 0; v < dag.size(); ++v) {
        const auto it = nodes.find(dag.name(v));
        if (it == nodes.end()) throw Error("no structural equation for node '" + dag.name(v) + "'");
        const NodeModel& m = it->second;
        Node& n = nodes_[v];
        for (const auto& p : m.parents) n.parents.push_back(dag.index(p));
        std::vector<NodeId> sorted = n.parents;
        std::sort(sorted.begin(), sorted.end());
        if (sorted != dag.parents(v))
            throw Error("equation parents of '" + dag.name(v) + "' do not match the graph");
        if (!m.equation.evaluate) throw Error("missing evaluate for '" + dag.name(v) + "'");
        n.equation = m.equation;
        n.noise = m.noise;
    }
}

bool Scm::finite_support() const {
    return std::all_of(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.clamp || n.noise.finite(); });
}

Scm Scm::with_label_threshold(double t) const {
    Scm out = *this;
    if (!std::isfinite(t)) throw Error("label threshold must be finite");
    out.threshold_ = t;
    return out;
}

void Scm::validate(const Intervention& intervention) const {
    if (intervention.targets.size() != intervention.values.size()) throw Error("intervention targets/values mismatch");
    for (std::size_t i = 0; i < intervention.targets.size(); ++i) {
        const NodeId t = intervention.targets[i];
        if (t >= nodes_.size()) throw Error("intervention target out of range");
        if (t == graph_.target()) throw Error("interventions on the target '" + graph_.target_name() + "' are not modeled");
        if (!std::isfinite(intervention.values[i])) throw Error("intervention value must be finite");
        for (std::size_t j = 0; j < i; ++j)
            if (intervention.targets[j] == t) throw Error("duplicate intervention target");
    }
}

Scm Scm::intervene(const Intervention& intervention) const {
    validate(intervention);
    Scm out = *this;
    for (std::size_t i = 0; i < intervention.targets.size(); ++i)
        out.nodes_[intervention.targets[i]].clamp = intervention.values[i];
    return out;
}

double Scm::evaluate_node(NodeId id, std::span<const double> values, double noise) const {
    const Node& n = nodes_[id];
    double pa[16];
    std::vector<double> big;
    std::span<const double> parents;
    if (n.parents.size() <= 16) {
        for (std::size_t i = 0; i < n.parents.size(); ++i) pa[i] = values[n.parents[i]];
        parents = std::span<const double>(pa, n.parents.size());
    } else {
        for (NodeId p : n.parents) big.push_back(values[p]);
        parents = big;
    }
    return n.equation.evaluate(parents, noise);
}

void Scm::propagate(std::span<const double> noise, std::span<double> values, const Intervention* extra) const {
    for (NodeId v : graph_.dag().topological_order()) {
        if (extra) {
            if (const auto theta = extra->value_of(v)) {
                values[v] = *theta;
                continue;
            }
        }
        if (nodes_[v].clamp) {
            values[v] = *nodes_[v].clamp;
            continue;
        }
        values[v] = evaluate_node(v, values, noise[v]);
    }
}

Row Scm::features_of(std::span<const double> values) const {
    Row out;
    out.reserve(graph_.features().size());
    for (NodeId f : graph_.features()) out.push_back(values[f]);
    return out;
}

NoiseVector Scm::sample_noise(Stream& rng) const {
    NoiseVector u(nodes_.size());
    for (std::size_t v = 0; v < nodes_.size(); ++v) u[v] = nodes_[v].noise.sample(rng);
    return u;
}

void Scm::simulate_into(Dataset& out, const NoiseVector& noise, const Intervention* extra) const {
    std::vector<double> values(nodes_.size());
    propagate(noise, values, extra);
    const double y = values[graph_.target()];
    out.push_back(features_of(values), y, label(y), noise);
}

Dataset Scm::sample(std::size_t n, Stream& rng) const {
    Dataset out;
    out.feature_names = feature_names();
    out.x.reserve(n);
    out.noise.reserve(n);
    for (std::size_t i = 0; i < n; ++i) simulate_into(out, sample_noise(rng));
    return out;
}

// ---------------------------------------------------------------------------
// Abduction

namespace {

class NoiseWalker {
public:
    NoiseWalker(const Scm& scm, const std::vector<std::optional<double>>& evidence, const std::vector<bool>& ignore)
        : scm_(scm), evidence_(evidence), ignore_(ignore), topo_(scm.graph().dag().topological_order()),
          noise_(topo_.size(), 0.0), values_(topo_.size(), 0.0) {}

    void enumerate(Posterior& out) { recurse(0, 1.0, out); }

    /// One likelihood-weighted particle; returns its weight.
    double sample(Stream& rng, NoiseVector& particle) {
        double w = 1.0;
        for (NodeId v : topo_) {
            const NoiseLaw& law = scm_.noise_law(v);
            if (fixed(v)) {
                w *= settle_fixed(v);
            } else if (evidence_[v]) {
                const double x = *evidence_[v];
                if (const auto u = inverse(v, x)) {
                    w *= accept(v, *u, x);
                } else {
                    const auto choices = consistent_atoms(v, x);
                    double total = 0.0;
                    for (const Atom& a : choices) total += a.prob;
                    if (total == 0.0) return 0.0;
                    std::vector<double> ws;
                    for (const Atom& a : choices) ws.push_back(a.prob);
                    noise_[v] = choices[rng.categorical(ws, total)].value;
                    values_[v] = x;
                    w *= total;
                }
            } else {
                noise_[v] = law.sample(rng);
                values_[v] = scm_.evaluate_node(v, values_, noise_[v]);
            }
            if (w == 0.0) return 0.0;
        }
        particle = noise_;
        return w;
    }

private:
    bool fixed(NodeId v) const { return ignore_[v] || scm_.clamp(v).has_value(); }

    /// Clamped or ignored node: placeholder noise, fixed value; returns a
    /// weight factor (0 when evidence contradicts a clamp).
    double settle_fixed(NodeId v) {
        const NoiseLaw& law = scm_.noise_law(v);
        noise_[v] = law.finite() ? law.atoms()->front().value : law.mean();
        if (const auto c = scm_.clamp(v)) {
            values_[v] = *c;
            if (evidence_[v] && !same_value(*c, *evidence_[v])) return 0.0;
        } else {
            values_[v] = evidence_[v] ? *evidence_[v] : scm_.evaluate_node(v, values_, noise_[v]);
        }
        return 1.0;
    }

    std::optional<double> inverse(NodeId v, double x) const {
        const auto& eq = scm_.equation(v);
        if (!eq.invert_noise) return std::nullopt;
        const auto& parents = scm_.equation_parents(v);
        std::vector<double> pa;
        pa.reserve(parents.size());
        for (NodeId p : parents) pa.push_back(values_[p]);
        return eq.invert_noise(pa, x);
    }

    /// Weight for an inverted noise value; snaps to the support for finite laws.
    double accept(NodeId v, double u, double x) {
        const NoiseLaw& law = scm_.noise_law(v);
        double w = 0.0;
        if (law.finite()) {
            const auto atom = law.match(u);
            if (!atom) return 0.0;
            u = atom->value;
            w = atom->prob;
        } else {
            w = law.likelihood(u);
        }
        noise_[v] = u;
        if (!same_value(scm_.evaluate_node(v, values_, u), x)) return 0.0;
        values_[v] = x;
        return w;
    }

    std::vector<Atom> consistent_atoms(NodeId v, double x) const {
        const NoiseLaw& law = scm_.noise_law(v);
        if (!law.finite())
            throw Error("cannot abduct noise of '" + scm_.graph().dag().name(v) +
                        "': equation has no noise inverse and the noise law is continuous");
        std::vector<Atom> out;
        for (const Atom& a : *law.atoms())
            if (same_value(scm_.evaluate_node(v, values_, a.value), x)) out.push_back(a);
        return out;
    }

    void recurse(std::size_t k, double w, Posterior& out) {
        if (w == 0.0) return;
        if (k == topo_.size()) {
            out.particles.push_back(noise_);
            out.weights.push_back(w);
            return;
        }
        const NodeId v = topo_[k];
        const NoiseLaw& law = scm_.noise_law(v);
        if (fixed(v)) {
            const double f = settle_fixed(v);
            recurse(k + 1, w * f, out);
            return;
        }
        if (evidence_[v]) {
            const double x = *evidence_[v];
            if (const auto u = inverse(v, x)) {
                const double f = accept(v, *u, x);
                recurse(k + 1, w * f, out);
            } else {
                for (const Atom& a : consistent_atoms(v, x)) {
                    noise_[v] = a.value;
                    values_[v] = x;
                    recurse(k + 1, w * a.prob, out);
                }
            }
            return;
        }
        for (const Atom& a : *law.atoms()) {
            noise_[v] = a.value;
            values_[v] = scm_.evaluate_node(v, values_, a.value);
            recurse(k + 1, w * a.prob, out);
        }
    }

    const Scm& scm_;
    const std::vector<std::optional<double>>& evidence_;
    const std::vector<bool>& ignore_;
    const std::vector<NodeId>& topo_;
    NoiseVector noise_;
    std::vector<double> values_;
};

void normalize(Posterior& p) {
    const double total = std::accumulate(p.weights.begin(), p.weights.end(), 0.0);
    if (!(total > 0.0)) throw InfeasibleObservation();
    std::size_t keep = 0;
    for (std::size_t i = 0; i < p.weights.size(); ++i) {
        if (p.weights[i] <= 0.0) continue;
        if (keep != i) p.particles[keep] = std::move(p.particles[i]);
        p.weights[keep] = p.weights[i] / total;
        ++keep;
    }
    p.particles.resize(keep);
    p.weights.resize(keep);
}

}  // namespace

std::vector<NoiseVector> Posterior::draw(std::size_t m, Stream& rng) const {
    std::vector<double> cumulative(weights.size());
    std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
    std::vector<NoiseVector> out;
    out.reserve(m);
    const double total = cumulative.empty() ? 0.0 : cumulative.back();
    for (std::size_t i = 0; i < m; ++i) {
        const double r = rng.uniform() * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
        if (it == cumulative.end()) --it;
        out.push_back(particles[static_cast<std::size_t>(it - cumulative.begin())]);
    }
    return out;
}

Posterior infer_noise(const Scm& scm, const std::vector<std::optional<double>>& evidence,
                      const std::vector<bool>& ignore, const AbductionOptions& options, Stream& rng) {
    const std::size_t n = scm.graph().dag().size();
    if (evidence.size() != n || ignore.size() != n) throw Error("evidence/ignore size mismatch");

    bool exact = true;
    std::size_t combos = 1;
    for (NodeId v = 0; v < n; ++v) {
        if (ignore[v] || scm.clamp(v) || evidence[v]) continue;
        const auto& atoms = scm.noise_law(v).atoms();
        if (!atoms) {
            exact = false;
            break;
        }
        combos *= atoms->size();
        if (combos > options.enumeration_cap) {
            exact = false;
            break;
        }
    }

    Posterior post;
    NoiseWalker walker(scm, evidence, ignore);
    if (exact) {
        walker.enumerate(post);
        post.exact = true;
    } else {
        const std::size_t k = std::max<std::size_t>(options.particles, 1);
        post.particles.reserve(k);
        post.weights.reserve(k);
        NoiseVector particle;
        for (std::size_t i = 0; i < k; ++i) {
            const double w = walker.sample(rng, particle);
            if (w > 0.0) {
                post.particles.push_back(particle);
                post.weights.push_back(w);
            }
        }
    }
    normalize(post);
    return post;
}

Posterior abduction_posterior(const Scm& scm, std::span<const double> x, const AbductionOptions& options, Stream& rng) {
    const auto& features = scm.graph().features();
    if (x.size() != features.size()) throw Error("feature row has wrong length");
    std::vector<std::optional<double>> evidence(scm.graph().dag().size());
    for (std::size_t i = 0; i < features.size(); ++i) evidence[features[i]] = x[i];
    return infer_noise(scm, evidence, std::vector<bool>(evidence.size(), false), options, rng);
}

std::vector<NoiseVector> abduct(const Scm& scm, std::span<const double> x, std::size_t m, Stream& rng,
                                const AbductionOptions& options) {
    return abduction_posterior(scm, x, options, rng).draw(m, rng);
}

Dataset counterfactual_sample(const Scm& scm, std::span<const double> x, const Intervention& intervention,
                              std::size_t m, Stream& rng, const AbductionOptions& options) {
    scm.validate(intervention);
    const Posterior post = abduction_posterior(scm, x, options, rng);
    Dataset out;
    out.feature_names = scm.feature_names();
    for (const auto& u : post.draw(m, rng)) scm.simulate_into(out, u, &intervention);
    return out;
}

std::vector<NodeId> nondescendant_features(const Scm& scm, const Intervention& intervention) {
    const Dag& dag = scm.graph().dag();
    std::vector<bool> excluded(dag.size(), false);
    for (NodeId t : intervention.targets) {
        excluded[t] = true;
        for (NodeId d : dag.descendants(t)) excluded[d] = true;
    }
    std::vector<NodeId> out;
    for (NodeId f : scm.graph().features())
        if (!excluded[f]) out.push_back(f);
    return out;
}

Posterior subpopulation_posterior(const Scm& scm, std::span<const double> x, const Intervention& intervention,
                                  const AbductionOptions& options, Stream& rng) {
    scm.validate(intervention);
    const auto& features = scm.graph().features();
    if (x.size() != features.size()) throw Error("feature row has wrong length");
    const std::size_t n = scm.graph().dag().size();
    std::vector<std::optional<double>> evidence(n);
    for (NodeId f : nondescendant_features(scm, intervention)) evidence[f] = x[scm.graph().feature_position(f)];
    std::vector<bool> ignore(n, false);
    for (NodeId t : intervention.targets) ignore[t] = true;
    return infer_noise(scm, evidence, ignore, options, rng);
}

Intervention subpopulation_intervention(const Scm& scm, std::span<const double> x, const Intervention& intervention) {
    Intervention full = intervention;
    for (NodeId f : nondescendant_features(scm, intervention)) {
        full.targets.push_back(f);
        full.values.push_back(x[scm.graph().feature_position(f)]);
    }
    return full;
}

Dataset subpop_sample(const Scm& scm, std::span<const double> x, const Intervention& intervention, std::size_t m,
                      Stream& rng, const AbductionOptions& options) {
    const Posterior post = subpopulation_posterior(scm, x, intervention, options, rng);
    const Intervention full = subpopulation_intervention(scm, x, intervention);
    Dataset out;
    out.feature_names = scm.feature_names();
    for (const auto& u : post.draw(m, rng)) scm.simulate_into(out, u, &full);
    return out;
}

FiniteDistribution enumerate_joint(const Scm& scm, std::size_t cap) {
    const std::size_t n = scm.graph().dag().size();
    std::size_t combos = 1;
    for (NodeId v = 0; v < n; ++v) {
        if (scm.clamp(v)) continue;
        const auto& atoms = scm.noise_law(v).atoms();
        if (!atoms) throw Error("enumeration requires finite-support noise");
        combos *= atoms->size();
        if (combos > cap) throw Error("joint support exceeds enumeration cap");
    }
    std::vector<std::optional<double>> evidence(n);
    std::vector<bool> ignore(n, false);
    Stream unused(0);
    AbductionOptions opts;
    opts.enumeration_cap = cap;
    const Posterior all = infer_noise(scm, evidence, ignore, opts, unused);

    FiniteDistribution dist;
    std::vector<double> values(n);
    for (std::size_t i = 0; i < all.particles.size(); ++i) {
        scm.propagate(all.particles[i], values);
        FiniteCell& cell = dist[scm.features_of(values)];
        cell.mass += all.weights[i];
        if (scm.label(values[scm.graph().target()])) cell.positive += all.weights[i];
    }
    return dist;
}

double median(std::vector<double> values) {
    if (values.empty()) throw Error("median of empty sample");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

Scm fit_linear_gaussian(const CausalGraph& graph, const Table& data) {
    const Dag& dag = graph.dag();
    std::vector<std::size_t> col(dag.size());
    for (NodeId v = 0; v < dag.size(); ++v) col[v] = data.column(dag.name(v));

    std::map<std::string, NodeModel> models;
    for (NodeId v = 0; v < dag.size(); ++v) {
        const auto& parents = dag.parents(v);
        const std::size_t rows = data.rows.size();
        if (rows < 2) throw InputError("need at least 2 rows to fit node '" + dag.name(v) + "'");
        Eigen::MatrixXd design(rows, parents.size() + 1);
        Eigen::VectorXd target(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            design(r, 0) = 1.0;
            for (std::size_t j = 0; j < parents.size(); ++j) design(r, j + 1) = data.rows[r][col[parents[j]]];
            target(r) = data.rows[r][col[v]];
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        qr.setThreshold(1e-10);
        if (qr.rank() < design.cols()) throw InputError("singular design matrix for node '" + dag.name(v) + "'");
        const Eigen::VectorXd beta = qr.solve(target);
        const Eigen::VectorXd resid = target - design * beta;
        const double mu = resid.mean();
        const double sigma = std::sqrt((resid.array() - mu).square().mean());

        NodeModel m;
        for (NodeId p : parents) m.parents.push_back(dag.name(p));
        if (parents.empty()) {
            m.equation = StructuralEquation::identity();
            m.noise = Gaussian{beta(0) + mu, sigma};
        } else {
            std::vector<double> coef(parents.size());
            for (std::size_t j = 0; j < parents.size(); ++j) coef[j] = beta(static_cast<Eigen::Index>(j + 1));
            m.equation = StructuralEquation::linear(std::move(coef), beta(0));
            m.noise = Gaussian{mu, sigma};
        }
        models.emplace(dag.name(v), std::move(m));
    }

    std::vector<double> ys;
    ys.reserve(data.rows.size());
    for (const auto& r : data.rows) ys.push_back(r[col[graph.target()]]);
    return Scm(graph, models, median(std::move(ys)));
}

}  // namespace perfrec
