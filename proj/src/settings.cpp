#include "perfrec/settings.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>

#include "perfrec/errors.hpp"

namespace perfrec {

std::string to_string(AggregateForm f) {
    switch (f) {
        case AggregateForm::none: return "none";
        case AggregateForm::additive: return "additive";
        case AggregateForm::multiplicative: return "multiplicative";
    }
    return "?";
}

const std::vector<std::string>& setting_names() {
    static const std::vector<std::string> names{"LAdd",     "LMult",    "NLAdd", "NLMult", "LCubic",
                                                "Example1", "Example2", "GPA"};
    return names;
}

const std::vector<std::string>& synthetic_setting_names() {
    static const std::vector<std::string> names{"LAdd", "LMult", "NLAdd", "NLMult", "LCubic"};
    return names;
}

namespace {

using Span = std::span<const double>;

StructuralEquation equation(StructuralEquation::Evaluate f, StructuralEquation::Invert inv = {}) {
    return {std::move(f), std::move(inv)};
}

std::optional<double> safe_div(double num, double den) {
    if (den == 0.0) return std::nullopt;
    return num / den;
}

ShiftedBinomial shbin(int n, double p, double mean) { return {n, p, mean}; }

// Cause X_C, target Y, effect X_E: X_C -> Y, X_C -> X_E, Y -> X_E.
CausalGraph triangle() {
    return CausalGraph::from_edges({"X_C", "Y", "X_E"}, {{"X_C", "Y"}, {"X_C", "X_E"}, {"Y", "X_E"}}, "Y");
}

Scm triangle_scm(NoiseLaw u_c, StructuralEquation f_y, NoiseLaw u_y, StructuralEquation f_e, NoiseLaw u_e) {
    std::map<std::string, NodeModel> nodes;
    nodes["X_C"] = NodeModel::root(std::move(u_c));
    nodes["Y"] = {{"X_C"}, std::move(f_y), std::move(u_y)};
    nodes["X_E"] = {{"X_C", "Y"}, std::move(f_e), std::move(u_e)};
    return Scm(triangle(), nodes, 0.0);
}

Scm make_ladd() {
    return triangle_scm(
        shbin(8, 0.5, 0), equation([](Span p, double u) { return p[0] + u; }, [](Span p, double v) { return v - p[0]; }),
        shbin(2, 0.5, 0),
        equation([](Span p, double u) { return p[1] + p[0] + u; }, [](Span p, double v) { return v - p[1] - p[0]; }),
        shbin(2, 0.5, 0));
}

Scm make_lmult() {
    return triangle_scm(
        shbin(5, 0.5, 2.5 + 1),
        equation([](Span p, double u) { return p[0] * u; }, [](Span p, double v) { return safe_div(v, p[0]); }),
        shbin(1, 0.5, 0.5 + 1),
        equation([](Span p, double u) { return p[1] * p[0] * u; },
                 [](Span p, double v) { return safe_div(v, p[1] * p[0]); }),
        shbin(1, 0.5, 0.5 + 1));
}

Scm make_nladd() {
    return triangle_scm(shbin(8, 0.5, 0),
                        equation([](Span p, double u) { return p[0] * p[0] + u; },
                                 [](Span p, double v) { return v - p[0] * p[0]; }),
                        shbin(2, 0.5, 0),
                        equation([](Span p, double u) { return (p[1] + p[0]) * (p[1] + p[0]) + u; },
                                 [](Span p, double v) { return v - (p[1] + p[0]) * (p[1] + p[0]); }),
                        shbin(2, 0.5, 0));
}

Scm make_nlmult() {
    Mixture u_c{{0.5, 0.5}, {NoiseLaw(shbin(2, 0.5, 2)), NoiseLaw(shbin(4, 0.5, 4))}};
    return triangle_scm(u_c,
                        equation([](Span p, double u) { return p[0] * p[0] * u; },
                                 [](Span p, double v) { return safe_div(v, p[0] * p[0]); }),
                        shbin(2, 0.5, 2),
                        equation([](Span p, double u) { return (p[1] + p[0]) * (p[1] + p[0]) * u; },
                                 [](Span p, double v) { return safe_div(v, (p[1] + p[0]) * (p[1] + p[0])); }),
                        shbin(2, 0.5, 2));
}

double cube(double v) { return v * v * v; }

Scm make_lcubic() {
    return triangle_scm(shbin(4, 0.5, -1),
                        equation([](Span p, double u) { return cube(p[0] + u); },
                                 [](Span p, double v) { return std::cbrt(v) - p[0]; }),
                        shbin(2, 0.5, 1),
                        equation([](Span p, double u) { return cube(p[0] + u - p[1]); },
                                 [](Span p, double v) { return std::cbrt(v) - p[0] + p[1]; }),
                        shbin(1, 0.5, 0.5));
}

// Degree D -> qualification Y -> GitHub activity G, D -> G. Y is L itself.
Scm make_example1() {
    auto graph = CausalGraph::from_edges({"D", "Y", "G"}, {{"D", "Y"}, {"D", "G"}, {"Y", "G"}}, "Y");
    std::map<std::string, NodeModel> nodes;
    nodes["D"] = NodeModel::root(Bernoulli{0.5});
    nodes["Y"] = {{"D"}, equation([](Span p, double u) {
                      return p[0] == 0.0 ? (u > 0.55 ? 1.0 : 0.0) : (u > 0.45 ? 1.0 : 0.0);
                  }),
                  Uniform{0.0, 1.0}};
    nodes["G"] = {{"D", "Y"}, equation([](Span p, double) { return p[0] == 0.0 ? p[1] : 1.0; }),
                  NoiseLaw::point(0.0)};
    return Scm(graph, nodes, 0.5);
}

Scm make_example2() {
    auto graph = CausalGraph::from_edges({"X_C", "Y", "X_E"}, {{"X_C", "Y"}, {"Y", "X_E"}}, "Y");
    std::map<std::string, NodeModel> nodes;
    nodes["X_C"] = NodeModel::root(Gaussian{0.0, 1.0});
    nodes["Y"] = {{"X_C"}, StructuralEquation::linear({1.0}), Gaussian{0.0, 1.0}};
    nodes["X_E"] = {{"Y"}, StructuralEquation::linear({1.0}), Gaussian{0.0, 1.0}};
    return Scm(graph, nodes, 0.0);
}

struct Calibration {
    Dataset stats_rows;  // only features, for domains and variances
    std::vector<double> y;
};

/// Streams `rows` samples, keeping feature rows and targets without noise.
Calibration calibrate(const Scm& scm, std::size_t rows, Stream& rng) {
    Calibration c;
    c.stats_rows.feature_names = scm.feature_names();
    c.stats_rows.x.reserve(rows);
    c.y.reserve(rows);
    std::vector<double> values(scm.graph().dag().size());
    for (std::size_t i = 0; i < rows; ++i) {
        const NoiseVector u = scm.sample_noise(rng);
        scm.propagate(u, values);
        c.stats_rows.x.push_back(scm.features_of(values));
        c.y.push_back(values[scm.graph().target()]);
    }
    return c;
}

std::string options_key(const std::string& name, const SettingOptions& o) {
    std::ostringstream k;
    k << name << '|' << o.calibration_seed << '|' << o.calibration_rows;
    if (name == "GPA") {
        k << '|' << o.gpa_csv.string() << '|' << o.gpa_graph << '|' << o.gpa_standardize;
        for (const auto& [a, b] : o.gpa_columns) k << '|' << a << '=' << b;
    }
    return k.str();
}

Setting build_uncached(const std::string& name, const SettingOptions& options) {
    if (options.calibration_rows < 2) throw Error("calibration needs at least 2 rows");
    Stream rng = Stream::derive(options.calibration_seed, {hash_label(name)});
    std::size_t dropped = 0;
    auto fitted = [&]() {
        if (options.gpa_csv.empty()) throw InputError("setting GPA requires a CSV path (gpa_csv)");
        const auto graph = CausalGraph::parse(options.gpa_graph.empty() ? default_gpa_graph() : options.gpa_graph);
        Table table = ingest_gpa(options.gpa_csv, options.gpa_columns, graph);
        if (options.gpa_standardize) {
            for (std::size_t c = 0; c < table.columns.size(); ++c) {
                double mean = 0.0, ss = 0.0;
                for (const auto& r : table.rows) mean += r[c];
                mean /= static_cast<double>(table.rows.size());
                for (const auto& r : table.rows) ss += (r[c] - mean) * (r[c] - mean);
                const double sd = std::sqrt(ss / static_cast<double>(table.rows.size()));
                if (!(sd > 0.0)) throw InputError("column for node '" + table.columns[c] + "' is constant");
                for (auto& r : table.rows) r[c] = (r[c] - mean) / sd;
            }
        }
        dropped = table.dropped_rows;
        return fit_linear_gaussian(graph, table);
    };
    Setting s{.name = name, .scm = name == "GPA" ? fitted() : closed_form_scm(name)};
    s.dropped_rows = dropped;
    if (name == "GPA") {
        s.real_world = true;
        s.backend = Backend::logistic;
    } else if (name == "Example2") {
        s.backend = Backend::logistic;
    } else {
        s.backend = Backend::tree;
        s.finite_support = true;
    }
    if (name == "LAdd") s.assumption2 = AggregateForm::additive;
    if (name == "LMult") s.assumption2 = AggregateForm::multiplicative;

    const Calibration cal = calibrate(s.scm, options.calibration_rows, rng);
    const bool fixed_threshold = name == "Example1" || name == "Example2" || name == "GPA";
    if (!fixed_threshold) s.scm = s.scm.with_label_threshold(median(cal.y));
    s.cost = CostModel::from_calibration(s.scm, cal.stats_rows);
    s.domains = domains_from_sample(cal.stats_rows, s.finite_support);
    return s;
}

}  // namespace

Scm closed_form_scm(const std::string& name) {
    if (name == "LAdd") return make_ladd();
    if (name == "LMult") return make_lmult();
    if (name == "NLAdd") return make_nladd();
    if (name == "NLMult") return make_nlmult();
    if (name == "LCubic") return make_lcubic();
    if (name == "Example1") return make_example1();
    if (name == "Example2") return make_example2();
    if (name == "GPA") throw Error("setting GPA is fitted from data and has no closed form");
    throw Error("unknown setting '" + name + "'");
}

std::shared_ptr<const Setting> build_setting(const std::string& name, const SettingOptions& options) {
    if (std::find(setting_names().begin(), setting_names().end(), name) == setting_names().end())
        throw Error("unknown setting '" + name + "'");
    static std::mutex mutex;
    static std::map<std::string, std::shared_ptr<const Setting>> cache;
    const std::string key = options_key(name, options);
    {
        std::lock_guard lock(mutex);
        if (const auto it = cache.find(key); it != cache.end()) return it->second;
    }
    auto built = std::make_shared<const Setting>(build_uncached(name, options));
    std::lock_guard lock(mutex);
    return cache.emplace(key, std::move(built)).first->second;
}

const std::string& default_gpa_graph() {
    static const std::string text =
        "# high-school GPA -> first-year college GPA -> SAT total\n"
        "nodes: hs_gpa, fy_gpa, sat_sum\n"
        "target: fy_gpa\n"
        "hs_gpa -> fy_gpa\n"
        "fy_gpa -> sat_sum\n";
    return text;
}

Table ingest_gpa(const std::filesystem::path& csv, const std::map<std::string, std::string>& column_map,
                 const CausalGraph& graph) {
    const Table raw = read_csv(csv);
    const auto& names = graph.dag().names();
    for (const auto& [node, col] : column_map)
        if (!graph.dag().contains(node)) throw InputError("column map names unknown node '" + node + "'");
    std::vector<std::size_t> source;
    std::vector<std::string> missing;
    for (const auto& node : names) {
        const auto it = column_map.find(node);
        const std::string col = it == column_map.end() ? node : it->second;
        const auto pos = std::find(raw.columns.begin(), raw.columns.end(), col);
        if (pos == raw.columns.end()) {
            missing.push_back(col + " (node " + node + ")");
            continue;
        }
        source.push_back(static_cast<std::size_t>(pos - raw.columns.begin()));
    }
    if (!missing.empty()) {
        std::string list;
        for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
        throw InputError("missing columns: " + list);
    }
    Table out;
    out.columns = names;
    out.dropped_rows = raw.dropped_rows;
    for (const auto& row : raw.rows) {
        Row r;
        bool ok = true;
        for (std::size_t c : source) {
            ok = ok && std::isfinite(row[c]);
            r.push_back(row[c]);
        }
        if (ok) out.rows.push_back(std::move(r));
        else ++out.dropped_rows;
    }
    if (out.rows.size() < 2) throw InputError("GPA data has fewer than 2 complete rows");
    return out;
}

double aggregation_residual(const Scm& scm, AggregateForm form, const NoiseVector& noise) {
    if (form == AggregateForm::none) throw Error("no aggregate form to check");
    const Dag& dag = scm.graph().dag();
    const double identity = form == AggregateForm::additive ? 0.0 : 1.0;
    std::vector<double> full(dag.size()), bare(dag.size());
    NoiseVector stripped = noise;
    for (NodeId v = 0; v < dag.size(); ++v)
        if (!dag.parents(v).empty()) stripped[v] = identity;
    scm.propagate(noise, full);
    scm.propagate(stripped, bare);

    double worst = 0.0;
    for (NodeId e : dag.descendants(scm.graph().target())) {
        double agg = identity;
        auto lineage = dag.ancestors(e);
        lineage.push_back(e);
        for (NodeId a : lineage) {
            if (dag.parents(a).empty()) continue;
            agg = form == AggregateForm::additive ? agg + noise[a] : agg * noise[a];
        }
        const double r = form == AggregateForm::additive ? full[e] - bare[e] - agg
                                                          : (bare[e] == 0.0 ? INFINITY : full[e] / bare[e] - agg);
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

}  // namespace perfrec
