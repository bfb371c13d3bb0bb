#include "perfrec/perform.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "perfrec/config.hpp"
#include "perfrec/errors.hpp"

namespace perfrec {

std::string to_string(NoiseMode m) { return m == NoiseMode::persistent ? "persistent" : "resampled"; }

NoiseMode parse_noise_mode(std::string_view name) {
    if (name == "persistent") return NoiseMode::persistent;
    if (name == "resampled") return NoiseMode::resampled;
    throw Error("unknown noise mode '" + std::string(name) + "' (expected persistent or resampled)");
}

std::string version_string() {
#ifdef PERFREC_GIT_DESCRIBE
    return PERFREC_VERSION "+" PERFREC_GIT_DESCRIBE;
#else
    return PERFREC_VERSION;
#endif
}

namespace {

/// Runs body(i) for i in [0, n) on up to `jobs` threads; rethrows the
/// exception of the lowest failing index.
template <class F>
void parallel_for(std::size_t n, std::size_t jobs, F&& body) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mutex;
    std::size_t failed_at = n;
    std::exception_ptr failure;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(mutex);
                    if (i < failed_at) {
                        failed_at = i;
                        failure = std::current_exception();
                    }
                }
            }
        });
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
}

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string fixed2(double v) {
    if (std::isnan(v)) return "  -  ";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%+.2f", v);
    return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Cohorts

Dataset RecourseCohort::post_dataset() const {
    Dataset d;
    d.feature_names = feature_names;
    for (const auto& m : members) d.push_back(m.post, m.post_y, m.post_label);
    return d;
}

Dataset RecourseCohort::pre_dataset() const {
    Dataset d;
    d.feature_names = feature_names;
    for (const auto& m : members) d.push_back(m.pre, m.pre_y, m.pre_label);
    return d;
}

void apply_action(const Scm& scm, const CohortMember& pre, const Action& action, NoiseMode mode, Stream& rng,
                  CohortMember& out) {
    const auto& graph = scm.graph();
    NoiseVector noise = pre.noise;
    if (noise.size() != graph.dag().size()) throw Error("cohort member carries no noise vector");
    if (mode == NoiseMode::resampled) {
        const NodeId y = graph.target();
        noise[y] = scm.noise_law(y).sample(rng);
        for (NodeId d : graph.dag().descendants(y)) noise[d] = scm.noise_law(d).sample(rng);
    }
    Intervention iv = action.intervention;
    if (action.kind == Action::Kind::point && !action.point.empty()) {
        iv.targets = graph.features();
        iv.values = action.point;
    }
    std::vector<double> values(graph.dag().size());
    scm.propagate(noise, values, &iv);
    out.post = scm.features_of(values);
    out.post_y = values[graph.target()];
    out.post_label = scm.label(out.post_y);
}

RecourseCohort simulate_post_recourse(const RecourseProblem& problem, const OptimizerConfig& optimizer,
                                      const CohortOptions& options, Stream& rng) {
    if (!problem.scm || !problem.classifier) throw Error("recourse problem needs an SCM and a classifier");
    const Scm& scm = *problem.scm;
    RecourseCohort cohort;
    cohort.feature_names = scm.feature_names();
    if (options.n_rejected == 0) return cohort;

    std::vector<double> values(scm.graph().dag().size());
    while (cohort.members.size() < options.n_rejected) {
        CohortMember m;
        m.noise = scm.sample_noise(rng);
        scm.propagate(m.noise, values);
        m.pre = scm.features_of(values);
        ++cohort.draws;
        if (!problem.classifier->decide(m.pre)) {
            m.pre_y = values[scm.graph().target()];
            m.pre_label = scm.label(m.pre_y);
            cohort.members.push_back(std::move(m));
        }
        if (options.draw_budget > 0 && cohort.draws % options.draw_budget == 0) {
            const double rate = static_cast<double>(cohort.members.size()) / static_cast<double>(cohort.draws);
            if (rate < options.min_rejection_rate)
                throw Error("cannot collect cohort: rejection rate " + fmt(rate) + " after " +
                            std::to_string(cohort.draws) + " draws");
        }
    }

    const std::uint64_t rec_seed = rng.engine()();
    std::map<Row, std::size_t> slot;
    std::vector<Row> unique;
    for (const auto& m : cohort.members)
        if (slot.emplace(m.pre, unique.size()).second) unique.push_back(m.pre);
    std::vector<Action> actions(unique.size());
    parallel_for(unique.size(), options.jobs, [&](std::size_t k) {
        Stream s = Stream::derive(rec_seed, {hash_row(unique[k])});
        actions[k] = recommend(problem, unique[k], optimizer, s);
    });

    for (std::size_t i = 0; i < cohort.members.size(); ++i) {
        CohortMember& m = cohort.members[i];
        m.action = actions[slot.at(m.pre)];
        Stream s = Stream::derive(rec_seed, {hash_label("post"), i});
        apply_action(scm, m, m.action, options.noise, s, m);
        m.post_decision_original = problem.classifier->decide(m.post);
    }
    return cohort;
}

// ---------------------------------------------------------------------------
// Q1 / Q2

FiniteDistribution pre_recourse_law(const Scm& scm, Stream& rng, std::size_t fallback_rows) {
    bool finite_noise = true;
    for (NodeId v = 0; v < scm.graph().dag().size(); ++v) finite_noise = finite_noise && scm.noise_law(v).finite();
    if (finite_noise) return enumerate_joint(scm);
    FiniteDistribution dist;
    std::vector<double> values(scm.graph().dag().size());
    const double w = 1.0 / static_cast<double>(fallback_rows);
    for (std::size_t i = 0; i < fallback_rows; ++i) {
        scm.propagate(scm.sample_noise(rng), values);
        FiniteCell& cell = dist[scm.features_of(values)];
        cell.mass += w;
        if (scm.label(values[scm.graph().target()])) cell.positive += w;
    }
    return dist;
}

ShiftReport q1_shift(const FiniteDistribution& pre, const RecourseCohort& cohort, std::size_t min_bucket) {
    if (min_bucket == 0) throw Error("min_bucket must be at least 1");
    std::map<Row, std::pair<std::size_t, std::size_t>> buckets;  // hits, positives
    for (const auto& m : cohort.members) {
        auto& b = buckets[m.post];
        ++b.first;
        b.second += static_cast<std::size_t>(m.post_label);
    }
    ShiftReport r;
    std::size_t total = 0;
    for (const auto& [x, b] : buckets) {
        const auto it = pre.find(x);
        if (it == pre.end() || !(it->second.mass > 0.0)) {
            ++r.skipped_off_support;
            continue;
        }
        if (b.first < min_bucket) {
            ++r.skipped_small;
            continue;
        }
        ShiftPoint p;
        p.x = x;
        p.hits = b.first;
        p.pre = it->second.conditional();
        p.post = static_cast<double>(b.second) / static_cast<double>(b.first);
        p.difference = p.post - p.pre;
        total += b.first;
        r.points.push_back(std::move(p));
    }
    if (r.points.empty()) {
        r.min = r.max = r.weighted_mean = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    r.min = std::numeric_limits<double>::infinity();
    r.max = -r.min;
    r.weighted_mean = 0.0;
    for (auto& p : r.points) {
        p.weight = static_cast<double>(p.hits) / static_cast<double>(total);
        r.min = std::min(r.min, p.difference);
        r.max = std::max(r.max, p.difference);
        r.weighted_mean += p.weight * p.difference;
    }
    return r;
}

ShiftReport q1_shift(const Scm& scm, bool finite_support, const RecourseCohort& cohort, std::size_t min_bucket,
                     Stream& rng) {
    if (!finite_support) throw Error("Q1 requires finite support");
    return q1_shift(pre_recourse_law(scm, rng), cohort, min_bucket);
}

AcceptanceDelta q2_acceptance_delta(const std::vector<CohortMember>& evaluation, const Classifier& original,
                                    const Classifier& refit) {
    if (evaluation.empty()) throw Error("empty evaluation half");
    AcceptanceDelta d;
    for (const auto& m : evaluation) {
        d.rate_original += original.decide(m.post);
        d.rate_refit += refit.decide(m.post);
    }
    d.rate_original /= static_cast<double>(evaluation.size());
    d.rate_refit /= static_cast<double>(evaluation.size());
    d.delta = d.rate_refit - d.rate_original;
    return d;
}

// ---------------------------------------------------------------------------
// Experiments

void ExperimentConfig::resolve() {
    auto field = [](const std::string& name, const std::string& msg) {
        return InputError("field '" + name + "': " + msg);
    };
    if (setting.empty()) throw field("setting", "missing");
    if (std::find(setting_names().begin(), setting_names().end(), setting) == setting_names().end())
        throw field("setting", "unknown setting '" + setting + "'");
    if (seeds.empty()) throw field("seeds", "must list at least one seed");
    if (profile != "desk" && profile != "paper") throw field("profile", "expected desk or paper");
    if (train_rows && *train_rows < 2) throw field("train_rows", "must be at least 2");
    if (cohort_size && *cohort_size < 2) throw field("cohort_size", "must be at least 2");
    if (!(target_success > 0.0 && target_success <= 1.0)) throw field("target_success", "must lie in (0, 1]");
    if (!(decision_threshold >= 0.0 && decision_threshold <= 1.0))
        throw field("decision_threshold", "must lie in [0, 1]");
    if (min_bucket == 0) throw field("min_bucket", "must be at least 1");
    if (samples == 0) throw field("samples", "must be at least 1");
    if (setting == "GPA" && setting_options.gpa_csv.empty()) throw field("gpa_csv", "required for setting GPA");
}

std::size_t ExperimentConfig::resolved_train_rows() const {
    if (train_rows) return *train_rows;
    return profile == "paper" ? 100000 : 2000;
}

std::size_t ExperimentConfig::resolved_cohort_size() const {
    if (cohort_size) return *cohort_size;
    if (profile == "paper") return setting == "GPA" ? 1000 : 5000;
    return 500;
}

Classifier fit_backend(Backend backend, const Dataset& data, double threshold) {
    switch (backend) {
        case Backend::tree: return fit_tree(data, {}, threshold);
        case Backend::logistic: return fit_logistic(data, {}, threshold);
        case Backend::oracle: break;
    }
    throw Error("oracle classifiers are not fitted");
}

namespace {

Dataset sample_accepted(const Scm& scm, const Classifier& clf, std::size_t n, Stream& rng) {
    Dataset out;
    out.feature_names = scm.feature_names();
    std::vector<double> values(scm.graph().dag().size());
    std::size_t draws = 0;
    while (out.size() < n) {
        scm.propagate(scm.sample_noise(rng), values);
        Row x = scm.features_of(values);
        if (++draws > 10'000'000 && out.size() * 10'000 < draws) throw Error("cannot sample accepted applicants");
        if (!clf.decide(x)) continue;
        const double y = values[scm.graph().target()];
        out.push_back(std::move(x), y, scm.label(y));
    }
    return out;
}

}  // namespace

SeedRun run_seed(const ExperimentConfig& config, std::uint64_t seed, std::size_t jobs) {
    ExperimentConfig cfg = config;
    cfg.resolve();
    auto setting = build_setting(cfg.setting, cfg.setting_options);
    const Scm& scm = setting->scm;
    const std::uint64_t hs = hash_label(cfg.setting);
    auto stream = [&](std::uint64_t purpose) { return Stream::derive(seed, {hs, purpose}); };

    Stream train_rng = stream(1);
    const Dataset train = scm.sample(cfg.resolved_train_rows(), train_rng);
    Classifier original = fit_backend(setting->backend, train, cfg.decision_threshold);
    Stream test_rng = stream(2);
    const Dataset test = scm.sample(cfg.resolved_train_rows(), test_rng);

    RecourseProblem problem;
    problem.scm = &scm;
    problem.classifier = &original;
    problem.cost = setting->cost;
    problem.method = cfg.method;
    problem.target_success = cfg.target_success;
    problem.samples = cfg.samples;
    OptimizerConfig optimizer;
    optimizer.domains = setting->domains;
    optimizer.penalty = cfg.penalty;

    CohortOptions copts;
    copts.n_rejected = cfg.resolved_cohort_size();
    copts.noise = cfg.noise;
    copts.jobs = jobs;
    Stream cohort_rng = stream(3);
    RecourseCohort cohort = simulate_post_recourse(problem, optimizer, copts, cohort_rng);

    std::vector<std::size_t> order(cohort.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Stream split_rng = stream(5);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[split_rng.index(i)]);
    const std::size_t half = order.size() / 2;
    std::vector<std::size_t> refit_half(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
    std::vector<std::size_t> eval_half(order.begin() + static_cast<std::ptrdiff_t>(half), order.end());
    std::sort(refit_half.begin(), refit_half.end());
    std::sort(eval_half.begin(), eval_half.end());

    Dataset post_part, pre_part;
    post_part.feature_names = pre_part.feature_names = cohort.feature_names;
    for (std::size_t i : refit_half) {
        const auto& m = cohort.members[i];
        post_part.push_back(m.post, m.post_y, m.post_label);
        pre_part.push_back(m.pre, m.pre_y, m.pre_label);
    }
    Stream accepted_rng = stream(6);
    const Dataset accepted = sample_accepted(scm, original, refit_half.size(), accepted_rng);
    Classifier refit = fit_backend(setting->backend, assemble_refit_set(accepted, pre_part, post_part),
                                   cfg.decision_threshold);
    for (auto& m : cohort.members) m.post_decision_refit = refit.decide(m.post);

    SeedResult r;
    r.seed = seed;
    r.cohort = cohort.size();
    if (setting->finite_support) {
        Stream law_rng = Stream::derive(cfg.setting_options.calibration_seed, {hs, hash_label("pre-law")});
        r.q1 = q1_shift(scm, true, cohort, cfg.min_bucket, law_rng);
    }
    std::vector<CohortMember> evaluation;
    for (std::size_t i : eval_half) evaluation.push_back(cohort.members[i]);
    r.q2 = q2_acceptance_delta(evaluation, original, refit);

    Dataset eval_post;
    eval_post.feature_names = cohort.feature_names;
    for (const auto& m : evaluation) eval_post.push_back(m.post, m.post_y, m.post_label);
    r.acc_original = original.accuracy(test);
    r.acc_refit = refit.accuracy(test);
    r.acc_original_post = original.accuracy(eval_post);
    r.acc_refit_post = refit.accuracy(eval_post);
    double labels = 0.0, infeasible = 0.0, costs = 0.0;
    for (const auto& m : cohort.members) {
        labels += m.post_label;
        infeasible += m.action.feasible ? 0.0 : 1.0;
        costs += m.action.cost;
    }
    const double n = static_cast<double>(std::max<std::size_t>(cohort.size(), 1));
    r.post_label_rate = labels / n;
    r.infeasible_rate = infeasible / n;
    r.mean_cost = costs / n;

    return SeedRun{setting, std::move(original), std::move(refit), std::move(cohort), std::move(refit_half),
                   std::move(eval_half), std::move(r)};
}

ExperimentReport run_experiment(const ExperimentConfig& config, std::size_t jobs) {
    ExperimentReport report;
    report.config = config;
    report.config.resolve();
    for (std::uint64_t seed : report.config.seeds) {
        try {
            report.seeds.push_back(run_seed(report.config, seed, jobs).result);
        } catch (const InputError&) {
            throw;
        } catch (const std::exception& e) {
            throw Error("seed " + std::to_string(seed) + ": " + e.what());
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Reports

const std::vector<std::string>& ExperimentReport::metrics() {
    static const std::vector<std::string> names{
        "q1_weighted_mean", "q1_max", "q1_min", "rate_original", "rate_refit", "acceptance_delta", "acc_O",
        "acc_R",           "acc_OP", "acc_RP", "post_label_rate", "infeasible_rate", "mean_cost"};
    return names;
}

std::optional<double> ExperimentReport::value(const SeedResult& r, const std::string& metric) const {
    if (metric.rfind("q1_", 0) == 0) {
        if (!r.q1 || r.q1->empty()) return std::nullopt;
        if (metric == "q1_weighted_mean") return r.q1->weighted_mean;
        if (metric == "q1_max") return r.q1->max;
        if (metric == "q1_min") return r.q1->min;
    }
    if (metric == "rate_original") return r.q2.rate_original;
    if (metric == "rate_refit") return r.q2.rate_refit;
    if (metric == "acceptance_delta") return r.q2.delta;
    if (metric == "acc_O") return r.acc_original;
    if (metric == "acc_R") return r.acc_refit;
    if (metric == "acc_OP") return r.acc_original_post;
    if (metric == "acc_RP") return r.acc_refit_post;
    if (metric == "post_label_rate") return r.post_label_rate;
    if (metric == "infeasible_rate") return r.infeasible_rate;
    if (metric == "mean_cost") return r.mean_cost;
    throw Error("unknown metric '" + metric + "'");
}

SummaryStat ExperimentReport::summary(const std::string& metric) const {
    SummaryStat s;
    for (const auto& r : seeds)
        if (const auto v = value(r, metric)) s.values.push_back(*v);
    if (s.values.empty()) {
        s.mean = s.std = std::numeric_limits<double>::quiet_NaN();
        return s;
    }
    for (double v : s.values) s.mean += v;
    s.mean /= static_cast<double>(s.values.size());
    if (s.values.size() > 1) {
        double ss = 0.0;
        for (double v : s.values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(s.values.size() - 1));
    }
    return s;
}

std::string ExperimentReport::to_csv() const {
    std::ostringstream out;
    out << "setting,method,metric,mean,std,n,seeds,values\n";
    for (const auto& metric : metrics()) {
        const SummaryStat s = summary(metric);
        std::string seed_list, values;
        for (const auto& r : seeds) {
            const auto v = value(r, metric);
            seed_list += (seed_list.empty() ? "" : ";") + std::to_string(r.seed);
            values += (values.empty() ? "" : ";") + (v ? fmt(*v) : std::string("nan"));
        }
        out << config.setting << ',' << to_string(config.method) << ',' << metric << ',' << fmt(s.mean) << ','
            << fmt(s.std) << ',' << s.values.size() << ',' << seed_list << ',' << values << '\n';
    }
    return out.str();
}

std::string ExperimentReport::to_json() const {
    nlohmann::ordered_json j;
    j["version"] = version_string();
    j["setting"] = config.setting;
    j["method"] = to_string(config.method);
    nlohmann::ordered_json cfg;
    for (const auto& [k, v] : config_entries(config)) cfg[k] = v;
    j["config"] = cfg;
    auto num = [](double v) { return std::isnan(v) ? nlohmann::ordered_json() : nlohmann::ordered_json(v); };
    for (const auto& r : seeds) {
        nlohmann::ordered_json s;
        s["seed"] = r.seed;
        s["cohort"] = r.cohort;
        for (const auto& metric : metrics()) {
            const auto v = value(r, metric);
            s[metric] = v ? num(*v) : nlohmann::ordered_json();
        }
        if (r.q1) {
            nlohmann::ordered_json pts = nlohmann::ordered_json::array();
            for (const auto& p : r.q1->points)
                pts.push_back({{"x", p.x},
                               {"pre", p.pre},
                               {"post", p.post},
                               {"difference", p.difference},
                               {"weight", p.weight},
                               {"hits", p.hits}});
            s["q1_points"] = pts;
            s["q1_skipped_small"] = r.q1->skipped_small;
            s["q1_skipped_off_support"] = r.q1->skipped_off_support;
        }
        j["per_seed"].push_back(s);
    }
    for (const auto& metric : metrics()) {
        const SummaryStat st = summary(metric);
        j["summary"][metric] = {{"mean", num(st.mean)}, {"std", num(st.std)}, {"n", st.values.size()}};
    }
    return j.dump(2) + "\n";
}

std::string ExperimentReport::summary_line() const {
    std::ostringstream out;
    auto pair = [&](const std::string& metric) {
        const SummaryStat s = summary(metric);
        return fixed2(s.mean) + " ±" + (std::isnan(s.std) ? std::string("  -  ") : fixed2(s.std).substr(1));
    };
    char head[64];
    std::snprintf(head, sizeof head, "%-7s %-9s", to_string(config.method).c_str(), config.setting.c_str());
    out << head << "  exp " << pair("q1_weighted_mean") << "  max " << pair("q1_max") << "  min " << pair("q1_min")
        << "  acc.rate " << pair("acceptance_delta");
    return out.str();
}

std::vector<std::filesystem::path> write_report(const ExperimentReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const std::string stem = "report_" + report.config.setting + "_" + to_string(report.config.method);
    const std::vector<std::pair<std::filesystem::path, std::string>> files{
        {dir / (stem + ".csv"), report.to_csv()},
        {dir / (stem + ".json"), report.to_json()},
        {dir / (stem + ".conf"), to_conf(report.config)},
    };
    std::vector<std::filesystem::path> out;
    for (const auto& [path, body] : files) {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error("cannot write " + path.string());
        f << body;
        if (!f) throw Error("failed writing " + path.string());
        out.push_back(path);
    }
    return out;
}

std::string merge_report_csvs(const std::vector<std::filesystem::path>& files) {
    using Key = std::pair<std::string, std::string>;  // (method, setting)
    std::map<Key, std::map<std::string, std::pair<std::string, std::string>>> table;
    for (const auto& path : files) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot read " + path.string());
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (lineno == 1) {
                if (line.rfind("setting,method,metric,mean,std", 0) != 0)
                    throw InputError("not a report CSV: " + path.string(), lineno);
                continue;
            }
            if (line.empty()) continue;
            std::vector<std::string> cells;
            std::stringstream ss(line);
            for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
            if (cells.size() < 5) throw InputError("malformed report row in " + path.string(), lineno);
            table[{cells[1], cells[0]}][cells[2]] = {cells[3], cells[4]};
        }
    }
    auto method_rank = [](const std::string& m) {
        const std::vector<std::string> order{"indICR", "subICR", "indCR", "subCR", "CE"};
        return static_cast<std::size_t>(std::find(order.begin(), order.end(), m) - order.begin());
    };
    auto setting_rank = [](const std::string& s) {
        const auto& order = setting_names();
        return static_cast<std::size_t>(std::find(order.begin(), order.end(), s) - order.begin());
    };
    std::vector<Key> keys;
    for (const auto& [k, _] : table) keys.push_back(k);
    std::sort(keys.begin(), keys.end(), [&](const Key& a, const Key& b) {
        return std::make_tuple(method_rank(a.first), setting_rank(a.second), a) <
               std::make_tuple(method_rank(b.first), setting_rank(b.second), b);
    });
    const std::vector<std::pair<std::string, std::string>> cols{{"q1_weighted_mean", "exp"},
                                                                {"q1_max", "max"},
                                                                {"q1_min", "min"},
                                                                {"acceptance_delta", "acc_rate"}};
    std::ostringstream out;
    out << "method,setting";
    for (const auto& [_, short_name] : cols) out << ',' << short_name << "_mean," << short_name << "_std";
    out << ",O,R,OP,RP\n";
    for (const auto& k : keys) {
        const auto& row = table[k];
        auto cell = [&](const std::string& metric, bool std_col) -> std::string {
            const auto it = row.find(metric);
            if (it == row.end() || (std_col ? it->second.second : it->second.first) == "nan") return "-";
            return std_col ? it->second.second : it->second.first;
        };
        out << k.first << ',' << k.second;
        for (const auto& [metric, _] : cols) out << ',' << cell(metric, false) << ',' << cell(metric, true);
        for (const char* m : {"acc_O", "acc_R", "acc_OP", "acc_RP"}) out << ',' << cell(m, false);
        out << '\n';
    }
    return out.str();
}

}  // namespace perfrec
