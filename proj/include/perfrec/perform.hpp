#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "perfrec/models.hpp"
#include "perfrec/recourse.hpp"
#include "perfrec/scm.hpp"
#include "perfrec/settings.hpp"

namespace perfrec {

enum class NoiseMode { persistent, resampled };

std::string to_string(NoiseMode m);
NoiseMode parse_noise_mode(std::string_view name);

struct CohortMember {
    Row pre;
    NoiseVector noise;  // pre-recourse noise as drawn
    double pre_y = 0.0;
    int pre_label = 0;
    Action action;
    Row post;
    double post_y = 0.0;
    int post_label = 0;
    int post_decision_original = 0;
    std::optional<int> post_decision_refit;
};

/// Rejected applicants after implementing their recommendations.
struct RecourseCohort {
    std::vector<std::string> feature_names;
    std::vector<CohortMember> members;
    std::size_t draws = 0;  // rows sampled to collect the cohort

    std::size_t size() const { return members.size(); }
    /// Post rows with post labels (and post targets).
    Dataset post_dataset() const;
    Dataset pre_dataset() const;
};

/// Ground-truth post-recourse state of one applicant. CE rows are imposed by
/// intervening on every feature. With resampled noise, Y and its
/// descendants draw fresh noise from `rng`.
void apply_action(const Scm& scm, const CohortMember& pre, const Action& action, NoiseMode mode, Stream& rng,
                  CohortMember& out);

struct CohortOptions {
    std::size_t n_rejected = 500;
    NoiseMode noise = NoiseMode::persistent;
    std::size_t jobs = 1;
    /// Rows drawn per rejection-rate check.
    std::size_t draw_budget = 10'000'000;
    double min_rejection_rate = 1e-4;
};

/// Draws rows until `n_rejected` are rejected, recommends per applicant and
/// simulates the post state. Recommendations for equal rows share one
/// stream keyed by the row, so the result does not depend on `jobs`.
RecourseCohort simulate_post_recourse(const RecourseProblem& problem, const OptimizerConfig& optimizer,
                                      const CohortOptions& options, Stream& rng);

struct ShiftPoint {
    Row x;
    double pre = 0.0;
    double post = 0.0;
    double difference = 0.0;
    double weight = 0.0;
    std::size_t hits = 0;
};

struct ShiftReport {
    std::vector<ShiftPoint> points;
    std::size_t skipped_small = 0;       // buckets under min_bucket
    std::size_t skipped_off_support = 0;  // post rows with zero pre-recourse mass
    double min = 0.0;
    double max = 0.0;
    double weighted_mean = 0.0;

    bool empty() const { return points.empty(); }
};

/// Pre-recourse P(L = 1 | X = x) table: exact enumeration when the noise is
/// finite, otherwise `fallback_rows` rows sampled from `rng`.
FiniteDistribution pre_recourse_law(const Scm& scm, Stream& rng, std::size_t fallback_rows = 1'000'000);

/// Pointwise post-minus-pre conditional differences at support points with at
/// least `min_bucket` cohort hits, weighted by the cohort frequency.
ShiftReport q1_shift(const FiniteDistribution& pre, const RecourseCohort& cohort, std::size_t min_bucket = 20);
/// Throws "Q1 requires finite support" unless `finite_support`.
ShiftReport q1_shift(const Scm& scm, bool finite_support, const RecourseCohort& cohort, std::size_t min_bucket,
                     Stream& rng);

struct AcceptanceDelta {
    double rate_original = 0.0;
    double rate_refit = 0.0;
    double delta = 0.0;
};

/// Acceptance rates of the evaluation half's post rows.
AcceptanceDelta q2_acceptance_delta(const std::vector<CohortMember>& evaluation, const Classifier& original,
                                    const Classifier& refit);

struct ExperimentConfig {
    std::string setting;
    Method method = Method::indICR;
    std::vector<std::uint64_t> seeds{40, 41, 42, 43, 44, 45, 46, 47, 48, 49};
    std::string profile = "desk";
    std::optional<std::size_t> train_rows;
    std::optional<std::size_t> cohort_size;
    double target_success = 0.9;
    double decision_threshold = 0.5;
    Penalty penalty = Penalty::hinge;
    NoiseMode noise = NoiseMode::persistent;
    std::size_t min_bucket = 20;
    std::size_t samples = 1000;
    std::filesystem::path output_dir;
    SettingOptions setting_options;
    std::filesystem::path gpa_graph_file;  // source of setting_options.gpa_graph

    /// Checks every field; unset sizes follow the profile.
    void resolve();
    std::size_t resolved_train_rows() const;
    std::size_t resolved_cohort_size() const;
};

struct SeedResult {
    std::uint64_t seed = 0;
    std::optional<ShiftReport> q1;
    AcceptanceDelta q2;
    double acc_original = 0.0;       // O
    double acc_refit = 0.0;          // R
    double acc_original_post = 0.0;  // OP
    double acc_refit_post = 0.0;     // RP
    double post_label_rate = 0.0;
    double infeasible_rate = 0.0;
    double mean_cost = 0.0;
    std::size_t cohort = 0;
};

struct SummaryStat {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation; 0 for a single seed
    std::vector<double> values;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<SeedResult> seeds;

    /// Metric names in report order.
    static const std::vector<std::string>& metrics();
    /// NaN values (e.g. Q1 without visited buckets) are left out.
    SummaryStat summary(const std::string& metric) const;
    std::optional<double> value(const SeedResult& r, const std::string& metric) const;

    std::string to_csv() const;
    std::string to_json() const;
    std::string summary_line() const;
};

/// Everything one seed produces, kept for property checks.
struct SeedRun {
    std::shared_ptr<const Setting> setting;
    Classifier original;
    Classifier refit;
    RecourseCohort cohort;
    std::vector<std::size_t> refit_half;
    std::vector<std::size_t> eval_half;
    SeedResult result;
};

SeedRun run_seed(const ExperimentConfig& config, std::uint64_t seed, std::size_t jobs = 1);
ExperimentReport run_experiment(const ExperimentConfig& config, std::size_t jobs = 1);

/// Fits the setting's backend.
Classifier fit_backend(Backend backend, const Dataset& data, double threshold);

/// `report_<setting>_<method>.csv` and `.json` plus the resolved config.
std::vector<std::filesystem::path> write_report(const ExperimentReport& report, const std::filesystem::path& dir);

/// Merges per-run CSVs into one summary table, one row per
/// (method, setting) with mean/std of the Q1 aggregates and the acceptance
/// delta, followed by the four accuracies.
std::string merge_report_csvs(const std::vector<std::filesystem::path>& files);

std::string version_string();

}  // namespace perfrec
