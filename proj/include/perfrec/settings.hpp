#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "perfrec/models.hpp"
#include "perfrec/recourse.hpp"
#include "perfrec/scm.hpp"

namespace perfrec {

/// How noise enters the effect equations once the cause is fixed:
/// x_E = g(x_C) + sum of noises, or x_E = g(x_C) * product of noises.
enum class AggregateForm { none, additive, multiplicative };

std::string to_string(AggregateForm f);

inline constexpr std::uint64_t kCalibrationSeed = 12345;

struct SettingOptions {
    std::uint64_t calibration_seed = kCalibrationSeed;
    std::size_t calibration_rows = 1'000'000;
    /// GPA only: CSV path, node -> column map (identity when empty), graph
    /// text (shipped default when empty), and z-scoring of columns.
    std::filesystem::path gpa_csv;
    std::map<std::string, std::string> gpa_columns;
    std::string gpa_graph;
    bool gpa_standardize = true;
};

struct Setting {
    std::string name;
    Scm scm;
    CostModel cost{};
    std::vector<FeatureDomain> domains{};
    Backend backend = Backend::tree;
    bool finite_support = false;
    bool real_world = false;
    AggregateForm assumption2 = AggregateForm::none;
    std::size_t dropped_rows = 0;  // GPA rows dropped for missing values

    bool assumption2_holds() const { return assumption2 != AggregateForm::none; }
};

/// LAdd, LMult, NLAdd, NLMult, LCubic, Example1, Example2, GPA.
const std::vector<std::string>& setting_names();
const std::vector<std::string>& synthetic_setting_names();

/// The SCM with its printed equations and an uncalibrated threshold of 0
/// (Example1 uses 0.5). Not available for GPA.
Scm closed_form_scm(const std::string& name);

/// Calibrated setting; results are cached per (name, options).
std::shared_ptr<const Setting> build_setting(const std::string& name, const SettingOptions& options = {});

/// Shipped default GPA graph: hs_gpa -> fy_gpa -> sat_sum, target fy_gpa.
const std::string& default_gpa_graph();

/// CSV columns mapped onto graph nodes; rows with missing values are dropped
/// and counted in `dropped_rows`.
Table ingest_gpa(const std::filesystem::path& csv, const std::map<std::string, std::string>& column_map,
                 const CausalGraph& graph);

/// Largest deviation, over the descendants of the target, between the node's
/// value and its noise-free value aggregated with the non-root noises (sum or
/// product). Near zero for every draw iff the form holds.
double aggregation_residual(const Scm& scm, AggregateForm form, const NoiseVector& noise);

}  // namespace perfrec
