// perfrec command-line entry point.
//
//   perfrec run --config exp.conf [--profile desk|paper] [--jobs N] [--out DIR]
//   perfrec audit --graph g.txt --policy D,G --targets D [--noise resampled]
//   perfrec verify-analytic
//   perfrec report --out DIR report_*.csv
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "perfrec/analytic.hpp"
#include "perfrec/config.hpp"
#include "perfrec/errors.hpp"
#include "perfrec/graph.hpp"
#include "perfrec/perform.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kRuntime = 1;
constexpr int kUsage = 2;
constexpr const char* kOutEnv = "PERFREC_OUT";

std::filesystem::path default_out() {
    if (const char* env = std::getenv(kOutEnv); env && *env) return env;
    return "results";
}

perfrec::NameSet name_set(const std::string& list) {
    perfrec::NameSet out;
    std::stringstream ss(list);
    for (std::string item; std::getline(ss, item, ',');) {
        const auto b = item.find_first_not_of(' ');
        const auto e = item.find_last_not_of(' ');
        if (b != std::string::npos) out.insert(item.substr(b, e - b + 1));
    }
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw perfrec::InputError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cmd_run(const std::filesystem::path& config_path, const std::string& profile, std::size_t jobs,
            const std::string& out_flag) {
    auto configs = perfrec::load_config(config_path);
    for (auto& c : configs) {
        if (!profile.empty()) c.profile = profile;
        c.resolve();
        if (c.target_success < c.decision_threshold)
            std::cerr << "warning: target_success " << c.target_success << " is below decision_threshold "
                      << c.decision_threshold << "\n";
    }
    std::cout << "method  setting    exp. dist. diff    max. dist. diff    min. dist. diff    acc. rate diff\n";
    for (const auto& c : configs) {
        const std::filesystem::path dir =
            !out_flag.empty() ? std::filesystem::path(out_flag) : !c.output_dir.empty() ? c.output_dir : default_out();
        const auto report = perfrec::run_experiment(c, jobs);
        const auto files = perfrec::write_report(report, dir);
        std::cout << report.summary_line() << "\n";
        for (const auto& f : files) std::cerr << "wrote " << f.string() << "\n";
    }
    return kOk;
}

int cmd_audit(const std::filesystem::path& graph_path, const std::string& policy, const std::string& targets,
              const std::string& noise) {
    const auto graph = perfrec::CausalGraph::parse(read_file(graph_path));
    const bool resampled = perfrec::parse_noise_mode(noise) == perfrec::NoiseMode::resampled;
    perfrec::AuditReport report;
    try {
        report = perfrec::audit_performative_validity(graph, name_set(policy), name_set(targets), resampled);
    } catch (const perfrec::InputError&) {
        throw;
    } catch (const perfrec::Error& e) {
        throw perfrec::InputError(e.what());
    }
    std::cout << perfrec::to_text(report);
    return kOk;
}

int cmd_verify(double erf_p) {
    perfrec::analytic::ErfCoefficients coeffs;
    if (erf_p > 0.0) coeffs.p = erf_p;
    const auto rows = perfrec::analytic::verify_all(coeffs);
    std::size_t failed = 0;
    for (const auto& r : rows) {
        failed += !r.passed;
        std::cout << (r.passed ? "PASS  " : "FAIL  ") << r.name;
        if (!r.detail.empty()) std::cout << "  [" << r.detail << "]";
        std::cout << "\n";
    }
    std::cout << rows.size() - failed << "/" << rows.size() << " passed\n";
    return failed == 0 ? kOk : kRuntime;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_flag) {
    std::vector<std::filesystem::path> files;
    const std::filesystem::path dir = out_flag.empty() ? default_out() : std::filesystem::path(out_flag);
    if (inputs.empty()) {
        if (!std::filesystem::is_directory(dir)) throw perfrec::InputError("no report CSVs given and no " + dir.string());
        for (const auto& entry : std::filesystem::directory_iterator(dir)) {
            const auto name = entry.path().filename().string();
            if (name.rfind("report_", 0) == 0 && entry.path().extension() == ".csv") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
    } else {
        files.assign(inputs.begin(), inputs.end());
    }
    if (files.empty()) throw perfrec::InputError("no report CSVs found");
    const std::string table = perfrec::merge_report_csvs(files);
    std::filesystem::create_directories(dir);
    const auto path = dir / "summary.csv";
    std::ofstream(path, std::ios::binary) << table;
    std::cout << table;
    std::cerr << "wrote " << path.string() << "\n";
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Performative effects of algorithmic recourse: experiments, audits and oracles", "perfrec"};
    app.require_subcommand(1);
    app.set_version_flag("--version", perfrec::version_string());

    std::string config, profile, out;
    std::size_t jobs = 1;
    app.add_option("--config", config, "Experiment config file (key = value)");
    app.add_option("--profile", profile, "Scale profile")->check(CLI::IsMember({"desk", "paper"}));
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", out, std::string("Output directory (default $") + kOutEnv + " or ./results)");

    auto* run = app.add_subcommand("run", "Run experiments from a config and write reports");
    run->fallthrough();

    std::string graph, policy, targets, noise = "persistent";
    auto* audit = app.add_subcommand("audit", "Graph audit of performative validity");
    audit->add_option("--graph", graph, "Graph file")->required();
    audit->add_option("--policy", policy, "Comma-separated features the decision model reads");
    audit->add_option("--targets", targets, "Comma-separated intervention targets");
    audit->add_option("--noise", noise, "persistent or resampled")->check(CLI::IsMember({"persistent", "resampled"}));
    audit->fallthrough();

    double erf_p = 0.0;
    auto* verify = app.add_subcommand("verify-analytic", "Check every closed-form oracle");
    verify->add_option("--erf-p", erf_p, "Override the erf approximation constant p")->group("");
    verify->fallthrough();

    std::vector<std::string> inputs;
    auto* report = app.add_subcommand("report", "Merge per-run CSVs into one summary CSV");
    report->add_option("csv", inputs, "Report CSVs (default: report_*.csv in the output directory)");
    report->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*run) {
            if (config.empty()) throw perfrec::InputError("run requires --config");
            return cmd_run(config, profile, jobs, out);
        }
        if (*audit) return cmd_audit(graph, policy, targets, noise);
        if (*verify) return cmd_verify(erf_p);
        if (*report) return cmd_report(inputs, out);
    } catch (const perfrec::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kUsage;
}
