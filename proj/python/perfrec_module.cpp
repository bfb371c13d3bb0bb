#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "perfrec/analytic.hpp"
#include "perfrec/config.hpp"
#include "perfrec/errors.hpp"
#include "perfrec/graph.hpp"
#include "perfrec/perform.hpp"
#include "perfrec/settings.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

py::dict sample_setting(const std::string& name, std::size_t n, std::uint64_t seed) {
    const auto setting = perfrec::build_setting(name);
    perfrec::Stream rng(seed);
    const perfrec::Dataset d = setting->scm.sample(n, rng);
    py::array_t<double> x({d.size(), d.n_features()});
    auto xv = x.mutable_unchecked<2>();
    for (std::size_t i = 0; i < d.size(); ++i)
        for (std::size_t j = 0; j < d.n_features(); ++j) xv(i, j) = d.x[i][j];
    return py::dict("features"_a = d.feature_names, "x"_a = x, "y"_a = py::array(py::cast(d.y)),
                    "label"_a = py::array(py::cast(d.label)));
}

py::dict audit(const std::string& graph_text, const perfrec::NameSet& policy, const perfrec::NameSet& targets,
               bool resampled) {
    const auto g = perfrec::CausalGraph::parse(graph_text);
    const auto r = perfrec::audit_performative_validity(g, policy, targets, resampled);
    return py::dict("influenced_by_effects"_a = r.influenced_by_effects,
                    "intervenes_on_effects"_a = r.intervenes_on_effects, "noise_resampled"_a = r.noise_resampled,
                    "d_separated"_a = r.d_separated, "guaranteed_valid"_a = r.guaranteed_valid);
}

bool d_separated(const std::string& graph_text, const perfrec::NameSet& a, const perfrec::NameSet& b,
                 const perfrec::NameSet& z) {
    return perfrec::d_separated(perfrec::CausalGraph::parse(graph_text).dag(), a, b, z);
}

// One report per (setting, method) in the config text; returns their CSVs.
std::vector<std::string> run_config(const std::string& text, std::size_t jobs) {
    std::vector<std::string> out;
    for (const auto& cfg : perfrec::parse_config(text)) {
        py::gil_scoped_release release;
        out.push_back(perfrec::run_experiment(cfg, jobs).to_csv());
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Simulation of performative effects of algorithmic recourse";

    // Later registrations are tried first, so the subclass goes last.
    py::register_exception<perfrec::Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<perfrec::InputError>(m, "InputError", PyExc_ValueError);

    m.def("version", &perfrec::version_string);
    m.def("setting_names", &perfrec::setting_names);
    m.def("sample", &sample_setting, "setting"_a, "n"_a, "seed"_a = 0);
    m.def("audit", &audit, "graph"_a, "policy"_a, "targets"_a, "resampled"_a = false);
    m.def("d_separated", &d_separated, "graph"_a, "a"_a, "b"_a, "z"_a = perfrec::NameSet{});
    m.def("run", &run_config, "config"_a, "jobs"_a = 1);
    m.def("merge_reports", &perfrec::merge_report_csvs, "files"_a);

    auto a = m.def_submodule("analytic");
    a.def("normal_cdf", [](double x) { return perfrec::analytic::normal_cdf(x); });
    a.def("ex1_conditional", &perfrec::analytic::ex1_conditional, "degree"_a, "github"_a);
    a.def("ex1_post_mixture", &perfrec::analytic::ex1_post_mixture, "post_weight"_a);
    a.def("ex2_h", [](double xc, double xe) { return perfrec::analytic::ex2_h(xc, xe); }, "x_cause"_a,
          "x_effect"_a);
    a.def("verify_all", []() {
        std::vector<std::tuple<std::string, bool, std::string>> out;
        for (const auto& r : perfrec::analytic::verify_all()) out.emplace_back(r.name, r.passed, r.detail);
        return out;
    });
}
