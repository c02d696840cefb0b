#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dwlab/bounds.hpp"
#include "dwlab/config.hpp"
#include "dwlab/datagen.hpp"
#include "dwlab/difficulty.hpp"
#include "dwlab/labcli.hpp"
#include "dwlab/maxmargin.hpp"

namespace py = pybind11;
using namespace dwlab;

namespace {

using Matrix = py::array_t<double, py::array::c_style | py::array::forcecast>;
using Labels = py::array_t<int, py::array::c_style | py::array::forcecast>;

py::array_t<double> to_array(const std::vector<double>& v, std::size_t rows, std::size_t cols) {
    py::array_t<double> out({rows, cols});
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::array_t<double> to_array(const std::vector<double>& v) {
    py::array_t<double> out(v.size());
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

Dataset dataset_from(const Matrix& x, const Labels& y) {
    if (x.ndim() != 2) throw SpecificationError("features must be a 2-D array");
    if (y.ndim() != 1 || y.shape(0) != x.shape(0)) throw SpecificationError("labels must be 1-D with one entry per row");
    Dataset ds;
    ds.n = static_cast<std::size_t>(x.shape(0));
    ds.d = static_cast<std::size_t>(x.shape(1));
    ds.features.assign(x.data(), x.data() + x.size());
    ds.labels.assign(y.data(), y.data() + y.size());
    int top = 0;
    for (int v : ds.labels) top = std::max(top, v);
    const bool binary = std::all_of(ds.labels.begin(), ds.labels.end(), [](int v) { return v == 1 || v == -1; });
    ds.num_classes = binary ? 2 : top;
    for (int v : ds.labels) ds.class_of.push_back(class_of_label(v, ds.num_classes));
    ds.noise_flag.assign(ds.n, 0);
    ds.validate();
    return ds;
}

py::tuple generate(const std::string& spec_json) {
    DatasetSpec spec;
    from_json(json::parse(spec_json), spec);
    const auto ds = gen_gaussian_mixture(spec);
    py::array_t<int> y(ds.n);
    std::copy(ds.labels.begin(), ds.labels.end(), y.mutable_data());
    return py::make_tuple(to_array(ds.features, ds.n, ds.d), y);
}

py::dict error_profile(const Matrix& x, const Labels& y, const std::string& config_json) {
    ErrorEstimatorConfig cfg;
    from_json(json::parse(config_json), cfg);
    const auto ds = dataset_from(x, y);
    DifficultyProfile p;
    {
        py::gil_scoped_release release;
        p = estimate_error_profile(ds, cfg);
    }
    py::dict out;
    out["err"] = to_array(p.err);
    out["bias"] = to_array(p.bias);
    out["variance"] = to_array(p.variance);
    out["mu_hat"] = to_array(p.mu_hat);
    out["sigma2_hat"] = to_array(p.sigma2_hat);
    out["uncertainty"] = to_array(p.uncertainty);
    out["z_skew"] = to_array(p.z_skew);
    out["z_kurt"] = to_array(p.z_kurt);
    out["repeats_used"] = p.repeats_used;
    out["repeats_discarded"] = p.repeats_discarded;
    return out;
}

py::tuple max_margin(const Matrix& x, const Labels& y) {
    const auto s = solve_max_margin(dataset_from(x, y));
    return py::make_tuple(to_array(s.direction), s.gamma_star);
}

double epsilon(double L, double gamma, std::size_t n, double delta, int q) {
    BoundInputs in;
    in.L = L;
    in.gamma = gamma;
    in.n = n;
    in.delta = delta;
    in.q = q;
    return epsilon_term(in);
}

std::string run_experiment(const std::string& kind, const std::string& config_json, const std::string& out_dir,
                           std::size_t jobs, const std::string& base_dir) {
    lab::RunOptions opts;
    opts.out_dir = out_dir;
    opts.jobs = jobs;
    opts.base_dir = base_dir;
    const auto config = json::parse(config_json);
    py::gil_scoped_release release;
    return lab::run(lab::kind_from_string(kind), config, opts).to_json().dump();
}

}  // namespace

PYBIND11_MODULE(_dwlab, m) {
    m.doc() = "Difficulty-based sample weighting lab: estimators, oracles, bounds and the experiment runner.";

    py::register_exception<SpecificationError>(m, "SpecificationError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<NotSeparableError>(m, "NotSeparableError", PyExc_RuntimeError);
    py::register_exception<EstimationFailure>(m, "EstimationFailure", PyExc_RuntimeError);

    m.attr("schema_version") = lab::schema_version;
    m.attr("__version__") = lab::tool_version;

    m.def("generate", &generate, py::arg("spec_json"), "Gaussian mixture draw: returns (features, labels).");
    m.def("error_profile", &error_profile, py::arg("features"), py::arg("labels"), py::arg("config_json"),
          "Per-sample generalization error profile by repeated K-fold cross-validation.");
    m.def("max_margin", &max_margin, py::arg("features"), py::arg("labels"),
          "Hard-margin direction through the origin and its margin.");
    m.def(
        "closed_form_error",
        [](double mu, double sigma2) { return closed_form_error(mu, sigma2).value; }, py::arg("mu"),
        py::arg("sigma2"), "exp(-mu + sigma2 / 2)");
    m.def("epsilon_term", &epsilon, py::arg("L"), py::arg("gamma"), py::arg("n"), py::arg("delta"), py::arg("q") = 2);
    m.def(
        "config_digest", [](const std::string& text) { return config_digest(json::parse(text)); },
        py::arg("config_json"));
    m.def("run", &run_experiment, py::arg("kind"), py::arg("config_json"), py::arg("out_dir"), py::arg("jobs") = 0,
          py::arg("base_dir") = ".", "Runs one experiment and returns its manifest as JSON text.");
}
