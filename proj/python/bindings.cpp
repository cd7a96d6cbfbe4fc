#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "elc/errors.hpp"
#include "elc/io.hpp"
#include "elc/pipeline.hpp"

namespace py = pybind11;
using namespace elc;

namespace {

constexpr std::size_t kLastSite = static_cast<std::size_t>(-1);

// Structured values cross the boundary as JSON text; the Python package decodes them.
PipelineConfig config_of(const std::string& text) { return text.empty() ? PipelineConfig{} : parse_config(text); }

}  // namespace

PYBIND11_MODULE(_elc, m) {
  m.doc() = "Energy-landscape controller synthesis (native core)";
  m.attr("__version__") = ELC_VERSION;

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<SingularityError>(m, "SingularityError", PyExc_ArithmeticError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ExtractionError>(m, "ExtractionError", PyExc_RuntimeError);

  m.def("bare_couplings", [](double depth) {
    const auto p = bare_couplings(depth, LatticeConfig{});
    return std::pair{p.J, p.U};
  }, py::arg("depth"), "(J, U) in units of E_R for the default 1064 nm Rb-87 lattice.");
  m.def("time_unit", [](double depth) { return time_unit(depth, LatticeConfig{}); }, py::arg("depth"),
        "Seconds per normalized time unit.");
  m.def("effective_coupling", [](double delta, double J, double U) { return effective_coupling({J, U}, delta); },
        py::arg("delta"), py::arg("J") = 0.01, py::arg("U") = 1.0);
  m.def("double_well_gap_ratio", &double_well_gap_ratio, py::arg("J"), py::arg("U"), py::arg("delta"));

  m.def("fidelity_error", [](std::vector<double> biases, double t, std::size_t initial, std::size_t target) {
    const BiasVector b(std::move(biases));
    const std::size_t n = b.chain_length();
    return fidelity_error(b, t, {n, initial, target == kLastSite ? n - 1 : target}, HubbardParams::nominal());
  }, py::arg("biases"), py::arg("t"), py::arg("initial") = 0, py::arg("target") = kLastSite);
  m.def("fidelity_trace", [](std::vector<double> biases, double t_max, std::size_t steps) {
    const BiasVector b(std::move(biases));
    const auto tr = fidelity_trace(b, TransferProblem::end_to_end(b.chain_length()), HubbardParams::nominal(), t_max, steps);
    return py::dict(py::arg("times") = tr.times, py::arg("errors") = tr.errors, py::arg("t_min") = tr.t_min,
                    py::arg("e_min") = tr.e_min);
  }, py::arg("biases"), py::arg("t_max"), py::arg("steps") = kDefaultTraceSteps);
  m.def("bias_sensitivities", [](std::vector<double> biases, double t) {
    const BiasVector b(std::move(biases));
    return bias_sensitivities({b, t}, TransferProblem::end_to_end(b.chain_length()), HubbardParams::nominal());
  }, py::arg("biases"), py::arg("t"), "d e / d Delta_j for end-to-end transfer.");
  m.def("correlations", [](std::vector<double> x, std::vector<double> y) {
    const auto c = correlations(x, y);
    return std::pair{c.pearson, c.spearman};
  }, py::arg("x"), py::arg("y"));

  m.def("normalize_config", [](const std::string& text) { return Json(config_of(text)).dump(); }, py::arg("config_json"));
  m.def("config_hash", [](const std::string& text) { return config_hash(config_of(text)); }, py::arg("config_json"));
  m.def("run_pipeline", [](const std::string& text, std::optional<std::uint64_t> seed, std::optional<std::size_t> threads,
                           std::optional<ProgressFn> progress) {
    PipelineConfig cfg = config_of(text);
    if (seed) cfg.seed = *seed;
    if (threads) cfg.threads = *threads;
    ControllerDatabase db;
    {
      py::gil_scoped_release release;
      ProgressFn cb;
      if (progress) cb = [&](const std::string& msg) { py::gil_scoped_acquire acquire; (*progress)(msg); };
      db = run_pipeline(cfg, cb);
    }
    return Json(db).dump();
  }, py::arg("config_json"), py::arg("seed") = py::none(), py::arg("threads") = py::none(), py::arg("progress") = py::none());
  m.def("emit_report", [](const std::string& db_json, const std::filesystem::path& outdir) {
    const ControllerDatabase db = Json::parse(db_json).get<ControllerDatabase>();
    const auto res = emit_report(db, outdir);
    std::vector<std::string> files;
    for (const auto& f : res.files) files.push_back(f.string());
    return std::pair{files, res.warnings};
  }, py::arg("database_json"), py::arg("outdir"));
}
