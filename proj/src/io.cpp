#include "elc/io.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "elc/errors.hpp"

namespace elc {

namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const char* where) {
  if (!j.is_object()) throw ValidationError(std::string(where) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known) throw ValidationError(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void get_opt(const Json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) it->get_to(out);
}

}  // namespace

// ---- configuration ---------------------------------------------------------

void to_json(Json& j, const LatticeConfig& v) {
  j = Json{{"wavelength_m", v.wavelength},
           {"depth", v.depth},
           {"phase", v.phase},
           {"atom_mass_kg", v.atom_mass},
           {"scattering_length_m", v.scattering_length}};
}

void from_json(const Json& j, LatticeConfig& v) {
  check_keys(j, {"wavelength_m", "depth", "phase", "atom_mass_kg", "scattering_length_m"}, "lattice");
  get_opt(j, "wavelength_m", v.wavelength);
  get_opt(j, "depth", v.depth);
  get_opt(j, "phase", v.phase);
  get_opt(j, "atom_mass_kg", v.atom_mass);
  get_opt(j, "scattering_length_m", v.scattering_length);
}

void to_json(Json& j, const HubbardParams& v) { j = Json{{"J", v.J}, {"U", v.U}}; }

void from_json(const Json& j, HubbardParams& v) {
  check_keys(j, {"J", "U"}, "hubbard");
  get_opt(j, "J", v.J);
  get_opt(j, "U", v.U);
}

void to_json(Json& j, const TransferProblem& v) {
  j = Json{{"chain_length", v.chain_length},
           {"initial_site", v.initial_site + 1},
           {"target_site", v.target_site + 1}};
}

void from_json(const Json& j, TransferProblem& v) {
  check_keys(j, {"chain_length", "initial_site", "target_site"}, "problem");
  get_opt(j, "chain_length", v.chain_length);
  v.initial_site = j.value("initial_site", std::size_t{1}) - 1;
  v.target_site = j.value("target_site", v.chain_length) - 1;
}

void to_json(Json& j, const OpticsConfig& v) {
  j = Json{{"numerical_aperture", v.numerical_aperture},
           {"wavelength_m", v.wavelength},
           {"color_sign", v.color_sign},
           {"pixel_pitch_m", v.pixel_pitch},
           {"grid_step_m", v.grid_step},
           {"focal_length_m", v.focal_length},
           {"fresnel_number", v.fresnel_number}};
}

void from_json(const Json& j, OpticsConfig& v) {
  check_keys(j,
             {"numerical_aperture", "wavelength_m", "color_sign", "pixel_pitch_m", "grid_step_m",
              "focal_length_m", "fresnel_number"},
             "optics");
  get_opt(j, "numerical_aperture", v.numerical_aperture);
  get_opt(j, "wavelength_m", v.wavelength);
  get_opt(j, "color_sign", v.color_sign);
  get_opt(j, "pixel_pitch_m", v.pixel_pitch);
  get_opt(j, "grid_step_m", v.grid_step);
  get_opt(j, "focal_length_m", v.focal_length);
  get_opt(j, "fresnel_number", v.fresnel_number);
}

void to_json(Json& j, const BiasOptimConfig& v) {
  j = Json{{"t_max", v.t_max},
           {"delta_bound", v.delta_bound},
           {"symmetric", v.symmetric},
           {"restarts", v.restarts},
           {"gradient_tolerance", v.gradient_tolerance},
           {"step_tolerance", v.step_tolerance},
           {"max_iterations", v.max_iterations}};
}

void from_json(const Json& j, BiasOptimConfig& v) {
  check_keys(j,
             {"t_max", "delta_bound", "symmetric", "restarts", "gradient_tolerance", "step_tolerance",
              "max_iterations"},
             "stage1");
  get_opt(j, "t_max", v.t_max);
  get_opt(j, "delta_bound", v.delta_bound);
  get_opt(j, "symmetric", v.symmetric);
  get_opt(j, "restarts", v.restarts);
  get_opt(j, "gradient_tolerance", v.gradient_tolerance);
  get_opt(j, "step_tolerance", v.step_tolerance);
  get_opt(j, "max_iterations", v.max_iterations);
}

void to_json(Json& j, const Stage2Grid& v) {
  Json colors = Json::array();
  for (Color c : v.colors) colors.push_back(to_string(c));
  j = Json{{"colors", colors},
           {"heights", v.heights},
           {"counts", v.counts},
           {"superpixel_width", v.superpixel_width},
           {"index_span", v.index_span},
           {"power_min", v.power_min},
           {"power_max", v.power_max},
           {"symmetric", v.symmetric},
           {"budget", v.budget},
           {"initial_samples", v.initial_samples},
           {"refine_window", v.refine_window},
           {"sign_variants", v.sign_variants},
           {"max_survivors", v.max_survivors}};
}

void from_json(const Json& j, Stage2Grid& v) {
  check_keys(j,
             {"colors", "heights", "counts", "superpixel_width", "index_span", "power_min", "power_max",
              "symmetric", "budget", "initial_samples", "refine_window", "sign_variants", "max_survivors"},
             "stage2");
  if (auto it = j.find("colors"); it != j.end()) {
    v.colors.clear();
    for (const auto& c : *it) v.colors.push_back(color_from_string(c.get<std::string>()));
  }
  get_opt(j, "heights", v.heights);
  get_opt(j, "counts", v.counts);
  get_opt(j, "superpixel_width", v.superpixel_width);
  get_opt(j, "index_span", v.index_span);
  get_opt(j, "power_min", v.power_min);
  get_opt(j, "power_max", v.power_max);
  get_opt(j, "symmetric", v.symmetric);
  get_opt(j, "budget", v.budget);
  get_opt(j, "initial_samples", v.initial_samples);
  get_opt(j, "refine_window", v.refine_window);
  get_opt(j, "sign_variants", v.sign_variants);
  get_opt(j, "max_survivors", v.max_survivors);
}

void to_json(Json& j, const Thresholds& v) {
  j = Json{{"max_error", v.max_error}, {"max_time_ms", v.max_time_ms}};
}

void from_json(const Json& j, Thresholds& v) {
  check_keys(j, {"max_error", "max_time_ms"}, "thresholds");
  get_opt(j, "max_error", v.max_error);
  get_opt(j, "max_time_ms", v.max_time_ms);
}

void to_json(Json& j, const PipelineConfig& v) {
  j = Json{{"lattice", v.lattice},
           {"hubbard", v.params},
           {"problem", v.problem},
           {"optics", {{"blue", v.blue}, {"red", v.red}}},
           {"stage1", v.stage1},
           {"stage2", v.stage2},
           {"thresholds", v.thresholds},
           {"output_dir", v.output_dir},
           {"seed", v.seed},
           {"trace_steps", v.trace_steps}};
}

void from_json(const Json& j, PipelineConfig& v) {
  check_keys(j,
             {"lattice", "hubbard", "problem", "optics", "stage1", "stage2", "thresholds", "output_dir", "seed",
              "threads", "trace_steps", "$schema", "description"},
             "config");
  get_opt(j, "lattice", v.lattice);
  get_opt(j, "hubbard", v.params);
  if (auto it = j.find("problem"); it != j.end()) {
    TransferProblem p;
    it->get_to(p);
    v.problem = p;
  }
  if (auto it = j.find("optics"); it != j.end()) {
    check_keys(*it, {"blue", "red"}, "optics");
    get_opt(*it, "blue", v.blue);
    get_opt(*it, "red", v.red);
  }
  get_opt(j, "stage1", v.stage1);
  get_opt(j, "stage2", v.stage2);
  get_opt(j, "thresholds", v.thresholds);
  get_opt(j, "output_dir", v.output_dir);
  get_opt(j, "seed", v.seed);
  get_opt(j, "threads", v.threads);
  get_opt(j, "trace_steps", v.trace_steps);
}

// ---- results ---------------------------------------------------------------

void to_json(Json& j, const BiasVector& v) { j = v.values(); }
void from_json(const Json& j, BiasVector& v) { v = BiasVector(j.get<std::vector<double>>()); }

void to_json(Json& j, const DMDPattern& v) {
  j = Json{{"width", v.width}, {"height", v.height}, {"indices", v.indices}, {"symmetric", v.symmetric}};
}

void from_json(const Json& j, DMDPattern& v) {
  j.at("width").get_to(v.width);
  j.at("height").get_to(v.height);
  j.at("indices").get_to(v.indices);
  j.at("symmetric").get_to(v.symmetric);
}

void to_json(Json& j, const CandidateController& v) {
  j = Json{{"biases", v.biases},
           {"transfer_time", v.transfer_time},
           {"error", v.error},
           {"restart", v.restart},
           {"iterations", v.iterations},
           {"converged", v.converged},
           {"projected_gradient", v.projected_gradient}};
}

void from_json(const Json& j, CandidateController& v) {
  j.at("biases").get_to(v.biases);
  j.at("transfer_time").get_to(v.transfer_time);
  j.at("error").get_to(v.error);
  get_opt(j, "restart", v.restart);
  get_opt(j, "iterations", v.iterations);
  get_opt(j, "converged", v.converged);
  get_opt(j, "projected_gradient", v.projected_gradient);
}

void to_json(Json& j, const DMDSolution& v) {
  j = Json{{"pattern", v.pattern},
           {"power", v.power},
           {"color", to_string(v.color)},
           {"target_delta", v.target},
           {"achieved_delta", v.achieved},
           {"objective", v.objective},
           {"evaluations", v.evaluations},
           {"e_min", v.e_min},
           {"t_min", v.t_min},
           {"t_min_ms", v.t_min_ms},
           {"accepted", v.accepted},
           {"singular", v.singular}};
}

void from_json(const Json& j, DMDSolution& v) {
  j.at("pattern").get_to(v.pattern);
  j.at("power").get_to(v.power);
  v.color = color_from_string(j.at("color").get<std::string>());
  j.at("target_delta").get_to(v.target);
  j.at("achieved_delta").get_to(v.achieved);
  j.at("objective").get_to(v.objective);
  get_opt(j, "evaluations", v.evaluations);
  j.at("e_min").get_to(v.e_min);
  j.at("t_min").get_to(v.t_min);
  j.at("t_min_ms").get_to(v.t_min_ms);
  j.at("accepted").get_to(v.accepted);
  get_opt(j, "singular", v.singular);
}

void to_json(Json& j, const SensitivityRecord& v) {
  j = Json{{"xi", v.xi},
           {"drift_x_per_a", v.drift_x},
           {"drift_p_per_er", v.drift_p},
           {"s_x_per_a", v.s_x},
           {"s_p_per_er", v.s_p},
           {"min_gap", v.min_gap},
           {"e", v.error},
           {"T", v.time}};
}

void from_json(const Json& j, SensitivityRecord& v) {
  j.at("xi").get_to(v.xi);
  j.at("drift_x_per_a").get_to(v.drift_x);
  j.at("drift_p_per_er").get_to(v.drift_p);
  j.at("s_x_per_a").get_to(v.s_x);
  j.at("s_p_per_er").get_to(v.s_p);
  j.at("min_gap").get_to(v.min_gap);
  j.at("e").get_to(v.error);
  j.at("T").get_to(v.time);
}

void to_json(Json& j, const ControllerRecord& v) {
  j = Json{{"id", v.id},
           {"color", to_string(v.color)},
           {"survivor", v.survivor},
           {"sign_variant", v.sign_variant},
           {"height", v.height},
           {"count", v.count},
           {"seed", v.seed},
           {"accepted", v.accepted},
           {"solution", v.solution},
           {"sensitivity", v.sensitivity ? Json(*v.sensitivity) : Json(nullptr)}};
}

void from_json(const Json& j, ControllerRecord& v) {
  j.at("id").get_to(v.id);
  v.color = color_from_string(j.at("color").get<std::string>());
  j.at("survivor").get_to(v.survivor);
  j.at("sign_variant").get_to(v.sign_variant);
  j.at("height").get_to(v.height);
  j.at("count").get_to(v.count);
  j.at("seed").get_to(v.seed);
  j.at("accepted").get_to(v.accepted);
  j.at("solution").get_to(v.solution);
  if (const auto& s = j.at("sensitivity"); !s.is_null()) {
    v.sensitivity = s.get<SensitivityRecord>();
  } else {
    v.sensitivity.reset();
  }
}

void to_json(Json& j, const RunProvenance& v) {
  j = Json{{"config_hash", v.config_hash},
           {"seed", v.seed},
           {"started_utc", v.started_utc},
           {"finished_utc", v.finished_utc},
           {"version", v.version}};
}

void from_json(const Json& j, RunProvenance& v) {
  j.at("config_hash").get_to(v.config_hash);
  j.at("seed").get_to(v.seed);
  get_opt(j, "started_utc", v.started_utc);
  get_opt(j, "finished_utc", v.finished_utc);
  get_opt(j, "version", v.version);
}

void to_json(Json& j, const ControllerDatabase& v) {
  j = Json{{"format", "elc-controllers/1"},
           {"provenance", v.provenance},
           {"config", v.config},
           {"stage1", {{"restarts", v.stage1_restarts}, {"survivors", v.survivors}}},
           {"stage2_runs", v.stage2_runs},
           {"duplicates", v.duplicates},
           {"records", v.records},
           {"diagnostics", v.diagnostics}};
}

void from_json(const Json& j, ControllerDatabase& v) {
  if (j.value("format", std::string{}) != "elc-controllers/1") {
    throw ValidationError("not a controller database (missing format tag)");
  }
  j.at("provenance").get_to(v.provenance);
  j.at("config").get_to(v.config);
  j.at("stage1").at("restarts").get_to(v.stage1_restarts);
  j.at("stage1").at("survivors").get_to(v.survivors);
  j.at("stage2_runs").get_to(v.stage2_runs);
  get_opt(j, "duplicates", v.duplicates);
  j.at("records").get_to(v.records);
  get_opt(j, "diagnostics", v.diagnostics);
}

// ---- files -----------------------------------------------------------------

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig config;
  try {
    Json::parse(text).get_to(config);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed configuration: ") + e.what());
  }
  config.validate();
  return config;
}

PipelineConfig load_config(const std::filesystem::path& path) { return parse_config(read_text(path)); }

ControllerDatabase load_database(const std::filesystem::path& path) {
  ControllerDatabase db;
  try {
    Json::parse(read_text(path)).get_to(db);
  } catch (const Json::exception& e) {
    throw ValidationError("malformed controller database " + path.string() + ": " + e.what());
  }
  if (config_hash(db.config) != db.provenance.config_hash) {
    throw ValidationError("controller database config hash does not match its stored config");
  }
  return db;
}

void save_database(const ControllerDatabase& db, const std::filesystem::path& path) {
  write_text(path, dump(Json(db)));
}

}  // namespace elc
