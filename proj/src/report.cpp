#include <cmath>
#include <cstdio>
#include <sstream>

#include "elc/errors.hpp"
#include "elc/io.hpp"
#include "elc/pipeline.hpp"
#include "svg.hpp"

namespace elc {

namespace {

constexpr double kCancellation = 1e-9;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trace_csv(const FidelityTrace& trace, double seconds_per_unit) {
  std::ostringstream out;
  out << "t,t_ms,e\n";
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    out << fmt(trace.times[i]) << ',' << fmt(trace.times[i] * seconds_per_unit * 1e3) << ',' << fmt(trace.errors[i])
        << '\n';
  }
  return out.str();
}

std::string trace_svg(const ControllerRecord& r, const FidelityTrace& trace, double seconds_per_unit) {
  std::vector<double> ts;
  for (double t : trace.times) ts.push_back(t * seconds_per_unit * 1e3);
  svg::Axis ax{ts.front(), ts.back(), false};
  svg::Axis ay{0.0, 1.0, false};
  const svg::Panel panel(70, 30, 560, 300, ax, ay);
  std::ostringstream out;
  out << svg::header(660, 380);
  out << "<text x=\"350\" y=\"18\" font-size=\"13\" text-anchor=\"middle\">" << r.id << " (" << to_string(r.color)
      << ")</text>\n";
  panel.frame(out, "t (ms)", "fidelity error e");
  out << "<polyline fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1\" points=\"";
  for (std::size_t i = 0; i < ts.size(); ++i) {
    out << svg::num(panel.px(ts[i])) << ',' << svg::num(panel.py(trace.errors[i])) << ' ';
  }
  out << "\"/>\n";
  const double tm = trace.t_min * seconds_per_unit * 1e3;
  out << "<circle id=\"argmin\" data-t-ms=\"" << fmt(tm) << "\" data-e=\"" << fmt(trace.e_min) << "\" cx=\""
      << svg::num(panel.px(tm)) << "\" cy=\"" << svg::num(panel.py(trace.e_min))
      << "\" r=\"5\" fill=\"none\" stroke=\"#c00\" stroke-width=\"2\"/>\n";
  out << "<text x=\"" << svg::num(panel.px(tm) + 8) << "\" y=\"" << svg::num(panel.py(trace.e_min) - 8)
      << "\" font-size=\"11\" fill=\"#c00\">e=" << svg::num(trace.e_min) << " at " << svg::num(tm) << " ms</text>\n";
  out << "</svg>\n";
  return out.str();
}

std::string scatter_csv(const std::vector<ScatterPoint>& pts) {
  std::ostringstream out;
  out << "id,color,min_gap,e,T_ms,abs_s_x,abs_s_p\n";
  for (const auto& p : pts) {
    out << p.id << ',' << to_string(p.color) << ',' << fmt(p.min_gap) << ',' << fmt(p.error) << ','
        << fmt(p.time_ms) << ',' << fmt(p.abs_s_x) << ',' << fmt(p.abs_s_p) << '\n';
  }
  return out.str();
}

std::string scatter_svg(const std::vector<ScatterPoint>& pts, bool x_drift) {
  const std::string ylabel = x_drift ? "|de/dx| (1/a)" : "|de/dp| (1/E_R)";
  std::vector<double> ys;
  for (const auto& p : pts) ys.push_back(x_drift ? p.abs_s_x : p.abs_s_p);
  const svg::Axis ay = svg::fit_axis(ys, true);
  struct Col {
    const char* label;
    double ScatterPoint::*field;
    bool log;
  };
  const Col cols[3] = {{"min ||Delta|-1|", &ScatterPoint::min_gap, true},
                       {"fidelity error e", &ScatterPoint::error, true},
                       {"T (ms)", &ScatterPoint::time_ms, false}};
  std::ostringstream out;
  out << svg::header(1140, 360);
  out << "<text x=\"570\" y=\"18\" font-size=\"13\" text-anchor=\"middle\">" << (x_drift ? "lattice x-drift" : "projection power drift")
      << " sensitivity; filled = blue-detuned, open = red-detuned</text>\n";
  for (int c = 0; c < 3; ++c) {
    std::vector<double> xs;
    for (const auto& p : pts) xs.push_back(p.*(cols[c].field));
    const svg::Panel panel(80 + c * 370, 40, 300, 260, svg::fit_axis(xs, cols[c].log), ay);
    panel.frame(out, cols[c].label, ylabel);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (!(ys[i] > 0.0) && ay.log) continue;
      const bool blue = pts[i].color == Color::Blue;
      out << "<circle cx=\"" << svg::num(panel.px(xs[i])) << "\" cy=\"" << svg::num(panel.py(ys[i]))
          << "\" r=\"4\" fill=\"" << (blue ? "#1f4e9c" : "none") << "\" stroke=\"" << (blue ? "#1f4e9c" : "#c0392b")
          << "\" stroke-width=\"1.5\"><title>" << pts[i].id << "</title></circle>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

std::string table_csv(const CorrelationTable& t) {
  std::ostringstream out;
  out << "quantity";
  for (const char* c : CorrelationTable::kColumns) out << ',' << c;
  out << '\n';
  if (t.samples >= 3) {
    for (std::size_t r = 0; r < 3; ++r) {
      out << CorrelationTable::kRows[r];
      for (std::size_t c = 0; c < 4; ++c) {
        out << ',';
        if (t.values[r][c]) {
          out << fmt(*t.values[r][c]);
        } else {
          out << "undefined";
        }
      }
      out << '\n';
    }
  }
  for (const auto& w : t.warnings) out << "warning," << w << ",,,\n";
  return out.str();
}

Json table_json(const CorrelationTable& t) {
  Json j = Json::object();
  j["samples"] = t.samples;
  if (t.samples >= 3) {
    for (std::size_t r = 0; r < 3; ++r) {
      Json row = Json::object();
      for (std::size_t c = 0; c < 4; ++c) {
        row[CorrelationTable::kColumns[c]] = t.values[r][c] ? Json(*t.values[r][c]) : Json(nullptr);
      }
      j[CorrelationTable::kRows[r]] = row;
    }
  }
  j["warnings"] = t.warnings;
  return j;
}

}  // namespace

std::vector<ScatterPoint> scatter_points(const ControllerDatabase& db) {
  std::vector<ScatterPoint> out;
  for (const auto& r : db.records) {
    if (!r.accepted || !r.sensitivity) continue;
    const auto& s = *r.sensitivity;
    ScatterPoint p;
    p.id = r.id;
    p.color = r.color;
    p.min_gap = s.min_gap;
    p.error = s.error;
    p.time_ms = r.solution.t_min_ms;
    p.abs_s_x = std::abs(s.s_x);
    p.abs_s_p = std::abs(s.s_p);
    for (std::size_t j = 0; j < s.xi.size() && j < s.drift_x.size(); ++j) p.x_terms += std::abs(s.xi[j] * s.drift_x[j]);
    out.push_back(std::move(p));
  }
  return out;
}

CorrelationTable correlation_table(const std::vector<ScatterPoint>& points) {
  CorrelationTable t;
  t.samples = points.size();
  if (points.size() < 3) {
    t.warnings.push_back("fewer than 3 accepted controllers with sensitivities; correlations omitted");
    return t;
  }
  std::vector<double> gap, time, err, sx, sp;
  bool x_cancels = true;
  for (const auto& p : points) {
    gap.push_back(p.min_gap);
    time.push_back(p.time_ms);
    err.push_back(p.error);
    sx.push_back(p.abs_s_x);
    sp.push_back(p.abs_s_p);
    x_cancels = x_cancels && p.abs_s_x <= kCancellation * p.x_terms;
  }
  const std::vector<double>* rows[3] = {&gap, &time, &err};
  for (std::size_t r = 0; r < 3; ++r) {
    for (int drift = 0; drift < 2; ++drift) {
      if (drift == 0 && x_cancels) continue;
      try {
        const Correlation c = correlations(*rows[r], drift == 0 ? sx : sp);
        t.values[r][2 * drift] = c.pearson;
        t.values[r][2 * drift + 1] = c.spearman;
      } catch (const DomainError&) {
        t.warnings.push_back(std::string("zero variance for ") + CorrelationTable::kRows[r] + " vs " +
                             (drift == 0 ? "|s_x|" : "|s_p|"));
      }
    }
  }
  if (x_cancels) {
    t.warnings.push_back(
        "x-drift sensitivity cancels to rounding level for every controller (mirror-symmetric pattern and chain); "
        "x columns undefined");
  }
  return t;
}

ReportResult emit_report(const ControllerDatabase& db, const std::filesystem::path& outdir) {
  ReportResult res;
  const PipelineConfig& cfg = db.config;
  const double spu = cfg.seconds_per_unit();
  auto put = [&](const std::filesystem::path& rel, const std::string& text) {
    write_text(outdir / rel, text);
    res.files.push_back(rel);
  };

  std::size_t accepted_blue = 0;
  std::size_t accepted_red = 0;
  for (const auto& r : db.records) {
    if (!r.accepted) continue;
    (r.color == Color::Blue ? accepted_blue : accepted_red)++;
    const FidelityTrace trace =
        fidelity_trace(r.solution.achieved, cfg.problem, cfg.params, cfg.time_limit(), cfg.trace_steps);
    put(std::filesystem::path("traces") / (r.id + ".csv"), trace_csv(trace, spu));
    put(std::filesystem::path("traces") / (r.id + ".svg"), trace_svg(r, trace, spu));
  }

  const auto pts = scatter_points(db);
  if (pts.empty()) res.warnings.push_back("no accepted controllers with sensitivities; scatter files are empty");
  put("scatter_x.csv", scatter_csv(pts));
  put("scatter_p.csv", scatter_csv(pts));
  put("scatter_x.svg", scatter_svg(pts, true));
  put("scatter_p.svg", scatter_svg(pts, false));

  const CorrelationTable table = correlation_table(pts);
  put("table1.csv", table_csv(table));
  for (const auto& w : table.warnings) res.warnings.push_back(w);

  Json summary = {
      {"config_hash", db.provenance.config_hash},
      {"seed", db.provenance.seed},
      {"version", db.provenance.version},
      {"started_utc", db.provenance.started_utc},
      {"finished_utc", db.provenance.finished_utc},
      {"time_unit_ms", spu * 1e3},
      {"stage1", {{"restarts", db.stage1_restarts}, {"survivors", db.survivors.size()}}},
      {"stage2", {{"runs", db.stage2_runs}, {"records", db.records.size()}, {"duplicates", db.duplicates}}},
      {"accepted", {{"total", accepted_blue + accepted_red}, {"blue", accepted_blue}, {"red", accepted_red}}},
      {"thresholds", cfg.thresholds},
      {"correlations", table_json(table)},
      {"diagnostics", db.diagnostics},
      {"warnings", res.warnings},
  };
  const ControllerRecord* best = nullptr;
  for (const auto& r : db.records) {
    if (r.accepted && (!best || r.solution.e_min < best->solution.e_min)) best = &r;
  }
  if (best) {
    summary["best"] = {{"id", best->id},
                       {"color", to_string(best->color)},
                       {"e", best->solution.e_min},
                       {"t_ms", best->solution.t_min_ms},
                       {"achieved_delta", best->solution.achieved}};
  } else {
    summary["best"] = nullptr;
  }
  Json files = Json::array();
  for (const auto& f : res.files) files.push_back(f.generic_string());
  files.push_back("summary.json");
  summary["files"] = files;
  put("summary.json", dump(summary));
  return res;
}

}  // namespace elc
