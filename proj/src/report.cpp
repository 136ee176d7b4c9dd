#include "report.hpp"

#include <cmath>
#include <cstdio>
#include <type_traits>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace seqcombine::report {

namespace {

// Runs a JSON accessor and converts library exceptions into SchemaError.
template <class F>
auto schema(const std::string& what, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaError, what + ": " + e.what());
  } catch (const Error& e) {
    fail(ErrorCode::SchemaError, what + ": " + e.what());
  }
}

void check_header(const json& j, const char* format) {
  if (!j.is_object() || j.value("format", "") != format)
    fail(ErrorCode::SchemaError, std::string("expected a '") + format + "' document");
  if (j.value("version", 0) != kReportVersion)
    fail(ErrorCode::SchemaError, std::string(format) + ": unsupported version");
}

}  // namespace

json matrix_to_json(const matrix::SymMatrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.dim(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < m.dim(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

matrix::SymMatrix matrix_from_json(const json& j) {
  return schema("matrix", [&] {
    const std::size_t k = j.size();
    std::vector<double> flat;
    for (const auto& row : j) {
      if (row.size() != k) fail(ErrorCode::SchemaError, "matrix rows must have equal length");
      for (const auto& v : row) flat.push_back(v.get<double>());
    }
    return matrix::SymMatrix::from_rows(flat, k);
  });
}

json to_json(const mcsim::SimReport& r) {
  json tests = json::array();
  for (const auto& s : r.tests) {
    json t = config::test_to_json(s.test);
    t["reps"] = s.reps;
    t["rejections"] = s.rejections;
    t["flagged"] = s.flagged;
    t["rate"] = s.rate;
    t["mc_se"] = s.mc_se;
    t["avg_analyses"] = s.avg_analyses;
    if (s.standardized_cov) t["standardized_cov"] = matrix_to_json(*s.standardized_cov);
    tests.push_back(t);
  }
  return json{{"scenario", r.scenario},
              {"spec", config::scenario_to_json(r.spec)},
              {"seed", r.seed},
              {"reps", r.reps},
              {"mode", config::to_string(r.mode)},
              {"tests", tests}};
}

mcsim::SimReport sim_report_from_json(const json& j) {
  return schema("report", [&] {
    mcsim::SimReport r;
    r.scenario = j.at("scenario").get<std::string>();
    r.spec = config::scenario_from_json(j.at("spec"), "spec");
    r.seed = j.at("seed").get<std::uint64_t>();
    r.reps = j.at("reps").get<std::size_t>();
    r.mode = config::parse_run_mode(j.at("mode").get<std::string>());
    for (const auto& t : j.at("tests")) {
      mcsim::TestSummary s;
      s.test.family = mcsim::parse_test_family(t.at("family").get<std::string>());
      if (t.contains("t_delay")) s.test.t_delay = t.at("t_delay").get<double>();
      s.reps = t.at("reps").get<std::size_t>();
      s.rejections = t.at("rejections").get<std::size_t>();
      s.flagged = t.at("flagged").get<std::size_t>();
      s.rate = t.at("rate").get<double>();
      s.mc_se = t.at("mc_se").get<double>();
      s.avg_analyses = t.at("avg_analyses").get<double>();
      if (t.contains("standardized_cov")) s.standardized_cov = matrix_from_json(t.at("standardized_cov"));
      r.tests.push_back(std::move(s));
    }
    return r;
  });
}

json to_json(const StudyDocument& doc) {
  json studies = json::array();
  for (const auto& s : doc.studies) studies.push_back(to_json(s));
  return json{{"format", "seqcombine-report"},
              {"version", kReportVersion},
              {"config", config::to_json(doc.config)},
              {"studies", studies}};
}

StudyDocument study_from_json(const json& j) {
  check_header(j, "seqcombine-report");
  StudyDocument doc;
  doc.config = schema("config", [&] { return config::from_json(j.at("config")); });
  for (const auto& s : schema("studies", [&] { return j.at("studies"); })) doc.studies.push_back(sim_report_from_json(s));
  return doc;
}

std::string format_number(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string results_csv(const std::vector<mcsim::SimReport>& studies) {
  std::ostringstream os;
  os << "scenario,test,t_delay,method,reps,rejections,flagged,rate,mc_se,avg_analyses\n";
  for (const auto& r : studies)
    for (const auto& s : r.tests) {
      os << r.scenario << ',' << s.test.name() << ',' << (s.test.t_delay ? format_number(*s.test.t_delay, 4) : "")
         << ',' << boundaries::to_string(s.test.method()) << ',' << s.reps << ',' << s.rejections << ','
         << s.flagged << ',' << format_number(s.rate) << ',' << format_number(s.mc_se) << ','
         << format_number(s.avg_analyses) << '\n';
    }
  return os.str();
}

std::string standardized_cov_csv(const std::vector<mcsim::SimReport>& studies) {
  std::ostringstream os;
  os << "scenario,test,row,col,value\n";
  for (const auto& r : studies)
    for (const auto& s : r.tests) {
      if (!s.standardized_cov) continue;
      const auto& m = *s.standardized_cov;
      for (std::size_t a = 0; a < m.dim(); ++a)
        for (std::size_t b = 0; b < m.dim(); ++b)
          os << r.scenario << ',' << s.test.name() << ',' << a + 1 << ',' << b + 1 << ',' << format_number(m(a, b))
             << '\n';
    }
  return os.str();
}

json to_json(const boundaries::BoundarySchedule& s) {
  json steps = json::array();
  for (std::size_t i = 0; i < s.steps.size(); ++i) {
    const auto& st = s.steps[i];
    steps.push_back(json{{"look", i + 1},
                         {"c", st.c},
                         {"target", st.target},
                         {"crossing", st.crossing},
                         {"error", st.error},
                         {"spend_too_small", st.spend_too_small}});
  }
  return json{{"format", "seqcombine-boundaries"},
              {"version", kReportVersion},
              {"method", boundaries::to_string(s.method)},
              {"seed", s.seed},
              {"critical_values", s.critical_values()},
              {"cumulative_crossing", s.cumulative()},
              {"steps", steps}};
}

boundaries::BoundarySchedule schedule_from_json(const json& j) {
  check_header(j, "seqcombine-boundaries");
  return schema("boundaries", [&] {
    boundaries::BoundarySchedule s;
    s.method = boundaries::parse_method(j.at("method").get<std::string>());
    s.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& st : j.at("steps")) {
      boundaries::BoundaryStep b;
      b.c = st.at("c").get<double>();
      b.target = st.at("target").get<double>();
      b.crossing = st.at("crossing").get<double>();
      b.error = st.at("error").get<double>();
      b.spend_too_small = st.at("spend_too_small").get<bool>();
      s.steps.push_back(b);
    }
    return s;
  });
}

matrix::SymMatrix parse_matrix_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<double> flat;
  std::size_t rows = 0, cols = 0, line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    std::istringstream cells(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(cells, cell, ',')) {
      std::size_t used = 0;
      double x = 0.0;
      try {
        x = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || cell.find_first_not_of(" \t", used) != std::string::npos || !std::isfinite(x))
        fail(ErrorCode::SchemaError, "matrix line " + std::to_string(line_no) + ": not a number '" + cell + "'");
      flat.push_back(x);
      ++count;
    }
    if (rows == 0) cols = count;
    if (count != cols) fail(ErrorCode::SchemaError, "matrix line " + std::to_string(line_no) + ": ragged row");
    ++rows;
  }
  if (rows == 0) fail(ErrorCode::SchemaError, "matrix is empty");
  if (rows != cols) fail(ErrorCode::SchemaError, "matrix must be square");
  try {
    return matrix::SymMatrix::from_rows(flat, rows);
  } catch (const Error& e) {
    fail(ErrorCode::SchemaError, std::string("matrix: ") + e.what());
  }
}

json boundaries_command(const matrix::SymMatrix& cov, const json& plan_json, std::optional<std::uint64_t> seed) {
  boundaries::SpendingPlan plan;
  std::string method = "auto";
  std::uint64_t solver_seed = 0;
  std::size_t grid = boundaries::kDefaultGridPoints, shifts = boundaries::kDefaultShifts,
              points = boundaries::kDefaultPoints;
  {
    json rest = plan_json;
    if (!rest.is_object()) fail(ErrorCode::ConfigInvalid, "plan: expected an object");
    auto take = [&](const char* key, auto& target) {
      if (!rest.contains(key)) return;
      try {
        target = rest.at(key).get<std::decay_t<decltype(target)>>();
      } catch (const json::exception&) {
        fail(ErrorCode::ConfigInvalid, std::string("plan.") + key + ": wrong type");
      }
      rest.erase(key);
    };
    take("method", method);
    take("seed", solver_seed);
    take("grid_points", grid);
    take("qmc_shifts", shifts);
    take("qmc_points", points);
    plan = config::plan_from_json(rest, "plan");
  }
  if (seed) solver_seed = *seed;
  if (plan.looks() != cov.dim())
    fail(ErrorCode::ConfigInvalid, "plan.cumulative: needs one entry per covariance row");
  if (method != "auto" && method != "indinc" && method != "mvn")
    fail(ErrorCode::ConfigInvalid, "plan.method: must be auto, indinc or mvn");
  if (grid < 5 || grid % 2 == 0) fail(ErrorCode::ConfigInvalid, "plan.grid_points: must be odd and at least 5");
  if (shifts < 2) fail(ErrorCode::ConfigInvalid, "plan.qmc_shifts: must be at least 2");
  if (points < 1) fail(ErrorCode::ConfigInvalid, "plan.qmc_points: must be at least 1");

  matrix::chol_decompose(cov);  // NotPositiveDefinite
  if (method == "auto") method = boundaries::has_independent_increments(cov) ? "indinc" : "mvn";
  boundaries::BoundarySchedule schedule;
  if (method == "indinc") {
    if (!boundaries::has_independent_increments(cov))
      fail(ErrorCode::ConfigInvalid, "plan.method: indinc needs a covariance with independent increments");
    std::vector<double> v;
    for (std::size_t j = 0; j < cov.dim(); ++j) v.push_back(cov(j, j));
    schedule = boundaries::indinc_boundaries(v, plan, 0, grid);
  } else {
    schedule = boundaries::mvn_boundaries(boundaries::correlation(cov), plan, 0, solver_seed, shifts, points);
  }
  json out = to_json(schedule);
  json planned = json::array();
  for (std::size_t j = 1; j <= plan.looks(); ++j) planned.push_back(plan.cumulative_alpha(j));
  out["planned_cumulative"] = planned;
  out["achieved_total"] = schedule.cumulative().empty() ? 0.0 : schedule.cumulative().back();
  return out;
}

void write_file(const std::string& path, const std::string& contents) {
  const std::filesystem::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write '" + path + "'");
  out << contents;
  if (!out) fail(ErrorCode::IoError, "write failed for '" + path + "'");
}

}  // namespace seqcombine::report
