#include "analyze.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "config.hpp"
#include "error.hpp"

namespace seqcombine::analyze {

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_real(const std::string& cell, std::size_t line, const char* column) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != cell.size() || cell.empty())
    fail(ErrorCode::SchemaError, "line " + std::to_string(line) + ": " + column + " is not a number: '" + cell + "'");
  return x;
}

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t word) {
  for (int i = 0; i < 8; ++i) {
    h ^= (word >> (8 * i)) & 0xff;
    h *= 0x100000001b3ULL;
  }
  return h;
}

[[noreturn]] void mismatch(const std::string& why) { fail(ErrorCode::StateMismatch, why); }

}  // namespace

std::vector<survdata::Subject> parse_dataset(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  std::vector<survdata::Subject> out;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto cells = split(line);
    if (!header) {
      if (cells != std::vector<std::string>{"entry_time", "event_time", "arm"})
        fail(ErrorCode::SchemaError, "dataset header must be 'entry_time,event_time,arm'");
      header = true;
      continue;
    }
    if (cells.size() != 3)
      fail(ErrorCode::SchemaError, "line " + std::to_string(line_no) + ": expected 3 columns");
    survdata::Subject s;
    s.entry = parse_real(cells[0], line_no, "entry_time");
    std::string ev = cells[1];
    std::transform(ev.begin(), ev.end(), ev.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ev.empty() || ev == "inf" || ev == "+inf" || ev == "infinity" || ev == "na") {
      s.event = std::numeric_limits<double>::infinity();
    } else {
      s.event = parse_real(cells[1], line_no, "event_time");
    }
    if (cells[2] == "0") {
      s.arm = 0;
    } else if (cells[2] == "1") {
      s.arm = 1;
    } else {
      fail(ErrorCode::SchemaError, "line " + std::to_string(line_no) + ": arm must be 0 or 1");
    }
    if (!std::isfinite(s.entry) || s.entry < 0.0)
      fail(ErrorCode::SchemaError, "line " + std::to_string(line_no) + ": entry_time must be finite and >= 0");
    if (!(s.event >= 0.0))
      fail(ErrorCode::SchemaError, "line " + std::to_string(line_no) + ": event_time must be >= 0");
    out.push_back(s);
  }
  if (!header) fail(ErrorCode::SchemaError, "dataset is missing the header 'entry_time,event_time,arm'");
  return out;
}

std::vector<survdata::Subject> read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open dataset '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return parse_dataset(os.str());
}

std::string data_digest(const survdata::InterimView& view) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, view.size());
  for (const auto& r : view.records()) {
    h = fnv1a(h, std::bit_cast<std::uint64_t>(r.followup));
    h = fnv1a(h, std::bit_cast<std::uint64_t>(r.entry));
    h = fnv1a(h, (static_cast<std::uint64_t>(r.arm) << 1) | (r.event ? 1u : 0u));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json to_json(const AnalysisState& s) {
  json looks = json::array();
  for (const auto& l : s.looks)
    looks.push_back(json{{"look", l.look},
                         {"t", l.t},
                         {"enrolled", l.enrolled},
                         {"events", l.events},
                         {"digest", l.digest},
                         {"decision", l.decision},
                         {"statistic", l.statistic},
                         {"z", l.z},
                         {"boundary", l.boundary},
                         {"cov_row", l.cov_row},
                         {"direction", l.direction}});
  return json{{"format", "seqcombine-analysis-state"},
              {"version", kStateVersion},
              {"test", config::test_to_json(s.test)},
              {"design", config::design_to_json(s.design)},
              {"seed", s.seed},
              {"looks", looks}};
}

AnalysisState state_from_json(const json& j) {
  if (!j.is_object() || j.value("format", "") != "seqcombine-analysis-state")
    fail(ErrorCode::SchemaError, "not an analysis state file");
  if (j.value("version", 0) != kStateVersion) fail(ErrorCode::SchemaError, "unsupported state file version");
  try {
    AnalysisState s;
    s.test = config::test_from_json(j.at("test"), std::nullopt, "test");
    s.design = config::design_from_json(j.at("design"), "design");
    s.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& l : j.at("looks")) {
      LookResult r;
      r.look = l.at("look").get<std::size_t>();
      r.t = l.at("t").get<double>();
      r.enrolled = l.at("enrolled").get<std::size_t>();
      r.events = l.at("events").get<std::size_t>();
      r.digest = l.at("digest").get<std::string>();
      r.decision = l.at("decision").get<std::string>();
      r.statistic = l.at("statistic").get<double>();
      r.z = l.at("z").get<double>();
      r.boundary = l.at("boundary").get<double>();
      r.cov_row = l.at("cov_row").get<std::vector<double>>();
      r.direction = l.at("direction").get<std::vector<double>>();
      s.looks.push_back(std::move(r));
    }
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaError, std::string("state file: ") + e.what());
  } catch (const Error& e) {
    fail(ErrorCode::SchemaError, std::string("state file: ") + e.what());
  }
}

AnalysisState run(const std::vector<survdata::Subject>& subjects, const mcsim::Design& design,
                  const mcsim::TestSpec& test, std::size_t look, std::uint64_t seed, const AnalysisState* previous) {
  design.validate();
  test.validate();
  if (look < 1 || look > design.looks())
    fail(ErrorCode::InvalidSpec, "look must lie in 1.." + std::to_string(design.looks()));
  if (previous) {
    if (!(previous->test == test)) mismatch("state file was written for test " + previous->test.name());
    if (!(previous->design == design)) mismatch("state file was written for a different design");
    if (previous->seed != seed) mismatch("state file was written with seed " + std::to_string(previous->seed));
  }

  AnalysisState state;
  state.test = test;
  state.design = design;
  state.seed = seed;

  const std::vector<mcsim::TestSpec> tests{test};
  mcsim::TestMonitor monitor(test, design, mcsim::solver_seed(seed, 0, test), mcsim::RunMode::Monitor);
  mcsim::SharedLooks shared(design, tests);
  const auto family = test.family;
  const bool wilcoxon_based = family != mcsim::TestFamily::Logrank && family != mcsim::TestFamily::Rmst &&
                              family != mcsim::TestFamily::RmstI && family != mcsim::TestFamily::RmstII &&
                              family != mcsim::TestFamily::RmstIII;
  const bool rmst_based = family == mcsim::TestFamily::Rmst || family == mcsim::TestFamily::RmstI ||
                          family == mcsim::TestFamily::RmstII || family == mcsim::TestFamily::RmstIII;

  for (std::size_t j = 0; j < look; ++j) {
    const auto view = survdata::interim_view(subjects, design.analysis_times[j]);
    LookResult r;
    r.look = j + 1;
    r.t = design.analysis_times[j];
    r.enrolled = view.size();
    r.events = view.events();
    r.digest = data_digest(view);
    if (previous && j < previous->looks.size() && previous->looks[j].digest != r.digest)
      mismatch("data at look " + std::to_string(j + 1) + " differ from the data recorded in the state file");

    if (monitor.done()) {
      r.decision = "stopped";
    } else {
      shared.add_look(view, wilcoxon_based, family == mcsim::TestFamily::Logrank, rmst_based);
      monitor.observe(j, shared);
      const auto& outcome = monitor.outcome();
      if (outcome.flagged) fail(outcome.error_code.value_or(ErrorCode::InsufficientData), outcome.error);
      const mcsim::LookRecord& rec = outcome.looks.at(j);
      r.statistic = rec.statistic;
      r.z = rec.z;
      r.boundary = rec.boundary;
      if (rec.skipped) {
        r.decision = "skip";
      } else if (outcome.rejected) {
        r.decision = "reject";
      } else {
        r.decision = j + 1 == design.looks() ? "accept" : "continue";
      }
      const auto snap = mcsim::source_snapshot(test, shared);
      const auto at = std::find(snap.design_looks.begin(), snap.design_looks.end(), j);
      if (at != snap.design_looks.end()) {
        const std::size_t m = static_cast<std::size_t>(at - snap.design_looks.begin());
        for (std::size_t l = 0; l <= m; ++l) r.cov_row.push_back(snap.cov(l, m));
        if (!snap.direction.empty())
          r.direction.assign(snap.direction.begin(), snap.direction.begin() + static_cast<std::ptrdiff_t>(m) + 1);
      }
    }
    if (previous && j < previous->looks.size() && !(previous->looks[j] == r))
      mismatch("frozen quantities at look " + std::to_string(j + 1) + " differ from the state file");
    state.looks.push_back(std::move(r));
  }
  if (previous)
    for (std::size_t j = look; j < previous->looks.size(); ++j) state.looks.push_back(previous->looks[j]);
  return state;
}

}  // namespace seqcombine::analyze
