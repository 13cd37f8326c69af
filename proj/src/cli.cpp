#include "dtwin/cli.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "dtwin/caex.hpp"
#include "dtwin/cell.hpp"
#include "dtwin/error.hpp"
#include "dtwin/items.hpp"
#include "dtwin/plan_document.hpp"
#include "dtwin/twin.hpp"

namespace dtwin {

namespace {

namespace fs = std::filesystem;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << content;
  if (!out.flush()) throw IoError("failed writing '" + path + "'");
}

void print_diagnostics(const std::string& path, const std::vector<caex::Diagnostic>& diags, std::ostream& os) {
  for (const auto& d : diags) {
    os << path;
    if (d.line > 0) os << ':' << d.line;
    os << ": " << (d.severity == caex::Severity::kError ? "error" : "warning") << " ["
       << d.code << "] " << d.message << '\n';
  }
}

caex::CaexDocument load_document(const std::string& path, std::ostream& err) {
  auto doc = caex::parse_caex(read_file(path));
  const auto diags = caex::validate_caex(doc);
  if (caex::has_errors(diags)) {
    print_diagnostics(path, diags, err);
    throw Error(ErrorCode::kStructural, "'" + path + "' failed validation");
  }
  return doc;
}

CellGeometry load_geometry(const std::string& path, const std::vector<std::string>& overrides) {
  CellGeometry g = CellGeometry::from_json(read_file(path));
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    double value = 0.0;
    if (eq == std::string::npos) throw IoError("--set expects key=value, got '" + kv + "'");
    const char* first = kv.data() + eq + 1;
    const char* last = kv.data() + kv.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) throw IoError("--set value for '" + kv.substr(0, eq) + "' is not a number");
    g.set_override(kv.substr(0, eq), value);
  }
  return g;
}

DigitalTwin load_twin(const std::string& path, const CellGeometry& geometry, std::ostream& err) {
  return build_twin(items::extract_items(load_document(path, err)), geometry.type_extents);
}

void print_planning_failure(const PlanningFailure& f, std::ostream& err) {
  err << "planning failed for part '" << f.part() << "'\n";
  for (const auto& [strategy, report] : f.reports()) {
    const auto& p = report.sample_pose.position;
    err << "  " << to_string(strategy) << ": segment " << report.segment_index << " hits '" << report.obstacle_id
        << "' at (" << p.x() << ", " << p.y() << ", " << p.z() << ")\n";
  }
}

int cmd_validate(const std::string& path, std::ostream& out) {
  const auto doc = caex::parse_caex(read_file(path));
  const auto diags = caex::validate_caex(doc);
  print_diagnostics(path, diags, out);
  return caex::has_errors(diags) ? 1 : 0;
}

int cmd_simulate(const std::string& path, const CellGeometry& geometry, Mode mode, const std::string& trace_path,
                 const std::string& snapshot_dir, long every, std::ostream& out, std::ostream& err) {
  DigitalTwin twin = load_twin(path, geometry, err);
  if (!snapshot_dir.empty()) fs::create_directories(snapshot_dir);
  SimObserver observer;
  if (!snapshot_dir.empty()) {
    observer = [&](const SimState& st, const std::vector<TraceEvent>& ev) {
      const bool connected = std::any_of(ev.begin(), ev.end(), [](const auto& e) { return e.event == "connect"; });
      if (!connected && (every <= 0 || st.tick % every != 0)) return;
      char name[32];
      std::snprintf(name, sizeof name, "tick_%08ld.json", st.tick);
      write_file((fs::path(snapshot_dir) / name).string(), snapshot_json(st));
    };
  }
  const SimResult result = run_simulation(std::move(twin), geometry, mode, observer);
  std::string text;
  for (const auto& e : result.trace) text += e.to_line() + "\n";
  write_file(trace_path, text);
  if (!result.ok) {
    err << "simulation failed: " << result.failure << '\n';
    return 1;
  }
  out << "simulated " << result.trace.size() << " events\n";
  return 0;
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Digital-twin assembly planner and cell simulator", "dtwin"};
  app.require_subcommand(1);

  std::string input, output, geometry_path, trace_path, snapshot_dir, mode_text = "virtual";
  long every = 0;
  std::vector<std::string> overrides;

  auto* validate = app.add_subcommand("validate", "Check a CAEX file and list diagnostics");
  validate->add_option("file", input, "AutomationML file")->required();

  auto* exp = app.add_subcommand("export-items", "Write the item list of a CAEX file");
  exp->add_option("file", input, "AutomationML file")->required();
  exp->add_option("-o,--output", output, "Items file")->required();

  auto* plan = app.add_subcommand("plan", "Compute sequence and insertion paths");
  plan->add_option("file", input, "AutomationML file")->required();
  plan->add_option("--geometry", geometry_path, "Cell geometry manifest (JSON)")->required();
  plan->add_option("-o,--output", output, "Plan document (JSON)")->required();
  plan->add_option("--set", overrides, "Numeric override key=value");

  auto* sim = app.add_subcommand("simulate", "Run the cell and write an event trace");
  sim->add_option("file", input, "AutomationML file")->required();
  sim->add_option("--geometry", geometry_path, "Cell geometry manifest (JSON)")->required();
  sim->add_option("--mode", mode_text, "virtual, physical or both")
      ->check(CLI::IsMember({"virtual", "physical", "both"}));
  sim->add_option("--trace", trace_path, "Trace output (JSON lines)")->required();
  sim->add_option("--snapshots", snapshot_dir, "Directory for scene snapshots");
  sim->add_option("--every", every, "Snapshot interval in ticks")->check(CLI::NonNegativeNumber);
  sim->add_option("--set", overrides, "Numeric override key=value");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*validate) return cmd_validate(input, out);
    if (*exp) {
      write_file(output, items::write_items(items::extract_items(load_document(input, err))));
      return 0;
    }
    const CellGeometry geometry = load_geometry(geometry_path, overrides);
    if (*plan) {
      const PlanDocument doc = make_plan(load_twin(input, geometry, err), geometry);
      write_file(output, doc.to_json());
      return 0;
    }
    return cmd_simulate(input, geometry, *mode_from_string(mode_text), trace_path, snapshot_dir, every, out, err);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const PlanningFailure& e) {
    print_planning_failure(e, err);
    return 1;
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace dtwin
