#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "limgroup/errors.hpp"
#include "limgroup/harness.hpp"

using namespace limgroup;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitFailures = 1;
constexpr int kExitUsage = 2;

json payload_json(const GroupElement& g) {
  const Matrix& p = g.payload();
  json rows = json::array();
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < p.cols(); ++c) row.push_back(p(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_output(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(path, "cannot open for writing");
  os << text;
}

// `control group=gl|so n=<n> samples=<N>` then N lines of n² column-major
// entries of u(t_k), t_k = k/(N − 1).
AlgebraCurve read_control(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError(path, "cannot open control file");
  std::string header;
  if (!std::getline(is, header)) throw ParseError("missing header", 1);
  std::istringstream hs(header);
  std::string tag, group, n_text, samples_text;
  hs >> tag >> group >> n_text >> samples_text;
  if (tag != "control" || group.rfind("group=", 0) != 0 || n_text.rfind("n=", 0) != 0 ||
      samples_text.rfind("samples=", 0) != 0)
    throw ParseError("expected `control group=<gl|so> n=<n> samples=<N>`", 1);
  const std::string kind = group.substr(6);
  int n = 0, samples = 0;
  try {
    n = std::stoi(n_text.substr(2));
    samples = std::stoi(samples_text.substr(8));
  } catch (const std::exception&) {
    throw ParseError("malformed header numbers", 1);
  }
  if (n < 1 || samples < 2) throw ParseError("need n >= 1 and samples >= 2", 1);
  const GroupDescriptor d = kind == "gl" ? GroupDescriptor::gl(n)
                            : kind == "so" ? GroupDescriptor::so(n)
                                           : throw ParseError("group must be gl or so", 1);
  std::vector<AlgebraElement> u;
  std::string line;
  int lineno = 1;
  while (static_cast<int>(u.size()) < samples && std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    Matrix m(n, n);
    for (Eigen::Index k = 0; k < m.size(); ++k)
      if (!(ls >> m.data()[k])) throw ParseError("expected " + std::to_string(n * n) + " numbers", lineno);
    try {
      u.emplace_back(d, m);
    } catch (const Error& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  if (static_cast<int>(u.size()) != samples) throw ParseError("fewer samples than declared", lineno);
  return AlgebraCurve(d, std::move(u));
}

std::vector<double> parse_numbers(const std::string& s) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError("point", "not a number: `" + item + "`");
    }
  }
  return out;
}

int cmd_verify(const std::string& config_path, const std::vector<std::string>& suites, bool seed_set,
               std::uint64_t seed, const std::string& format, const std::string& out) {
  SuiteConfig c = config_path.empty() ? SuiteConfig{} : load_config(config_path);
  if (seed_set) c.seed = seed;
  if (!suites.empty()) c.suites = suites;
  const ReportFormat f = parse_format(format);
  const Report r = run_suite(c);
  emit_report(r, f, out.empty() ? "-" : out);
  return r.failures() == 0 ? 0 : kExitFailures;
}

int cmd_evolve(const std::string& path, int steps, const std::string& format, const std::string& out) {
  const AlgebraCurve u = read_control(path);
  const GroupElement end = evol_point(u, steps);
  std::string text;
  if (parse_format(format) == ReportFormat::Json) {
    const json j{{"group", end.descriptor().to_string()}, {"steps", steps}, {"endpoint", payload_json(end)}};
    text = j.dump() + "\n";
  } else {
    std::ostringstream os;
    os.precision(17);
    const Matrix& p = end.payload();
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.cols(); ++c) os << (c ? " " : "") << p(r, c);
      os << "\n";
    }
    text = os.str();
  }
  write_output(text, out);
  return 0;
}

int cmd_extend(const std::string& fixture_path, const std::string& point, const std::string& engine, int steps,
               const std::string& format, const std::string& out) {
  const Grid grid{};
  const FixtureModel m = build_fixture(load_fixture(fixture_path), grid);
  if (!m.extension) throw CompatibilityError(m.build_error, 0.0);
  const Extension& ext = *m.extension;
  const Blocks x = fixture_point(m, parse_numbers(point), grid);
  static const std::vector<std::string> engines{"regular", "global", "exponential", "direct"};
  if (engine != "all" && std::find(engines.begin(), engines.end(), engine) == engines.end())
    throw ValidationError("engine", "expected all, regular, global, exponential or direct");

  json j{{"fixture", m.fixture.name}};
  bool failed = false;
  try {
    j["witness"] = m.chart->system().index().label(find_line_witness(*m.chart, m.chart->apply(x)));
  } catch (const Error&) {
    j["witness"] = nullptr;
  }
  for (const auto& name : engines) {
    if (engine != "all" && engine != name) continue;
    try {
      const GroupElement v = name == "regular"       ? ext.regular(x, steps)
                             : name == "global"      ? ext.global(x, steps)
                             : name == "exponential" ? ext.exponential(x)
                                                     : ext.direct(x);
      j[name] = payload_json(v);
    } catch (const Error& e) {
      j[name] = json{{"error", e.what()}};
      failed = true;
    }
  }
  std::string text;
  if (parse_format(format) == ReportFormat::Json) {
    text = j.dump() + "\n";
  } else {
    std::ostringstream os;
    for (auto it = j.begin(); it != j.end(); ++it) os << it.key() << " " << it.value().dump() << "\n";
    text = os.str();
  }
  write_output(text, out);
  return failed ? kExitFailures : 0;
}

int cmd_report(const std::string& path, const std::string& format, const std::string& out) {
  const Report r = load_report(path);
  emit_report(r, parse_format(format), out.empty() ? "-" : out);
  return r.failures() == 0 ? 0 : kExitFailures;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Direct-limit Lie group toolkit"};
  app.require_subcommand(1);

  std::string config, format = "text", out;
  std::vector<std::string> suites;
  std::uint64_t seed = 0;
  auto* verify = app.add_subcommand("verify", "run property suites and emit a report");
  verify->add_option("--config", config, "key = value suite configuration");
  auto* seed_opt = verify->add_option("--seed", seed, "override the configured seed");
  verify->add_option("--suite", suites, "suite to run (repeatable)");
  verify->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));
  verify->add_option("--out", out, "output path (default stdout)");

  std::string control;
  int steps = kDefaultSteps;
  auto* evolve = app.add_subcommand("evolve", "integrate one control curve from a file");
  evolve->add_option("control", control, "control file")->required();
  evolve->add_option("--steps", steps, "integrator steps")->check(CLI::PositiveNumber);
  evolve->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));
  evolve->add_option("--out", out, "output path (default stdout)");

  std::string fixture, point, engine = "all";
  auto* extend = app.add_subcommand("extend", "extend one point through a family fixture");
  extend->add_option("--fixture", fixture, "family fixture")->required();
  extend->add_option("--point", point, "comma-separated point coordinates")->required();
  extend->add_option("--engine", engine, "all, regular, global, exponential or direct");
  extend->add_option("--steps", steps, "integrator steps")->check(CLI::PositiveNumber);
  extend->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));
  extend->add_option("--out", out, "output path (default stdout)");

  std::string report_path;
  auto* report = app.add_subcommand("report", "re-format a JSON report");
  report->add_option("report", report_path, "JSON report")->required();
  report->add_option("--format", format, "text or json")->check(CLI::IsMember({"text", "json"}));
  report->add_option("--out", out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*verify) return cmd_verify(config, suites, seed_opt->count() > 0, seed, format, out);
    if (*evolve) return cmd_evolve(control, steps, format, out);
    if (*extend) return cmd_extend(fixture, point, engine, steps, format, out);
    if (*report) return cmd_report(report_path, format, out);
  } catch (const Error& e) {
    std::cerr << "limgroup: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
