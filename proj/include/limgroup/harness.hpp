#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "limgroup/curves.hpp"
#include "limgroup/hom_extend.hpp"
#include "limgroup/mapping_groups.hpp"

namespace limgroup {

/// Suite names in run order.
const std::vector<std::string>& suite_names();

struct Tolerances {
  double round_trip = 1e-6;
  double hom_defect = 1e-6;
  double exact = 1e-10;
};

struct SuiteConfig {
  std::uint64_t seed = 0;
  int trials = 100;
  Tolerances tol;
  int grid = kDefaultGrid;
  int steps = kDefaultSteps;
  int space_intervals = 4096;
  int time_steps = 1000;
  /// Mapping-group round trips run at most this many paths.
  int path_trials = 5;
  double omega_margin = kOmegaMargin;
  std::vector<std::string> suites = suite_names();
  /// Fixture paths; empty selects the built-in det and angle fixtures.
  std::vector<std::string> fixtures;
  bool timing = false;
};

/// `key = value` lines, `#` comments. Fixture paths are resolved against
/// base_dir. ParseError carries the line; ValidationError names the key.
SuiteConfig parse_config(std::istream& is, const std::string& base_dir = "");
SuiteConfig load_config(const std::string& path);
void validate(const SuiteConfig& c);

/// Declarative system/family description.
struct Fixture {
  std::string name = "fixture";
  std::string system = "gl_chain";  // gl_chain | weak_so2 | testfn_so2
  int n = 3;
  std::string chart = "affine";  // affine | matrix_log
  double radius = 0.0;           // 0 selects the chart default
  std::vector<double> radii;
  std::string family = "det";  // det | angle | eval
  std::vector<double> weights;
  double x0 = 0.25;
  /// (1-based index position, factor): ψ at that index is scaled.
  std::vector<std::pair<int, double>> psi_scale;
};

Fixture parse_fixture(std::istream& is, const std::string& name = "fixture");
Fixture load_fixture(const std::string& path);

/// The shipped defaults: det on GL(1) ⊂ GL(2) ⊂ GL(3) and angle on ⊕₅ SO(2).
Fixture default_det_fixture();
Fixture default_angle_fixture();

/// Chart and family built from a fixture. The family is kept even when
/// incompatible; `extension` is null in that case and `build_error` says why.
struct FixtureModel {
  Fixture fixture;
  std::shared_ptr<const DirectLimitChart> chart;
  std::shared_ptr<const HomFamily> family;
  std::shared_ptr<const Extension> extension;
  std::string build_error;
};

FixtureModel build_fixture(const Fixture& f, const Grid& grid = {});

/// Union-group point from flat coordinates: gl_chain takes n² row-major
/// entries, weak_so2 one angle per factor, testfn_so2 the centre, radius and
/// amplitude of a rotation bump.
Blocks fixture_point(const FixtureModel& m, const std::vector<double>& v, const Grid& grid = {});

/// Pass thresholds of the fixed-tolerance checks.
inline constexpr double kMinimumOrder = 3.7;
inline constexpr double kDiffAssociativityTol = 1e-9;
inline constexpr double kDiffInverseTol = 1e-8;
inline constexpr double kDiffRoundTripTol = 1e-4;
inline constexpr double kTestFnInverseTol = 1e-12;

/// Least-squares slope of −log(defect) against log(steps) for the round trip
/// of a closed-form curve.
double integrator_order(const ProductCurve& c, const std::vector<int>& steps = {125, 250, 500, 1000});

struct FailureDetail {
  std::string fixture;
  std::string check;
  std::string input;
  double defect = 0.0;
  std::string expectation;
};

struct SuiteResult {
  std::string name;
  int trials = 0;
  int failures = 0;
  double worst_defect = 0.0;
  std::int64_t elapsed_ms = 0;
  std::vector<FailureDetail> failures_detail;
};

struct Report {
  std::uint64_t seed = 0;
  std::vector<SuiteResult> suites;

  int failures() const;
  friend bool operator==(const Report& a, const Report& b);
};

/// Kept failure details per suite; the failure count is never truncated.
inline constexpr std::size_t kMaxFailureDetails = 20;

SuiteResult run_one_suite(const std::string& name, const SuiteConfig& config, const std::vector<FixtureModel>& models);
/// Runs the selected suites concurrently (capped by LIMGROUP_THREADS) with one
/// seeded generator per suite.
Report run_suite(const SuiteConfig& config);

enum class ReportFormat { Text, Json };
ReportFormat parse_format(const std::string& s);

std::string format_report(const Report& r, ReportFormat format);
/// path "-" writes to stdout; IoError otherwise when unwritable.
void emit_report(const Report& r, ReportFormat format, const std::string& path);
Report parse_report(const std::string& json);
Report load_report(const std::string& path);

/// Seed of the generator for one suite.
std::uint64_t suite_seed(std::uint64_t seed, const std::string& suite);

}  // namespace limgroup
