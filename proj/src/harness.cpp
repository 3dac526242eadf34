#include "limgroup/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "limgroup/curves.hpp"
#include "limgroup/errors.hpp"

namespace limgroup {

using json = nlohmann::ordered_json;

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"lie_core",      "regularity", "integrator_order", "direct_limit",
                                              "family_compat", "extension",  "mapping_groups"};
  return names;
}

// ---- Line-oriented parsing -------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : v + ",") {
    if (ch == ',' || ch == ' ' || ch == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  return out;
}

struct KeyValue {
  std::string key;
  std::string value;
  int line;
};

std::vector<KeyValue> parse_pairs(std::istream& is) {
  std::vector<KeyValue> out;
  std::set<std::string> seen;
  std::string raw;
  int line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError("expected `key = value`", line);
    const std::string key = trim(text.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", line);
    if (key.find_first_of(" \t") != std::string::npos) throw ParseError("key contains whitespace", line);
    if (!seen.insert(key).second) throw ParseError("duplicate key `" + key + "`", line);
    out.push_back({key, trim(text.substr(eq + 1)), line});
  }
  return out;
}

double to_double(const KeyValue& kv) {
  double v = 0.0;
  const char* end = kv.value.data() + kv.value.size();
  const auto [p, ec] = std::from_chars(kv.value.data(), end, v);
  if (ec != std::errc() || p != end || kv.value.empty()) throw ValidationError(kv.key, "not a number: `" + kv.value + "`");
  return v;
}

template <class Int>
Int to_integer(const std::string& key, const std::string& s) {
  Int v = 0;
  const char* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end || s.empty()) throw ValidationError(key, "not an integer: `" + s + "`");
  return v;
}

bool to_bool(const KeyValue& kv) {
  if (kv.value == "true" || kv.value == "1") return true;
  if (kv.value == "false" || kv.value == "0") return false;
  throw ValidationError(kv.key, "expected true or false");
}

std::string join_path(const std::string& dir, const std::string& p) {
  if (dir.empty() || (!p.empty() && p.front() == '/')) return p;
  return dir + "/" + p;
}

std::string dirname(const std::string& path) {
  const auto slash = path.find_last_of('/');
  return slash == std::string::npos ? "" : path.substr(0, slash);
}

std::string stem(const std::string& path) {
  const auto slash = path.find_last_of('/');
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  const auto dot = base.find_last_of('.');
  return dot == std::string::npos ? base : base.substr(0, dot);
}

}  // namespace

void validate(const SuiteConfig& c) {
  if (c.trials < 1) throw ValidationError("trials", "must be >= 1");
  if (!(c.tol.round_trip > 0.0)) throw ValidationError("round_trip", "must be positive");
  if (!(c.tol.hom_defect > 0.0)) throw ValidationError("hom_defect", "must be positive");
  if (!(c.tol.exact > 0.0)) throw ValidationError("exact", "must be positive");
  if (c.grid < 4) throw ValidationError("grid", "must be >= 4");
  if (c.steps < 1) throw ValidationError("steps", "must be >= 1");
  if (c.space_intervals < 64 || c.space_intervals % 16 != 0)
    throw ValidationError("space_intervals", "must be a multiple of 16 and >= 64");
  if (c.time_steps < 3) throw ValidationError("time_steps", "must be >= 3");
  if (c.path_trials < 0) throw ValidationError("path_trials", "must be >= 0");
  if (!(c.omega_margin > 0.0 && c.omega_margin < 1.0)) throw ValidationError("omega_margin", "must lie in (0, 1)");
  const auto& known = suite_names();
  for (const auto& s : c.suites)
    if (std::find(known.begin(), known.end(), s) == known.end()) throw ValidationError("suites", "unknown suite `" + s + "`");
}

SuiteConfig parse_config(std::istream& is, const std::string& base_dir) {
  SuiteConfig c;
  for (const KeyValue& kv : parse_pairs(is)) {
    const std::string& k = kv.key;
    if (k == "seed") c.seed = to_integer<std::uint64_t>(k, kv.value);
    else if (k == "trials") c.trials = to_integer<int>(k, kv.value);
    else if (k == "round_trip") c.tol.round_trip = to_double(kv);
    else if (k == "hom_defect") c.tol.hom_defect = to_double(kv);
    else if (k == "exact") c.tol.exact = to_double(kv);
    else if (k == "grid") c.grid = to_integer<int>(k, kv.value);
    else if (k == "steps") c.steps = to_integer<int>(k, kv.value);
    else if (k == "space_intervals") c.space_intervals = to_integer<int>(k, kv.value);
    else if (k == "time_steps") c.time_steps = to_integer<int>(k, kv.value);
    else if (k == "path_trials") c.path_trials = to_integer<int>(k, kv.value);
    else if (k == "omega_margin") c.omega_margin = to_double(kv);
    else if (k == "suites") c.suites = split_list(kv.value);
    else if (k == "fixtures") {
      c.fixtures.clear();
      for (const auto& p : split_list(kv.value)) c.fixtures.push_back(join_path(base_dir, p));
    } else if (k == "timing") c.timing = to_bool(kv);
    else throw ValidationError(k, "unknown key");
  }
  validate(c);
  return c;
}

SuiteConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError(path, "cannot open config");
  return parse_config(is, dirname(path));
}

// ---- Fixtures --------------------------------------------------------------

Fixture parse_fixture(std::istream& is, const std::string& name) {
  Fixture f;
  f.name = name;
  for (const KeyValue& kv : parse_pairs(is)) {
    const std::string& k = kv.key;
    if (k == "name") f.name = kv.value;
    else if (k == "system") f.system = kv.value;
    else if (k == "n" || k == "factors") f.n = to_integer<int>(k, kv.value);
    else if (k == "chart") f.chart = kv.value;
    else if (k == "radius") f.radius = to_double(kv);
    else if (k == "radii" || k == "weights") {
      std::vector<double> v;
      for (const auto& e : split_list(kv.value)) v.push_back(to_double({k, e, kv.line}));
      (k == "radii" ? f.radii : f.weights) = std::move(v);
    } else if (k == "family") f.family = kv.value;
    else if (k == "x0") f.x0 = to_double(kv);
    else if (k == "psi_scale") {
      for (const auto& e : split_list(kv.value)) {
        const auto colon = e.find(':');
        if (colon == std::string::npos) throw ValidationError(k, "expected index:factor");
        f.psi_scale.emplace_back(to_integer<int>(k, e.substr(0, colon)), to_double({k, e.substr(colon + 1), kv.line}));
      }
    } else {
      throw ValidationError(k, "unknown key");
    }
  }
  static const std::map<std::string, std::string> family_of{{"gl_chain", "det"}, {"weak_so2", "angle"}, {"testfn_so2", "eval"}};
  const auto it = family_of.find(f.system);
  if (it == family_of.end()) throw ValidationError("system", "unknown system `" + f.system + "`");
  if (f.family != it->second) throw ValidationError("family", "`" + f.family + "` does not act on " + f.system);
  if (f.chart != "affine" && f.chart != "matrix_log") throw ValidationError("chart", "unknown chart `" + f.chart + "`");
  if (f.radius < 0.0) throw ValidationError("radius", "must be positive");
  if (f.system == "gl_chain" && (f.n < 1 || f.n > 6)) throw ValidationError("n", "GL chains need 1 <= n <= 6");
  if (f.system == "weak_so2" && (f.n < 1 || f.n > 10)) throw ValidationError("n", "weak products need 1..10 factors");
  if (!f.weights.empty() && (f.system != "weak_so2" || static_cast<int>(f.weights.size()) != f.n))
    throw ValidationError("weights", "one weight per weak-product factor");
  for (double r : f.radii)
    if (!(r > 0.0)) throw ValidationError("radii", "must be positive");
  return f;
}

Fixture load_fixture(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError(path, "cannot open fixture");
  return parse_fixture(is, stem(path));
}

Fixture default_det_fixture() {
  Fixture f;
  f.name = "gl_chain_det";
  return f;
}

Fixture default_angle_fixture() {
  Fixture f;
  f.name = "weak_so2_angle";
  f.system = "weak_so2";
  f.n = 5;
  f.chart = "matrix_log";
  f.family = "angle";
  return f;
}

FixtureModel build_fixture(const Fixture& f, const Grid& grid) {
  FixtureModel m;
  m.fixture = f;
  Chart chart = f.chart == "affine" ? Chart::affine() : Chart::matrix_log();
  if (f.radius > 0.0) chart.radius = f.radius;
  if (f.system != "gl_chain" && chart.kind == ChartKind::AffineMinusIdentity)
    throw ValidationError("chart", "affine charts do not map SO(2) into so(2)");
  HomFamily fam = f.system == "gl_chain"  ? det_family(f.n)
                  : f.system == "weak_so2" ? angle_family(f.n, f.weights)
                                           : evaluation_family(GroupDescriptor::so(2), f.x0, grid);
  if (f.system == "testfn_so2") chart = Chart::pointwise(chart);
  const int size = fam.system.index().size();
  if (!f.radii.empty() && static_cast<int>(f.radii.size()) != size)
    throw ValidationError("radii", "need " + std::to_string(size) + " radii");
  for (const auto& [pos, factor] : f.psi_scale) {
    if (pos < 1 || pos > size) throw ValidationError("psi_scale", "index position out of range");
    fam.psi[static_cast<std::size_t>(pos - 1)] *= factor;
  }
  auto dl = std::make_shared<const DirectLimitChart>(fam.system, chart, f.radii);
  m.chart = dl;
  m.family = std::make_shared<const HomFamily>(fam);
  try {
    m.extension = std::make_shared<const Extension>(fam, *dl);
  } catch (const Error& e) {
    m.build_error = e.what();
  }
  return m;
}

Blocks fixture_point(const FixtureModel& m, const std::vector<double>& v, const Grid& grid) {
  const Fixture& f = m.fixture;
  if (f.system == "gl_chain") {
    if (static_cast<int>(v.size()) != f.n * f.n) throw ValidationError("point", "need n*n entries");
    Matrix x(f.n, f.n);
    for (int r = 0; r < f.n; ++r)
      for (int c = 0; c < f.n; ++c) x(r, c) = v[static_cast<std::size_t>(r * f.n + c)];
    return {GroupElement(GroupDescriptor::gl(f.n), x)};
  }
  if (f.system == "weak_so2") {
    if (static_cast<int>(v.size()) != f.n) throw ValidationError("point", "need one angle per factor");
    Blocks x;
    for (double a : v) x.emplace_back(GroupDescriptor::so(2), a == 0.0 ? Matrix(Matrix::Identity(2, 2)) : rotation(a));
    return x;
  }
  if (v.size() != 3) throw ValidationError("point", "need centre,radius,amplitude");
  return to_blocks(rotation_bump(grid, v[0], v[1], v[2]));
}

// ---- Suites ----------------------------------------------------------------

std::uint64_t suite_seed(std::uint64_t seed, const std::string& suite) {
  const auto& names = suite_names();
  const auto id = static_cast<std::uint32_t>(std::find(names.begin(), names.end(), suite) - names.begin());
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), id};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string describe(const Matrix& m) {
  std::string s = "[";
  for (Eigen::Index k = 0; k < m.size(); ++k) s += (k ? "," : "") + fmt(m.data()[k]);
  return s + "]";
}

// Non-identity blocks only, as `b:[column-major entries]`.
std::string describe(const Blocks& x) {
  std::string s;
  for (std::size_t b = 0; b < x.size(); ++b) {
    const Matrix& p = x[b].payload();
    const Matrix e = identity(x[b].descriptor()).payload();
    if (p == e) continue;
    s += (s.empty() ? "" : " ") + std::to_string(b) + ":" + describe(p);
  }
  return s.empty() ? "identity" : s;
}

class SuiteRun {
 public:
  explicit SuiteRun(std::string name) { r_.name = std::move(name); }

  void begin() { failed_ = false; }
  void end() {
    ++r_.trials;
    if (failed_) ++r_.failures;
  }

  void check(const std::string& fixture, const std::string& check, double defect, double tol,
             const std::string& expectation, const std::function<std::string()>& input) {
    const bool ok = defect <= tol;
    if (std::isfinite(defect)) r_.worst_defect = std::max(r_.worst_defect, std::abs(defect));
    if (!ok) fail(fixture, check, std::isfinite(defect) ? defect : 0.0, expectation + " (tol " + fmt(tol) + ")", input());
  }

  void fail(const std::string& fixture, const std::string& check, double defect, const std::string& expectation,
            const std::string& input) {
    failed_ = true;
    if (r_.failures_detail.size() < kMaxFailureDetails) r_.failures_detail.push_back({fixture, check, input, defect, expectation});
  }

  // A whole validator report counts one trial per check.
  void merge(const std::string& fixture, const ValidationReport& v, const std::string& expectation) {
    r_.trials += v.checks;
    r_.failures += std::min<int>(static_cast<int>(v.failures.size()), v.checks);
    r_.worst_defect = std::max(r_.worst_defect, std::isfinite(v.worst_defect) ? v.worst_defect : 0.0);
    for (const auto& f : v.failures)
      if (r_.failures_detail.size() < kMaxFailureDetails)
        r_.failures_detail.push_back({fixture, f.check, f.detail, std::isfinite(f.defect) ? f.defect : 0.0, expectation});
  }

  // Runs one trial; library errors become failures.
  void trial(const std::string& fixture, const std::function<void()>& body) {
    begin();
    try {
      body();
    } catch (const std::exception& e) {
      fail(fixture, "error", 0.0, "no exception", e.what());
    }
    end();
  }

  SuiteResult result() && { return std::move(r_); }

 private:
  SuiteResult r_;
  bool failed_ = false;
};

Matrix uniform_matrix(std::mt19937_64& rng, int n, double a) {
  std::uniform_real_distribution<double> u(-a, a);
  Matrix m(n, n);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = u(rng);
  return m;
}

Matrix uniform_skew(std::mt19937_64& rng, int n, double a) {
  const Matrix m = uniform_matrix(rng, n, a);
  Matrix s = m - m.transpose();
  return 0.5 * s;
}

void lie_core_suite(SuiteRun& run, const SuiteConfig& c, std::mt19937_64& rng) {
  const GroupDescriptor gl3 = GroupDescriptor::gl(3), so3 = GroupDescriptor::so(3);
  const double tol = c.tol.exact;
  for (int t = 0; t < c.trials; ++t) {
    const Matrix a = uniform_matrix(rng, 3, 0.3), b = uniform_matrix(rng, 3, 0.3), d = uniform_matrix(rng, 3, 0.3);
    const Matrix s = uniform_skew(rng, 3, 0.3);
    const auto input = [&] { return "A=" + describe(a) + " B=" + describe(b) + " C=" + describe(d) + " S=" + describe(s); };
    run.trial("", [&] {
      const GroupElement x = exp_map({gl3, a}), y = exp_map({gl3, b}), z = exp_map({gl3, d});
      run.check("", "exp_log", (log_map(x).payload() - a).norm(), tol, "log(exp A) = A", input);
      const GroupElement r = exp_map({so3, s});
      run.check("", "exp_log_so", (log_map(r).payload() - s).norm(), tol, "log(exp S) = S on so(3)", input);
      run.check("", "associativity",
                distance(group_multiply(group_multiply(x, y), z), group_multiply(x, group_multiply(y, z))), tol,
                "(xy)z = x(yz)", input);
      run.check("", "inverse", distance(group_multiply(x, group_inverse(x)), identity(gl3)), tol, "x x^-1 = e", input);
      const AlgebraElement u{gl3, a}, v{gl3, b}, w{gl3, d};
      const AlgebraElement jac = bracket(u, bracket(v, w)) + bracket(v, bracket(w, u)) + bracket(w, bracket(u, v));
      run.check("", "jacobi", jac.payload().norm(), tol, "Jacobi identity", input);
      for (const Chart& ch : {Chart::affine(), Chart::matrix_log()}) {
        if (!chart_in_domain(ch, x)) continue;
        run.check("", "chart_round_trip_" + to_string(ch.kind), distance(chart_invert(ch, chart_apply(ch, x)), x), tol,
                  "chart inverse recovers x", input);
      }
      const Chart log = Chart::matrix_log();
      if (chart_in_domain(log, r))
        run.check("", "chart_round_trip_so", distance(chart_invert(log, chart_apply(log, r)), r), tol,
                  "chart inverse recovers r", input);
    });
  }
}

void regularity_suite(SuiteRun& run, const SuiteConfig& c, std::mt19937_64& rng) {
  for (int t = 0; t < c.trials; ++t) {
    const GroupDescriptor d = t % 2 == 0 ? GroupDescriptor::gl(3) : GroupDescriptor::so(3);
    const ProductCurve curve = ProductCurve::random(d, rng, 0.5, 4.0);
    run.trial("", [&] {
      const double defect = round_trip_defect(curve.curve(c.grid), c.steps);
      run.check("", "round_trip_" + d.to_string(), defect, c.tol.round_trip, "evol(delta(gamma)) = gamma(1)",
                [&] { return "trial " + std::to_string(t) + " of seed stream"; });
    });
  }
}

void integrator_order_suite(SuiteRun& run, const SuiteConfig& c, std::mt19937_64& rng) {
  const int n = std::min(c.trials, 20);
  for (int t = 0; t < n; ++t) {
    const ProductCurve curve = ProductCurve::random(GroupDescriptor::gl(3), rng, 1.0, 12.0);
    run.trial("", [&] {
      const double order = integrator_order(curve);
      run.check("", "order", std::max(0.0, 4.0 - order), 4.0 - kMinimumOrder, "fitted order >= 3.7",
                [&] { return "fitted order " + fmt(order); });
    });
  }
}

int witness_trials(const FixtureModel& m, int trials) {
  return m.fixture.system == "testfn_so2" ? std::min(trials, 20) : trials;
}

void direct_limit_suite(SuiteRun& run, const SuiteConfig& c, const std::vector<FixtureModel>& models,
                        std::mt19937_64& rng) {
  for (const FixtureModel& m : models) {
    const DirectLimitChart& ch = *m.chart;
    const std::string& name = m.fixture.name;
    run.merge(name, check_direct_limit_chart(ch, rng, m.fixture.system == "testfn_so2" ? 4 : 20),
              "direct limit chart axioms");
    const DirectedIndex& index = ch.system().index();
    std::uniform_int_distribution<int> pick(0, index.size() - 1);
    for (int t = 0; t < witness_trials(m, c.trials); ++t) {
      const int i = pick(rng);
      const Vector w = ch.system().embed_model(i, ch.sample_local_image(i, rng));
      run.trial(name, [&] {
        const int j = find_line_witness(ch, w);
        const bool ok = ch.segment_in_local_image(j, w, SegmentTest::Sampled) && index.leq(j, i);
        if (!ok)
          run.fail(name, "witness", 0.0, "[0,1]w in W_j with j <= i",
                   "i=" + index.label(i) + " j=" + index.label(j) + " w=" + describe(Matrix(w)));
      });
    }
  }
}

void family_compat_suite(SuiteRun& run, const std::vector<FixtureModel>& models, std::mt19937_64& rng) {
  for (const FixtureModel& m : models) {
    const std::string& name = m.fixture.name;
    run.merge(name, check_family(*m.family, *m.chart, rng, m.fixture.system == "testfn_so2" ? 4 : 20),
              "compatible homomorphism family");
    run.trial(name, [&] {
      if (!m.build_error.empty()) run.fail(name, "colimit", 0.0, "psi_i assemble to one linear map", m.build_error);
    });
  }
}

Blocks sample_point(const DirectLimitChart& ch, int i, std::mt19937_64& rng, double fill) {
  return ch.system().lift(i, ch.invert_local(i, ch.sample_local_image(i, rng, fill)));
}

void extension_suite(SuiteRun& run, const SuiteConfig& c, const std::vector<FixtureModel>& models,
                     std::mt19937_64& rng) {
  for (const FixtureModel& m : models) {
    const std::string& name = m.fixture.name;
    if (!m.extension) {
      run.trial(name, [&] { run.fail(name, "construct", 0.0, "extension engine builds", m.build_error); });
      continue;
    }
    const Extension& ext = *m.extension;
    const DirectLimitChart& ch = *m.chart;
    const DirectedGroupSystem& s = ch.system();
    std::uniform_int_distribution<int> pick(0, s.index().size() - 1);
    const int n = m.fixture.system == "testfn_so2" ? std::min(c.trials, 10) : c.trials;
    for (int t = 0; t < n; ++t) {
      const int j = pick(rng), j1 = pick(rng), j2 = pick(rng);
      const Blocks x = sample_point(ch, j, rng, 0.9);
      const Blocks y1 = sample_point(ch, j1, rng, 0.45), y2 = sample_point(ch, j2, rng, 0.45);
      run.trial(name, [&] {
        const GroupElement fx = ext.regular(x, c.steps);
        const GroupElement direct = m.family->f[static_cast<std::size_t>(j)](s.restrict(j, x));
        run.check(name, "consistency", distance(fx, direct), c.tol.hom_defect, "extension restricts to f_j",
                  [&] { return "j=" + s.index().label(j) + " x=" + describe(x); });
        if (ch.chart().effective_kind() == ChartKind::MatrixLog || ch.in_domain(x)) {
          run.check(name, "exponential", distance(ext.exponential(x), fx), c.tol.hom_defect,
                    "exp(psi(log x)) = regular extension", [&] { return "x=" + describe(x); });
        }
        const Blocks prod = s.multiply(y1, y2);
        const GroupElement lhs = ext.global(prod, c.steps);
        const GroupElement rhs = group_multiply(ext.global(y1, c.steps), ext.global(y2, c.steps));
        run.check(name, "homomorphism", distance(lhs, rhs), c.tol.hom_defect, "F(xy) = F(x)F(y)",
                  [&] { return "x=" + describe(y1) + " y=" + describe(y2); });
      });
    }
  }
}

GroupValuedMap random_rotation_map(const Grid& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> centre(-4.0, 4.0), radius(0.5, 2.0), amp(-0.9, 0.9);
  const double ce = centre(rng), r = radius(rng), a = amp(rng);
  return rotation_bump(g, ce, r, a);
}

// Largest |d| at nodes outside [lo, hi].
double outside_support(const CompactSupportDiffeo& p, double lo, double hi) {
  double d = 0.0;
  for (int k = 0; k < p.grid().nodes(); ++k) {
    const double x = p.grid().node(k);
    if (x < lo || x > hi) d = std::max(d, std::abs(p.displacement()[static_cast<std::size_t>(k)]));
  }
  return d;
}

void mapping_groups_suite(SuiteRun& run, const SuiteConfig& c, std::mt19937_64& rng) {
  const Grid g{8.0, c.space_intervals};
  const double margin = c.omega_margin;
  const Chart log = Chart::pointwise(Chart::matrix_log());
  for (int t = 0; t < c.trials; ++t) {
    const CompactSupportField x1 = random_bump_field(g, rng), x2 = random_bump_field(g, rng),
                              x3 = random_bump_field(g, rng);
    const GroupValuedMap gm = random_rotation_map(g, rng);
    const auto input = [&] {
      return "supports [" + fmt(x1.support_lo()) + "," + fmt(x1.support_hi()) + "] [" + fmt(x2.support_lo()) + "," +
             fmt(x2.support_hi()) + "] [" + fmt(x3.support_lo()) + "," + fmt(x3.support_hi()) + "]";
    };
    run.trial("", [&] {
      const CompactSupportDiffeo a = diff_chart(x1, margin), b = diff_chart(x2, margin), d = diff_chart(x3, margin);
      run.check("", "associativity", diff_distance(diff_compose(diff_compose(a, b), d), diff_compose(a, diff_compose(b, d))),
                kDiffAssociativityTol, "(ab)c = a(bc) on the grid", input);
      run.check("", "inverse", diff_distance(diff_compose(a, diff_invert(a)), CompactSupportDiffeo::identity(g)),
                kDiffInverseTol, "a a^-1 = id on the grid", input);
      const CompactSupportDiffeo ab = diff_compose(a, b);
      run.check("", "support", outside_support(ab, std::min(a.support_lo(), b.support_lo()),
                                               std::max(a.support_hi(), b.support_hi())),
                0.0, "supp(ab) within the union of supports", input);
      for (int n = support_witness(x1); n <= kCompactSets; ++n) {
        const CompactSupportDiffeo rk = diff_chart_restricted(x1, n, margin);
        double dd = 0.0;
        for (std::size_t k = 0; k < rk.displacement().size(); ++k)
          dd = std::max(dd, std::abs(rk.displacement()[k] - a.displacement()[k]));
        run.check("", "diff_chart_restriction", dd, 0.0, "ambient chart = K_n chart", input);
      }
      const AlgebraField wa = testfn_chart(gm, log);
      for (int n = support_witness(gm); n <= kCompactSets; ++n) {
        const AlgebraField wk = testfn_chart_restricted(gm, log, n);
        double dd = 0.0;
        for (std::size_t k = 0; k < wk.values.size(); ++k)
          dd = std::max(dd, (wk.values[k].payload() - wa.values[k].payload()).cwiseAbs().maxCoeff());
        run.check("", "testfn_chart_restriction", dd, 0.0, "ambient chart = K_n chart", input);
      }
      const GroupValuedMap prod = testfn_multiply(gm, testfn_inverse(gm));
      double di = 0.0;
      for (const auto& v : prod.values()) di = std::max(di, (v.payload() - Matrix::Identity(2, 2)).norm());
      run.check("", "testfn_inverse", di, kTestFnInverseTol, "g g^-1 = e nodewise", input);
    });
  }
  for (int t = 0; t < std::min(c.path_trials, c.trials); ++t) {
    const DiffPath path = random_two_bump_path(g, rng, c.time_steps);
    run.trial("", [&] {
      const CompactSupportDiffeo end = diff_evolve(diff_log_derivative(path));
      run.check("", "round_trip", diff_distance(end, path.back()), kDiffRoundTripTol,
                "evolve(log derivative) = endpoint", [&] { return "path " + std::to_string(t); });
    });
  }
}

}  // namespace

double integrator_order(const ProductCurve& c, const std::vector<int>& steps) {
  const GroupDescriptor& d = c.descriptor();
  const GroupElement end(d, c.value(1.0));
  const AlgebraCurve u = AlgebraCurve::from_function(d, [c](double t) { return c.log_derivative(t); });
  const auto n = static_cast<double>(steps.size());
  double mx = 0.0, my = 0.0;
  std::vector<double> xs, ys;
  for (int s : steps) {
    xs.push_back(std::log(static_cast<double>(s)));
    ys.push_back(std::log(distance(evol_point(u, s), end)));
    mx += xs.back() / n;
    my += ys.back() / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxy += (xs[k] - mx) * (ys[k] - my);
    sxx += (xs[k] - mx) * (xs[k] - mx);
  }
  return -sxy / sxx;
}

SuiteResult run_one_suite(const std::string& name, const SuiteConfig& config, const std::vector<FixtureModel>& models) {
  SuiteRun run(name);
  std::mt19937_64 rng(suite_seed(config.seed, name));
  const auto start = std::chrono::steady_clock::now();
  try {
    if (name == "lie_core") lie_core_suite(run, config, rng);
    else if (name == "regularity") regularity_suite(run, config, rng);
    else if (name == "integrator_order") integrator_order_suite(run, config, rng);
    else if (name == "direct_limit") direct_limit_suite(run, config, models, rng);
    else if (name == "family_compat") family_compat_suite(run, models, rng);
    else if (name == "extension") extension_suite(run, config, models, rng);
    else if (name == "mapping_groups") mapping_groups_suite(run, config, rng);
    else throw ValidationError("suites", "unknown suite `" + name + "`");
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    run.trial("", [&] { run.fail("", "error", 0.0, "suite completes", e.what()); });
  }
  SuiteResult r = std::move(run).result();
  if (config.timing)
    r.elapsed_ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
  return r;
}

namespace {

unsigned thread_cap() {
  unsigned cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("LIMGROUP_THREADS")) {
    const std::string s = env;
    unsigned v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || v == 0)
      throw ValidationError("LIMGROUP_THREADS", "must be a positive integer");
    cap = v;
  }
  return cap;
}

}  // namespace

Report run_suite(const SuiteConfig& config) {
  validate(config);
  Report report;
  report.seed = config.seed;
  if (config.suites.empty()) return report;

  const Grid grid{8.0, config.space_intervals};
  std::vector<FixtureModel> models;
  if (config.fixtures.empty()) {
    models.push_back(build_fixture(default_det_fixture(), grid));
    models.push_back(build_fixture(default_angle_fixture(), grid));
  } else {
    for (const auto& p : config.fixtures) models.push_back(build_fixture(load_fixture(p), grid));
  }

  std::vector<SuiteResult> results(config.suites.size());
  std::vector<std::exception_ptr> errors(config.suites.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < results.size(); k = next++) {
      try {
        results[k] = run_one_suite(config.suites[k], config, models);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const unsigned n = std::min<unsigned>(thread_cap(), static_cast<unsigned>(results.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  report.suites = std::move(results);
  return report;
}

// ---- Reports ---------------------------------------------------------------

int Report::failures() const {
  int n = 0;
  for (const auto& s : suites) n += s.failures;
  return n;
}

bool operator==(const Report& a, const Report& b) {
  return format_report(a, ReportFormat::Json) == format_report(b, ReportFormat::Json);
}

ReportFormat parse_format(const std::string& s) {
  if (s == "text") return ReportFormat::Text;
  if (s == "json") return ReportFormat::Json;
  throw ValidationError("format", "expected text or json");
}

namespace {

json to_json(const Report& r) {
  json suites = json::array();
  for (const auto& s : r.suites) {
    json details = json::array();
    for (const auto& f : s.failures_detail)
      details.push_back({{"fixture", f.fixture},
                         {"check", f.check},
                         {"input", f.input},
                         {"defect", f.defect},
                         {"expectation", f.expectation}});
    suites.push_back({{"name", s.name},
                      {"trials", s.trials},
                      {"failures", s.failures},
                      {"worst_defect", s.worst_defect},
                      {"elapsed_ms", s.elapsed_ms},
                      {"failures_detail", std::move(details)}});
  }
  return {{"version", 1}, {"seed", r.seed}, {"suites", std::move(suites)}};
}

std::string text_table(const Report& r) {
  std::ostringstream os;
  char line[160];
  os << "seed " << r.seed << "\n";
  std::snprintf(line, sizeof line, "%-18s %8s %9s %14s %11s\n", "suite", "trials", "failures", "worst_defect",
                "elapsed_ms");
  os << line;
  for (const auto& s : r.suites) {
    std::snprintf(line, sizeof line, "%-18s %8d %9d %14.6e %11lld\n", s.name.c_str(), s.trials, s.failures,
                  s.worst_defect, static_cast<long long>(s.elapsed_ms));
    os << line;
  }
  os << "total failures " << r.failures() << "\n";
  for (const auto& s : r.suites)
    for (const auto& f : s.failures_detail)
      os << "  " << s.name << (f.fixture.empty() ? "" : "/" + f.fixture) << " " << f.check << " defect "
         << fmt(f.defect) << " expected " << f.expectation << " input " << f.input << "\n";
  return os.str();
}

}  // namespace

std::string format_report(const Report& r, ReportFormat format) {
  return format == ReportFormat::Json ? to_json(r).dump() : text_table(r);
}

void emit_report(const Report& r, ReportFormat format, const std::string& path) {
  std::string out = format_report(r, format);
  if (format == ReportFormat::Json) out += "\n";
  if (path == "-" || path.empty()) {
    std::cout << out << std::flush;
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(path, "cannot open for writing");
  os << out;
  if (!os) throw IoError(path, "write failed");
}

Report parse_report(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("report JSON: ") + e.what(), 1);
  }
  try {
    if (j.at("version").get<int>() != 1) throw ValidationError("version", "unsupported report version");
    Report r;
    r.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& s : j.at("suites")) {
      SuiteResult out;
      out.name = s.at("name").get<std::string>();
      out.trials = s.at("trials").get<int>();
      out.failures = s.at("failures").get<int>();
      out.worst_defect = s.at("worst_defect").get<double>();
      out.elapsed_ms = s.at("elapsed_ms").get<std::int64_t>();
      for (const auto& f : s.at("failures_detail"))
        out.failures_detail.push_back({f.at("fixture").get<std::string>(), f.at("check").get<std::string>(),
                                       f.at("input").get<std::string>(), f.at("defect").get<double>(),
                                       f.at("expectation").get<std::string>()});
      if (out.failures > out.trials || out.failures < 0) throw ValidationError("failures", "must lie in [0, trials]");
      if (!(out.worst_defect >= 0.0)) throw ValidationError("worst_defect", "must be >= 0");
      r.suites.push_back(std::move(out));
    }
    return r;
  } catch (const json::exception& e) {
    throw ValidationError("report", e.what());
  }
}

Report load_report(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(path, "cannot open report");
  std::ostringstream ss;
  ss << is.rdbuf();
  return parse_report(ss.str());
}

}  // namespace limgroup
