#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "limgroup/errors.hpp"
#include "limgroup/harness.hpp"

namespace limgroup {
namespace {

const std::string kFixtures = LIMGROUP_FIXTURE_DIR;

SuiteConfig parse(const std::string& text, const std::string& base = "") {
  std::istringstream is(text);
  return parse_config(is, base);
}

TEST(Config, EmptyFileGivesDefaults) {
  const SuiteConfig c = parse("");
  EXPECT_EQ(c.seed, 0u);
  EXPECT_EQ(c.trials, 100);
  EXPECT_EQ(c.tol.round_trip, 1e-6);
  EXPECT_EQ(c.tol.hom_defect, 1e-6);
  EXPECT_EQ(c.tol.exact, 1e-10);
  EXPECT_EQ(c.suites, suite_names());
  EXPECT_TRUE(c.fixtures.empty());
  EXPECT_FALSE(c.timing);
}

TEST(Config, SingleOverride) {
  const SuiteConfig c = parse("# trials only\ntrials = 500   # inline comment\n");
  EXPECT_EQ(c.trials, 500);
  EXPECT_EQ(c.seed, 0u);
  EXPECT_EQ(c.steps, kDefaultSteps);
}

TEST(Config, NegativeToleranceNamesTheKey) {
  try {
    parse("round_trip = -1\n");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.key(), "round_trip");
  }
}

TEST(Config, ParseErrorsCarryTheLine) {
  try {
    parse("seed = 1\n\n# comment\nnot a pair\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4);
  }
  try {
    parse("seed = 1\nseed = 2\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
}

TEST(Config, ValidationErrors) {
  const auto key_of = [](const std::string& text) {
    try {
      parse(text);
    } catch (const ValidationError& e) {
      return e.key();
    }
    return std::string("none");
  };
  EXPECT_EQ(key_of("suites = lie_core, bogus\n"), "suites");
  EXPECT_EQ(key_of("trials = 0\n"), "trials");
  EXPECT_EQ(key_of("trials = many\n"), "trials");
  EXPECT_EQ(key_of("exact = 0\n"), "exact");
  EXPECT_EQ(key_of("colour = blue\n"), "colour");
  EXPECT_EQ(key_of("timing = maybe\n"), "timing");
  EXPECT_EQ(key_of("space_intervals = 100\n"), "space_intervals");
}

TEST(Config, ListsAndPaths) {
  const SuiteConfig c = parse("suites = lie_core regularity\nfixtures = a.fix, /abs/b.fix\n", "/tmp/cfg");
  EXPECT_EQ(c.suites, (std::vector<std::string>{"lie_core", "regularity"}));
  EXPECT_EQ(c.fixtures, (std::vector<std::string>{"/tmp/cfg/a.fix", "/abs/b.fix"}));
  EXPECT_TRUE(parse("suites =\n").suites.empty());
}

TEST(Config, LoadMissingFileIsAnIoError) { EXPECT_THROW(load_config("/nonexistent/x.cfg"), IoError); }

TEST(Fixture, ShippedFilesLoad) {
  const Fixture det = load_fixture(kFixtures + "/gl_chain_det.fix");
  EXPECT_EQ(det.name, "gl_chain_det");
  EXPECT_EQ(det.system, "gl_chain");
  EXPECT_EQ(det.n, 3);
  const Fixture psi = load_fixture(kFixtures + "/gl_chain_det_corrupt_psi.fix");
  ASSERT_EQ(psi.psi_scale.size(), 1u);
  EXPECT_EQ(psi.psi_scale[0].first, 2);
  EXPECT_EQ(psi.psi_scale[0].second, 1.01);
  const FixtureModel m = build_fixture(psi);
  EXPECT_FALSE(m.extension);
  EXPECT_NE(m.build_error.find("psi_1"), std::string::npos);
  EXPECT_TRUE(build_fixture(det).extension);
}

TEST(Fixture, Validation) {
  const auto key_of = [](const std::string& text) {
    std::istringstream is(text);
    try {
      parse_fixture(is);
    } catch (const ValidationError& e) {
      return e.key();
    }
    return std::string("none");
  };
  EXPECT_EQ(key_of("system = gl_chain\nfamily = angle\n"), "family");
  EXPECT_EQ(key_of("system = torus\n"), "system");
  EXPECT_EQ(key_of("chart = cayley\n"), "chart");
  EXPECT_EQ(key_of("n = 9\n"), "n");
  EXPECT_EQ(key_of("system = weak_so2\nfamily = angle\nn = 3\nweights = 1, 2\n"), "weights");
  EXPECT_EQ(key_of("psi_scale = 2\n"), "psi_scale");

  Fixture so = default_angle_fixture();
  so.chart = "affine";
  try {
    build_fixture(so);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.key(), "chart");
  }
  Fixture radii = default_det_fixture();
  radii.radii = {0.9, 0.9};
  EXPECT_THROW(build_fixture(radii), ValidationError);
}

TEST(Report, EmptySuiteListIsAnEmptyReport) {
  SuiteConfig c;
  c.suites.clear();
  const Report r = run_suite(c);
  EXPECT_TRUE(r.suites.empty());
  EXPECT_EQ(r.failures(), 0);
  EXPECT_EQ(format_report(r, ReportFormat::Json), R"({"version":1,"seed":0,"suites":[]})");
}

TEST(Report, OnePassingSuite) {
  SuiteConfig c;
  c.trials = 5;
  c.suites = {"lie_core"};
  const Report r = run_suite(c);
  ASSERT_EQ(r.suites.size(), 1u);
  EXPECT_EQ(r.suites[0].name, "lie_core");
  EXPECT_EQ(r.suites[0].trials, 5);
  EXPECT_EQ(r.suites[0].failures, 0);
  EXPECT_NE(format_report(r, ReportFormat::Json).find(R"("failures":0,)"), std::string::npos);
  EXPECT_NE(format_report(r, ReportFormat::Json).find(R"("failures_detail":[])"), std::string::npos);
}

SuiteConfig small_config(const std::vector<std::string>& fixtures) {
  SuiteConfig c;
  c.seed = 11;
  c.trials = 8;
  c.path_trials = 1;
  c.time_steps = 200;
  c.space_intervals = 1024;
  c.suites = {"lie_core", "regularity", "direct_limit", "family_compat", "extension"};
  for (const auto& f : fixtures) c.fixtures.push_back(kFixtures + "/" + f);
  return c;
}

TEST(Report, ShippedDetFixturePasses) {
  const Report r = run_suite(small_config({"gl_chain_det.fix"}));
  EXPECT_EQ(r.failures(), 0) << format_report(r, ReportFormat::Text);
  for (const auto& s : r.suites) {
    EXPECT_GT(s.trials, 0) << s.name;
    EXPECT_LE(s.failures, s.trials);
    EXPECT_GE(s.worst_defect, 0.0);
  }
}

TEST(Report, CorruptedPsiFailsFamilyCompat) {
  const Report r = run_suite(small_config({"gl_chain_det_corrupt_psi.fix"}));
  int compat = -1;
  for (const auto& s : r.suites)
    if (s.name == "family_compat") compat = s.failures;
  EXPECT_GE(compat, 1);
  EXPECT_GT(r.failures(), 0);
}

TEST(Report, CorruptedNestingFailsDirectLimit) {
  SuiteConfig c = small_config({"gl_chain_corrupt_nesting.fix"});
  c.suites = {"direct_limit"};
  const Report r = run_suite(c);
  ASSERT_EQ(r.suites.size(), 1u);
  EXPECT_GE(r.suites[0].failures, 1);
  bool nesting = false;
  for (const auto& f : r.suites[0].failures_detail) nesting |= f.check == "nesting";
  EXPECT_TRUE(nesting);
}

TEST(Report, DeterministicAcrossRuns) {
  SuiteConfig c = small_config({"gl_chain_det.fix", "weak_so2_angle.fix"});
  c.suites = suite_names();
  const std::string a = format_report(run_suite(c), ReportFormat::Json);
  const std::string b = format_report(run_suite(c), ReportFormat::Json);
  EXPECT_EQ(a, b);
  c.seed = 12;
  EXPECT_NE(format_report(run_suite(c), ReportFormat::Json), a);
}

TEST(Report, JsonRoundTripIsByteIdentical) {
  const Report r = run_suite(small_config({"gl_chain_det_corrupt_psi.fix"}));
  const std::string once = format_report(r, ReportFormat::Json);
  const Report back = parse_report(once);
  EXPECT_EQ(format_report(back, ReportFormat::Json), once);
  EXPECT_EQ(format_report(back, ReportFormat::Text), format_report(r, ReportFormat::Text));
  EXPECT_TRUE(back == r);
}

TEST(Report, TextIsAFixedWidthTable) {
  Report r;
  r.seed = 4;
  r.suites.push_back({"regularity", 100, 0, 1.5e-12, 0, {}});
  r.suites.push_back({"extension", 7, 2, 0.25, 3, {{"det", "consistency", "x", 0.25, "f_j"}}});
  const std::string t = format_report(r, ReportFormat::Text);
  std::istringstream is(t);
  std::string header, cols, row1, row2;
  std::getline(is, header);
  std::getline(is, cols);
  std::getline(is, row1);
  std::getline(is, row2);
  EXPECT_EQ(header, "seed 4");
  EXPECT_EQ(cols.size(), row1.size());
  EXPECT_EQ(row1.size(), row2.size());
  EXPECT_NE(t.find("total failures 2"), std::string::npos);
}

TEST(Report, EmitToFileAndErrors) {
  const std::string path = ::testing::TempDir() + "limgroup_report.json";
  Report r;
  emit_report(r, ReportFormat::Json, path);
  EXPECT_EQ(format_report(load_report(path), ReportFormat::Json), R"({"version":1,"seed":0,"suites":[]})");
  std::remove(path.c_str());
  EXPECT_THROW(emit_report(r, ReportFormat::Json, "/nonexistent/dir/r.json"), IoError);
  EXPECT_THROW(parse_report("{not json"), ParseError);
  EXPECT_THROW(parse_report(R"({"version":2,"seed":0,"suites":[]})"), ValidationError);
  EXPECT_THROW(parse_format("yaml"), ValidationError);
}

TEST(Seeds, DifferPerSuite) {
  EXPECT_NE(suite_seed(0, "lie_core"), suite_seed(0, "regularity"));
  EXPECT_NE(suite_seed(0, "lie_core"), suite_seed(1, "lie_core"));
  EXPECT_EQ(suite_seed(5, "extension"), suite_seed(5, "extension"));
}

}  // namespace
}  // namespace limgroup
