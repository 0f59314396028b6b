#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ifsldp/config.hpp"
#include "ifsldp/error.hpp"
#include "ifsldp/output.hpp"
#include "ifsldp/runner.hpp"

using namespace ifsldp;
namespace fs = std::filesystem;

namespace {

const char* kS1 = R"(system:
  maps:
    - {slope: 0.5, offset: 0.0}
    - {slope: 0.5, offset: 0.5}
  weights: [0.5, 0.5]
  gamma: 0.5
potential:
  kind: constant
  values: [0.0, -1.0]
)";

std::string with(const std::string& extra) { return std::string(kS1) + extra; }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode{0};
}

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("ifsldp_test_config_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("defaults fill every optional block") {
  const ExperimentConfig c = parse_config(kS1, "s1.yaml");
  CHECK(c.system.size() == 2);
  CHECK(c.potential.kind() == Potential::Kind::constant);
  CHECK(c.n_points == 257);
  CHECK(c.symbolic_depth == 12);
  CHECK(c.betas == std::vector<double>{1, 2, 5, 10, 20, 50, 100});
  CHECK(c.tol.ldp == 0.1);
  CHECK(c.tol.varadhan == 0.05);
  CHECK(c.method == CalibrationMethod::policy);
  CHECK(validate_config(c).ok());
}

TEST_CASE("affine lip_bound defaults to the largest slope") {
  const auto c = parse_config(R"(system:
  maps: [{slope: 0.5, offset: 0.0}, {slope: 0.5, offset: 0.5}]
  weights: [0.5, 0.5]
  gamma: 0.5
potential:
  kind: affine
  intercepts: [0.0, -1.0]
  slopes: [-2.0, 1.0]
)",
                              "a.yaml");
  CHECK(c.potential.lip_bound() == 2.0);
  CHECK(c.potential(0, 0.5) == doctest::Approx(-1.0));
}

TEST_CASE("syntax errors carry file, line and column") {
  const std::string bad = "system:\n  maps: [{slope: 0.5, offset: 0\n  weights: [1]\n";
  CHECK(code_of([&] { parse_config(bad, "bad.yaml"); }) == ErrorCode::parse);
  CHECK(message_of([&] { parse_config(bad, "bad.yaml"); }).rfind("bad.yaml:", 0) == 0);
}

TEST_CASE("unknown keys are rejected at their line") {
  const std::string msg = message_of([] { parse_config(with("grid:\n  n_pts: 9\n"), "u.yaml"); });
  CHECK(msg.find("u.yaml:11:") == 0);
  CHECK(msg.find("n_pts") != std::string::npos);
  CHECK(code_of([] { parse_config(with("extra: 1\n"), "u.yaml"); }) == ErrorCode::parse);
  CHECK(code_of([] { parse_config(with("tolerances:\n  ldp: abc\n"), "u.yaml"); }) == ErrorCode::parse);
}

TEST_CASE("validation anchors map violations at the map entry") {
  const std::string text = R"(system:
  maps:
    - {slope: 0.5, offset: 0.0}
    - {slope: 1.1, offset: 0.0}
  weights: [0.5, 0.5]
  gamma: 0.5
potential:
  kind: constant
  values: [0.0, -1.0]
)";
  const auto rep = validate_config(parse_config(text, "s.yaml"));
  REQUIRE_FALSE(rep.ok());
  CHECK(rep.violations[0].rfind("s.yaml:4: map 1", 0) == 0);
  CHECK(code_of([&] { run_thermo(parse_config(text, "s.yaml"), 1.0); }) == ErrorCode::validation);
}

TEST_CASE("schedule must increase") {
  const auto c = parse_config(with("schedule:\n  betas: [2, 1]\n"), "s.yaml");
  CHECK_FALSE(validate_config(c).ok());
}

TEST_CASE("overrides touch scalars only and re-enter the parser") {
  const auto c = parse_config(kS1, "s.yaml", {parse_override("tolerances.ldp=0.2"),
                                              parse_override("grid.n_points=33")});
  CHECK(c.tol.ldp == 0.2);
  CHECK(c.n_points == 33);
  CHECK(code_of([] { parse_override("novalue"); }) == ErrorCode::argument);
  CHECK(code_of([] { parse_config(kS1, "s.yaml", {{"system.maps", "1"}}); }) == ErrorCode::argument);
  CHECK(code_of([] { parse_config(kS1, "s.yaml", {{"grid.bogus", "1"}}); }) == ErrorCode::parse);
}

TEST_CASE("hash pins the experiment, not the output directory") {
  const auto a = parse_config(kS1, "a.yaml");
  const auto b = parse_config(with("output:\n  directory: elsewhere\n"), "b.yaml");
  const auto c = parse_config(kS1, "a.yaml", {{"tolerances.ldp", "0.2"}});
  const auto d = parse_config(with("grid:\n  n_points: 257\n"), "d.yaml");
  CHECK(a.hash().size() == 16);
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() == d.hash());  // explicit defaults hash like implicit ones
  CHECK(a.hash() != c.hash());
}

TEST_CASE("numbers serialize losslessly") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(json_number(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(json_number(2.5) == 2.5);
}

TEST_CASE("thermo command: closed-form pressure and entropy") {
  const auto dir = scratch("thermo");
  RunOptions opt;
  opt.out_dir = dir.string();
  const auto cfg = parse_config(kS1, "s1.yaml");
  const auto r = run_thermo(cfg, 1.0, opt);
  const double P0 = 1.0 / (1.0 + std::exp(-1.0));
  CHECK(r.summary["pressure"].get<double>() == doctest::Approx(std::log((1 + std::exp(-1.0)) / 2)).epsilon(1e-12));
  CHECK(r.summary["pressure"].get<double>() == doctest::Approx(-0.379885).epsilon(1e-6));
  CHECK(r.summary["j_marginal"][0].get<double>() == doctest::Approx(P0).epsilon(1e-10));
  CHECK(r.summary["identity_residual"].get<double>() < 1e-9);
  CHECK(r.files.size() == 5);

  const std::string head = slurp(dir / "thermo_summary.csv");
  CHECK(head.rfind("# ifsldp 0.3.0 config_hash=" + cfg.hash() + "\n", 0) == 0);
  const auto j = nlohmann::json::parse(slurp(dir / "thermo_summary.json"));
  CHECK(j["config_hash"] == cfg.hash());
  CHECK(j["tool_version"] == "0.3.0");

  // Lists are not scalars and cannot be overridden.
  CHECK(code_of([] { parse_config(kS1, "z.yaml", {{"potential.values", "[0, 0]"}}); }) ==
        ErrorCode::argument);
}

TEST_CASE("thermo command: A = 0 and very large beta") {
  const auto dir = scratch("thermo0");
  RunOptions opt;
  opt.out_dir = dir.string();
  auto cfg = parse_config(R"(system:
  maps: [{slope: 0.5, offset: 0.0}, {slope: 0.5, offset: 0.5}]
  weights: [0.5, 0.5]
  gamma: 0.5
potential:
  kind: constant
  values: [0.0, 0.0]
)",
                          "z.yaml");
  const auto r = run_thermo(cfg, 3.0, opt);
  CHECK(std::abs(r.summary["pressure"].get<double>()) < 1e-14);
  CHECK(std::abs(r.summary["entropy"].get<double>()) < 1e-14);

  const auto big = run_thermo(parse_config(kS1, "s1.yaml"), 1000.0, opt);
  CHECK(big.summary["log_space"].get<bool>());
  CHECK(std::isfinite(big.summary["pressure_over_beta"].get<double>()));
}

TEST_CASE("tropical command on S1 and on the reducible example") {
  const auto dir = scratch("tropical");
  RunOptions opt;
  opt.out_dir = dir.string();
  const auto r = run_tropical(parse_config(kS1, "s1.yaml"), opt);
  CHECK(r.summary["mA"].get<double>() == 0.0);
  CHECK(r.summary["aubry"] == nlohmann::json::array({0.0}));
  CHECK(r.summary["irreducible"].get<bool>());
  CHECK(r.summary["invariance_residual"].get<double>() <= 1e-9);

  const auto red = run_tropical(parse_config(R"(system:
  maps:
    - {slope: 0.25, offset: 0.0}
    - {slope: 0.25, offset: 0.75}
    - {slope: 0.25, offset: 0.25}
    - {slope: 0.25, offset: 0.5}
  weights: [0.25, 0.25, 0.25, 0.25]
  gamma: 0.75
potential:
  kind: affine
  intercepts: [0.0, -1.0, -1.0, -1.0]
  slopes: [-1.0, 1.0, 0.0, 0.0]
)",
                                                "r.yaml"),
                                   opt);
  CHECK_FALSE(red.summary["irreducible"].get<bool>());
  CHECK(red.summary["aubry"] == nlohmann::json::array({0.0, 1.0}));

}

TEST_CASE("tropical command: A = 0 gives the zero density") {
  const auto dir = scratch("tropical0");
  RunOptions opt;
  opt.out_dir = dir.string();
  const std::string text = R"(system:
  maps: [{slope: 0.5, offset: 0.0}, {slope: 0.5, offset: 0.5}]
  weights: [0.5, 0.5]
  gamma: 0.5
potential:
  kind: constant
  values: [0.0, 0.0]
grid:
  n_points: 33
)";
  run_tropical(parse_config(text, "z.yaml"), opt);
  std::ifstream in(dir / "tropical_density.csv");
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string i, x, lambda;
    std::getline(ss, i, ',');
    std::getline(ss, x, ',');
    std::getline(ss, lambda, ',');
    CHECK(lambda == "0");
    ++rows;
  }
  CHECK(rows == 33);
}

TEST_CASE("ldp command: S1 with the default schedule passes every check") {
  const auto dir = scratch("ldp");
  RunOptions opt;
  opt.out_dir = dir.string();
  opt.threads = 3;
  const auto r = run_ldp(parse_config(kS1, "s1.yaml"), opt);
  CHECK(r.exit_code == 0);
  CHECK(r.summary["fail"].get<std::size_t>() == 0);
  CHECK(r.summary["inconclusive"].get<std::size_t>() == 0);
  CHECK(r.summary["pass"].get<std::size_t>() == r.summary["checks"].size());
}

TEST_CASE("ldp command: a tight tolerance turns into exit 4") {
  const auto dir = scratch("ldp_tight");
  RunOptions opt;
  opt.out_dir = dir.string();
  // A = 0 keeps a Laplace error of order log(1/h) / beta at beta = 100.
  const std::string zero = R"(system:
  maps: [{slope: 0.5, offset: 0.0}, {slope: 0.5, offset: 0.5}]
  weights: [0.5, 0.5]
  gamma: 0.5
potential:
  kind: constant
  values: [0.0, 0.0]
)";
  const auto r = run_ldp(parse_config(zero, "z.yaml", {{"tolerances.varadhan", "1e-6"}}), opt);
  CHECK(r.exit_code == 4);
  CHECK(r.summary["fail"].get<std::size_t>() > 0);
}

TEST_CASE("oracle command: refusal and zero potential") {
  const auto dir = scratch("oracle");
  RunOptions opt;
  opt.out_dir = dir.string();
  const auto cfg = parse_config(kS1, "s1.yaml", {{"grid.n_points", "33"}});
  CHECK(code_of([&] { run_oracle(cfg, OracleTarget::mane, 25, opt); }) == ErrorCode::validation);
  const auto d = run_oracle(cfg, OracleTarget::density, 12, opt);
  CHECK(d.summary["max_discrepancy"].get<double>() == 0.0);
  CHECK(d.summary["within_bound"].get<bool>());
  CHECK(code_of([] { parse_oracle_target("bogus"); }) == ErrorCode::argument);
}
