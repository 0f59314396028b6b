// Links only against the shared library and its C header.

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "doctest.h"
#include "ifsldp/ifsldp.h"
#include "json.hpp"

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
grid:
  n_points: 65
schedule:
  betas: [1, 2, 5, 10, 20, 50, 100]
)";

struct S1 {
  ifsldp_system* sys = nullptr;
  ifsldp_potential* pot = nullptr;

  S1() {
    const double slopes[] = {0.5, 0.5}, offsets[] = {0.0, 0.5}, weights[] = {0.5, 0.5};
    const double values[] = {0.0, -1.0};
    REQUIRE(ifsldp_system_create(2, slopes, offsets, weights, 0.5, &sys) == IFSLDP_OK);
    REQUIRE(ifsldp_potential_constant(2, values, &pot) == IFSLDP_OK);
  }
  ~S1() {
    ifsldp_potential_free(pot);
    ifsldp_system_free(sys);
  }
};

nlohmann::json take(char* s) {
  auto j = nlohmann::json::parse(s);
  ifsldp_string_free(s);
  return j;
}

}  // namespace

TEST_CASE("version and exit-code mapping") {
  CHECK(std::string(ifsldp_version()) == "0.3.0");
  CHECK(ifsldp_exit_code(IFSLDP_OK) == 0);
  CHECK(ifsldp_exit_code(IFSLDP_PARSE) == 1);
  CHECK(ifsldp_exit_code(IFSLDP_VALIDATION) == 2);
  CHECK(ifsldp_exit_code(IFSLDP_SOLVER) == 3);
  CHECK(ifsldp_exit_code(IFSLDP_CONTRADICTION) == 4);
  CHECK(ifsldp_exit_code(IFSLDP_ARGUMENT) == 1);
  CHECK(ifsldp_exit_code(IFSLDP_IO) == 1);
  CHECK(ifsldp_exit_code(IFSLDP_INTERNAL) == 1);
}

TEST_CASE("words and word sums") {
  S1 s;
  const size_t w[] = {1, 0, 1};
  double x = 0.0;
  REQUIRE(ifsldp_eval_word(s.sys, w, 3, 0.0, &x) == IFSLDP_OK);
  CHECK(x == 0.625);  // binary 0.101

  const size_t bad[] = {2};
  CHECK(ifsldp_eval_word(s.sys, bad, 1, 0.0, &x) == IFSLDP_ARGUMENT);
  CHECK(std::strlen(ifsldp_last_error()) > 0);

  ifsldp_potential* place = nullptr;
  const double a[] = {0.0, -1.0}, b[] = {-1.0, 1.0};
  REQUIRE(ifsldp_potential_affine(2, a, b, 1.0, &place) == IFSLDP_OK);
  const size_t w00[] = {0, 0};
  double sum = 0.0;
  REQUIRE(ifsldp_word_sum(s.sys, place, w00, 2, 1.0, 0.0, &sum) == IFSLDP_OK);
  CHECK(sum == doctest::Approx(-1.5));
  ifsldp_potential_free(place);
}

TEST_CASE("system validation reports through the status") {
  const double slopes[] = {0.5, 1.1}, offsets[] = {0.0, 0.0}, weights[] = {0.5, 0.5};
  ifsldp_system* sys = nullptr;
  REQUIRE(ifsldp_system_create(2, slopes, offsets, weights, 0.5, &sys) == IFSLDP_OK);
  char* report = nullptr;
  CHECK(ifsldp_system_validate(sys, &report) == IFSLDP_VALIDATION);
  REQUIRE(report != nullptr);
  CHECK(std::string(report).find("map 1") != std::string::npos);
  ifsldp_string_free(report);
  ifsldp_system_free(sys);
}

TEST_CASE("eigenvalue, cycle mean and rate function") {
  S1 s;
  double lambda = 0.0, log_lambda = 0.0;
  std::vector<double> h(65);
  REQUIRE(ifsldp_eigen(s.sys, s.pot, 2.0, 65, &lambda, &log_lambda, h.data()) == IFSLDP_OK);
  CHECK(lambda == doctest::Approx((1 + std::exp(-2.0)) / 2).epsilon(1e-12));
  CHECK(h[0] == doctest::Approx(1.0));

  double mA = 1.0;
  REQUIRE(ifsldp_max_cycle_mean(s.sys, s.pot, 9, &mA) == IFSLDP_OK);
  CHECK(mA == 0.0);

  std::vector<double> I(65);
  REQUIRE(ifsldp_rate_function(s.sys, s.pot, 65, I.data()) == IFSLDP_OK);
  CHECK(I[0] == 0.0);
  CHECK(I[32] == 1.0);
  CHECK(I[48] == 2.0);  // 3/4

  CHECK(ifsldp_eigen(s.sys, s.pot, 1.0, 1, &lambda, nullptr, nullptr) == IFSLDP_ARGUMENT);
}

TEST_CASE("config handles: parse errors, overrides and hash") {
  ifsldp_config* cfg = nullptr;
  CHECK(ifsldp_config_parse("system: [", "x.yaml", &cfg) == IFSLDP_PARSE);
  CHECK(std::string(ifsldp_last_error()).rfind("x.yaml:", 0) == 0);
  CHECK(ifsldp_config_load("/nonexistent/ifsldp.yaml", &cfg) == IFSLDP_IO);

  REQUIRE(ifsldp_config_parse(kS1, "s1.yaml", &cfg) == IFSLDP_OK);
  char* h1 = nullptr;
  REQUIRE(ifsldp_config_hash(cfg, &h1) == IFSLDP_OK);
  CHECK(std::strlen(h1) == 16);

  CHECK(ifsldp_config_override(cfg, "grid.nope=1") == IFSLDP_PARSE);
  CHECK(ifsldp_config_override(cfg, "garbage") == IFSLDP_ARGUMENT);
  REQUIRE(ifsldp_config_override(cfg, "tolerances.ldp=0.2") == IFSLDP_OK);
  char* h2 = nullptr;
  REQUIRE(ifsldp_config_hash(cfg, &h2) == IFSLDP_OK);
  CHECK(std::string(h1) != std::string(h2));

  char* eff = nullptr;
  REQUIRE(ifsldp_config_effective_json(cfg, &eff) == IFSLDP_OK);
  CHECK(take(eff)["tolerances"]["ldp"] == 0.2);

  char* out = nullptr;
  REQUIRE(ifsldp_run_validate(cfg, &out) == IFSLDP_OK);
  const auto j = take(out);
  CHECK(j["exit_code"] == 0);
  CHECK(j["summary"]["config_hash"] == std::string(h2));

  ifsldp_string_free(h1);
  ifsldp_string_free(h2);
  ifsldp_config_free(cfg);
}

TEST_CASE("commands through the C API") {
  ifsldp_config* cfg = nullptr;
  REQUIRE(ifsldp_config_parse(kS1, "s1.yaml", &cfg) == IFSLDP_OK);
  REQUIRE(ifsldp_config_set_output_dir(cfg, "capi_out") == IFSLDP_OK);

  char* out = nullptr;
  REQUIRE(ifsldp_run_tropical(cfg, &out) == IFSLDP_OK);
  auto j = take(out);
  CHECK(j["summary"]["aubry"] == nlohmann::json::array({0.0}));
  CHECK(j["summary"]["irreducible"] == true);

  REQUIRE(ifsldp_run_ldp(cfg, 2, &out) == IFSLDP_OK);
  j = take(out);
  CHECK(j["exit_code"] == 0);

  CHECK(ifsldp_run_oracle(cfg, "mane", 30, &out) == IFSLDP_VALIDATION);
  CHECK(ifsldp_run_oracle(cfg, "nope", 4, &out) == IFSLDP_ARGUMENT);
  CHECK(ifsldp_run_thermo(cfg, -1.0, &out) == IFSLDP_ARGUMENT);
  CHECK(ifsldp_run_thermo(nullptr, 1.0, &out) == IFSLDP_ARGUMENT);
  ifsldp_config_free(cfg);
}
