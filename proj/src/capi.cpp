#include "ifsldp/ifsldp.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <sstream>
#include <string>
#include <vector>

#include "ifsldp/config.hpp"
#include "ifsldp/error.hpp"
#include "ifsldp/output.hpp"
#include "ifsldp/runner.hpp"
#include "ifsldp/thermo.hpp"
#include "ifsldp/tropical.hpp"
#include "ifsldp/ldp.hpp"

struct ifsldp_config {
  std::string text;
  std::string source;
  std::vector<ifsldp::Override> overrides;
  std::string out_dir;
  ifsldp::ExperimentConfig cfg;
};

struct ifsldp_system {
  ifsldp::IfsSystem sys;
};

struct ifsldp_potential {
  ifsldp::Potential pot;
};

namespace {

thread_local std::string g_last_error;

template <class F>
ifsldp_status guarded(F&& f) {
  try {
    g_last_error.clear();
    f();
    return IFSLDP_OK;
  } catch (const ifsldp::Error& e) {
    g_last_error = e.what();
    return static_cast<ifsldp_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return IFSLDP_INTERNAL;
}

void need(const void* p, const char* what) {
  if (p == nullptr) ifsldp::fail(ifsldp::ErrorCode::argument, std::string(what) + " is null");
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

char* result_json(const ifsldp::RunResult& r) {
  nlohmann::json j = {{"exit_code", r.exit_code},
                      {"summary", r.summary},
                      {"messages", r.messages},
                      {"files", r.files}};
  return dup(j.dump());
}

ifsldp::RunOptions options(const ifsldp_config* c, std::size_t threads = 1) {
  ifsldp::RunOptions o;
  o.out_dir = c->out_dir;
  o.threads = threads;
  return o;
}

ifsldp::Word word(const std::size_t* letters, std::size_t length) {
  if (length > 0) need(letters, "letters");
  return ifsldp::Word{std::vector<std::size_t>(letters, letters + length)};
}

void check_letters(const ifsldp::IfsSystem& sys, const ifsldp::Word& w) {
  for (std::size_t j : w.letters)
    if (j >= sys.size()) ifsldp::fail(ifsldp::ErrorCode::argument, "letter out of range");
}

ifsldp::Grid grid(std::size_t n_points) {
  if (n_points < 2) ifsldp::fail(ifsldp::ErrorCode::argument, "n_points must be at least 2");
  return ifsldp::Grid(n_points);
}

}  // namespace

extern "C" {

const char* ifsldp_version(void) { return ifsldp::kToolVersion; }

const char* ifsldp_last_error(void) { return g_last_error.c_str(); }

void ifsldp_string_free(char* s) { std::free(s); }

int ifsldp_exit_code(ifsldp_status status) {
  if (status == IFSLDP_OK) return 0;
  if (status == IFSLDP_INTERNAL) return 1;
  return ifsldp::exit_code_for(static_cast<ifsldp::ErrorCode>(status));
}

ifsldp_status ifsldp_config_load(const char* path, ifsldp_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    std::ifstream in(path);
    if (!in) ifsldp::fail(ifsldp::ErrorCode::io, std::string("cannot read config '") + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    auto c = std::make_unique<ifsldp_config>();
    c->text = ss.str();
    c->source = path;
    c->cfg = ifsldp::parse_config(c->text, c->source);
    *out = c.release();
  });
}

ifsldp_status ifsldp_config_parse(const char* yaml, const char* source_name, ifsldp_config** out) {
  return guarded([&] {
    need(yaml, "yaml");
    need(out, "out");
    auto c = std::make_unique<ifsldp_config>();
    c->text = yaml;
    c->source = source_name ? source_name : "<config>";
    c->cfg = ifsldp::parse_config(c->text, c->source);
    *out = c.release();
  });
}

ifsldp_status ifsldp_config_override(ifsldp_config* cfg, const char* assignment) {
  return guarded([&] {
    need(cfg, "config");
    need(assignment, "assignment");
    auto ovs = cfg->overrides;
    ovs.push_back(ifsldp::parse_override(assignment));
    cfg->cfg = ifsldp::parse_config(cfg->text, cfg->source, ovs);
    cfg->overrides = std::move(ovs);
  });
}

ifsldp_status ifsldp_config_set_output_dir(ifsldp_config* cfg, const char* dir) {
  return guarded([&] {
    need(cfg, "config");
    need(dir, "dir");
    cfg->out_dir = dir;
  });
}

ifsldp_status ifsldp_config_hash(const ifsldp_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = dup(cfg->cfg.hash());
  });
}

ifsldp_status ifsldp_config_effective_json(const ifsldp_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = dup(cfg->cfg.canonical().dump(2));
  });
}

void ifsldp_config_free(ifsldp_config* cfg) { delete cfg; }

ifsldp_status ifsldp_run_validate(const ifsldp_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = result_json(ifsldp::run_validate(cfg->cfg));
  });
}

ifsldp_status ifsldp_run_thermo(const ifsldp_config* cfg, double beta, char** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = result_json(ifsldp::run_thermo(cfg->cfg, beta, options(cfg)));
  });
}

ifsldp_status ifsldp_run_tropical(const ifsldp_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = result_json(ifsldp::run_tropical(cfg->cfg, options(cfg)));
  });
}

ifsldp_status ifsldp_run_ldp(const ifsldp_config* cfg, size_t threads, char** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    *out = result_json(ifsldp::run_ldp(cfg->cfg, options(cfg, threads)));
  });
}

ifsldp_status ifsldp_run_oracle(const ifsldp_config* cfg, const char* target, size_t depth,
                                char** out) {
  return guarded([&] {
    need(cfg, "config");
    need(target, "target");
    need(out, "out");
    *out = result_json(
        ifsldp::run_oracle(cfg->cfg, ifsldp::parse_oracle_target(target), depth, options(cfg)));
  });
}

ifsldp_status ifsldp_system_create(size_t n_maps, const double* slopes, const double* offsets,
                                   const double* weights, double gamma, ifsldp_system** out) {
  return guarded([&] {
    need(out, "out");
    if (n_maps == 0) ifsldp::fail(ifsldp::ErrorCode::argument, "at least one map expected");
    need(slopes, "slopes");
    need(offsets, "offsets");
    need(weights, "weights");
    auto s = std::make_unique<ifsldp_system>();
    for (std::size_t j = 0; j < n_maps; ++j) s->sys.maps.push_back({slopes[j], offsets[j]});
    s->sys.weights.assign(weights, weights + n_maps);
    s->sys.gamma = gamma;
    *out = s.release();
  });
}

ifsldp_status ifsldp_system_validate(const ifsldp_system* sys, char** report) {
  return guarded([&] {
    need(sys, "system");
    const ifsldp::ValidationReport rep = ifsldp::validate_system(sys->sys);
    if (report) *report = dup(rep.to_string());
    if (!rep.ok()) ifsldp::fail(ifsldp::ErrorCode::validation, rep.to_string());
  });
}

void ifsldp_system_free(ifsldp_system* sys) { delete sys; }

ifsldp_status ifsldp_eval_word(const ifsldp_system* sys, const size_t* letters, size_t length,
                               double x, double* out) {
  return guarded([&] {
    need(sys, "system");
    need(out, "out");
    const ifsldp::Word w = word(letters, length);
    check_letters(sys->sys, w);
    *out = ifsldp::eval_word(sys->sys, w, x);
  });
}

ifsldp_status ifsldp_potential_constant(size_t n_maps, const double* values,
                                        ifsldp_potential** out) {
  return guarded([&] {
    need(out, "out");
    need(values, "values");
    *out = new ifsldp_potential{ifsldp::Potential::constant({values, values + n_maps})};
  });
}

ifsldp_status ifsldp_potential_affine(size_t n_maps, const double* intercepts,
                                      const double* slopes, double lip_bound,
                                      ifsldp_potential** out) {
  return guarded([&] {
    need(out, "out");
    need(intercepts, "intercepts");
    need(slopes, "slopes");
    *out = new ifsldp_potential{ifsldp::Potential::affine(
        {intercepts, intercepts + n_maps}, {slopes, slopes + n_maps}, lip_bound)};
  });
}

void ifsldp_potential_free(ifsldp_potential* pot) { delete pot; }

ifsldp_status ifsldp_word_sum(const ifsldp_system* sys, const ifsldp_potential* pot,
                              const size_t* letters, size_t length, double x, double mA,
                              double* out) {
  return guarded([&] {
    need(sys, "system");
    need(pot, "potential");
    need(out, "out");
    const ifsldp::Word w = word(letters, length);
    check_letters(sys->sys, w);
    if (pot->pot.arity() != sys->sys.size())
      ifsldp::fail(ifsldp::ErrorCode::argument, "potential arity does not match the system");
    *out = ifsldp::word_sum(sys->sys, pot->pot, w, x, mA);
  });
}

ifsldp_status ifsldp_eigen(const ifsldp_system* sys, const ifsldp_potential* pot, double beta,
                           size_t n_points, double* lambda, double* log_lambda, double* h) {
  return guarded([&] {
    need(sys, "system");
    need(pot, "potential");
    ifsldp::require_valid(sys->sys);
    const ifsldp::EigenPair ep = ifsldp::eigen_power(sys->sys, pot->pot, beta, grid(n_points));
    if (lambda) *lambda = ep.lambda;
    if (log_lambda) *log_lambda = ep.log_lambda;
    if (h) std::copy(ep.h.begin(), ep.h.end(), h);
  });
}

ifsldp_status ifsldp_max_cycle_mean(const ifsldp_system* sys, const ifsldp_potential* pot,
                                    size_t n_points, double* out) {
  return guarded([&] {
    need(sys, "system");
    need(pot, "potential");
    need(out, "out");
    ifsldp::require_valid(sys->sys);
    const ifsldp::Grid g = grid(n_points);
    *out = ifsldp::max_cycle_mean(
        ifsldp::build_maxplus_matrix(sys->sys, ifsldp::tabulate(pot->pot, g), g));
  });
}

ifsldp_status ifsldp_rate_function(const ifsldp_system* sys, const ifsldp_potential* pot,
                                   size_t n_points, double* I) {
  return guarded([&] {
    need(sys, "system");
    need(pot, "potential");
    need(I, "I");
    ifsldp::require_valid(sys->sys);
    const ifsldp::Grid g = grid(n_points);
    const ifsldp::ZeroTempPack z = ifsldp::zero_temperature(sys->sys, pot->pot, g);
    const ifsldp::MaxPlusMatrix M = ifsldp::build_maxplus_matrix(sys->sys, z.q, g);
    const ifsldp::TropicalClosure S = ifsldp::kleene_star(M);
    const ifsldp::AubrySet aubry = ifsldp::aubry_set(S, 1e-8);
    const ifsldp::Density d =
        ifsldp::irreducibility_check(S, aubry, 1e-8)
            ? ifsldp::idempotent_density_irreducible(S, aubry, 1e-8)
            : ifsldp::idempotent_density_general(S, aubry, std::vector<double>(aubry.nodes.size(), 0.0));
    const ifsldp::RateFunction r = ifsldp::rate_function(d);
    std::copy(r.I.begin(), r.I.end(), I);
  });
}

}  // extern "C"
