#include "ifsldp/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "ifsldp/error.hpp"

namespace ifsldp {

namespace {

class Parser {
 public:
  explicit Parser(std::string source) : source_(std::move(source)) {}

  [[noreturn]] void error(const YAML::Node& at, const std::string& msg) const {
    std::ostringstream os;
    os << source_;
    if (!at.Mark().is_null()) os << ":" << at.Mark().line + 1 << ":" << at.Mark().column + 1;
    os << ": " << msg;
    fail(ErrorCode::parse, os.str());
  }

  void require_map(const YAML::Node& n, const std::string& what) const {
    if (!n.IsMap()) error(n, what + " must be a mapping");
  }

  void only_keys(const YAML::Node& n, const std::string& what,
                 std::initializer_list<const char*> allowed) const {
    require_map(n, what);
    for (const auto& kv : n) {
      const std::string key = kv.first.as<std::string>();
      if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
        error(kv.first, "unknown key '" + key + "' in " + what);
    }
  }

  YAML::Node need(const YAML::Node& parent, const char* key, const std::string& what) const {
    const YAML::Node n = parent[key];
    if (!n) error(parent, what + " is missing required key '" + key + "'");
    return n;
  }

  double number(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) error(n, what + " must be a number");
    try {
      return n.as<double>();
    } catch (const YAML::Exception&) {
      error(n, what + " must be a number, got '" + n.Scalar() + "'");
    }
  }

  std::size_t count(const YAML::Node& n, const std::string& what) const {
    const double v = number(n, what);
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e12)
      error(n, what + " must be a non-negative integer");
    return static_cast<std::size_t>(v);
  }

  std::string text(const YAML::Node& n, const std::string& what) const {
    if (!n.IsScalar()) error(n, what + " must be a string");
    return n.Scalar();
  }

  std::vector<double> numbers(const YAML::Node& n, const std::string& what) const {
    if (!n.IsSequence()) error(n, what + " must be a list of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < n.size(); ++k)
      out.push_back(number(n[k], what + "[" + std::to_string(k) + "]"));
    return out;
  }

 private:
  std::string source_;
};

int line_of(const YAML::Node& n) { return n.Mark().is_null() ? 0 : n.Mark().line + 1; }

void apply_override(YAML::Node root, const Override& ov) {
  std::vector<std::string> path;
  std::stringstream ss(ov.first);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty()) fail(ErrorCode::argument, "override key '" + ov.first + "' is malformed");
    path.push_back(part);
  }
  if (path.empty()) fail(ErrorCode::argument, "empty override key");
  // yaml-cpp nodes are handles: reassigning a local Node would rebind it, so
  // walk with fresh handles instead.
  std::vector<YAML::Node> chain{root};
  for (std::size_t k = 0; k + 1 < path.size(); ++k) {
    YAML::Node next = chain.back()[path[k]];
    if (next && !next.IsMap())
      fail(ErrorCode::argument, "override '" + ov.first + "': '" + path[k] + "' is not a block");
    chain.push_back(next);
  }
  YAML::Node target = chain.back()[path.back()];
  if (target && !target.IsScalar())
    fail(ErrorCode::argument, "override '" + ov.first + "' does not name a scalar field");
  chain.back()[path.back()] = YAML::Load(ov.second);
  if (!chain.back()[path.back()].IsScalar())
    fail(ErrorCode::argument, "override value for '" + ov.first + "' must be a scalar");
}

std::string method_name(CalibrationMethod m) {
  return m == CalibrationMethod::policy ? "policy" : "discounted";
}

const char* kind_name(Potential::Kind k) {
  switch (k) {
    case Potential::Kind::constant:
      return "constant";
    case Potential::Kind::affine:
      return "affine";
    case Potential::Kind::tabulated:
      return "tabulated";
  }
  return "?";
}

}  // namespace

Override parse_override(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == text.size())
    fail(ErrorCode::argument, "override '" + text + "' is not KEY=VALUE");
  return {text.substr(0, eq), text.substr(eq + 1)};
}

ExperimentConfig parse_config(const std::string& yaml_text, const std::string& source,
                              const std::vector<Override>& overrides) {
  Parser P(source);
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    std::ostringstream os;
    os << source << ":" << e.mark.line + 1 << ":" << e.mark.column + 1 << ": " << e.msg;
    fail(ErrorCode::parse, os.str());
  }
  if (!root || root.IsNull()) fail(ErrorCode::parse, source + ": empty configuration");
  P.only_keys(root, "configuration",
              {"system", "potential", "grid", "symbolic", "schedule", "tolerances", "tropical",
               "ldp", "output"});
  for (const auto& ov : overrides) apply_override(root, ov);
  P.only_keys(root, "configuration",
              {"system", "potential", "grid", "symbolic", "schedule", "tolerances", "tropical",
               "ldp", "output"});

  ExperimentConfig cfg;
  cfg.source = source;
  for (const auto& kv : root) cfg.lines[kv.first.as<std::string>()] = line_of(kv.first);

  // system
  const YAML::Node sys = P.need(root, "system", "configuration");
  P.only_keys(sys, "system", {"maps", "weights", "gamma"});
  const YAML::Node maps = P.need(sys, "maps", "system");
  if (!maps.IsSequence() || maps.size() == 0) P.error(maps, "system.maps must be a non-empty list");
  for (std::size_t j = 0; j < maps.size(); ++j) {
    const std::string what = "system.maps[" + std::to_string(j) + "]";
    P.only_keys(maps[j], what, {"slope", "offset"});
    cfg.lines["map " + std::to_string(j)] = line_of(maps[j]);
    cfg.system.maps.push_back({P.number(P.need(maps[j], "slope", what), what + ".slope"),
                               P.number(P.need(maps[j], "offset", what), what + ".offset")});
  }
  cfg.system.weights = P.numbers(P.need(sys, "weights", "system"), "system.weights");
  cfg.lines["weights"] = line_of(sys["weights"]);
  if (sys["gamma"]) cfg.lines["gamma"] = line_of(sys["gamma"]);
  cfg.system.gamma = P.number(P.need(sys, "gamma", "system"), "system.gamma");

  // potential
  const YAML::Node pot = P.need(root, "potential", "configuration");
  P.only_keys(pot, "potential", {"kind", "values", "intercepts", "slopes", "table", "lip_bound"});
  const std::string kind = P.text(P.need(pot, "kind", "potential"), "potential.kind");
  struct {
    std::vector<double> values, intercepts, slopes;
    std::vector<std::vector<double>> table;
  } pp;
  double lip = 0.0;
  const bool has_lip = static_cast<bool>(pot["lip_bound"]);
  if (has_lip) lip = P.number(pot["lip_bound"], "potential.lip_bound");
  auto forbid = [&](std::initializer_list<const char*> keys) {
    for (const char* k : keys)
      if (pot[k]) P.error(pot[k], std::string("'") + k + "' does not apply to a " + kind + " potential");
  };
  if (kind == "constant") {
    forbid({"intercepts", "slopes", "table"});
    pp.values = P.numbers(P.need(pot, "values", "potential"), "potential.values");
    cfg.potential = Potential::constant(pp.values, lip);
  } else if (kind == "affine") {
    forbid({"values", "table"});
    pp.intercepts = P.numbers(P.need(pot, "intercepts", "potential"), "potential.intercepts");
    pp.slopes = P.numbers(P.need(pot, "slopes", "potential"), "potential.slopes");
    if (pp.intercepts.size() != pp.slopes.size())
      P.error(pot["slopes"], "potential.slopes must match potential.intercepts in length");
    if (!has_lip)
      for (double s : pp.slopes) lip = std::max(lip, std::abs(s));
    cfg.potential = Potential::affine(pp.intercepts, pp.slopes, lip);
  } else if (kind == "tabulated") {
    forbid({"values", "intercepts", "slopes"});
    const YAML::Node tab = P.need(pot, "table", "potential");
    if (!tab.IsSequence() || tab.size() == 0) P.error(tab, "potential.table must be a list of rows");
    for (std::size_t j = 0; j < tab.size(); ++j) {
      pp.table.push_back(P.numbers(tab[j], "potential.table[" + std::to_string(j) + "]"));
      if (pp.table.back().size() < 2) P.error(tab[j], "potential.table rows need at least 2 values");
      if (!has_lip) {
        const auto& row = pp.table.back();
        const double step = 1.0 / static_cast<double>(row.size() - 1);
        for (std::size_t k = 0; k + 1 < row.size(); ++k)
          lip = std::max(lip, std::abs(row[k + 1] - row[k]) / step);
      }
    }
    cfg.potential = Potential::tabulated(pp.table, lip);
  } else {
    P.error(pot["kind"], "potential.kind must be constant, affine or tabulated, got '" + kind + "'");
  }

  if (const YAML::Node g = root["grid"]) {
    P.only_keys(g, "grid", {"n_points"});
    cfg.n_points = P.count(P.need(g, "n_points", "grid"), "grid.n_points");
  }
  if (const YAML::Node s = root["symbolic"]) {
    P.only_keys(s, "symbolic", {"depth"});
    cfg.symbolic_depth = P.count(P.need(s, "depth", "symbolic"), "symbolic.depth");
  }
  if (const YAML::Node s = root["schedule"]) {
    P.only_keys(s, "schedule", {"betas", "discount_kmax"});
    if (s["betas"]) cfg.betas = P.numbers(s["betas"], "schedule.betas");
    if (s["discount_kmax"])
      cfg.discount_kmax = static_cast<int>(P.count(s["discount_kmax"], "schedule.discount_kmax"));
  }
  if (const YAML::Node t = root["tolerances"]) {
    P.only_keys(t, "tolerances",
                {"eigen", "gibbs", "discounted", "calibration", "aubry", "invariance", "ldp",
                 "varadhan"});
    auto opt = [&](const char* key, double& dst) {
      if (t[key]) dst = P.number(t[key], std::string("tolerances.") + key);
    };
    opt("eigen", cfg.tol.eigen);
    opt("gibbs", cfg.tol.gibbs);
    opt("discounted", cfg.tol.discounted);
    opt("calibration", cfg.tol.calibration);
    opt("aubry", cfg.tol.aubry);
    opt("invariance", cfg.tol.invariance);
    opt("ldp", cfg.tol.ldp);
    opt("varadhan", cfg.tol.varadhan);
  }
  if (const YAML::Node t = root["tropical"]) {
    P.only_keys(t, "tropical", {"method"});
    const std::string m = P.text(P.need(t, "method", "tropical"), "tropical.method");
    if (m == "policy")
      cfg.method = CalibrationMethod::policy;
    else if (m == "discounted")
      cfg.method = CalibrationMethod::discounted;
    else
      P.error(t["method"], "tropical.method must be policy or discounted, got '" + m + "'");
  }
  if (const YAML::Node l = root["ldp"]) {
    P.only_keys(l, "ldp", {"ball_centers", "ball_radius"});
    if (l["ball_centers"]) cfg.ball_centers = P.numbers(l["ball_centers"], "ldp.ball_centers");
    if (l["ball_radius"]) cfg.ball_radius = P.number(l["ball_radius"], "ldp.ball_radius");
  }
  if (const YAML::Node o = root["output"]) {
    P.only_keys(o, "output", {"directory", "formats"});
    if (o["directory"]) cfg.output_directory = P.text(o["directory"], "output.directory");
    if (const YAML::Node f = o["formats"]) {
      if (!f.IsSequence()) P.error(f, "output.formats must be a list");
      cfg.formats.clear();
      for (std::size_t k = 0; k < f.size(); ++k) {
        const std::string fmt = P.text(f[k], "output.formats[" + std::to_string(k) + "]");
        if (fmt != "csv" && fmt != "json") P.error(f[k], "output format must be csv or json");
        cfg.formats.push_back(fmt);
      }
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path, const std::vector<Override>& overrides) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path, overrides);
}

nlohmann::json ExperimentConfig::canonical() const {
  using nlohmann::json;
  json maps = json::array();
  for (const auto& m : system.maps) maps.push_back({{"slope", m.slope}, {"offset", m.offset}});
  json pot = {{"kind", kind_name(potential.kind())}, {"lip_bound", potential.lip_bound()}};
  switch (potential.kind()) {
    case Potential::Kind::constant:
      pot["values"] = potential.values();
      break;
    case Potential::Kind::affine:
      pot["intercepts"] = potential.values();
      pot["slopes"] = potential.slopes();
      break;
    case Potential::Kind::tabulated:
      pot["table"] = potential.table();
      break;
  }
  return {
      {"system", {{"maps", maps}, {"weights", system.weights}, {"gamma", system.gamma}}},
      {"potential", pot},
      {"grid", {{"n_points", n_points}}},
      {"symbolic", {{"depth", symbolic_depth}}},
      {"schedule", {{"betas", betas}, {"discount_kmax", discount_kmax}}},
      {"tolerances",
       {{"eigen", tol.eigen},
        {"gibbs", tol.gibbs},
        {"discounted", tol.discounted},
        {"calibration", tol.calibration},
        {"aubry", tol.aubry},
        {"invariance", tol.invariance},
        {"ldp", tol.ldp},
        {"varadhan", tol.varadhan}}},
      {"tropical", {{"method", method_name(method)}}},
      {"ldp", {{"ball_centers", ball_centers}, {"ball_radius", ball_radius}}},
      {"output", {{"formats", formats}}},
  };
}

std::string ExperimentConfig::hash() const {
  const std::string text = canonical().dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool ExperimentConfig::wants(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

ValidationReport validate_config(const ExperimentConfig& cfg) {
  ValidationReport rep;
  auto at = [&](const char* block) {
    const auto it = cfg.lines.find(block);
    std::string s = cfg.source;
    if (it != cfg.lines.end() && it->second > 0) s += ":" + std::to_string(it->second);
    return s + ": ";
  };
  // System messages start with "map j", "maps a,b", "weights" or "gamma";
  // anchor them at that entry when its line is known.
  for (const auto& v : validate_system(cfg.system).violations) {
    std::string key = "system";
    for (const auto& [name, line] : cfg.lines) {
      if (name == "system" || line <= 0) continue;
      const std::string plural = name.rfind("map ", 0) == 0 ? "maps " + name.substr(4) + "," : "";
      if (v.rfind(name + ":", 0) == 0 || v.rfind(name + " ", 0) == 0 ||
          (!plural.empty() && v.rfind(plural, 0) == 0))
        key = name;
    }
    rep.violations.push_back(at(key.c_str()) + v);
  }
  for (const auto& v : validate_potential(cfg.potential, cfg.system.size()).violations)
    rep.violations.push_back(at("potential") + v);
  if (cfg.n_points < 2) rep.violations.push_back(at("grid") + "n_points must be at least 2");
  if (cfg.betas.empty()) rep.violations.push_back(at("schedule") + "betas must not be empty");
  for (std::size_t k = 0; k < cfg.betas.size(); ++k) {
    if (!(cfg.betas[k] > 0.0) || (k > 0 && cfg.betas[k] <= cfg.betas[k - 1])) {
      rep.violations.push_back(at("schedule") + "betas must be positive and strictly increasing");
      break;
    }
  }
  if (cfg.discount_kmax < 1 || cfg.discount_kmax > 50)
    rep.violations.push_back(at("schedule") + "discount_kmax must be in [1, 50]");
  if (cfg.symbolic_depth < 1) rep.violations.push_back(at("symbolic") + "depth must be at least 1");
  if (!(cfg.ball_radius > 0.0)) rep.violations.push_back(at("ldp") + "ball_radius must be positive");
  const auto& t = cfg.tol;
  for (double v : {t.eigen, t.gibbs, t.discounted, t.calibration, t.aubry, t.invariance, t.ldp, t.varadhan})
    if (!(v > 0.0)) {
      rep.violations.push_back(at("tolerances") + "tolerances must be positive");
      break;
    }
  return rep;
}

}  // namespace ifsldp
