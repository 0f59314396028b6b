#include "ifsldp/output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <system_error>

#include "ifsldp/error.hpp"

namespace ifsldp {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

nlohmann::json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

nlohmann::json json_numbers(const std::vector<double>& v) {
  nlohmann::json out = nlohmann::json::array();
  for (double x : v) out.push_back(json_number(x));
  return out;
}

OutputWriter::OutputWriter(std::filesystem::path directory, std::string config_hash, bool csv,
                           bool json)
    : dir_(std::move(directory)), hash_(std::move(config_hash)), csv_(csv), json_(json) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) fail(ErrorCode::io, "cannot create output directory '" + dir_.string() + "': " + ec.message());
}

void OutputWriter::csv(const std::string& name, const Row& columns, const std::vector<Row>& rows) {
  if (!csv_) return;
  std::string out = std::string("# ifsldp ") + kToolVersion + " config_hash=" + hash_ + "\n";
  auto line = [&](const Row& r) {
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (k) out += ',';
      out += r[k];
    }
    out += '\n';
  };
  line(columns);
  for (const auto& r : rows) line(r);
  write_atomic(name, out);
}

void OutputWriter::json(const std::string& name, nlohmann::json body) {
  if (!json_) return;
  body["tool_version"] = kToolVersion;
  body["config_hash"] = hash_;
  write_atomic(name, body.dump(2) + "\n");
}

void OutputWriter::write_atomic(const std::string& name, const std::string& content) {
  const auto target = dir_ / name;
  const auto tmp = dir_ / (name + ".tmp");
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) fail(ErrorCode::io, "cannot write '" + tmp.string() + "'");
    f << content;
    if (!f.flush()) fail(ErrorCode::io, "write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) fail(ErrorCode::io, "cannot rename into '" + target.string() + "': " + ec.message());
  written_.push_back(target.string());
}

}  // namespace ifsldp
