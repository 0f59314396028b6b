#pragma once

// Deterministic result files. Every file names the tool version and the
// config hash; numbers use %.17g and infinities are written as "inf"/"-inf".

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace ifsldp {

inline constexpr const char* kToolVersion = "0.3.0";

std::string format_number(double v);
/// Finite values as JSON numbers, the rest as strings.
nlohmann::json json_number(double v);
nlohmann::json json_numbers(const std::vector<double>& v);

class OutputWriter {
 public:
  OutputWriter(std::filesystem::path directory, std::string config_hash, bool csv = true,
               bool json = true);

  using Row = std::vector<std::string>;
  /// First line "# ifsldp <version> config_hash=<hash>", then the column names.
  void csv(const std::string& name, const Row& columns, const std::vector<Row>& rows);
  /// Adds tool_version and config_hash to the object.
  void json(const std::string& name, nlohmann::json body);

  const std::vector<std::string>& written() const { return written_; }
  const std::filesystem::path& directory() const { return dir_; }

 private:
  void write_atomic(const std::string& name, const std::string& content);

  std::filesystem::path dir_;
  std::string hash_;
  bool csv_;
  bool json_;
  std::vector<std::string> written_;
};

}  // namespace ifsldp
