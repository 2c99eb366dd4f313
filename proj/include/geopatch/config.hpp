#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

namespace geopatch {

/// INI-style configuration: `[section]` headers, `key = value` lines,
/// comments starting with ';' or '#'. Relative paths resolve against the
/// directory of the file.
class Config {
 public:
  static Config load(const std::filesystem::path& path);
  static Config parse(const std::string& text, std::filesystem::path base_dir = ".");

  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }
  std::vector<std::string> sections() const;
  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;

  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  /// Throws ParseError naming the missing key.
  std::string require(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& section, const std::string& key,
                       std::int64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  /// Comma-separated list, items trimmed, empty items dropped.
  std::vector<std::string> get_list(const std::string& section, const std::string& key) const;

  std::filesystem::path resolve(const std::string& path) const;

  void set(const std::string& section, const std::string& key, const std::string& value);
  /// Writes all sections in insertion order.
  void save(const std::filesystem::path& path) const;

 private:
  const boost::property_tree::ptree* section_tree(const std::string& section) const;

  boost::property_tree::ptree tree_;
  std::filesystem::path base_dir_;
  std::string origin_;
};

std::vector<double> parse_double_list(const std::string& text);
std::vector<std::int64_t> parse_int_list(const std::string& text);

}  // namespace geopatch
