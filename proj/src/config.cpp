#include "geopatch/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

#include "geopatch/error.hpp"

namespace geopatch {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

template <typename T>
T parse_number(const std::string& text, const std::string& what) {
  const std::string t = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) {
    throw Error(ErrorCode::ParseError, "invalid number '" + t + "' for " + what);
  }
  return value;
}

}  // namespace

Config Config::load(const std::filesystem::path& path) {
  Config c;
  try {
    boost::property_tree::ini_parser::read_ini(path.string(), c.tree_);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  c.base_dir_ = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  c.origin_ = path.string();
  return c;
}

Config Config::parse(const std::string& text, std::filesystem::path base_dir) {
  Config c;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, c.tree_);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCode::ParseError, e.what());
  }
  c.base_dir_ = std::move(base_dir);
  c.origin_ = "<string>";
  return c;
}

const boost::property_tree::ptree* Config::section_tree(const std::string& section) const {
  const auto it = tree_.find(section);
  return it == tree_.not_found() ? nullptr : &it->second;
}

std::vector<std::string> Config::sections() const {
  std::vector<std::string> out;
  for (const auto& [name, child] : tree_) {
    if (!child.empty()) {
      out.push_back(name);
    }
  }
  return out;
}

bool Config::has_section(const std::string& section) const {
  return section_tree(section) != nullptr;
}

bool Config::has(const std::string& section, const std::string& key) const {
  return get(section, key).has_value();
}

std::optional<std::string> Config::get(const std::string& section, const std::string& key) const {
  const auto* s = section_tree(section);
  if (!s) {
    return std::nullopt;
  }
  const auto it = s->find(key);
  if (it == s->not_found()) {
    return std::nullopt;
  }
  std::string v = it->second.data();
  for (std::size_t i = 1; i < v.size(); ++i) {
    if ((v[i] == ';' || v[i] == '#') && (v[i - 1] == ' ' || v[i - 1] == '\t')) {
      v.resize(i);
      break;
    }
  }
  return trim(v);
}

std::string Config::require(const std::string& section, const std::string& key) const {
  auto v = get(section, key);
  if (!v) {
    throw Error(ErrorCode::ParseError, origin_ + ": missing [" + section + "] " + key);
  }
  return *v;
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  return get(section, key).value_or(fallback);
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  const auto v = get(section, key);
  return v ? parse_number<double>(*v, section + "." + key) : fallback;
}

std::int64_t Config::get_int(const std::string& section, const std::string& key,
                             std::int64_t fallback) const {
  const auto v = get(section, key);
  return v ? parse_number<std::int64_t>(*v, section + "." + key) : fallback;
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  auto v = get(section, key);
  if (!v) {
    return fallback;
  }
  std::string s = *v;
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  if (s == "true" || s == "yes" || s == "1" || s == "on") return true;
  if (s == "false" || s == "no" || s == "0" || s == "off") return false;
  throw Error(ErrorCode::ParseError, "invalid boolean '" + *v + "' for " + section + "." + key);
}

std::vector<std::string> Config::get_list(const std::string& section,
                                          const std::string& key) const {
  const auto v = get(section, key);
  return v ? split_list(*v) : std::vector<std::string>{};
}

std::filesystem::path Config::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() ? p : base_dir_ / p;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  auto found = tree_.find(section);
  auto& child = found == tree_.not_found()
                    ? tree_.push_back({section, boost::property_tree::ptree()})->second
                    : found->second;
  const auto k = child.find(key);
  if (k == child.not_found()) {
    child.push_back({key, boost::property_tree::ptree(value)});
  } else {
    k->second.put_value(value);
  }
}

void Config::save(const std::filesystem::path& path) const {
  try {
    boost::property_tree::ini_parser::write_ini(path.string(), tree_);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorCode::IoError, e.what());
  }
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    out.push_back(parse_number<double>(item, "list"));
  }
  return out;
}

std::vector<std::int64_t> parse_int_list(const std::string& text) {
  std::vector<std::int64_t> out;
  for (const auto& item : split_list(text)) {
    out.push_back(parse_number<std::int64_t>(item, "list"));
  }
  return out;
}

}  // namespace geopatch
