#include <fstream>
#include <sstream>

#include "dnas/config.hpp"

namespace dnas {

namespace {
std::string strip(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}
}  // namespace

ConfigFile ConfigFile::parse(const std::string& text, const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    std::string s = strip(line);
    const size_t hash = s.find('#');
    if (hash != std::string::npos) s = strip(s.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      check_input(s.back() == ']', where + ": malformed section header");
      section = strip(s.substr(1, s.size() - 2));
      check_input(!section.empty(), where + ": empty section name");
      cfg.values_[section];
      continue;
    }
    const size_t eq = s.find('=');
    check_input(eq != std::string::npos, where + ": expected 'key = value'");
    const std::string key = strip(s.substr(0, eq));
    const std::string value = strip(s.substr(eq + 1));
    check_input(!key.empty(), where + ": empty key");
    check_input(!cfg.values_[section].count(key), where + ": duplicate key '" + key + "'");
    cfg.values_[section][key] = value;
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::string& path) {
  std::ifstream in(path);
  check_input(in.good(), "config: cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return parse(os.str(), path);
}

const std::string* ConfigFile::find(const std::string& section, const std::string& key) const {
  auto sit = values_.find(section);
  if (sit == values_.end()) return nullptr;
  auto kit = sit->second.find(key);
  if (kit == sit->second.end()) return nullptr;
  consumed_.insert(section + "." + key);
  return &kit->second;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  auto sit = values_.find(section);
  return sit != values_.end() && sit->second.count(key) > 0;
}

std::string ConfigFile::get_str(const std::string& section, const std::string& key,
                                const std::string& fallback) {
  const std::string* v = find(section, key);
  return v ? *v : fallback;
}

int64_t ConfigFile::get_int(const std::string& section, const std::string& key, int64_t fallback) {
  const std::string* v = find(section, key);
  if (!v) return fallback;
  try {
    size_t pos = 0;
    const int64_t out = std::stoll(*v, &pos);
    check_input(pos == v->size(), "");
    return out;
  } catch (const std::logic_error&) {
    throw InvalidInput(origin_ + ": [" + section + "] " + key + " must be an integer, got '" + *v +
                       "'");
  }
}

double ConfigFile::get_double(const std::string& section, const std::string& key, double fallback) {
  const std::string* v = find(section, key);
  if (!v) return fallback;
  try {
    size_t pos = 0;
    const double out = std::stod(*v, &pos);
    check_input(pos == v->size(), "");
    return out;
  } catch (const std::logic_error&) {
    throw InvalidInput(origin_ + ": [" + section + "] " + key + " must be a number, got '" + *v +
                       "'");
  }
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key, bool fallback) {
  const std::string* v = find(section, key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes") return true;
  if (*v == "false" || *v == "0" || *v == "no") return false;
  throw InvalidInput(origin_ + ": [" + section + "] " + key + " must be a boolean, got '" + *v +
                     "'");
}

void ConfigFile::reject_unknown(const std::set<std::string>& also_allowed) const {
  std::string unknown;
  for (const auto& [section, keys] : values_) {
    for (const auto& [key, value] : keys) {
      const std::string id = section + "." + key;
      if (!consumed_.count(id) && !also_allowed.count(id))
        unknown += (unknown.empty() ? "" : ", ") + id;
    }
  }
  check_input(unknown.empty(), origin_ + ": unknown config keys: " + unknown);
}

}  // namespace dnas
