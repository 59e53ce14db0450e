#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "dnas/common.hpp"

namespace dnas {

// `key = value` text with [section] headers and '#' comments. Typed getters
// mark keys as consumed; reject_unknown() then flags typos.
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text, const std::string& origin = "<string>");
  static ConfigFile load(const std::string& path);

  bool has(const std::string& section, const std::string& key) const;
  std::string get_str(const std::string& section, const std::string& key,
                      const std::string& fallback);
  int64_t get_int(const std::string& section, const std::string& key, int64_t fallback);
  double get_double(const std::string& section, const std::string& key, double fallback);
  bool get_bool(const std::string& section, const std::string& key, bool fallback);

  // Throws listing every key that was neither consumed by a getter nor
  // present in `also_allowed` ("section.key" entries owned by other phases).
  void reject_unknown(const std::set<std::string>& also_allowed = {}) const;

 private:
  std::string origin_;
  std::map<std::string, std::map<std::string, std::string>> values_;
  mutable std::set<std::string> consumed_;

  const std::string* find(const std::string& section, const std::string& key) const;
};

}  // namespace dnas
