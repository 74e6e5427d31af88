#pragma once

// Small INI-style configuration reader.
//
//   # comment
//   include relative/other.cfg
//   top_key = value
//   [scenario sine-small]
//   dims = 64 64
//
// Sections start at a bracket header and run to the next one; `include`
// splices another file (relative to the includer) at top level.  Every key
// remembers its file/line/column so type errors point at the source.

#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "maglab/util.hpp"

namespace maglab {

struct ConfigValue {
  std::string raw;
  std::string file;
  int line = 0, col = 0;

  std::string where() const {
    return file + ":" + std::to_string(line) + ":" + std::to_string(col);
  }
};

struct ConfigSection {
  std::string name;
  std::string file;
  int line = 0;
  std::map<std::string, ConfigValue> values;

  bool has(const std::string& key) const { return values.count(key) != 0; }

  const ConfigValue& at(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end())
      fail("config.key", "missing key '" + key + "' in [" + name + "] (" + file + ")");
    return it->second;
  }

  std::string str(const std::string& key) const { return at(key).raw; }
  std::string str_or(const std::string& key, const std::string& dflt) const {
    return has(key) ? at(key).raw : dflt;
  }

  double num(const std::string& key) const {
    const ConfigValue& v = at(key);
    try {
      std::size_t pos = 0;
      double x = std::stod(v.raw, &pos);
      while (pos < v.raw.size() && std::isspace(static_cast<unsigned char>(v.raw[pos])))
        ++pos;
      if (pos != v.raw.size()) throw std::invalid_argument("trailing");
      return x;
    } catch (const std::exception&) {
      fail("config.value", v.where() + ": '" + v.raw + "' is not a number (key '" + key + "')");
    }
  }
  double num_or(const std::string& key, double dflt) const {
    return has(key) ? num(key) : dflt;
  }

  long integer(const std::string& key) const {
    const double x = num(key);
    const long r = std::lround(x);
    if (std::abs(x - static_cast<double>(r)) > 1e-9)
      fail("config.value", at(key).where() + ": key '" + key + "' must be an integer");
    return r;
  }
  long integer_or(const std::string& key, long dflt) const {
    return has(key) ? integer(key) : dflt;
  }

  std::vector<std::string> words(const std::string& key) const {
    std::istringstream in(at(key).raw);
    std::vector<std::string> out;
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
  }

  std::vector<double> nums(const std::string& key) const {
    const ConfigValue& v = at(key);
    std::istringstream in(v.raw);
    std::vector<double> out;
    std::string w;
    while (in >> w) {
      try {
        out.push_back(std::stod(w));
      } catch (const std::exception&) {
        fail("config.value", v.where() + ": '" + w + "' is not a number (key '" + key + "')");
      }
    }
    return out;
  }

  bool flag(const std::string& key, bool dflt) const {
    if (!has(key)) return dflt;
    const std::string& r = at(key).raw;
    if (r == "true" || r == "on" || r == "1") return true;
    if (r == "false" || r == "off" || r == "0") return false;
    fail("config.value", at(key).where() + ": key '" + key + "' must be a boolean");
  }
};

struct Config {
  ConfigSection globals;
  std::vector<ConfigSection> sections;

  const ConfigSection* find(const std::string& name) const {
    for (const auto& s : sections)
      if (s.name == name) return &s;
    return nullptr;
  }
};

namespace detail {

inline std::string dirname_of(const std::string& path) {
  const auto pos = path.find_last_of('/');
  return pos == std::string::npos ? std::string(".") : path.substr(0, pos);
}

inline void parse_config_file(const std::string& path, Config& cfg, int depth) {
  if (depth > 8) fail("config.parse", path + ": include depth exceeded");
  std::ifstream in(path);
  if (!in) fail("config.io", "cannot open config file '" + path + "'");
  std::string line;
  int lineno = 0;
  ConfigSection* current = &cfg.globals;
  while (std::getline(in, line)) {
    ++lineno;
    // strip comments (full-line or trailing, unquoted config grammar)
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    int begin = 0;
    while (begin < static_cast<int>(line.size()) &&
           std::isspace(static_cast<unsigned char>(line[begin])))
      ++begin;
    int end = static_cast<int>(line.size());
    while (end > begin && std::isspace(static_cast<unsigned char>(line[end - 1]))) --end;
    if (begin == end) continue;
    const std::string body = line.substr(begin, end - begin);
    const auto loc = [&](int col) {
      return path + ":" + std::to_string(lineno) + ":" + std::to_string(col + 1);
    };

    if (body.front() == '[') {
      if (body.back() != ']')
        fail("config.parse", loc(end - 1) + ": section header missing ']'");
      std::string name = body.substr(1, body.size() - 2);
      int t = 0;
      while (t < static_cast<int>(name.size()) &&
             std::isspace(static_cast<unsigned char>(name[t])))
        ++t;
      name.erase(0, t);
      while (!name.empty() && std::isspace(static_cast<unsigned char>(name.back())))
        name.pop_back();
      if (name.empty()) fail("config.parse", loc(begin) + ": empty section name");
      cfg.sections.push_back(ConfigSection{name, path, lineno, {}});
      current = &cfg.sections.back();
      continue;
    }
    if (body.rfind("include ", 0) == 0 || body == "include") {
      if (current != &cfg.globals)
        fail("config.parse", loc(begin) + ": include only allowed before sections");
      std::string target = body.size() > 8 ? body.substr(8) : "";
      int t = 0;
      while (t < static_cast<int>(target.size()) &&
             std::isspace(static_cast<unsigned char>(target[t])))
        ++t;
      target.erase(0, t);
      if (target.empty()) fail("config.parse", loc(begin + 7) + ": include needs a path");
      if (target.front() != '/') target = dirname_of(path) + "/" + target;
      parse_config_file(target, cfg, depth + 1);
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      fail("config.parse", loc(begin) + ": expected 'key = value' or a section header");
    std::string key = body.substr(0, eq);
    while (!key.empty() && std::isspace(static_cast<unsigned char>(key.back())))
      key.pop_back();
    if (key.empty()) fail("config.parse", loc(begin) + ": empty key");
    for (char ch : key)
      if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-' &&
          ch != '.')
        fail("config.parse", loc(begin) + ": bad character in key '" + key + "'");
    std::string value = body.substr(eq + 1);
    int vt = 0;
    while (vt < static_cast<int>(value.size()) &&
           std::isspace(static_cast<unsigned char>(value[vt])))
      ++vt;
    value.erase(0, vt);
    while (!value.empty() && std::isspace(static_cast<unsigned char>(value.back())))
      value.pop_back();
    ConfigValue cv{value, path, lineno, begin + 1};
    current->values[key] = cv;
  }
}

}  // namespace detail

inline Config parse_config(const std::string& path) {
  Config cfg;
  cfg.globals.name = "";
  cfg.globals.file = path;
  detail::parse_config_file(path, cfg, 0);
  // scenario ids must be unique
  for (std::size_t i = 0; i < cfg.sections.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.sections.size(); ++j)
      if (cfg.sections[i].name == cfg.sections[j].name)
        fail("config.parse", cfg.sections[j].file + ":" +
                                 std::to_string(cfg.sections[j].line) +
                                 ":1: duplicate section [" + cfg.sections[j].name + "]");
  return cfg;
}

}  // namespace maglab
