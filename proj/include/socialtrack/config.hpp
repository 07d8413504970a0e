#pragma once

// Flat `key = value` configuration files. Unknown keys are rejected. Every
// key can be overridden by an environment variable SOCIALTRACK_<KEY> (upper
// case), applied after the file.

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "socialtrack/errors.hpp"

namespace socialtrack::config {

inline constexpr const char* kEnvPrefix = "SOCIALTRACK_";

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline double parse_double(const std::string& key, const std::string& raw) {
  const std::string s = detail::trim(raw);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE || !std::isfinite(v)) {
    throw ConfigError(key + ": expected a number, got '" + s + "'");
  }
  return v;
}

inline long parse_int(const std::string& key, const std::string& raw) {
  const double v = parse_double(key, raw);
  if (v != std::floor(v)) throw ConfigError(key + ": expected an integer, got '" + raw + "'");
  return static_cast<long>(v);
}

inline bool parse_bool(const std::string& key, const std::string& raw) {
  std::string s = detail::trim(raw);
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + raw + "'");
}

/// Maps string keys onto fields of T.
template <typename T>
class Schema {
 public:
  struct Field {
    std::string key;
    std::function<void(T&, const std::string&)> set;
    std::function<std::string(const T&)> get;
  };

  Schema& real(std::string key, double T::*member) {
    return add(key, [member, key](T& t, const std::string& v) { t.*member = parse_double(key, v); },
               [member](const T& t) { return detail::fmt_double(t.*member); });
  }

  template <typename Int>
  Schema& integer(std::string key, Int T::*member) {
    return add(key, [member, key](T& t, const std::string& v) { t.*member = static_cast<Int>(parse_int(key, v)); },
               [member](const T& t) { return std::to_string(t.*member); });
  }

  Schema& boolean(std::string key, bool T::*member) {
    return add(key, [member, key](T& t, const std::string& v) { t.*member = parse_bool(key, v); },
               [member](const T& t) { return std::string(t.*member ? "true" : "false"); });
  }

  Schema& text(std::string key, std::string T::*member) {
    return add(key, [member](T& t, const std::string& v) { t.*member = detail::trim(v); },
               [member](const T& t) { return t.*member; });
  }

  Schema& add(std::string key, std::function<void(T&, const std::string&)> set,
              std::function<std::string(const T&)> get) {
    fields_.push_back({std::move(key), std::move(set), std::move(get)});
    return *this;
  }

  void set(T& target, const std::string& key, const std::string& value) const {
    for (const auto& f : fields_) {
      if (f.key == key) {
        f.set(target, value);
        return;
      }
    }
    throw ConfigError("unknown configuration key '" + key + "'");
  }

  void parse(T& target, std::istream& is, const std::string& source = "<config>") const {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string t = detail::trim(line);
      if (t.empty()) continue;
      const auto eq = t.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
      }
      try {
        set(target, detail::trim(t.substr(0, eq)), t.substr(eq + 1));
      } catch (const ConfigError& e) {
        throw ConfigError(source + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  }

  void parse_file(T& target, const std::string& path) const {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config " + path);
    parse(target, is, path);
  }

  /// Applies SOCIALTRACK_<KEY> environment overrides.
  void apply_env(T& target) const {
    for (const auto& f : fields_) {
      std::string name = kEnvPrefix;
      for (char c : f.key) name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      if (const char* v = std::getenv(name.c_str())) {
        try {
          f.set(target, v);
        } catch (const ConfigError& e) {
          throw ConfigError(name + ": " + e.what());
        }
      }
    }
  }

  std::string dump(const T& target) const {
    std::string out;
    for (const auto& f : fields_) out += f.key + " = " + f.get(target) + "\n";
    return out;
  }

  const std::vector<Field>& fields() const { return fields_; }

 private:
  std::vector<Field> fields_;
};

}  // namespace socialtrack::config
