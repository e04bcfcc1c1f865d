#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace ctraj::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::string lower(std::string s) {
  for (char& c : s) c = char(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

double parse_real(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (lower(t) == "inf") return std::numeric_limits<double>::infinity();
  if (lower(t) == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ConfigError(key, "expected a number, got '" + text + "'");
  }
  if (used != t.size()) throw ConfigError(key, "expected a number, got '" + text + "'");
  return v;
}

int parse_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  std::size_t used = 0;
  long v;
  try {
    v = std::stol(t, &used);
  } catch (const std::exception&) {
    throw ConfigError(key, "expected an integer, got '" + text + "'");
  }
  if (used != t.size()) throw ConfigError(key, "expected an integer, got '" + text + "'");
  return int(v);
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = lower(trim(text));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key, "expected a boolean, got '" + text + "'");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(text);
  while (std::getline(is, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::vector<std::pair<std::string, Setter>>& table() {
  static const std::vector<std::pair<std::string, Setter>> t = {
      {"problem.potential",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         try {
           c.potential = parse_potential_kind(trim(v));
         } catch (const std::exception&) {
           throw ConfigError(k, "expected quartic or cubic, got '" + v + "'");
         }
         if (c.potential == PotentialKind::Polynomial) throw ConfigError(k, "expected quartic or cubic");
       }},
      {"problem.t_i", [](RunConfig& c, const std::string& k, const std::string& v) { c.boundary.t_i = parse_real(k, v); }},
      {"problem.t_f", [](RunConfig& c, const std::string& k, const std::string& v) { c.boundary.t_f = parse_real(k, v); }},
      {"problem.x_f",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (lower(trim(v)) == "inf") {
           c.boundary.x_f.reset();
           return;
         }
         try {
           c.boundary.x_f = parse_complex(v);
         } catch (const std::exception&) {
           throw ConfigError(k, "expected inf or a complex number, got '" + v + "'");
         }
       }},
      {"problem.L", [](RunConfig& c, const std::string& k, const std::string& v) { c.boundary.L = parse_real(k, v); }},
      {"problem.branch", [](RunConfig& c, const std::string& k, const std::string& v) { c.branch = parse_int(k, v); }},
      {"problem.coupling_scale",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.couplingScale = parse_real(k, v); }},
      {"output.dir",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (trim(v).empty()) throw ConfigError(k, "output directory must be nonempty");
         c.outDir = trim(v);
       }},
      {"output.formats",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         c.formats.clear();
         for (const auto& f : split(v, ',')) {
           if (f != "csv" && f != "json" && f != "plot-data")
             throw ConfigError(k, "unknown format '" + f + "' (csv, json, plot-data)");
           c.formats.push_back(f);
         }
       }},
      {"scan.T",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         try {
           c.scanT = parse_list(v);
         } catch (const std::exception& e) {
           throw ConfigError(k, e.what());
         }
       }},
      {"oracle.hbar_eff",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         try {
           c.hbarEff = parse_list(v);
         } catch (const std::exception& e) {
           throw ConfigError(k, e.what());
         }
       }},
      {"oracle.T", [](RunConfig& c, const std::string& k, const std::string& v) { c.oracleT = parse_real(k, v); }},
      {"oracle.n", [](RunConfig& c, const std::string& k, const std::string& v) { c.oracleN = parse_int(k, v); }},
      {"oracle.filter_time",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.oracleFilterTime = parse_real(k, v); }},
      {"oracle.grid_check",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.oracleGridCheck = parse_bool(k, v); }},
      {"pointer.g", [](RunConfig& c, const std::string& k, const std::string& v) { c.pointer.g = parse_real(k, v); }},
      {"pointer.delta_x",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.pointer.deltaX = parse_real(k, v); }},
      {"pointer.hbar_eff",
       [](RunConfig& c, const std::string& k, const std::string& v) { c.pointer.hbarEff = parse_real(k, v); }},
      {"pointer.t_m_min", [](RunConfig& c, const std::string& k, const std::string& v) { c.tmMin = parse_real(k, v); }},
      {"pointer.t_m_max", [](RunConfig& c, const std::string& k, const std::string& v) { c.tmMax = parse_real(k, v); }},
      {"pointer.t_m_count", [](RunConfig& c, const std::string& k, const std::string& v) { c.tmCount = parse_int(k, v); }},
      {"fig2.m",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         try {
           c.fig2M = parse_complex(v);
         } catch (const std::exception&) {
           throw ConfigError(k, "expected a complex number, got '" + v + "'");
         }
       }},
      {"fig2.t0",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         try {
           c.fig2T0 = parse_complex(v);
         } catch (const std::exception&) {
           throw ConfigError(k, "expected a complex number, got '" + v + "'");
         }
       }},
  };
  return t;
}

}  // namespace

bool RunConfig::wants(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& e : table()) k.push_back(e.first);
    return k;
  }();
  return keys;
}

cplx parse_complex(const std::string& text) {
  std::string t;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) t += c;
  if (t.empty()) throw std::invalid_argument("empty complex literal");
  if (lower(t) == "inf") return cplx(std::numeric_limits<double>::infinity(), 0.0);
  const char last = char(std::tolower(static_cast<unsigned char>(t.back())));
  auto num = [&](const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad number '" + s + "'");
    return v;
  };
  if (last != 'i' && last != 'j') return cplx(num(t), 0.0);
  t.pop_back();
  // Split at the last sign that is not part of an exponent.
  std::size_t cut = std::string::npos;
  for (std::size_t i = t.size(); i-- > 1;) {
    if ((t[i] == '+' || t[i] == '-') && std::tolower(static_cast<unsigned char>(t[i - 1])) != 'e') {
      cut = i;
      break;
    }
  }
  auto imag_part = [&](const std::string& s) {
    if (s.empty() || s == "+") return 1.0;
    if (s == "-") return -1.0;
    return num(s);
  };
  if (cut == std::string::npos) return cplx(0.0, imag_part(t));
  return cplx(num(t.substr(0, cut)), imag_part(t.substr(cut)));
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) {
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("expected a comma-separated list of numbers, got '" + text + "'");
    }
    if (used != item.size())
      throw std::invalid_argument("expected a comma-separated list of numbers, got '" + text + "'");
    out.push_back(v);
  }
  return out;
}

Assignments parse_config_text(const std::string& text, const std::string& origin) {
  Assignments out;
  std::istringstream is(text);
  std::string line, section;
  int lineNo = 0;
  while (std::getline(is, line)) {
    ++lineNo;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineNo);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("", where + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError("", where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("", where + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError("", where + ": missing key");
    if (key.find('.') == std::string::npos) {
      if (section.empty()) throw ConfigError(key, where + ": key outside a section");
      key = section + "." + key;
    }
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw ConfigError(key, where + ": unknown key '" + key + "'");
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

Assignments parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("", "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str(), path);
}

std::pair<std::string, std::string> parse_assignment(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos) throw ConfigError("", "expected key=value, got '" + kv + "'");
  return {trim(kv.substr(0, eq)), trim(kv.substr(eq + 1))};
}

void apply(RunConfig& config, const std::string& key, const std::string& value) {
  for (const auto& [name, set] : table()) {
    if (name == key) {
      set(config, key, value);
      return;
    }
  }
  throw ConfigError(key, "unknown key '" + key + "'");
}

void validate_common(const RunConfig& c) {
  const BoundaryData& b = c.boundary;
  if (!std::isfinite(b.t_i)) throw ConfigError("problem.t_i", "t_i must be finite");
  if (!std::isfinite(b.t_f)) throw ConfigError("problem.t_f", "t_f must be finite");
  if (!(b.t_f > b.t_i)) throw ConfigError("problem.t_f", "t_f must exceed t_i");
  if (!(b.L > 0.0) || !std::isfinite(b.L)) throw ConfigError("problem.L", "L must be positive");
  if (!(c.couplingScale > 0.0) || !std::isfinite(c.couplingScale))
    throw ConfigError("problem.coupling_scale", "coupling_scale must be positive");
  if (b.x_f) {
    const Potential p = Potential::of_kind(c.potential);
    if (!std::isfinite(b.x_f->real()) || !std::isfinite(b.x_f->imag()))
      throw ConfigError("problem.x_f", "x_f must be finite or inf");
    if (!(std::abs(*b.x_f) > p.turning_point()))
      throw ConfigError("problem.x_f", "|x_f| must exceed the turning point");
  }
  if (c.formats.empty()) throw ConfigError("output.formats", "at least one format is required");
  try {
    c.pointer.validate();
  } catch (const std::exception& e) {
    const std::string what = e.what();
    const std::string key = what.find("deltaX") != std::string::npos    ? "pointer.delta_x"
                            : what.find("hbarEff") != std::string::npos ? "pointer.hbar_eff"
                                                                         : "pointer.g";
    throw ConfigError(key, what);
  }
}

}  // namespace ctraj::cli
