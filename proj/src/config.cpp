#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "mixrate/harness.hpp"

namespace mixrate::harness {

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"experiment", {"kind", "threads", "output_dir", "seed"}},
      {"kernel", {"name", "dim", "vc_dim"}},
      {"target", {"name", "sigma", "center", "weights", "sigmas", "centers", "s", "path"}},
      {"approx", {"p", "alpha", "c_p", "m_grid", "trials", "method", "greedy_steps"}},
      {"estimate",
       {"s", "b3", "candidate_rule", "n_grid", "trials", "max_iters", "c2", "k2",
        "check_decomposition"}},
      {"smoothing", {"p", "nu_grid"}},
      {"diagnostics",
       {"nu", "n_grid", "trials", "mu_grid_count", "mu_grid_radius", "atoms", "combos",
        "seeds", "n", "atom_radius", "slope_tolerance"}},
      {"quadrature", {"mode", "bound", "points_per_axis", "sample_count", "seed"}},
  };
  return s;
}

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

Config Config::parse_string(const std::string& text, const std::string& origin) {
  Config cfg;
  cfg.text_ = text;
  cfg.origin_ = origin;

  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const std::size_t hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError(origin + ":" + std::to_string(line_no) +
                          ": unterminated section header '" + line + "'");
      section = trim(line.substr(1, line.size() - 2));
      if (schema().find(section) == schema().end())
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown section [" +
                          section + "]");
      cfg.sections_[section];
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected 'key = value', got '" + line + "'");
    if (section.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": key outside any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    const auto& allowed = schema().at(section);
    if (allowed.find(key) == allowed.end())
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": unknown key '" + key +
                        "' in section [" + section + "]");
    auto& entries = cfg.sections_[section];
    if (entries.find(key) != entries.end())
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key +
                        "' in section [" + section + "]");
    entries[key] = Entry{value, line_no};
  }
  return cfg;
}

Config Config::parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_string(buf.str(), path);
}

bool Config::has_section(const std::string& section) const {
  return sections_.find(section) != sections_.end();
}

bool Config::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

const Config::Entry* Config::find(const std::string& section, const std::string& key) const {
  const auto sit = sections_.find(section);
  if (sit == sections_.end()) return nullptr;
  const auto kit = sit->second.find(key);
  return kit == sit->second.end() ? nullptr : &kit->second;
}

void Config::bad_value(const std::string& section, const std::string& key, const Entry& entry,
                       const std::string& expected) const {
  throw ConfigError(origin_ + ":" + std::to_string(entry.line) + ": [" + section + "] " + key +
                    " = '" + entry.value + "' is not " + expected);
}

std::string Config::get_string(const std::string& section, const std::string& key,
                               const std::string& fallback) const {
  const Entry* e = find(section, key);
  return e ? e->value : fallback;
}

std::string Config::require_string(const std::string& section, const std::string& key) const {
  const Entry* e = find(section, key);
  if (!e || e->value.empty())
    throw ConfigError(origin_ + ": missing required field [" + section + "] " + key);
  return e->value;
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(e->value, &pos);
    if (pos != e->value.size()) bad_value(section, key, *e, "a number");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(section, key, *e, "a number");
  }
}

std::optional<double> Config::find_double(const std::string& section,
                                          const std::string& key) const {
  if (!has(section, key)) return std::nullopt;
  return get_double(section, key, 0.0);
}

long Config::get_int(const std::string& section, const std::string& key, long fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  try {
    std::size_t pos = 0;
    const long v = std::stol(e->value, &pos);
    if (pos != e->value.size()) bad_value(section, key, *e, "an integer");
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(section, key, *e, "an integer");
  }
}

std::uint64_t Config::get_u64(const std::string& section, const std::string& key,
                              std::uint64_t fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(e->value, &pos);
    if (pos != e->value.size()) bad_value(section, key, *e, "an unsigned integer");
    return static_cast<std::uint64_t>(v);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    bad_value(section, key, *e, "an unsigned integer");
  }
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  std::string v = e->value;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(section, key, *e, "a boolean (true/false)");
}

std::vector<double> Config::get_double_list(const std::string& section,
                                            const std::string& key) const {
  const Entry* e = find(section, key);
  if (!e) return {};
  std::vector<double> out;
  for (const std::string& item : split_list(e->value)) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(item, &pos));
      if (pos != item.size()) bad_value(section, key, *e, "a comma-separated number list");
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      bad_value(section, key, *e, "a comma-separated number list");
    }
  }
  return out;
}

std::vector<std::size_t> Config::get_size_list(const std::string& section,
                                               const std::string& key) const {
  const Entry* e = find(section, key);
  if (!e) return {};
  std::vector<std::size_t> out;
  for (const std::string& item : split_list(e->value)) {
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(item, &pos);
      if (pos != item.size() || v == 0)
        bad_value(section, key, *e, "a comma-separated list of positive integers");
      out.push_back(static_cast<std::size_t>(v));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      bad_value(section, key, *e, "a comma-separated list of positive integers");
    }
  }
  return out;
}

}  // namespace mixrate::harness
