#pragma once

// Experiment orchestration: the sectioned key-value config format, the run()
// dispatcher behind the CLI subcommands, and the CSV/JSON/summary writers.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mixrate/common.hpp"
#include "mixrate/report.hpp"

namespace mixrate::harness {

// Flat sectioned config: `[section]` headers, `key = value` lines, `#` or `;`
// comments. Sections and keys are validated against a fixed schema at parse
// time; every diagnostic names the offending line and field.
class Config {
 public:
  static Config parse_file(const std::string& path);
  static Config parse_string(const std::string& text, const std::string& origin);

  const std::string& text() const { return text_; }
  const std::string& origin() const { return origin_; }

  bool has_section(const std::string& section) const;
  bool has(const std::string& section, const std::string& key) const;

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const;
  std::string require_string(const std::string& section, const std::string& key) const;
  double get_double(const std::string& section, const std::string& key, double fallback) const;
  std::optional<double> find_double(const std::string& section, const std::string& key) const;
  long get_int(const std::string& section, const std::string& key, long fallback) const;
  std::uint64_t get_u64(const std::string& section, const std::string& key,
                        std::uint64_t fallback) const;
  bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
  std::vector<double> get_double_list(const std::string& section, const std::string& key) const;
  std::vector<std::size_t> get_size_list(const std::string& section,
                                         const std::string& key) const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };

  Config() = default;
  const Entry* find(const std::string& section, const std::string& key) const;
  [[noreturn]] void bad_value(const std::string& section, const std::string& key,
                              const Entry& entry, const std::string& expected) const;

  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::string text_;
  std::string origin_;
};

struct RunOptions {
  std::optional<std::string> out_dir;        // beats env var beats config
  std::optional<std::uint64_t> seed;         // beats [experiment] seed
  std::optional<int> threads;                // beats [experiment] threads
  std::optional<std::string> expected_kind;  // subcommand cross-check
};

// Runs the experiment described by the config, writes its artifacts, and
// returns the process exit code: 0 pass, 2 fail, 3 not certified. Errors
// (bad config, numerical failure) throw; the CLI maps those to exit 1.
int run(const std::string& config_path, const RunOptions& options);

// Fixed shortest-round-trip style formatting used by every CSV writer, so
// reruns are byte-identical.
std::string format_number(double v);

}  // namespace mixrate::harness
