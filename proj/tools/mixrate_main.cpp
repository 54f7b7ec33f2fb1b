#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mixrate/harness.hpp"

namespace {

struct SubcommandArgs {
  std::string config_path;
  std::string out_dir;
  std::int64_t threads = 0;
  std::uint64_t seed = 0;
  bool out_set = false;
  bool threads_set = false;
  bool seed_set = false;
};

void attach_options(CLI::App* cmd, SubcommandArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config file")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir, "output directory (beats env and config)")
      ->each([&args](const std::string&) { args.out_set = true; });
  cmd->add_option("--threads", args.threads, "worker threads (beats config)")
      ->check(CLI::PositiveNumber)
      ->each([&args](const std::string&) { args.threads_set = true; });
  cmd->add_option("--seed", args.seed, "master seed (beats config)")
      ->each([&args](const std::string&) { args.seed_set = true; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixrate: mixture approximation and estimation rate experiments"};
  app.require_subcommand(1);

  const std::pair<const char*, const char*> kinds[] = {
      {"approx-rate", "approx_rate"},   {"estimate-rate", "estimate_rate"},
      {"smoothing", "smoothing"},       {"diagnostics", "diagnostics"},
      {"invariants", "invariants"},
  };

  SubcommandArgs args[5];
  CLI::App* cmds[5];
  for (int i = 0; i < 5; ++i) {
    cmds[i] = app.add_subcommand(kinds[i].first,
                                 std::string("run a ") + kinds[i].second + " experiment");
    attach_options(cmds[i], args[i]);
  }

  CLI11_PARSE(app, argc, argv);

  for (int i = 0; i < 5; ++i) {
    if (!cmds[i]->parsed()) continue;
    mixrate::harness::RunOptions options;
    options.expected_kind = kinds[i].second;
    if (args[i].out_set) options.out_dir = args[i].out_dir;
    if (args[i].threads_set) options.threads = static_cast<int>(args[i].threads);
    if (args[i].seed_set) options.seed = args[i].seed;
    try {
      return mixrate::harness::run(args[i].config_path, options);
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 1;
}
