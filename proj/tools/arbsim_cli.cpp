// arbsim_cli: analyze | simulate | compare | sweep
//
//   arbsim_cli sweep --config recipes/fig3.json --output fig3.csv
//
// Exit codes: 0 success, 1 usage, 2 bad config, 3 output failure, 4 model failure.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "arbsim/arbsim.hpp"

namespace {

struct Flags {
  std::string config;
  std::string output;
  std::string format;
  std::optional<std::uint64_t> seed;
  std::string profile;
};

void add_flags(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "JSON run configuration");
  sub->add_option("--output", f.output, "output file (default: stdout)");
  sub->add_option("--format", f.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--seed", f.seed, "base seed, replaces any seed list in the config");
  sub->add_option("--profile", f.profile, "table1 or 1mbps")->check(CLI::IsMember({"table1", "1mbps"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Backoff analysis toolkit: analytic model and slotted simulator"};
  app.require_subcommand(1);
  Flags flags;
  for (const char* name : {"analyze", "simulate", "compare", "sweep"})
    add_flags(app.add_subcommand(name, std::string(name) + " the configured scenarios"), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  using namespace arbsim;
  try {
    RunManifest m = flags.config.empty() ? parse_config(std::string_view("{}")) : load_config(flags.config);
    m.command = parse_command(app.get_subcommands().front()->get_name());
    if (!flags.profile.empty()) override_profile(m, parse_profile(flags.profile));
    if (flags.seed) override_seed(m, *flags.seed);
    if (!flags.output.empty()) m.output.path = flags.output;
    if (!flags.format.empty()) m.output.format = parse_format(flags.format);
    execute(m);
  } catch (const ConfigError& e) {
    std::cerr << "arbsim_cli: config error: " << e.what() << "\n";
    return 2;
  } catch (const OutputError& e) {
    std::cerr << "arbsim_cli: output error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "arbsim_cli: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
