// Command-line front end: gcflow <flow|translate|radial|compare> ...
//
// The run is described by a JSON config (--config FILE or --preset NAME).
// Any other --a.b.c=value option overrides the config key a.b.c; the value
// is parsed as JSON and falls back to a plain string.

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "gcflow/cli_io.hpp"
#include "gcflow/error.hpp"

namespace io = gcflow::io;

namespace {

// Splits leftover "--key=value" / "--key value" tokens into overrides.
bool collect_overrides(const std::vector<std::string>& extras,
                       std::vector<std::pair<std::string, std::string>>& out) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& tok = extras[i];
    if (tok.rfind("--", 0) != 0 || tok.size() <= 2) {
      std::fprintf(stderr, "unexpected argument '%s'\n", tok.c_str());
      return false;
    }
    const std::string body = tok.substr(2);
    const auto eq = body.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(body.substr(0, eq), body.substr(eq + 1));
    } else if (i + 1 < extras.size()) {
      out.emplace_back(body, extras[++i]);
    } else {
      std::fprintf(stderr, "override '%s' has no value\n", tok.c_str());
      return false;
    }
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Logarithmic Gauss curvature flow lab"};
  app.require_subcommand(1);

  std::string config_path;
  std::string preset;
  std::string out_dir = "run";
  bool print_config = false;

  const std::pair<const char*, const char*> commands[] = {
      {"flow", "explicit flow run: trace, velocity frames, translator estimate"},
      {"translate", "regularized elliptic continuation to the translating speed"},
      {"radial", "radial speed surface, profiles and entire-solution classification"},
      {"compare", "speed and profile deltas between flow, elliptic and radial"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->allow_extras();
    auto* cfg = sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--preset", preset, "built-in configuration")->excludes(cfg);
    sub->add_option("--out", out_dir, "output directory");
    sub->add_flag("--print-config", print_config, "print the effective config and exit");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : io::exit_config;
  }

  CLI::App* sub = app.get_subcommands().front();
  std::vector<std::pair<std::string, std::string>> overrides;
  if (!collect_overrides(sub->remaining(), overrides)) return io::exit_config;

  io::json config;
  try {
    if (!config_path.empty()) {
      config = io::load_config(config_path);
    } else if (!preset.empty()) {
      auto p = io::preset_config(preset);
      if (!p) throw gcflow::Error(gcflow::ErrorKind::config, "unknown preset '" + preset + "'");
      config = *p;
    } else {
      throw gcflow::Error(gcflow::ErrorKind::config, "need --config or --preset");
    }
    for (const auto& [key, value] : overrides) io::apply_override(config, key, value);
  } catch (const gcflow::Error& e) {
    const io::json record = {{"error", "Config"}, {"message", e.what()}};
    std::fprintf(stderr, "%s\n", record.dump().c_str());
    return io::exit_config;
  }

  if (print_config) {
    std::printf("%s\n", config.dump(2).c_str());
    return 0;
  }
  return io::run_command(sub->get_name(), config, out_dir);
}
