// osc_echo: command-line front end over the C interface.
//
//   osc_echo propagate --config run.json --out results/
//   osc_echo mc        --preset fig4 --seed 7 --out clouds/
//   osc_echo sweep     --config run.json --backend analytic --out sweep/
//   osc_echo fig4      --out fig4/
//   osc_echo config    --preset fig4h            (prints the resolved JSON)
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include "osc_echo/osc_echo.h"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct ConfigDeleter {
  void operator()(oe_config* c) const { oe_config_free(c); }
};
using ConfigPtr = std::unique_ptr<oe_config, ConfigDeleter>;

int report(oe_status st) {
  std::cerr << "osc_echo: " << oe_status_string(st) << ": " << oe_last_error() << "\n";
  return st == OE_ERR_CONFIG ? kExitConfig : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Oscillator-echo simulation and estimation toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string preset_name = "fig4";
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::string backend_name;

  auto add_common = [&](CLI::App* sub, bool writes) {
    sub->add_option("--config", config_path, "Run configuration (JSON)")->check(CLI::ExistingFile);
    sub->add_option("--preset", preset_name, "Built-in configuration used when --config is absent")
        ->check(CLI::IsMember({"fig4", "fig4h"}));
    sub->add_option("--seed", seed, "Monte Carlo master seed (overrides the config)");
    if (writes) sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
  };

  add_common(app.add_subcommand("propagate", "Closed-form states at every sample mark"), true);
  add_common(app.add_subcommand("mc", "Monte Carlo point clouds and their summary"), true);
  for (const char* name : {"sweep", "fig4"}) {
    auto* sub = app.add_subcommand(name, std::string(name) == "sweep" ? "r' sweep with fits"
                                                                      : "Data behind every panel of the probe figure");
    add_common(sub, true);
    sub->add_option("--backend", backend_name, "Sweep backend")->check(CLI::IsMember({"analytic", "mc"}));
  }
  add_common(app.add_subcommand("config", "Print the resolved configuration as JSON"), false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  oe_config* raw = nullptr;
  const oe_status load = config_path.empty() ? oe_config_preset(preset_name.c_str(), &raw)
                                             : oe_config_load_file(config_path.c_str(), &raw);
  if (load != OE_OK) return report(load);
  ConfigPtr cfg(raw);
  if (seed) oe_config_set_seed(cfg.get(), *seed);

  const std::string command = app.get_subcommands().front()->get_name();
  if (command == "config") {
    size_t needed = 0;
    oe_config_to_json(cfg.get(), nullptr, 0, &needed);
    std::string buf(needed, '\0');
    if (const oe_status st = oe_config_to_json(cfg.get(), buf.data(), buf.size(), nullptr); st != OE_OK) {
      return report(st);
    }
    buf.pop_back();
    std::cout << buf;
    return 0;
  }

  oe_backend backend = OE_BACKEND_DEFAULT;
  if (backend_name == "analytic") backend = OE_BACKEND_ANALYTIC;
  if (backend_name == "mc") backend = OE_BACKEND_MC;
  if (const oe_status st = oe_run_command(cfg.get(), command.c_str(), out_dir.c_str(), backend); st != OE_OK) {
    return report(st);
  }
  std::cerr << "osc_echo: " << command << " wrote " << out_dir << "\n";
  return 0;
}
