#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tsmcmc/app.hpp"
#include "tsmcmc/error.hpp"

namespace {

using namespace tsmcmc;

void report_error(const std::string& name, const std::string& message, std::optional<std::size_t> step = {}) {
  nlohmann::json err = {{"error", name}, {"message", message}, {"step", nullptr}};
  if (step) err["step"] = *step;
  std::cerr << err.dump() << '\n';
}

struct Overrides {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::optional<double> beta;
  std::optional<double> epsilon;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;
  std::optional<std::string> gen;
  std::optional<std::string> density;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", o.seeds, "seed to run (repeatable; replaces the config list)");
  sub->add_option("--beta", o.beta, "synthetic/real conditioning weight in [0, 1]");
  sub->add_option("--epsilon", o.epsilon, "denominator guard for the acceptance ratio");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--workers", o.workers, "parallel seed workers (0: all cores)");
  sub->add_option("--gen", o.gen, "generated series CSV to evaluate");
  sub->add_option("--density", o.density, "fitted density JSON to reuse");
}

app::RunConfig resolve(const Overrides& o) {
  nlohmann::json doc;
  {
    std::ifstream in(o.config);
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ConfigInvalid, o.config + ": " + e.what());
    }
  }
  if (!doc.is_object()) throw Error(ErrorCode::ConfigInvalid, "config must be a JSON object");
  if (!o.seeds.empty()) doc["seeds"] = o.seeds;
  if (o.beta) doc["correction"]["beta"] = *o.beta;
  if (o.epsilon) doc["correction"]["epsilon"] = *o.epsilon;
  if (o.workers) doc["workers"] = *o.workers;
  const auto base = std::filesystem::path(o.config).parent_path();
  const auto cwd = std::filesystem::current_path();
  // Paths given on the command line are relative to the working directory.
  if (o.out) doc["output_dir"] = std::filesystem::absolute(cwd / *o.out).string();
  if (o.gen) doc["gen_path"] = std::filesystem::absolute(cwd / *o.gen).string();
  if (o.density) doc["density"]["path"] = std::filesystem::absolute(cwd / *o.density).string();
  return app::parse_config(doc, base);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Metropolis-Hastings correction of synthetic time series"};
  cli.require_subcommand(1);
  Overrides o;
  std::uint64_t theory_seed = 0;
  std::optional<std::string> theory_out;

  struct Command {
    const char* name;
    const char* help;
    int (*run)(const app::RunConfig&);
  };
  const Command commands[] = {
      {"simulate", "integrate the Lorenz system and write it as CSV", app::cmd_simulate},
      {"fit-density", "fit the first-difference density of the real series", app::cmd_fit_density},
      {"generate", "roll out the raw proposal source", app::cmd_generate},
      {"correct", "run the corrector", app::cmd_correct},
      {"evaluate", "score generated series against the real series", app::cmd_evaluate},
      {"compare", "generate, correct and evaluate over all seeds", app::cmd_compare},
  };
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const auto& c : commands) {
    CLI::App* sub = cli.add_subcommand(c.name, c.help);
    add_common(sub, o);
    subs.emplace_back(sub, &c);
  }
  CLI::App* theory = cli.add_subcommand("verify-theory", "check the chain-level properties numerically");
  theory->add_option("--seed", theory_seed, "seed for the random instances");
  theory->add_option("--out", theory_out, "directory for theory.json");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return cli.exit(e);
    report_error("ConfigInvalid", e.what());
    return app::kExitConfig;
  }

  try {
    if (theory->parsed()) {
      std::optional<std::filesystem::path> out;
      if (theory_out) out = *theory_out;
      return app::cmd_verify_theory(theory_seed, out);
    }
    for (const auto& [sub, cmd] : subs) {
      if (sub->parsed()) return cmd->run(resolve(o));
    }
  } catch (const Error& e) {
    report_error(std::string(e.name()), std::string(e.message()), e.step());
    return e.code() == ErrorCode::ConfigInvalid ? app::kExitConfig : app::kExitRuntime;
  } catch (const std::exception& e) {
    report_error("RuntimeError", e.what());
    return app::kExitRuntime;
  }
  return app::kExitConfig;
}
