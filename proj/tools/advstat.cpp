// Pipeline driver: train a classifier, generate adversarial activation
// records, and score original-vs-adversarial separation with statistical
// distances. Each stage caches its artifacts in the configured output
// directory so later stages can iterate without rerunning earlier ones.

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "advstat/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;   // usage or config errors
constexpr int kExitData = 2;    // data or format errors

int run_stage(const std::string& config_path,
              void (*stage)(const advstat::RunConfig&, std::ostream&)) {
  const advstat::RunConfig config = advstat::load_run_config(config_path);
  stage(config, std::cout);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"statistical adversarial detection pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::string trials_path;
  std::string auc_path;

  CLI::App* train = app.add_subcommand(
      "train", "train the classifier and write a checkpoint");
  train->add_option("-c,--config", config_path, "run config (JSON)")
      ->required();

  CLI::App* attack = app.add_subcommand(
      "attack", "generate original and adversarial activation records");
  attack->add_option("-c,--config", config_path, "run config (JSON)")
      ->required();

  CLI::App* detect = app.add_subcommand(
      "detect", "run the detector trials and write trial/AUC tables");
  detect->add_option("-c,--config", config_path, "run config (JSON)")
      ->required();

  CLI::App* recompute = app.add_subcommand(
      "recompute", "rebuild the AUC table from a trials CSV");
  recompute->add_option("trials", trials_path, "trials CSV path")->required();
  recompute->add_option("output", auc_path, "output AUC CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help
    }
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (train->parsed()) return run_stage(config_path, advstat::cmd_train);
    if (attack->parsed()) return run_stage(config_path, advstat::cmd_attack);
    if (detect->parsed()) return run_stage(config_path, advstat::cmd_detect);
    if (recompute->parsed()) {
      advstat::cmd_recompute(trials_path, auc_path, std::cout);
      return kExitOk;
    }
  } catch (const advstat::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const advstat::FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kExitData;
  } catch (const advstat::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
