#include <iostream>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>

#include "apcd/commands.hpp"

namespace {

// Config file + repeatable --set key=value overrides (overrides win).
apcd::KeyValueConfig load_config(const std::string& config_path,
                                 const std::vector<std::string>& overrides) {
  apcd::KeyValueConfig config;
  if (!config_path.empty()) config = apcd::parse_config_file(config_path);
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw apcd::invalid_input_error("--set expects key=value, got: " + kv);
    config.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-time-scale persistent contrastive divergence for pairwise binary models"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads,
                 "OpenMP worker count (results are independent of this setting)");

  std::string config_path;
  std::vector<std::string> overrides;
  auto add_config_opts = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "flat key = value config file");
    sub->add_option("--set", overrides, "override a config key (key=value, repeatable)");
  };

  CLI::App* generate = app.add_subcommand("generate", "synthesize a grid model and datasets");
  add_config_opts(generate);
  CLI::App* train = app.add_subcommand("train", "run apcd / mfpcd / hapcd / exact-em training");
  add_config_opts(train);
  CLI::App* eval = app.add_subcommand("eval", "Parzen + AIS evaluation of a trained model");
  add_config_opts(eval);

  CLI::App* validate = app.add_subcommand("validate-schedule", "check a step-size pair");
  std::string a_spec, b_spec;
  validate->add_option("a", a_spec, "E-step schedule, e.g. power(1,0.6667)")->required();
  validate->add_option("b", b_spec, "M-step schedule, e.g. power(1,1)")->required();

  CLI::App* report = app.add_subcommand("report", "compare completed run directories");
  std::vector<std::string> run_dirs;
  std::string columnar_out = "report.tsv";
  report->add_option("runs", run_dirs, "run directories")->required();
  report->add_option("-o,--out", columnar_out, "columnar output file");

  CLI11_PARSE(app, argc, argv);
  if (threads > 0) omp_set_num_threads(threads);

  return apcd::run_guarded(std::cerr, [&]() -> int {
    if (generate->parsed()) return apcd::cmd_generate(load_config(config_path, overrides), std::cout);
    if (train->parsed()) return apcd::cmd_train(load_config(config_path, overrides), std::cout);
    if (eval->parsed()) return apcd::cmd_eval(load_config(config_path, overrides), std::cout);
    if (validate->parsed()) return apcd::cmd_validate_schedule(a_spec, b_spec, std::cout);
    if (report->parsed()) return apcd::cmd_report(run_dirs, columnar_out, std::cout);
    return apcd::kExitError;
  });
}
