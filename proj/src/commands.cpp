#include "apcd/commands.hpp"

#include <cmath>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "apcd/baselines.hpp"
#include "apcd/errors.hpp"
#include "apcd/eval.hpp"
#include "apcd/synth.hpp"

namespace apcd {

namespace fs = std::filesystem;

int run_guarded(std::ostream& err, const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const schedule_validation_error& e) {
    err << "schedule validation failed: " << e.what() << "\n";
    return kExitScheduleInvalid;
  } catch (const capacity_error& e) {
    err << "capacity error: " << e.what() << "\n";
    return kExitCapacity;
  } catch (const divergence_error& e) {
    err << "divergence at iteration " << e.iteration << ": " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

namespace {

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream ss(text);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (!token.empty()) out.push_back(std::stod(token));
  }
  return out;
}

GridSpec grid_spec_from(const KeyValueConfig& config) {
  GridSpec spec;
  spec.rows = static_cast<int>(config.get_long("rows", 0));
  spec.cols = static_cast<int>(config.get_long("cols", 0));
  spec.bias_min = config.get_double("bias_min", -3.0);
  spec.bias_max = config.get_double("bias_max", 3.0);
  spec.weight_std = config.get_double("weight_std", std::sqrt(0.5));
  spec.hidden_fraction = config.get_double("hidden_fraction", 0.0);
  spec.validate();
  return spec;
}

nlohmann::json grid_spec_json(const GridSpec& spec) {
  return {{"rows", spec.rows},
          {"cols", spec.cols},
          {"bias_min", spec.bias_min},
          {"bias_max", spec.bias_max},
          {"weight_std", spec.weight_std},
          {"weight_variance_reading", "literal variance; std = sqrt(variance)"},
          {"hidden_fraction", spec.hidden_fraction}};
}

long iterations_per_epoch(int num_data, int minibatch) {
  if (minibatch <= 0) return 1;
  return (num_data + minibatch - 1) / minibatch;
}

struct TrainSetup {
  TrainConfig config;
  HybridRamp ramp;
  bool schedule_warning = false;
};

TrainSetup train_setup_from(const KeyValueConfig& config, int num_data) {
  TrainSetup setup;
  TrainConfig& tc = setup.config;
  tc.variant = parse_variant(config.get("variant", "apcd"));
  tc.minibatch = static_cast<int>(config.get_long("minibatch", 0));
  const long per_epoch = iterations_per_epoch(num_data, tc.minibatch);
  if (config.has("iterations")) {
    tc.total_iterations = config.get_long("iterations", 0);
  } else if (config.has("epochs")) {
    tc.total_iterations = config.get_long("epochs", 0) * per_epoch;
  } else if (tc.variant != Variant::exact_em) {
    // exact-em is driven by em_max_outer instead.
    throw invalid_input_error("train config needs 'iterations' or 'epochs'");
  }
  tc.e_kernel.ell = static_cast<int>(config.get_long("e_ell", 100));
  tc.e_kernel.num_chains = static_cast<int>(config.get_long("e_chains", 1));
  tc.m_kernel.ell = static_cast<int>(config.get_long("m_ell", 10));
  tc.m_kernel.num_chains = static_cast<int>(config.get_long("m_chains", 100));
  if (config.has("a")) tc.a = parse_schedule(config.require("a"));
  if (config.has("b")) tc.b = parse_schedule(config.require("b"));
  tc.log_interval = config.get_long("log_interval", 10 * per_epoch);
  tc.checkpoint_interval = config.get_long("checkpoint_interval", 0);
  tc.master_seed = static_cast<uint64_t>(config.get_long("seed", 0));
  tc.mean_field_iters = static_cast<int>(config.get_long("mf_iters", 30));
  tc.divergence_bound = config.get_double("divergence_bound", 1e6);
  tc.log_exact = config.get_long("log_exact", 1) != 0;
  tc.enumeration_limit = static_cast<int>(config.get_long("enumeration_limit",
                                                          kDefaultEnumerationLimit));
  tc.em_max_outer = config.get_long("em_max_outer", 200);
  tc.em_inner_tol = config.get_double("em_inner_tol", 1e-8);
  setup.ramp = HybridRamp::linear(config.get_double("ramp_switch", 0.5));
  if (tc.variant != Variant::apcd && tc.variant != Variant::exact_em) {
    const ScheduleVerdict verdict = validate_schedule_pair(tc.a, tc.b);
    setup.schedule_warning = !verdict.valid();
  }
  return setup;
}

PairwiseModel initial_model(const KeyValueConfig& config, const GraphTopology& topo,
                            uint64_t seed) {
  const std::string init = config.get("init", "zeros");
  PairwiseModel model(topo);
  if (init == "zeros") return model;
  if (init == "random") {
    const double scale = config.get_double("init_scale", 0.1);
    RandomStream stream(derive_stream_seed(seed, StreamRole::model_gen, 0x1717));
    for (double& b : model.node_bias) b = scale * stream.next_normal();
    for (double& w : model.edge_weight) w = scale * stream.next_normal();
    return model;
  }
  throw invalid_input_error("init must be 'zeros' or 'random'");
}

fs::path checkpoint_path(const fs::path& dir, long iteration) {
  char name[48];
  std::snprintf(name, sizeof name, "checkpoint-%08ld.txt", iteration);
  return dir / name;
}

}  // namespace

int cmd_generate(const KeyValueConfig& config, std::ostream& out) {
  const GridSpec spec = grid_spec_from(config);
  const uint64_t seed = static_cast<uint64_t>(config.get_long("seed", 0));
  const int train_count = static_cast<int>(config.get_long("train_count", 2000));
  const int test_count = static_cast<int>(config.get_long("test_count", 2000));
  const int sweeps = static_cast<int>(config.get_long("sweeps_per_sample", 2000));
  const fs::path dir = config.get("out_dir", ".");
  const std::string experiment = config.get("experiment", "experiment");

  const PairwiseModel model = random_grid_model(spec, seed);
  const VariablePartition part = select_hidden(model.topology, spec.hidden_fraction, seed);
  const auto train = generate_samples(model, train_count, sweeps,
                                      derive_stream_seed(seed, StreamRole::data_gen, 1));
  const auto test = generate_samples(model, test_count, sweeps,
                                     derive_stream_seed(seed, StreamRole::data_gen, 2));

  const fs::path model_path = dir / "truth.model";
  write_model_file(model_path, model, part);
  nlohmann::json meta = {{"experiment", experiment},
                         {"master_seed", seed},
                         {"config_digest", hex64(config.digest())},
                         {"grid", grid_spec_json(spec)},
                         {"sweeps_per_sample", sweeps},
                         {"sweep_definition", "one transition = one full systematic Gibbs sweep"},
                         {"model_file", model_path.filename().string()},
                         {"model_digest", hex64(file_digest(model_path))}};
  meta["count"] = train_count;
  meta["role"] = "train";
  write_dataset_file(dir / "train.data", train, meta);
  meta["count"] = test_count;
  meta["role"] = "test";
  write_dataset_file(dir / "test.data", test, meta);
  out << "generated " << train_count << " train / " << test_count << " test samples on a "
      << spec.rows << "x" << spec.cols << " grid (" << part.hidden.size() << " hidden)\n";
  out << "model: " << model_path.string() << "\n";
  return kExitOk;
}

int cmd_train(const KeyValueConfig& config, std::ostream& out) {
  const fs::path model_path = config.require("model");
  const fs::path data_path = config.require("data");
  const fs::path dir = config.get("out_dir", "run");
  const std::string experiment = config.get("experiment", "experiment");

  const ModelFile model_file = read_model_file(model_path);
  const std::vector<Configuration> data = read_dataset_file(data_path);
  if (data.empty()) throw invalid_input_error("training dataset is empty");
  if (data[0].size() != model_file.model.topology.num_nodes)
    throw invalid_input_error("dataset sample length does not match the model topology");

  TrainSetup setup = train_setup_from(config, static_cast<int>(data.size()));
  const TrainConfig& tc = setup.config;
  tc.validate(static_cast<int>(data.size()));

  const uint64_t config_digest = config.digest();
  const uint64_t dataset_digest = file_digest(data_path);
  fs::create_directories(dir);

  nlohmann::json header = {
      {"experiment", experiment},
      {"variant", variant_name(tc.variant)},
      {"master_seed", tc.master_seed},
      {"config_digest", hex64(config_digest)},
      {"dataset", data_path.string()},
      {"dataset_digest", hex64(dataset_digest)},
      {"model", model_path.string()},
      {"iterations", tc.total_iterations},
      {"minibatch", tc.minibatch},
      {"sweep_definition", "one transition = one full systematic Gibbs sweep"},
      {"a", format_schedule(tc.a)},
      {"b", format_schedule(tc.b)}};
  if (setup.schedule_warning)
    header["schedule_warning"] = "pair fails the two-time-scale conditions; baseline variant";
  MetricsWriter writer(dir / "metrics.jsonl", header);

  TrainHooks hooks;
  hooks.on_metrics = [&writer](const MetricsRecord& rec) { writer.write(rec); };
  hooks.on_checkpoint = [&](const TrainerState& state) {
    write_checkpoint(checkpoint_path(dir, state.t), state, model_file.partition, config_digest,
                     tc.master_seed);
  };

  TrainResult result;
  if (tc.variant == Variant::exact_em) {
    if (config.has("resume")) throw invalid_input_error("exact-em does not support resume");
    const PairwiseModel model0 = initial_model(config, model_file.model.topology, tc.master_seed);
    result = train_exact_em(model0, model_file.partition, data, tc.em_max_outer, tc.em_inner_tol,
                            tc.enumeration_limit, hooks);
  } else {
    TrainerState state;
    if (config.has("resume")) {
      CheckpointData checkpoint = read_checkpoint(config.require("resume"));
      if (checkpoint.config_digest != config_digest)
        out << "note: resuming with a different config digest\n";
      if (checkpoint.state.pool.num_data != static_cast<int>(data.size()))
        throw invalid_input_error("checkpoint pool does not match the dataset size");
      if (checkpoint.state.variant != tc.variant)
        throw invalid_input_error("checkpoint variant does not match the config");
      state = std::move(checkpoint.state);
    } else {
      const PairwiseModel model0 = initial_model(config, model_file.model.topology, tc.master_seed);
      switch (tc.variant) {
        case Variant::apcd:
          state = init_trainer_state(model0, model_file.partition, data, tc);
          break;
        case Variant::mfpcd:
          state = init_mfpcd_state(model0, model_file.partition, data, tc);
          break;
        case Variant::hapcd:
          state = init_hapcd_state(model0, model_file.partition, data, tc, setup.ramp);
          break;
        case Variant::exact_em:
          break;  // handled above
      }
    }
    switch (tc.variant) {
      case Variant::apcd:
        result = train_resume(state, model_file.partition, data, tc, hooks);
        break;
      case Variant::mfpcd:
        result = train_mfpcd_resume(state, model_file.partition, data, tc, hooks);
        break;
      case Variant::hapcd:
        result = train_hapcd_resume(state, model_file.partition, data, tc, setup.ramp, hooks);
        break;
      case Variant::exact_em:
        break;  // handled above
    }
    write_checkpoint(checkpoint_path(dir, tc.total_iterations), state, model_file.partition,
                     config_digest, tc.master_seed);
  }

  write_model_file(dir / "model-final.txt", result.model, model_file.partition);
  nlohmann::json run_meta = header;
  run_meta["config"] = config.canonical();
  std::ofstream meta_out(dir / "run.meta.json");
  meta_out << run_meta.dump(2) << "\n";
  if (!result.trace.empty()) {
    const MetricsRecord& last = result.trace.back();
    out << "trained " << variant_name(tc.variant) << " for " << last.iteration << " iterations";
    if (last.exact_loglik) out << "; exact loglik " << *last.exact_loglik;
    if (last.exact_grad_norm) out << "; exact grad norm " << *last.exact_grad_norm;
    out << "\n";
  }
  return kExitOk;
}

int cmd_eval(const KeyValueConfig& config, std::ostream& out) {
  const fs::path model_path = config.require("model");
  const fs::path train_path = config.require("train_data");
  const fs::path test_path = config.require("test_data");
  const fs::path report_path = config.get("out", "eval_report.json");
  const uint64_t seed = static_cast<uint64_t>(config.get_long("seed", 0));

  const ModelFile model_file = read_model_file(model_path);
  const auto train = read_dataset_file(train_path);
  const auto test = read_dataset_file(test_path);
  if (train.empty() || test.empty()) throw invalid_input_error("evaluation needs datasets");

  EvalPlan plan;
  plan.model_samples = static_cast<int>(config.get_long("eval_samples", 2000));
  plan.sample_sweeps = static_cast<int>(config.get_long("eval_sweeps", 2000));
  plan.enumeration_limit =
      static_cast<int>(config.get_long("enumeration_limit", kDefaultEnumerationLimit));
  const int ais_steps = static_cast<int>(config.get_long("ais_steps", 1000));
  const int ais_chains = static_cast<int>(config.get_long("ais_chains", 100));
  if (config.get("ais_ladder", "uniform") == "geometric") {
    plan.ais = AisPlan::geometric(ais_steps, ais_chains);
  } else {
    plan.ais = AisPlan::uniform(ais_steps, ais_chains);
  }
  plan.run_ais_test_loglik = config.get_long("ais_test_loglik", 0) != 0;
  if (config.has("sigma_grid")) plan.sigma_grid = parse_double_list(config.require("sigma_grid"));

  const EvalReport report = evaluate_model(model_file.model, model_file.partition, train, test,
                                           plan, seed);
  nlohmann::json j = {{"config_digest", hex64(config.digest())},
                      {"master_seed", seed},
                      {"model", model_path.string()},
                      {"train_digest", hex64(file_digest(train_path))},
                      {"test_digest", hex64(file_digest(test_path))},
                      {"parzen_mean", report.parzen_mean},
                      {"parzen_sem", report.parzen_sem},
                      {"sigma", report.sigma},
                      {"ais_logZ", report.ais_log_z},
                      {"ais_weight_var", report.ais_weight_var}};
  if (report.ais_test_loglik_mean) j["ais_test_loglik_mean"] = *report.ais_test_loglik_mean;
  if (report.exact_loglik) j["exact_loglik"] = *report.exact_loglik;
  if (report.grad_norm) j["grad_norm"] = *report.grad_norm;
  if (config.get_long("true_reference", 1) != 0) {
    const EvalReport truth = evaluate_true_reference(model_file.partition, train, test, plan);
    j["true_parzen_mean"] = truth.parzen_mean;
    j["true_parzen_sem"] = truth.parzen_sem;
    j["true_sigma"] = truth.sigma;
  }
  if (report_path.has_parent_path()) fs::create_directories(report_path.parent_path());
  std::ofstream report_out(report_path);
  report_out << j.dump(2) << "\n";
  out << "parzen " << report.parzen_mean << " +/- " << report.parzen_sem << " (sigma "
      << report.sigma << "), ais logZ " << report.ais_log_z << "\n";
  return kExitOk;
}

int cmd_validate_schedule(const std::string& a_spec, const std::string& b_spec,
                          std::ostream& out) {
  const ScheduleSpec a = parse_schedule(a_spec);
  const ScheduleSpec b = parse_schedule(b_spec);
  const ScheduleVerdict verdict = validate_schedule_pair(a, b);
  out << schedule_verdict_name(verdict.kind);
  if (!verdict.valid()) {
    out << ": " << verdict.reason;
    if (verdict.baseline_usable) out << " (accepted for baseline variants with a warning)";
  }
  out << "\n";
  return verdict.valid() ? kExitOk : kExitScheduleInvalid;
}

int cmd_report(const std::vector<std::string>& run_dirs, const std::string& columnar_out,
               std::ostream& out) {
  if (run_dirs.empty()) throw invalid_input_error("report needs at least one run directory");
  struct Run {
    std::string name;
    nlohmann::json meta;
    std::vector<MetricsRecord> trace;
    nlohmann::json eval;
  };
  std::vector<Run> runs;
  for (const std::string& dir_name : run_dirs) {
    const fs::path dir = dir_name;
    Run run;
    run.name = dir.filename().empty() ? dir.string() : dir.filename().string();
    {
      std::ifstream meta_in(dir / "run.meta.json");
      if (!meta_in) throw invalid_input_error("missing run.meta.json in " + dir.string());
      meta_in >> run.meta;
    }
    for (const auto& j : read_jsonl(dir / "metrics.jsonl")) {
      if (j.value("type", "") == "record") run.trace.push_back(metrics_record_from_json(j));
    }
    const fs::path eval_path = dir / "eval_report.json";
    if (fs::exists(eval_path)) {
      std::ifstream eval_in(eval_path);
      eval_in >> run.eval;
    }
    runs.push_back(std::move(run));
  }
  const std::string experiment = runs[0].meta.value("experiment", "");
  const std::string dataset_digest = runs[0].meta.value("dataset_digest", "");
  for (const Run& run : runs) {
    if (run.meta.value("experiment", "") != experiment)
      throw invalid_input_error("runs belong to different experiments: " + run.name);
    if (run.meta.value("dataset_digest", "") != dataset_digest)
      throw invalid_input_error("runs trained on different datasets: " + run.name);
  }

  // Columnar file: iteration plus exact_loglik / grad estimate per run.
  std::map<long, std::vector<std::pair<const MetricsRecord*, size_t>>> by_iteration;
  for (size_t r = 0; r < runs.size(); ++r) {
    for (const MetricsRecord& rec : runs[r].trace) by_iteration[rec.iteration].push_back({&rec, r});
  }
  {
    const fs::path out_path = columnar_out;
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    std::ofstream columnar(out_path);
    if (!columnar) throw invalid_input_error("cannot write " + columnar_out);
    columnar << "iteration";
    for (const Run& run : runs)
      columnar << "\t" << run.name << ":exact_loglik\t" << run.name << ":grad_norm_estimate";
    columnar << "\n";
    for (const auto& [iteration, cells] : by_iteration) {
      columnar << iteration;
      for (size_t r = 0; r < runs.size(); ++r) {
        const MetricsRecord* rec = nullptr;
        for (auto [ptr, rr] : cells) {
          if (rr == r) rec = ptr;
        }
        columnar << "\t" << (rec && rec->exact_loglik ? format_double(*rec->exact_loglik) : "")
                 << "\t"
                 << (rec && rec->grad_norm_estimate ? format_double(*rec->grad_norm_estimate)
                                                    : "");
      }
      columnar << "\n";
    }
  }

  out << "experiment: " << experiment << "\n";
  out << std::left << std::setw(24) << "run" << std::setw(10) << "variant" << std::setw(12)
      << "final_iter" << std::setw(16) << "exact_loglik" << std::setw(16) << "parzen_mean"
      << std::setw(12) << "parzen_sem" << std::setw(14) << "ais_logZ" << "\n";
  for (const Run& run : runs) {
    std::string loglik = "-", parzen = "-", sem = "-", ais = "-";
    long final_iter = run.trace.empty() ? 0 : run.trace.back().iteration;
    if (!run.trace.empty() && run.trace.back().exact_loglik)
      loglik = format_double(*run.trace.back().exact_loglik);
    if (!run.eval.is_null()) {
      if (run.eval.contains("parzen_mean")) parzen = format_double(run.eval["parzen_mean"]);
      if (run.eval.contains("parzen_sem")) sem = format_double(run.eval["parzen_sem"]);
      if (run.eval.contains("ais_logZ")) ais = format_double(run.eval["ais_logZ"]);
    }
    out << std::left << std::setw(24) << run.name << std::setw(10)
        << run.meta.value("variant", "-") << std::setw(12) << final_iter << std::setw(16) << loglik
        << std::setw(16) << parzen << std::setw(12) << sem << std::setw(14) << ais << "\n";
  }
  return kExitOk;
}

}  // namespace apcd
