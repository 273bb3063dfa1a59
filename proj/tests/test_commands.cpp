#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <omp.h>

#include "apcd/commands.hpp"
#include "apcd/errors.hpp"
#include "apcd/synth.hpp"
#include "test_util.hpp"

using namespace apcd;
using namespace apcd::testutil;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("apcd_cmd_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

KeyValueConfig generate_config(const fs::path& dir, int rows, int cols, double hidden_fraction,
                               int count, uint64_t seed) {
  KeyValueConfig config;
  config.set("experiment", "cmdtest");
  config.set("out_dir", dir.string());
  config.set("rows", std::to_string(rows));
  config.set("cols", std::to_string(cols));
  config.set("hidden_fraction", format_double(hidden_fraction));
  config.set("bias_min", "-1.5");
  config.set("bias_max", "1.5");
  config.set("train_count", std::to_string(count));
  config.set("test_count", std::to_string(count));
  config.set("sweeps_per_sample", "30");
  config.set("seed", std::to_string(seed));
  return config;
}

KeyValueConfig train_config(const fs::path& data_dir, const fs::path& out_dir,
                            const std::string& variant, long iterations, uint64_t seed) {
  KeyValueConfig config;
  config.set("experiment", "cmdtest");
  config.set("model", (data_dir / "truth.model").string());
  config.set("data", (data_dir / "train.data").string());
  config.set("out_dir", out_dir.string());
  config.set("variant", variant);
  config.set("iterations", std::to_string(iterations));
  config.set("e_ell", "2");
  config.set("e_chains", "4");
  config.set("m_ell", "2");
  config.set("m_chains", "10");
  config.set("a", "power(1,0.6667)");
  config.set("b", "power(0.5,1)");
  config.set("log_interval", "5");
  config.set("seed", std::to_string(seed));
  return config;
}

// Record lines with the wall-clock field stripped.
std::vector<nlohmann::json> record_lines(const fs::path& metrics) {
  std::vector<nlohmann::json> out;
  for (auto& j : read_jsonl(metrics)) {
    if (j.value("type", "") != "record") continue;
    j.erase("timestamp");
    out.push_back(std::move(j));
  }
  return out;
}

}  // namespace

TEST_CASE("cmd_generate") {
  TempDir dir("gen");
  std::ostringstream out;
  SUBCASE("writes model, datasets, and metadata") {
    const KeyValueConfig config = generate_config(dir.path / "a", 2, 2, 0.25, 20, 3);
    CHECK(cmd_generate(config, out) == kExitOk);
    CHECK(fs::exists(dir.path / "a" / "truth.model"));
    CHECK(fs::exists(dir.path / "a" / "train.data"));
    CHECK(fs::exists(dir.path / "a" / "test.data"));
    const auto train = read_dataset_file(dir.path / "a" / "train.data");
    CHECK(train.size() == 20);
    const nlohmann::json meta = read_dataset_metadata(dir.path / "a" / "train.data");
    CHECK(meta["count"] == 20);
    CHECK(meta.contains("config_digest"));
    CHECK(meta.contains("master_seed"));
    const ModelFile model = read_model_file(dir.path / "a" / "truth.model");
    CHECK(model.model.topology.num_nodes == 4);
    CHECK(model.partition.hidden.size() == 1);
  }
  SUBCASE("the paper counts are accepted and recorded") {
    KeyValueConfig config = generate_config(dir.path / "b", 2, 2, 0.0, 2000, 4);
    config.set("sweeps_per_sample", "3");
    CHECK(cmd_generate(config, out) == kExitOk);
    CHECK(read_dataset_metadata(dir.path / "b" / "train.data")["count"] == 2000);
  }
  SUBCASE("identical config and seed produce byte-identical outputs") {
    CHECK(cmd_generate(generate_config(dir.path / "c1", 2, 3, 0.3, 15, 9), out) == kExitOk);
    CHECK(cmd_generate(generate_config(dir.path / "c2", 2, 3, 0.3, 15, 9), out) == kExitOk);
    for (const char* name : {"truth.model", "train.data", "test.data", "train.data.meta.json"}) {
      CHECK(slurp(dir.path / "c1" / name) == slurp(dir.path / "c2" / name));
    }
  }
}

TEST_CASE("cmd_train") {
  TempDir dir("train");
  std::ostringstream out;
  REQUIRE(cmd_generate(generate_config(dir.path / "data", 2, 2, 0.5, 24, 11), out) == kExitOk);

  SUBCASE("apcd with an equal-exponent pair refuses with exit code 2") {
    KeyValueConfig config = train_config(dir.path / "data", dir.path / "bad", "apcd", 10, 1);
    config.set("a", "power(1,1)");
    config.set("b", "power(1,1)");
    std::ostringstream err;
    const int code = run_guarded(err, [&] { return cmd_train(config, out); });
    CHECK(code == kExitScheduleInvalid);
    CHECK(err.str().find("schedule") != std::string::npos);
    CHECK(!fs::exists(dir.path / "bad" / "model-final.txt"));
  }
  SUBCASE("exact-em run converges with a tiny recorded gradient norm") {
    KeyValueConfig config = train_config(dir.path / "data", dir.path / "em", "exact-em", 0, 1);
    config.values.erase("iterations");
    config.set("em_max_outer", "400");
    config.set("em_inner_tol", "1e-9");
    CHECK(cmd_train(config, out) == kExitOk);
    const auto records = record_lines(dir.path / "em" / "metrics.jsonl");
    REQUIRE(!records.empty());
    CHECK(records.back()["exact_grad_norm"].get<double>() < 1e-6);
  }
  SUBCASE("identical (config, seed) runs produce identical traces") {
    const KeyValueConfig c1 = train_config(dir.path / "data", dir.path / "r1", "apcd", 30, 5);
    KeyValueConfig c2 = train_config(dir.path / "data", dir.path / "r2", "apcd", 30, 5);
    CHECK(cmd_train(c1, out) == kExitOk);
    omp_set_num_threads(3);  // worker count must not leak into results
    CHECK(cmd_train(c2, out) == kExitOk);
    omp_set_num_threads(1);
    CHECK(record_lines(dir.path / "r1" / "metrics.jsonl") ==
          record_lines(dir.path / "r2" / "metrics.jsonl"));
    // Different seed changes the trace.
    KeyValueConfig c3 = train_config(dir.path / "data", dir.path / "r3", "apcd", 30, 6);
    CHECK(cmd_train(c3, out) == kExitOk);
    CHECK(record_lines(dir.path / "r1" / "metrics.jsonl") !=
          record_lines(dir.path / "r3" / "metrics.jsonl"));
  }
  SUBCASE("checkpoint resume reproduces the uninterrupted trace") {
    for (const std::string variant : {"apcd", "mfpcd", "hapcd"}) {
      KeyValueConfig full =
          train_config(dir.path / "data", dir.path / ("full_" + variant), variant, 40, 7);
      full.set("checkpoint_interval", "20");
      CHECK(cmd_train(full, out) == kExitOk);
      KeyValueConfig resumed =
          train_config(dir.path / "data", dir.path / ("res_" + variant), variant, 40, 7);
      resumed.set("checkpoint_interval", "20");
      resumed.set("resume",
                  (dir.path / ("full_" + variant) / "checkpoint-00000020.txt").string());
      CHECK(cmd_train(resumed, out) == kExitOk);
      const auto full_records = record_lines(dir.path / ("full_" + variant) / "metrics.jsonl");
      const auto res_records = record_lines(dir.path / ("res_" + variant) / "metrics.jsonl");
      REQUIRE(!res_records.empty());
      REQUIRE(res_records.size() < full_records.size());
      const size_t offset = full_records.size() - res_records.size();
      for (size_t k = 0; k < res_records.size(); ++k)
        CHECK(res_records[k] == full_records[offset + k]);
      CHECK(slurp(dir.path / ("full_" + variant) / "model-final.txt") ==
            slurp(dir.path / ("res_" + variant) / "model-final.txt"));
    }
  }
  SUBCASE("epochs convert to iterations through the minibatch size") {
    KeyValueConfig config = train_config(dir.path / "data", dir.path / "ep", "mfpcd", 0, 2);
    config.values.erase("iterations");
    config.set("epochs", "3");
    config.set("minibatch", "8");  // 24 data / 8 = 3 iterations per epoch
    CHECK(cmd_train(config, out) == kExitOk);
    const auto records = record_lines(dir.path / "ep" / "metrics.jsonl");
    CHECK(records.back()["iteration"] == 9);
  }
}

TEST_CASE("cmd_eval") {
  TempDir dir("eval");
  std::ostringstream out;
  REQUIRE(cmd_generate(generate_config(dir.path / "data", 2, 2, 0.25, 40, 21), out) == kExitOk);
  KeyValueConfig config;
  config.set("model", (dir.path / "data" / "truth.model").string());
  config.set("train_data", (dir.path / "data" / "train.data").string());
  config.set("test_data", (dir.path / "data" / "test.data").string());
  config.set("out", (dir.path / "eval_report.json").string());
  config.set("eval_samples", "150");
  config.set("eval_sweeps", "25");
  config.set("ais_steps", "150");
  config.set("ais_chains", "30");
  config.set("seed", "22");
  CHECK(cmd_eval(config, out) == kExitOk);
  nlohmann::json report;
  std::ifstream in(dir.path / "eval_report.json");
  in >> report;
  for (const char* field : {"parzen_mean", "parzen_sem", "sigma", "ais_logZ", "ais_weight_var",
                            "exact_loglik", "grad_norm", "true_parzen_mean", "config_digest",
                            "master_seed"}) {
    CHECK(report.contains(field));
  }
  // The chosen sigma comes from the grid.
  bool on_grid = false;
  for (int k = 1; k <= 10; ++k) on_grid = on_grid || report["sigma"] == doctest::Approx(0.1 * k);
  CHECK(on_grid);
}

TEST_CASE("eval measures agree in ranking on a constructed pair of models") {
  // Uniform test data: the zero-parameter model must beat a skewed one under
  // the exact, Parzen, and AIS-based measures alike.
  TempDir dir("rank");
  std::ostringstream out;
  const GraphTopology topo = grid_topology(2, 2);
  const VariablePartition part = VariablePartition::all_visible(4);
  const PairwiseModel uniform_model(topo);
  PairwiseModel skewed(topo);
  for (double& b : skewed.node_bias) b = 2.5;
  const auto train = generate_samples(uniform_model, 60, 5, 31);
  const auto test = generate_samples(uniform_model, 60, 5, 32);
  write_dataset_file(dir.path / "train.data", train, {{"role", "train"}});
  write_dataset_file(dir.path / "test.data", test, {{"role", "test"}});
  write_model_file(dir.path / "uniform.model", uniform_model, part);
  write_model_file(dir.path / "skewed.model", skewed, part);

  auto eval_one = [&](const std::string& name) {
    KeyValueConfig config;
    config.set("model", (dir.path / (name + ".model")).string());
    config.set("train_data", (dir.path / "train.data").string());
    config.set("test_data", (dir.path / "test.data").string());
    config.set("out", (dir.path / (name + ".json")).string());
    config.set("eval_samples", "200");
    config.set("eval_sweeps", "20");
    config.set("ais_steps", "200");
    config.set("ais_chains", "50");
    config.set("ais_test_loglik", "1");
    config.set("seed", "33");
    REQUIRE(cmd_eval(config, out) == kExitOk);
    nlohmann::json j;
    std::ifstream in(dir.path / (name + ".json"));
    in >> j;
    return j;
  };
  const nlohmann::json u = eval_one("uniform");
  const nlohmann::json s = eval_one("skewed");
  CHECK(u["exact_loglik"].get<double>() > s["exact_loglik"].get<double>());
  CHECK(u["parzen_mean"].get<double>() > s["parzen_mean"].get<double>());
  CHECK(u["ais_test_loglik_mean"].get<double>() > s["ais_test_loglik_mean"].get<double>());
}

TEST_CASE("cmd_validate_schedule") {
  std::ostringstream out;
  CHECK(cmd_validate_schedule("power(1,0.6667)", "power(1,1)", out) == kExitOk);
  CHECK(out.str().find("valid-E-fast") != std::string::npos);
  out.str("");
  CHECK(cmd_validate_schedule("power(1,1)", "logdamped(1)", out) == kExitOk);
  CHECK(out.str().find("valid-E-slow") != std::string::npos);
  out.str("");
  CHECK(cmd_validate_schedule("power(1,1)", "power(1,1)", out) == kExitScheduleInvalid);
  CHECK(out.str().find("invalid") != std::string::npos);
  std::ostringstream err;
  CHECK(run_guarded(err, [&] { return cmd_validate_schedule("garbage", "power(1,1)", out); }) ==
        kExitError);
}

TEST_CASE("cmd_report") {
  TempDir dir("report");
  std::ostringstream out;
  REQUIRE(cmd_generate(generate_config(dir.path / "data", 2, 2, 0.5, 24, 41), out) == kExitOk);
  REQUIRE(cmd_train(train_config(dir.path / "data", dir.path / "run_a", "apcd", 20, 42), out) ==
          kExitOk);
  REQUIRE(cmd_train(train_config(dir.path / "data", dir.path / "run_b", "mfpcd", 20, 42), out) ==
          kExitOk);

  SUBCASE("single run yields a single column pair") {
    std::ostringstream table;
    CHECK(cmd_report({(dir.path / "run_a").string()}, (dir.path / "single.tsv").string(),
                     table) == kExitOk);
    const std::string tsv = slurp(dir.path / "single.tsv");
    CHECK(tsv.find("run_a:exact_loglik") != std::string::npos);
    CHECK(table.str().find("apcd") != std::string::npos);
  }
  SUBCASE("two runs produce an aligned table") {
    std::ostringstream table;
    CHECK(cmd_report({(dir.path / "run_a").string(), (dir.path / "run_b").string()},
                     (dir.path / "pair.tsv").string(), table) == kExitOk);
    const std::string tsv = slurp(dir.path / "pair.tsv");
    CHECK(tsv.find("run_b:exact_loglik") != std::string::npos);
    CHECK(table.str().find("mfpcd") != std::string::npos);
  }
  SUBCASE("identical reruns give identical columns") {
    REQUIRE(cmd_train(train_config(dir.path / "data", dir.path / "run_a2", "apcd", 20, 42),
                      out) == kExitOk);
    std::ostringstream table;
    CHECK(cmd_report({(dir.path / "run_a").string(), (dir.path / "run_a2").string()},
                     (dir.path / "dup.tsv").string(), table) == kExitOk);
    std::ifstream tsv(dir.path / "dup.tsv");
    std::string line;
    std::getline(tsv, line);  // header
    while (std::getline(tsv, line)) {
      std::istringstream ss(line);
      std::string iter, l1, g1, l2, g2;
      std::getline(ss, iter, '\t');
      std::getline(ss, l1, '\t');
      std::getline(ss, g1, '\t');
      std::getline(ss, l2, '\t');
      std::getline(ss, g2, '\t');
      CHECK(l1 == l2);
      CHECK(g1 == g2);
    }
  }
  SUBCASE("mismatched dataset digests are refused") {
    REQUIRE(cmd_generate(generate_config(dir.path / "data2", 2, 2, 0.5, 24, 99), out) == kExitOk);
    REQUIRE(cmd_train(train_config(dir.path / "data2", dir.path / "run_other", "apcd", 10, 1),
                      out) == kExitOk);
    std::ostringstream table;
    std::ostringstream err;
    const int code = run_guarded(err, [&] {
      return cmd_report({(dir.path / "run_a").string(), (dir.path / "run_other").string()},
                        (dir.path / "bad.tsv").string(), table);
    });
    CHECK(code == kExitError);
    CHECK(err.str().find("dataset") != std::string::npos);
  }
}
