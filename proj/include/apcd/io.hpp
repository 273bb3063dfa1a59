#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "apcd/trainer.hpp"

namespace apcd {

/// 17 significant digits: doubles round-trip exactly through this form.
std::string format_double(double v);

uint64_t fnv1a(std::string_view bytes);
std::string hex64(uint64_t v);
uint64_t file_digest(const std::filesystem::path& path);

// ---- model file (`apcd-model v1`) -------------------------------------

struct ModelFile {
  PairwiseModel model;
  VariablePartition partition;
};

void write_model_file(const std::filesystem::path& path, const PairwiseModel& model,
                      const VariablePartition& partition);
ModelFile read_model_file(const std::filesystem::path& path);

// ---- dataset file (`apcd-data v1`, bit-string lines) -------------------

void write_dataset_file(const std::filesystem::path& path,
                        std::span<const Configuration> data, const nlohmann::json& metadata);
std::vector<Configuration> read_dataset_file(const std::filesystem::path& path);
std::filesystem::path dataset_metadata_path(const std::filesystem::path& dataset_path);
nlohmann::json read_dataset_metadata(const std::filesystem::path& dataset_path);

std::string configuration_bits(const Configuration& x);
Configuration configuration_from_bits(const std::string& bits);

// ---- flat key=value config files ---------------------------------------

struct KeyValueConfig {
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback = "") const;
  std::string require(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long get_long(const std::string& key, long fallback) const;
  void set(const std::string& key, const std::string& value) { values[key] = value; }

  /// Canonical serialization (sorted keys) that the digest is taken over;
  /// output-location keys (out_dir, out, resume) are excluded.
  std::string canonical() const;
  uint64_t digest() const { return fnv1a(canonical()); }
};

KeyValueConfig parse_config_file(const std::filesystem::path& path);
KeyValueConfig parse_config_text(const std::string& text);

// ---- metrics traces (JSON lines) ----------------------------------------

nlohmann::json metrics_record_to_json(const MetricsRecord& rec);
MetricsRecord metrics_record_from_json(const nlohmann::json& j);

class MetricsWriter {
 public:
  MetricsWriter(const std::filesystem::path& path, const nlohmann::json& header);
  void write(const MetricsRecord& rec);

 private:
  std::ofstream out_;
};

std::vector<nlohmann::json> read_jsonl(const std::filesystem::path& path);

/// Trace identity used by the determinism contract: every field except the
/// wall-clock timestamp must match.
bool traces_equal_ignoring_timestamp(const std::filesystem::path& a,
                                     const std::filesystem::path& b);

// ---- checkpoints (`apcd-checkpoint v1`) ----------------------------------

struct CheckpointData {
  uint64_t config_digest = 0;
  uint64_t master_seed = 0;
  TrainerState state;
  VariablePartition partition;
};

void write_checkpoint(const std::filesystem::path& path, const TrainerState& state,
                      const VariablePartition& partition, uint64_t config_digest,
                      uint64_t master_seed);
CheckpointData read_checkpoint(const std::filesystem::path& path);

}  // namespace apcd
