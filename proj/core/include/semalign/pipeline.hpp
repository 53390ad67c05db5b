#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "semalign/analysis.hpp"
#include "semalign/attribution.hpp"
#include "semalign/config.hpp"
#include "semalign/tasks.hpp"
#include "semalign/transfer.hpp"

namespace semalign {

using Logger = std::function<void(const std::string&)>;

// Output root: config.output_dir, else $SEMALIGN_OUT, else "runs"; an
// explicit `override_dir` wins over all of them.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config,
                                         const std::filesystem::path& override_dir = {});

// Stage helpers shared by the pipeline and the CLI. Trained weights are
// rounded to float32 so that what later stages use equals what is saved.
LmParams train_teacher(const ExperimentConfig& config, const TaskData& data,
                       TrainReport* report = nullptr);
LmParams train_student(const ExperimentConfig& config, const TaskData& data,
                       TrainReport* report = nullptr);

struct AttributionOutcome {
  std::vector<LayerScore> scores;
  std::vector<std::size_t> critical;  // 1-based teacher layers
  PairingPlan plan;
};

AttributionOutcome attribute_and_pair(const ExperimentConfig& config, const LmParams& teacher,
                                      std::size_t student_layers, const TaskData& data);

// Runs config.method. For kNone the result passes the student through.
TransferResult run_method(const ExperimentConfig& config, const LmParams& teacher,
                          const LmParams& student, const TaskData& data, const PairingPlan& plan,
                          const BasisPair& bases);

struct ArtifactRecord {
  std::string name;
  std::string path;  // relative to the run directory
  std::string checksum;
};

struct RunManifest {
  std::string config_json;
  std::vector<ArtifactRecord> artifacts;
  std::map<std::string, double> metrics;  // teacher_acc, student_before_acc, ...
  std::map<std::string, std::uint64_t> seeds;
  std::vector<std::string> completed_stages;
  std::string failed_stage;
  std::string error;
  double wall_clock_seconds = 0.0;
  std::string checksum;  // over everything except wall-clock time

  bool ok() const { return failed_stage.empty(); }
  std::string to_json() const;
};

// Full run into `run_dir`: train teacher, train student baseline, bases,
// resolution validation, attribution and pairing, transfer, evaluation,
// CKA grids, manifest.json. A failing stage is recorded in the manifest,
// which is still written.
RunManifest run_pipeline(const ExperimentConfig& config, const std::filesystem::path& run_dir,
                         const Logger& log = {});

}  // namespace semalign
