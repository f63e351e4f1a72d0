#pragma once

#include <filesystem>
#include <string>

#include "semreid/metrics.hpp"
#include "semreid/models.hpp"
#include "semreid/retrieval.hpp"
#include "semreid/synth.hpp"

namespace semreid {

// Offline phase (generate, train, calibrate) followed by the online phase
// (query, evaluate), end to end. Every stage is seeded from the config, so
// identical configs produce byte-identical artifacts.
struct PipelineConfig {
  SynthConfig synth;
  bool confusable_scenario = false;
  bool use_models = true;  // route features/probs through the trained models
  EmbedderConfig embedder;
  GroupTrainConfig classifier;
  Split calibration_split = Split::train;
  FilterSpec filter;
  QueryOrder order = QueryOrder::filter_then_rank;
  bool protocol_mask = true;

  std::string to_json() const;
};

struct PipelineArtifacts {
  std::filesystem::path dataset_manifest;
  std::filesystem::path model_file;      // empty when use_models is off
  std::filesystem::path thresholds_file;
  std::filesystem::path results_file;
  std::filesystem::path report_file;
  EvalReport report;
};

// Runs the full pipeline into out_dir:
//   dataset/{ontology.json,records.jsonl,manifest.json}, model.json,
//   thresholds.json, results.json, report.json
PipelineArtifacts run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace semreid
