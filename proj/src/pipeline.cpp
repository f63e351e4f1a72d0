#include "semreid/pipeline.hpp"

#include "json.hpp"
#include "semreid/calibration.hpp"
#include "semreid/error.hpp"

namespace semreid {

using ordered_json = nlohmann::ordered_json;

std::string PipelineConfig::to_json() const {
  ordered_json doc;
  doc["synth"] = ordered_json::parse(synth.to_json());
  doc["confusable_scenario"] = confusable_scenario;
  doc["use_models"] = use_models;
  if (use_models) {
    doc["embedder"] = {{"output_dim", embedder.output_dim},
                       {"step_size", embedder.step_size},
                       {"max_epochs", embedder.max_epochs},
                       {"margin", embedder.margin},
                       {"num_triplets", embedder.num_triplets},
                       {"init_scale", embedder.init_scale},
                       {"seed", embedder.seed}};
    doc["classifier"] = {{"step_size", classifier.step_size},
                         {"max_epochs", classifier.max_epochs}};
  }
  doc["calibration_split"] = std::string(split_name(calibration_split));
  doc["filter"] = filter.to_string();
  doc["order"] = std::string(query_order_name(order));
  doc["protocol_mask"] = protocol_mask;
  return doc.dump();
}

namespace {

const DescriptorView& view_for_split(const SplitViews& views, Split s) {
  switch (s) {
    case Split::train:
      return views.train;
    case Split::query:
      return views.query;
    case Split::gallery:
      return views.gallery;
  }
  throw ValidationError("invalid split value");
}

}  // namespace

PipelineArtifacts run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + out_dir.string());

  PipelineArtifacts artifacts;

  // offline: data
  Dataset raw = cfg.confusable_scenario ? scenario_confusable(cfg.synth) : generate(cfg.synth);
  artifacts.dataset_manifest = write_dataset(raw, out_dir / "dataset", cfg.synth.to_json());

  // offline: models
  Dataset working = raw;
  if (cfg.use_models) {
    const ToyModels models = train_toy_models(raw, cfg.embedder, cfg.classifier);
    artifacts.model_file = out_dir / "model.json";
    save_models(models, artifacts.model_file);
    working = apply_models(raw, models);
  }

  // offline: thresholds from the calibration split
  const SplitViews views = split_views(working);
  const std::vector<double> grid = default_threshold_grid();
  const ThresholdTable thresholds =
      calibrate_on_view(view_for_split(views, cfg.calibration_split), working.ontology, grid);
  artifacts.thresholds_file = out_dir / "thresholds.json";
  save_thresholds(thresholds, artifacts.thresholds_file);

  // online: query + evaluate
  const QueryBatchResult batch =
      run_query_batch(working, thresholds, cfg.filter, cfg.order, cfg.protocol_mask);
  artifacts.results_file = out_dir / "results.json";
  save_query_results(batch, artifacts.results_file);

  EvalReport report;
  report.retrieval = evaluate_retrieval(batch.results, working, cfg.protocol_mask);
  DescriptorView test_view = views.query;
  test_view.insert(test_view.end(), views.gallery.begin(), views.gallery.end());
  report.attributes = evaluate_attributes(test_view, thresholds, working.ontology);
  artifacts.report_file = out_dir / "report.json";

  ordered_json provenance;
  provenance["config"] = ordered_json::parse(cfg.to_json());
  provenance["ontology_checksum"] = ontology_checksum(working.ontology);
  save_eval_report(report, artifacts.report_file, provenance.dump());
  artifacts.report = std::move(report);
  return artifacts;
}

}  // namespace semreid
