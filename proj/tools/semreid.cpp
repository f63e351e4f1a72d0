// Command-line front end: offline phase (gen-synth, train-toy, calibrate) and
// online phase (query, evaluate), plus `pipeline` chaining all five.
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "semreid/calibration.hpp"
#include "semreid/dataset.hpp"
#include "semreid/error.hpp"
#include "semreid/metrics.hpp"
#include "semreid/models.hpp"
#include "semreid/ontology.hpp"
#include "semreid/pipeline.hpp"
#include "semreid/retrieval.hpp"
#include "semreid/synth.hpp"

namespace {

using namespace semreid;
using ordered_json = nlohmann::ordered_json;

struct SynthOptions {
  std::string ontology_path;
  std::string scenario = "plain";
  std::vector<std::string> attr_rates;  // NAME=RATE
  SynthConfig cfg;

  void register_flags(CLI::App* cmd) {
    cmd->add_option("--ontology", ontology_path,
                    "Ontology document (default: bundled market1501)");
    cmd->add_option("--seed", cfg.seed, "Generator seed");
    cmd->add_option("--identities", cfg.num_identities, "Number of identities (>= 2)");
    cmd->add_option("--images-per-id", cfg.images_per_identity, "Images per identity (>= 2)");
    cmd->add_option("--dim", cfg.feature_dim, "Feature dimension (multiple of 4)");
    cmd->add_option("--cameras", cfg.camera_count, "Camera count (>= 2)");
    cmd->add_option("--feature-noise", cfg.feature_noise_sigma, "Per-image feature noise sigma");
    cmd->add_option("--flip-rate", cfg.attr_flip_rate, "Attribute flip rate in [0, 0.5)");
    cmd->add_option("--prob-jitter", cfg.attr_prob_jitter, "Probability jitter sigma");
    cmd->add_option("--positive-rate", cfg.default_positive_rate,
                    "Default attribute positive rate");
    cmd->add_option("--attr-rate", attr_rates, "Per-attribute positive rate as NAME=RATE");
    cmd->add_option("--attr-signal", cfg.attr_signal, "Feature shift per attribute value");
    cmd->add_option("--centroid-scale", cfg.centroid_scale, "Identity centroid sigma");
    cmd->add_option("--train-fraction", cfg.train_fraction, "Fraction of identities in train");
    cmd->add_option("--scenario", scenario, "plain | confusable")
        ->check(CLI::IsMember({"plain", "confusable"}));
    cmd->add_option("--confusable-attr", cfg.confusable_attribute,
                    "Designated attribute for the confusable scenario");
    cmd->add_option("--pair-gap", cfg.pair_gap, "Centroid gap within a confusable pair");
  }

  void finalize() {
    cfg.ontology =
        ontology_path.empty() ? market1501_ontology() : load_ontology(ontology_path);
    for (const std::string& spec : attr_rates) {
      const auto eq = spec.find('=');
      if (eq == std::string::npos) {
        throw ValidationError("--attr-rate expects NAME=RATE, got '" + spec + "'");
      }
      cfg.positive_rate_per_attr[spec.substr(0, eq)] = std::stod(spec.substr(eq + 1));
    }
  }

  bool confusable() const { return scenario == "confusable"; }
};

struct TrainOptions {
  EmbedderConfig embedder;
  GroupTrainConfig classifier;

  // `pipeline` funnels one --seed through every stage, so the training seed
  // flag is only registered for the standalone train-toy command.
  void register_flags(CLI::App* cmd, bool with_seed = true) {
    if (with_seed) cmd->add_option("--seed", embedder.seed, "Training seed");
    cmd->add_option("--embed-dim", embedder.output_dim, "Embedding dimension (multiple of 4)");
    cmd->add_option("--margin", embedder.margin, "Triplet margin (> 0)");
    cmd->add_option("--step", embedder.step_size, "Embedder gradient step");
    cmd->add_option("--epochs", embedder.max_epochs, "Embedder epochs");
    cmd->add_option("--triplets", embedder.num_triplets, "Sampled triplet count");
    cmd->add_option("--cls-step", classifier.step_size, "Classifier gradient step");
    cmd->add_option("--cls-epochs", classifier.max_epochs, "Classifier epochs");
  }
};

Dataset dataset_for_inference(const std::string& manifest, const std::string& model_path) {
  Dataset ds = read_dataset(manifest);
  if (!model_path.empty()) {
    const ToyModels models = load_models(model_path, ds.ontology);
    ds = apply_models(ds, models);
  }
  return ds;
}

int run_app(int argc, char** argv) {
  CLI::App app{"Attribute-filtered person re-identification engine"};
  app.require_subcommand(1);

  // ---- gen-synth ----
  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic descriptor dataset");
  SynthOptions gen_opts;
  std::string gen_out;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen_opts.register_flags(gen);
  gen->callback([&] {
    gen_opts.finalize();
    const Dataset ds = gen_opts.confusable() ? scenario_confusable(gen_opts.cfg)
                                             : generate(gen_opts.cfg);
    const auto manifest = write_dataset(ds, gen_out, gen_opts.cfg.to_json());
    std::cout << "wrote " << manifest.string() << " (" << ds.descriptors.size()
              << " descriptors)\n";
  });

  // ---- train-toy ----
  auto* train = app.add_subcommand("train-toy", "Train the linear embedder and region heads");
  std::string train_dataset, train_out;
  TrainOptions train_opts;
  train->add_option("--dataset", train_dataset, "Dataset manifest")->required();
  train->add_option("--out", train_out, "Model document path")->required();
  train_opts.register_flags(train);
  train->callback([&] {
    const Dataset ds = read_dataset(train_dataset);
    const ToyModels models = train_toy_models(ds, train_opts.embedder, train_opts.classifier);
    save_models(models, train_out);
    std::cout << "wrote " << train_out << "\n";
  });

  // ---- calibrate ----
  auto* cal = app.add_subcommand("calibrate", "Select per-attribute thresholds by MCC grid search");
  std::string cal_dataset, cal_out, cal_model, cal_split = "train";
  cal->add_option("--dataset", cal_dataset, "Dataset manifest")->required();
  cal->add_option("--out", cal_out, "Threshold table path")->required();
  cal->add_option("--model", cal_model, "Use model predictions instead of stored attr_probs");
  cal->add_option("--split", cal_split, "Calibration split")
      ->check(CLI::IsMember({"train", "query", "gallery"}));
  cal->callback([&] {
    const Dataset ds = dataset_for_inference(cal_dataset, cal_model);
    const SplitViews views = split_views(ds);
    const DescriptorView& view = cal_split == "train"   ? views.train
                                 : cal_split == "query" ? views.query
                                                        : views.gallery;
    const std::vector<double> grid = default_threshold_grid();
    const ThresholdTable table = calibrate_on_view(view, ds.ontology, grid);
    save_thresholds(table, cal_out);
    std::cout << "wrote " << cal_out << "\n";
  });

  // ---- query ----
  auto* query = app.add_subcommand("query", "Rank the gallery for every query descriptor");
  std::string q_dataset, q_thresholds, q_out, q_model, q_filter = "none",
              q_order = "filter-first", q_mask = "on";
  query->add_option("--dataset", q_dataset, "Dataset manifest")->required();
  query->add_option("--thresholds", q_thresholds, "Calibrated threshold table")->required();
  query->add_option("--out", q_out, "Results document path")->required();
  query->add_option("--model", q_model, "Use model embeddings and predictions");
  query->add_option("--filter", q_filter, "none | attr:NAME | attrs:N1,N2 | region:R");
  query->add_option("--order", q_order, "filter-first | rank-first")
      ->check(CLI::IsMember({"filter-first", "rank-first"}));
  query->add_option("--mask", q_mask, "Protocol mask (same person + same camera)")
      ->check(CLI::IsMember({"on", "off"}));
  query->callback([&] {
    const Dataset ds = dataset_for_inference(q_dataset, q_model);
    const ThresholdTable table = load_thresholds(q_thresholds, ds.ontology);
    const QueryBatchResult batch =
        run_query_batch(ds, table, FilterSpec::parse(q_filter),
                        query_order_from_name(q_order), q_mask == "on");
    save_query_results(batch, q_out);
    std::cout << "wrote " << q_out << " (" << batch.results.size() << " queries)\n";
  });

  // ---- evaluate ----
  auto* eval = app.add_subcommand("evaluate", "Score a results document against ground truth");
  std::string e_dataset, e_results, e_out, e_thresholds, e_model;
  eval->add_option("--dataset", e_dataset, "Dataset manifest")->required();
  eval->add_option("--results", e_results, "Results document from `query`")->required();
  eval->add_option("--out", e_out, "Report path")->required();
  eval->add_option("--thresholds", e_thresholds,
                   "Threshold table; enables the attribute-F1 section");
  eval->add_option("--model", e_model, "Use model predictions for attribute F1");
  eval->callback([&] {
    const Dataset ds = dataset_for_inference(e_dataset, e_model);
    const QueryBatchResult batch = load_query_results(e_results);
    if (batch.ontology_checksum != ontology_checksum(ds.ontology)) {
      throw ValidationError("results document: ontology checksum mismatch");
    }
    EvalReport report;
    report.retrieval = evaluate_retrieval(batch.results, ds, batch.protocol_mask);
    if (!e_thresholds.empty()) {
      const ThresholdTable table = load_thresholds(e_thresholds, ds.ontology);
      const SplitViews views = split_views(ds);
      DescriptorView test = views.query;
      test.insert(test.end(), views.gallery.begin(), views.gallery.end());
      report.attributes = evaluate_attributes(test, table, ds.ontology);
    }
    save_eval_report(report, e_out);
    std::cout << eval_report_to_json(report);
  });

  // ---- pipeline ----
  auto* pipe = app.add_subcommand("pipeline", "gen-synth + train-toy + calibrate + query + evaluate");
  SynthOptions pipe_synth;
  TrainOptions pipe_train;
  std::string pipe_out, pipe_filter = "none", pipe_order = "filter-first", pipe_mask = "on",
              pipe_cal_split = "train";
  bool pipe_no_models = false;
  pipe->add_option("--out", pipe_out, "Output directory")->required();
  pipe_synth.register_flags(pipe);
  pipe_train.register_flags(pipe, /*with_seed=*/false);
  pipe->add_flag("--no-models", pipe_no_models,
                 "Skip model training; use generator features and probabilities");
  pipe->add_option("--filter", pipe_filter, "none | attr:NAME | attrs:N1,N2 | region:R");
  pipe->add_option("--order", pipe_order, "filter-first | rank-first")
      ->check(CLI::IsMember({"filter-first", "rank-first"}));
  pipe->add_option("--mask", pipe_mask, "Protocol mask")->check(CLI::IsMember({"on", "off"}));
  pipe->add_option("--calibration-split", pipe_cal_split, "Split used for calibration")
      ->check(CLI::IsMember({"train", "query", "gallery"}));
  pipe->callback([&] {
    pipe_synth.finalize();
    PipelineConfig cfg;
    cfg.synth = pipe_synth.cfg;
    cfg.confusable_scenario = pipe_synth.confusable();
    cfg.use_models = !pipe_no_models;
    cfg.embedder = pipe_train.embedder;
    cfg.embedder.seed = pipe_synth.cfg.seed;
    cfg.classifier = pipe_train.classifier;
    cfg.calibration_split = split_from_name(pipe_cal_split);
    cfg.filter = FilterSpec::parse(pipe_filter);
    cfg.order = query_order_from_name(pipe_order);
    cfg.protocol_mask = pipe_mask == "on";
    const PipelineArtifacts artifacts = run_pipeline(cfg, pipe_out);
    std::cout << eval_report_to_json(artifacts.report);
    std::cout << "report: " << artifacts.report_file.string() << "\n";
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_app(argc, argv);
  } catch (const semreid::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 2;
  } catch (const semreid::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
