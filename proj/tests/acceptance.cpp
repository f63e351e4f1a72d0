// Acceptance suite: one pass/fail line per criterion, exit status equals the
// number of failed criteria. Criterion 8 drives the installed CLI binary.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "semreid/calibration.hpp"
#include "semreid/dataset.hpp"
#include "semreid/losses.hpp"
#include "semreid/metrics.hpp"
#include "semreid/models.hpp"
#include "semreid/ontology.hpp"
#include "semreid/retrieval.hpp"
#include "semreid/synth.hpp"
#include "semreid/util.hpp"

using namespace semreid;

namespace {

struct Criterion {
  int number;
  std::string title;
  std::function<bool(std::string&)> run;
  long long limit_ms = 0;  // 0 = no stated runtime bound
};

bool nearly(double a, double b, double tol) { return std::fabs(a - b) <= tol; }

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// ---------- criterion 1: MCC anchored values ----------
bool criterion_mcc(std::string& detail) {
  bool ok = true;
  ok &= nearly(mcc({5, 5, 0, 0}), 1.0, 1e-9);
  ok &= nearly(mcc({0, 0, 5, 5}), -1.0, 1e-9);
  ok &= nearly(mcc({3, 4, 1, 2}), 0.408248, 1e-6);
  ok &= nearly(mcc({3, 4, 1, 2}), 10.0 / std::sqrt(600.0), 1e-9);
  ok &= mcc({0, 97, 0, 3}) == 0.0;
  detail = "perfect/inverted/mixed/degenerate";
  return ok;
}

// ---------- criterion 2: calibration vs brute force ----------
bool criterion_calibration_oracle(std::string& detail) {
  const Ontology o = market1501_ontology();
  const std::vector<double> grid = default_threshold_grid();
  std::mt19937 rng(20240617);
  std::uniform_int_distribution<int> samples(1, 200);
  std::uniform_real_distribution<double> prob(0.0, 1.0);
  std::uniform_real_distribution<double> rate(0.02, 0.98);

  int mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = samples(rng);
    std::vector<std::vector<double>> probs(o.attribute_count());
    std::vector<std::vector<std::uint8_t>> labels(o.attribute_count());
    for (std::size_t a = 0; a < o.attribute_count(); ++a) {
      const double r = rate(rng);
      probs[a].resize(n);
      labels[a].resize(n);
      for (int i = 0; i < n; ++i) {
        labels[a][i] = prob(rng) < r ? 1 : 0;
        probs[a][i] = clamp01(0.4 * labels[a][i] + 0.5 * prob(rng));
      }
    }
    const ThresholdTable table = calibrate(probs, labels, o, grid);
    for (std::size_t a = 0; a < o.attribute_count(); ++a) {
      // independent scan: recompute the confusion matrix per grid point
      double best_score = -2.0;
      double best_t = grid.front();
      for (double t : grid) {
        double tp = 0, tn = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < probs[a].size(); ++i) {
          const bool pred = probs[a][i] >= t;
          if (pred && labels[a][i]) tp += 1;
          if (pred && !labels[a][i]) fp += 1;
          if (!pred && labels[a][i]) fn += 1;
          if (!pred && !labels[a][i]) tn += 1;
        }
        double score = 0.0;
        if ((tp + fp) > 0 && (tp + fn) > 0 && (tn + fp) > 0 && (tn + fn) > 0) {
          score = (tp * tn - fp * fn) / std::sqrt((tp + fp) * (tp + fn) * (tn + fp) * (tn + fn));
        }
        if (score > best_score) {
          best_score = score;
          best_t = t;
        }
      }
      if (table.entries[a].threshold != best_t || table.entries[a].mcc != best_score) {
        ++mismatches;
      }
    }
  }
  detail = "50 instances x 25 attributes, exact (threshold, MCC) agreement";
  return mismatches == 0;
}

// ---------- criterion 3: gradient checks ----------
bool criterion_gradients(std::string& detail) {
  std::mt19937 rng(321);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::uniform_int_distribution<int> dims(1, 16);
  const double h = 1e-5;
  bool ok = true;

  const auto close = [](double a, double b) {
    return std::fabs(a - b) <= 1e-5 * std::max({1.0, std::fabs(a), std::fabs(b)});
  };

  int checked = 0;
  while (checked < 100) {
    const int d = dims(rng);
    TripletBatch t;
    t.margin = 0.1 + std::uniform_real_distribution<double>(0, 0.9)(rng);
    t.anchor.resize(d);
    t.positive.resize(d);
    t.negative.resize(d);
    for (int i = 0; i < d; ++i) {
      t.anchor[i] = u(rng);
      t.positive[i] = u(rng);
      t.negative[i] = u(rng);
    }
    if (std::fabs(triplet_loss(t)) < 1e-3) continue;  // stay off the hinge kink
    ++checked;
    const TripletGrad g = triplet_grad(t);
    for (int member = 0; member < 3; ++member) {
      std::vector<double>& x =
          member == 0 ? t.anchor : (member == 1 ? t.positive : t.negative);
      const std::vector<double>& gx =
          member == 0 ? g.anchor : (member == 1 ? g.positive : g.negative);
      for (int i = 0; i < d; ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double hi = triplet_loss(t);
        x[i] = orig - h;
        const double lo = triplet_loss(t);
        x[i] = orig;
        ok &= close(gx[i], (hi - lo) / (2 * h));
      }
    }
  }

  std::uniform_real_distribution<double> pr(0.05, 0.95);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = dims(rng);
    std::vector<double> probs(m);
    std::vector<std::uint8_t> labels(m);
    for (int i = 0; i < m; ++i) {
      probs[i] = pr(rng);
      labels[i] = coin(rng) ? 1 : 0;
    }
    const std::vector<double> g = avg_bce_grad(probs, labels);
    for (int i = 0; i < m; ++i) {
      const double orig = probs[i];
      probs[i] = orig + h;
      const double hi = avg_bce_loss(probs, labels);
      probs[i] = orig - h;
      const double lo = avg_bce_loss(probs, labels);
      probs[i] = orig;
      ok &= close(g[i], (hi - lo) / (2 * h));
    }
  }
  detail = "triplet + averaged BCE vs central differences, 100 instances each";
  return ok;
}

// ---------- criterion 4: retrieval metric oracle ----------
bool criterion_metric_oracle(std::string& detail) {
  bool ok = true;
  const std::vector<std::uint8_t> worked = {1, 0, 1};
  ok &= nearly(average_precision(worked, 2), 0.833333, 1e-6);
  ok &= nearly(average_precision(worked, 2), (1.0 + 2.0 / 3.0) / 2.0, 1e-9);

  const Ontology o = market1501_ontology();
  std::mt19937 rng(777);
  std::uniform_int_distribution<int> n_gal(2, 10), n_q(1, 5), pid(0, 3), cam(1, 3);
  std::uniform_real_distribution<double> coord(-1, 1);

  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Descriptor> recs;
    const int gs = n_gal(rng);
    for (int g = 0; g < gs; ++g) {
      Descriptor d;
      d.image_id = "g" + std::to_string(g);
      d.person_id = pid(rng);
      d.camera_id = cam(rng);
      d.split = Split::gallery;
      d.feature = {coord(rng), coord(rng), coord(rng), coord(rng)};
      recs.push_back(std::move(d));
    }
    const int qs = n_q(rng);
    for (int q = 0; q < qs; ++q) {
      Descriptor d;
      d.image_id = "q" + std::to_string(q);
      d.person_id = pid(rng);
      d.camera_id = cam(rng);
      d.split = Split::query;
      d.feature = {coord(rng), coord(rng), coord(rng), coord(rng)};
      recs.push_back(std::move(d));
    }
    const Dataset ds = make_dataset(o, recs);
    const ThresholdTable tt = uniform_thresholds(o);
    const QueryBatchResult batch =
        run_query_batch(ds, tt, FilterSpec{}, QueryOrder::filter_then_rank, true);
    const RetrievalEval eval = evaluate_retrieval(batch.results, ds, true);

    // brute force from raw descriptors
    const SplitViews views = split_views(ds);
    double ap_sum = 0;
    int valid = 0;
    std::vector<std::vector<std::uint8_t>> rels;
    for (const Descriptor* q : views.query) {
      std::vector<std::pair<std::pair<double, std::string>, std::uint8_t>> order;
      std::size_t total_rel = 0;
      for (const Descriptor* g : views.gallery) {
        if (g->person_id == q->person_id && g->camera_id == q->camera_id) continue;
        double sq = 0;
        for (int i = 0; i < 4; ++i) {
          sq += (g->feature[i] - q->feature[i]) * (g->feature[i] - q->feature[i]);
        }
        if (g->person_id == q->person_id) ++total_rel;
        order.push_back(
            {{std::sqrt(sq), g->image_id},
             static_cast<std::uint8_t>(g->person_id == q->person_id ? 1 : 0)});
      }
      if (total_rel == 0) continue;
      std::sort(order.begin(), order.end());
      std::vector<std::uint8_t> rel;
      double ap = 0;
      std::size_t hits = 0;
      for (std::size_t k = 0; k < order.size(); ++k) {
        rel.push_back(order[k].second);
        if (order[k].second) {
          ++hits;
          ap += static_cast<double>(hits) / static_cast<double>(k + 1);
        }
      }
      ap_sum += ap / static_cast<double>(total_rel);
      rels.push_back(std::move(rel));
      ++valid;
    }
    ok &= (valid == eval.num_queries);
    if (valid == 0) continue;
    ok &= (eval.map_score == ap_sum / valid);
    for (int k : {1, 5, 10}) {
      int hits = 0;
      for (const auto& rel : rels) {
        for (int i = 0; i < std::min<int>(k, static_cast<int>(rel.size())); ++i) {
          if (rel[i]) {
            ++hits;
            break;
          }
        }
      }
      ok &= (eval.cmc.at(k) == static_cast<double>(hits) / valid);
    }
  }
  detail = "exact mAP/CMC agreement on 50 small instances + worked AP example";
  return ok;
}

// ---------- criterion 5: filtering helps on the confusable scenario ----------
bool criterion_filtering_trend(std::string& detail) {
  SynthConfig cfg;
  cfg.ontology = market1501_ontology();
  cfg.seed = 424242;
  cfg.num_identities = 12;  // six confusable pairs
  cfg.images_per_identity = 5;
  cfg.feature_dim = 32;
  cfg.feature_noise_sigma = 0.02;
  cfg.attr_flip_rate = 0.0;   // perfect attribute prediction
  cfg.attr_prob_jitter = 0.0;
  cfg.train_fraction = 0.0;
  cfg.pair_gap = 0.0;
  cfg.confusable_attribute = "down black";
  const Dataset ds = scenario_confusable(cfg);
  const ThresholdTable tt = uniform_thresholds(ds.ontology);

  const QueryBatchResult plain =
      run_query_batch(ds, tt, FilterSpec::parse("none"), QueryOrder::filter_then_rank, true);
  const QueryBatchResult filtered = run_query_batch(
      ds, tt, FilterSpec::parse("attr:down black"), QueryOrder::filter_then_rank, true);
  const RetrievalEval plain_eval = evaluate_retrieval(plain.results, ds, true);
  const RetrievalEval filtered_eval = evaluate_retrieval(filtered.results, ds, true);

  char buf[160];
  std::snprintf(buf, sizeof(buf), "mAP %.4f -> %.4f, top-1 %.4f -> %.4f",
                plain_eval.map_score, filtered_eval.map_score, plain_eval.cmc.at(1),
                filtered_eval.cmc.at(1));
  detail = buf;
  return filtered_eval.map_score >= plain_eval.map_score + 0.05 &&
         filtered_eval.cmc.at(1) >= plain_eval.cmc.at(1);
}

// ---------- criterion 6: MCC calibration beats the 0.5 threshold ----------
bool criterion_mcc_trend(std::string& detail) {
  SynthConfig cfg;
  cfg.ontology = market1501_ontology();
  cfg.seed = 20100;
  cfg.num_identities = 300;
  cfg.images_per_identity = 3;
  cfg.feature_dim = 32;
  cfg.feature_noise_sigma = 0.1;
  cfg.attr_flip_rate = 0.02;
  cfg.attr_prob_jitter = 0.8;  // heavily miscalibrated probabilities
  cfg.default_positive_rate = 0.15;
  cfg.positive_rate_per_attr["wearing hat"] = 0.03;
  const Dataset ds = generate(cfg);
  const SplitViews views = split_views(ds);

  const ThresholdTable calibrated =
      calibrate_on_view(views.train, ds.ontology, default_threshold_grid());
  const ThresholdTable naive = uniform_thresholds(ds.ontology, 0.5);

  DescriptorView test = views.query;
  test.insert(test.end(), views.gallery.begin(), views.gallery.end());
  const AttributeEval with_mcc = evaluate_attributes(test, calibrated, ds.ontology);
  const AttributeEval with_05 = evaluate_attributes(test, naive, ds.ontology);

  const std::size_t hat = ds.ontology.attribute_index("wearing hat");
  const double hat_mcc = with_mcc.per_attribute_f1[hat].second;
  const double hat_05 = with_05.per_attribute_f1[hat].second;

  char buf[160];
  std::snprintf(buf, sizeof(buf), "avg F1 %.4f vs %.4f, rare attr %.4f vs %.4f",
                with_mcc.average_f1, with_05.average_f1, hat_mcc, hat_05);
  detail = buf;
  return with_mcc.average_f1 >= with_05.average_f1 && hat_mcc > hat_05;
}

// ---------- criterion 7: locality of attribute predictions ----------
bool criterion_locality(std::string& detail) {
  const Ontology o = market1501_ontology();
  std::mt19937 rng(5150);
  std::uniform_real_distribution<double> u(-2, 2);
  const std::size_t dim = 32;

  // arbitrary classifier weights; locality must hold structurally
  std::vector<RegionClassifierGroup> groups;
  for (Region r : kAllRegions) {
    const auto attrs = o.attributes_of_region(r);
    if (attrs.empty()) continue;
    RegionClassifierGroup g;
    g.region = r;
    const std::size_t slice = r == Region::body ? dim / 2 : dim / 4;
    for (const AttributeDef& a : attrs) {
      AttributeClassifier c;
      c.attribute = a.name;
      c.weights.resize(slice);
      for (double& w : c.weights) w = u(rng);
      c.bias = u(rng);
      g.classifiers.push_back(std::move(c));
    }
    groups.push_back(std::move(g));
  }

  bool ok = true;
  for (int trial = 0; trial < 100; ++trial) {
    Descriptor d;
    d.image_id = "t";
    d.feature.resize(dim);
    for (double& x : d.feature) x = u(rng);
    const std::vector<double> before = predict_attr_probs(groups, d, o);

    Descriptor moved = d;
    for (std::size_t i = 3 * dim / 4; i < dim; ++i) moved.feature[i] = u(rng);
    const std::vector<double> after = predict_attr_probs(groups, moved, o);
    ok &= (before == after);  // exact equality, foot carries no attributes
  }
  detail = "foot-slice perturbations, 100 random descriptors, exact equality";
  return ok;
}

// ---------- criterion 8: end-to-end determinism of the CLI pipeline ----------
bool criterion_determinism(std::string& detail) {
  const auto base = std::filesystem::temp_directory_path() / "semreid_acceptance";
  std::filesystem::remove_all(base);
  std::filesystem::create_directories(base);
  const std::string args =
      " pipeline --seed 99 --identities 8 --images-per-id 4 --dim 16"
      " --feature-noise 0.05 --flip-rate 0.05 --prob-jitter 0.2"
      " --epochs 60 --cls-epochs 80 --filter \"attr:down black\"";
  const std::string run1 = std::string(SEMREID_BIN) + args + " --out " +
                           (base / "run1").string() + " > /dev/null 2>&1";
  const std::string run2 = std::string(SEMREID_BIN) + args + " --out " +
                           (base / "run2").string() + " > /dev/null 2>&1";
  if (std::system(run1.c_str()) != 0 || std::system(run2.c_str()) != 0) {
    detail = "pipeline run failed";
    return false;
  }
  const std::string a = read_file(base / "run1" / "report.json");
  const std::string b = read_file(base / "run2" / "report.json");
  std::filesystem::remove_all(base);
  detail = "two seeded runs, byte-identical report.json (" +
           std::to_string(a.size()) + " bytes)";
  return !a.empty() && a == b;
}

// ---------- criterion 9: bundled ontology ----------
bool criterion_ontology(std::string& detail) {
  const Ontology o = market1501_ontology();
  bool ok = o.attribute_count() == 25;
  ok &= o.attributes_of_region(Region::head).size() == 3;
  ok &= o.attributes_of_region(Region::body).size() == 3;
  ok &= o.attributes_of_region(Region::upper).size() == 9;
  ok &= o.attributes_of_region(Region::lower).size() == 10;
  ok &= o.attributes_of_region(Region::foot).empty();

  const Ontology reloaded = parse_ontology(ontology_to_json(o));
  ok &= (reloaded == o);
  ok &= ontology_checksum(reloaded) == ontology_checksum(o);
  for (std::size_t i = 0; i < o.attribute_count(); ++i) {
    ok &= o.attributes()[i].name == reloaded.attributes()[i].name;
  }
  detail = "25 attributes, 3/3/9/10/0 partition, round-trip stable";
  return ok;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "MCC formula anchored cases", criterion_mcc, 1000},
      {2, "calibration matches brute-force grid search", criterion_calibration_oracle, 10000},
      {3, "analytic gradients match finite differences", criterion_gradients, 10000},
      {4, "mAP/CMC match brute-force re-implementation", criterion_metric_oracle, 0},
      {5, "attribute pre-filtering lifts mAP on confusable identities", criterion_filtering_trend,
       30000},
      {6, "MCC-calibrated thresholds beat uniform 0.5", criterion_mcc_trend, 30000},
      {7, "attribute predictions are region-local", criterion_locality, 0},
      {8, "pipeline is byte-deterministic under a fixed seed", criterion_determinism, 0},
      {9, "bundled ontology loads with the published grouping", criterion_ontology, 0},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    // expected per-query skip warnings from random oracle instances go to
    // cerr; keep the criterion output to one line each
    std::stringstream captured;
    std::streambuf* old_cerr = std::cerr.rdbuf(captured.rdbuf());
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
    std::cerr.rdbuf(old_cerr);
    if (ok && c.limit_ms > 0 && ms > c.limit_ms) {
      ok = false;
      detail += "; exceeded " + std::to_string(c.limit_ms) + " ms budget";
    }
    std::printf("[%s] criterion %d: %s (%s, %lld ms)\n", ok ? "PASS" : "FAIL", c.number,
                c.title.c_str(), detail.c_str(), static_cast<long long>(ms));
    if (!ok) ++failures;
  }
  return failures;
}
