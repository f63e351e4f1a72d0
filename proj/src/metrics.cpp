#include "semreid/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <unordered_map>

#include "json.hpp"
#include "semreid/error.hpp"
#include "semreid/util.hpp"

namespace semreid {

using ordered_json = nlohmann::ordered_json;

double average_precision(std::span<const std::uint8_t> ranked_relevance,
                         std::size_t total_relevant) {
  if (total_relevant == 0) throw ValidationError("average_precision: total_relevant must be > 0");
  std::size_t hits = 0;
  double ap = 0.0;
  for (std::size_t k = 0; k < ranked_relevance.size(); ++k) {
    if (ranked_relevance[k]) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
  }
  if (hits > total_relevant) {
    throw ValidationError("average_precision: more hits than total_relevant");
  }
  return ap / static_cast<double>(total_relevant);
}

double cmc_at_k(const std::vector<std::vector<std::uint8_t>>& rankings, std::size_t k) {
  if (k < 1) throw ValidationError("cmc_at_k: k must be >= 1");
  if (rankings.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& relevance : rankings) {
    const std::size_t limit = std::min(k, relevance.size());
    for (std::size_t i = 0; i < limit; ++i) {
      if (relevance[i]) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

double f1_score(std::span<const std::uint8_t> preds, std::span<const std::uint8_t> labels) {
  const ConfusionCounts c = count_confusion(preds, labels);
  const long long denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return 0.0;
  return 2.0 * static_cast<double>(c.tp) / static_cast<double>(denom);
}

RetrievalEval evaluate_retrieval(const std::vector<QueryResult>& results, const Dataset& ds,
                                 bool protocol_mask_enabled, const std::vector<int>& cmc_ks) {
  std::unordered_map<std::string, const Descriptor*> by_id;
  for (const Descriptor& d : ds.descriptors) by_id[d.image_id] = &d;
  const SplitViews views = split_views(ds);

  const auto lookup = [&](const std::string& id) -> const Descriptor& {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw ValidationError("evaluate: unknown image_id: " + id);
    return *it->second;
  };

  RetrievalEval eval;
  std::vector<std::vector<std::uint8_t>> relevance_lists;
  double ap_sum = 0.0;
  for (const QueryResult& r : results) {
    const Descriptor& q = lookup(r.query_id);
    const DescriptorView admissible = protocol_mask(q, views.gallery, protocol_mask_enabled);
    std::size_t total_relevant = 0;
    for (const Descriptor* g : admissible) {
      if (g->person_id == q.person_id) ++total_relevant;
    }
    if (total_relevant == 0) {
      std::cerr << "warning: query " << r.query_id << " has no admissible relevant item, skipped\n";
      ++eval.skipped_queries;
      continue;
    }
    std::vector<std::uint8_t> relevance;
    relevance.reserve(r.ranking.size());
    for (const RankedItem& item : r.ranking) {
      relevance.push_back(lookup(item.image_id).person_id == q.person_id ? 1 : 0);
    }
    ap_sum += average_precision(relevance, total_relevant);
    relevance_lists.push_back(std::move(relevance));
    ++eval.num_queries;
  }
  eval.map_score = eval.num_queries ? ap_sum / eval.num_queries : 0.0;
  for (int k : cmc_ks) {
    eval.cmc[k] = cmc_at_k(relevance_lists, static_cast<std::size_t>(k));
  }
  return eval;
}

AttributeEval evaluate_attributes(const DescriptorView& view, const ThresholdTable& thresholds,
                                  const Ontology& ontology) {
  const std::size_t m = ontology.attribute_count();
  if (thresholds.entries.size() != m) {
    throw ValidationError("evaluate_attributes: threshold table does not match ontology");
  }
  std::vector<std::vector<std::uint8_t>> preds(m), labels(m);
  for (const Descriptor* d : view) {
    if (!d->attr_probs || !d->attr_labels) {
      throw ValidationError("evaluate_attributes: descriptor " + d->image_id +
                            " lacks attr_probs or attr_labels");
    }
    for (std::size_t a = 0; a < m; ++a) {
      preds[a].push_back((*d->attr_probs)[a] >= thresholds.entries[a].threshold ? 1 : 0);
      labels[a].push_back((*d->attr_labels)[a]);
    }
  }
  AttributeEval eval;
  double sum = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    const double f1 = f1_score(preds[a], labels[a]);
    eval.per_attribute_f1.emplace_back(ontology.attributes()[a].name, f1);
    sum += f1;
  }
  eval.average_f1 = m ? sum / static_cast<double>(m) : 0.0;
  return eval;
}

std::string eval_report_to_json(const EvalReport& report, const std::string& provenance_json) {
  ordered_json doc;
  doc["schema_version"] = 1;
  doc["num_queries"] = report.retrieval.num_queries;
  doc["skipped_queries"] = report.retrieval.skipped_queries;
  ordered_json cmc;
  for (const auto& [k, v] : report.retrieval.cmc) cmc[std::to_string(k)] = v;
  doc["cmc"] = std::move(cmc);
  doc["map"] = report.retrieval.map_score;
  if (report.attributes) {
    ordered_json f1;
    for (const auto& [name, value] : report.attributes->per_attribute_f1) f1[name] = value;
    doc["per_attribute_f1"] = std::move(f1);
    doc["average_f1"] = report.attributes->average_f1;
  }
  if (!provenance_json.empty()) {
    try {
      doc["provenance"] = ordered_json::parse(provenance_json);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("provenance is not valid JSON: ") + e.what());
    }
  }
  return doc.dump(2) + "\n";
}

void save_eval_report(const EvalReport& report, const std::filesystem::path& file,
                      const std::string& provenance_json) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write eval report: " + file.string());
  out << eval_report_to_json(report, provenance_json);
}

}  // namespace semreid
