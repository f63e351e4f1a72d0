#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semreid/calibration.hpp"
#include "semreid/dataset.hpp"
#include "semreid/retrieval.hpp"

namespace semreid {

// (1/total_relevant) * sum_k Precision@k * rel(k). total_relevant must be
// positive and at least the number of 1s in the sequence.
double average_precision(std::span<const std::uint8_t> ranked_relevance,
                         std::size_t total_relevant);

// Fraction of queries with at least one relevant item among the first k.
double cmc_at_k(const std::vector<std::vector<std::uint8_t>>& rankings, std::size_t k);

// 2TP / (2TP + FP + FN), 0 when the denominator is 0.
double f1_score(std::span<const std::uint8_t> preds, std::span<const std::uint8_t> labels);

struct RetrievalEval {
  std::map<int, double> cmc;  // k -> accuracy
  double map_score = 0.0;
  int num_queries = 0;      // queries that entered the metrics
  int skipped_queries = 0;  // queries without any admissible relevant item
};

struct AttributeEval {
  std::vector<std::pair<std::string, double>> per_attribute_f1;  // canonical order
  double average_f1 = 0.0;
};

struct EvalReport {
  RetrievalEval retrieval;
  std::optional<AttributeEval> attributes;
};

// Scores a batch of query results against dataset ground truth. Relevance is
// same person_id; the admissible gallery excludes same-person same-camera
// items when protocol_mask is set (the results must have been produced under
// the same setting). Queries whose admissible relevant set is empty are
// skipped and counted.
RetrievalEval evaluate_retrieval(const std::vector<QueryResult>& results, const Dataset& ds,
                                 bool protocol_mask, const std::vector<int>& cmc_ks = {1, 5, 10});

// Per-attribute F1 of thresholded attr_probs against attr_labels over a view;
// every descriptor must carry both vectors.
AttributeEval evaluate_attributes(const DescriptorView& view, const ThresholdTable& thresholds,
                                  const Ontology& ontology);

// Report document (JSON), stable key order, suitable for byte-level diffing:
//   {"schema_version": 1, "num_queries": ..., "skipped_queries": ...,
//    "cmc": {"1": ..., "5": ..., "10": ...}, "map": ...,
//    "per_attribute_f1": {...}?, "average_f1": ...?, "provenance": {...}?}
std::string eval_report_to_json(const EvalReport& report, const std::string& provenance_json = "");
void save_eval_report(const EvalReport& report, const std::filesystem::path& file,
                      const std::string& provenance_json = "");

}  // namespace semreid
