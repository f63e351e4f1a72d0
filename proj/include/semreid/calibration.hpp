#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semreid/dataset.hpp"
#include "semreid/ontology.hpp"

namespace semreid {

struct ConfusionCounts {
  long long tp = 0;
  long long tn = 0;
  long long fp = 0;
  long long fn = 0;
};

ConfusionCounts count_confusion(std::span<const std::uint8_t> preds,
                                std::span<const std::uint8_t> labels);

// Matthews correlation coefficient,
//   (TP*TN - FP*FN) / sqrt((TP+FP)(TP+FN)(TN+FP)(TN+FN)),
// in [-1, 1]. Returns 0 when any denominator factor is zero (the formula is
// undefined there; 0 is the usual convention for a degenerate classifier).
double mcc(const ConfusionCounts& c);

// output_i = 1 iff probs_i >= threshold. Threshold must lie in (0, 1).
std::vector<std::uint8_t> binarize(std::span<const double> probs, double threshold);

// The candidate thresholds 0.01, 0.02, ..., 0.99.
std::vector<double> default_threshold_grid();

struct AttributeThreshold {
  std::string attribute;
  double threshold = 0.5;
  double mcc = 0.0;  // value achieved at the selected threshold
};

// Per-attribute calibrated binarization thresholds, in canonical ontology
// order. Immutable after construction.
struct ThresholdTable {
  std::string ontology_checksum;
  std::vector<double> grid;
  std::vector<AttributeThreshold> entries;

  const AttributeThreshold& entry(std::string_view attribute) const;
  double threshold_at(std::size_t attr_index) const { return entries.at(attr_index).threshold; }
};

// Grid search: for each attribute, pick the grid threshold maximizing the
// MCC of binarize(probs) against labels; ties go to the smallest threshold.
// probs_per_attr / labels_per_attr are indexed by canonical attribute order
// and must be pairwise aligned.
ThresholdTable calibrate(const std::vector<std::vector<double>>& probs_per_attr,
                         const std::vector<std::vector<std::uint8_t>>& labels_per_attr,
                         const Ontology& ontology, std::span<const double> grid);

// Calibrates from a dataset view; every descriptor must carry attr_probs and
// attr_labels.
ThresholdTable calibrate_on_view(const DescriptorView& view, const Ontology& ontology,
                                 std::span<const double> grid);

// All attributes at the same fixed threshold (the naive-0.5 baseline).
ThresholdTable uniform_thresholds(const Ontology& ontology, double threshold = 0.5);

// Threshold document (JSON): {"schema_version": 1, "ontology_checksum": ...,
//   "grid": [...], "thresholds": {"<attribute>": {"threshold": t, "mcc": v}, ...}}
// with attributes in canonical order.
void save_thresholds(const ThresholdTable& table, const std::filesystem::path& file);
ThresholdTable load_thresholds(const std::filesystem::path& file, const Ontology& ontology);

}  // namespace semreid
