#include "semreid/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "semreid/error.hpp"
#include "semreid/util.hpp"

namespace semreid {

using ordered_json = nlohmann::ordered_json;

ConfusionCounts count_confusion(std::span<const std::uint8_t> preds,
                                std::span<const std::uint8_t> labels) {
  if (preds.size() != labels.size()) throw ValidationError("count_confusion: length mismatch");
  ConfusionCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i]) {
      preds[i] ? ++c.tp : ++c.fn;
    } else {
      preds[i] ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

double mcc(const ConfusionCounts& c) {
  const double tp = static_cast<double>(c.tp);
  const double tn = static_cast<double>(c.tn);
  const double fp = static_cast<double>(c.fp);
  const double fn = static_cast<double>(c.fn);
  const double f1 = tp + fp;
  const double f2 = tp + fn;
  const double f3 = tn + fp;
  const double f4 = tn + fn;
  if (f1 == 0.0 || f2 == 0.0 || f3 == 0.0 || f4 == 0.0) return 0.0;
  return (tp * tn - fp * fn) / std::sqrt(f1 * f2 * f3 * f4);
}

std::vector<std::uint8_t> binarize(std::span<const double> probs, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError("binarize: threshold must lie in (0,1)");
  }
  std::vector<std::uint8_t> out(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    out[i] = probs[i] >= threshold ? 1 : 0;
  }
  return out;
}

std::vector<double> default_threshold_grid() {
  std::vector<double> grid;
  grid.reserve(99);
  for (int i = 1; i <= 99; ++i) grid.push_back(i / 100.0);
  return grid;
}

const AttributeThreshold& ThresholdTable::entry(std::string_view attribute) const {
  for (const AttributeThreshold& e : entries) {
    if (e.attribute == attribute) return e;
  }
  throw ValidationError("threshold table: unknown attribute: " + std::string(attribute));
}

ThresholdTable calibrate(const std::vector<std::vector<double>>& probs_per_attr,
                         const std::vector<std::vector<std::uint8_t>>& labels_per_attr,
                         const Ontology& ontology, std::span<const double> grid) {
  const std::size_t m = ontology.attribute_count();
  if (probs_per_attr.size() != m || labels_per_attr.size() != m) {
    throw ValidationError("calibrate: per-attribute inputs must match the ontology");
  }
  if (grid.empty()) throw ValidationError("calibrate: empty threshold grid");

  ThresholdTable table;
  table.ontology_checksum = ontology_checksum(ontology);
  table.grid.assign(grid.begin(), grid.end());
  table.entries.reserve(m);
  for (std::size_t a = 0; a < m; ++a) {
    const auto& probs = probs_per_attr[a];
    const auto& labels = labels_per_attr[a];
    if (probs.size() != labels.size()) {
      throw ValidationError("calibrate: misaligned probs/labels for attribute " +
                            ontology.attributes()[a].name);
    }
    AttributeThreshold best{ontology.attributes()[a].name, grid[0],
                            mcc(count_confusion(binarize(probs, grid[0]), labels))};
    for (std::size_t g = 1; g < grid.size(); ++g) {
      const double score = mcc(count_confusion(binarize(probs, grid[g]), labels));
      if (score > best.mcc) {
        best.threshold = grid[g];
        best.mcc = score;
      }
    }
    table.entries.push_back(std::move(best));
  }
  return table;
}

ThresholdTable calibrate_on_view(const DescriptorView& view, const Ontology& ontology,
                                 std::span<const double> grid) {
  const std::size_t m = ontology.attribute_count();
  std::vector<std::vector<double>> probs(m);
  std::vector<std::vector<std::uint8_t>> labels(m);
  for (const Descriptor* d : view) {
    if (!d->attr_probs || !d->attr_labels) {
      throw ValidationError("calibrate: descriptor " + d->image_id +
                            " lacks attr_probs or attr_labels");
    }
    for (std::size_t a = 0; a < m; ++a) {
      probs[a].push_back((*d->attr_probs)[a]);
      labels[a].push_back((*d->attr_labels)[a]);
    }
  }
  return calibrate(probs, labels, ontology, grid);
}

ThresholdTable uniform_thresholds(const Ontology& ontology, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError("uniform_thresholds: threshold must lie in (0,1)");
  }
  ThresholdTable table;
  table.ontology_checksum = ontology_checksum(ontology);
  table.grid = {threshold};
  for (const AttributeDef& a : ontology.attributes()) {
    table.entries.push_back({a.name, threshold, 0.0});
  }
  return table;
}

void save_thresholds(const ThresholdTable& table, const std::filesystem::path& file) {
  ordered_json doc;
  doc["schema_version"] = 1;
  doc["ontology_checksum"] = table.ontology_checksum;
  doc["grid"] = table.grid;
  ordered_json thresholds;
  for (const AttributeThreshold& e : table.entries) {
    thresholds[e.attribute] = {{"threshold", e.threshold}, {"mcc", e.mcc}};
  }
  doc["thresholds"] = std::move(thresholds);
  std::ofstream out(file);
  if (!out) throw IoError("cannot write threshold table: " + file.string());
  out << doc.dump(2) << "\n";
}

ThresholdTable load_thresholds(const std::filesystem::path& file, const Ontology& ontology) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open threshold table: " + file.string());
  ordered_json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed threshold table: ") + e.what());
  }
  try {
    if (doc.value("schema_version", 0) != 1) {
      throw ValidationError("threshold table: unsupported schema_version");
    }
    ThresholdTable table;
    table.ontology_checksum = doc.at("ontology_checksum").get<std::string>();
    if (table.ontology_checksum != ontology_checksum(ontology)) {
      throw ValidationError("threshold table: ontology checksum mismatch");
    }
    table.grid = doc.at("grid").get<std::vector<double>>();
    const auto& thresholds = doc.at("thresholds");
    for (const AttributeDef& a : ontology.attributes()) {
      if (!thresholds.contains(a.name)) {
        throw ValidationError("threshold table: missing attribute: " + a.name);
      }
      const auto& entry = thresholds[a.name];
      table.entries.push_back(
          {a.name, entry.at("threshold").get<double>(), entry.at("mcc").get<double>()});
    }
    if (thresholds.size() != ontology.attribute_count()) {
      throw ValidationError("threshold table: attribute set does not match ontology");
    }
    return table;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed threshold table: ") + e.what());
  }
}

}  // namespace semreid
