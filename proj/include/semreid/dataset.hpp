#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semreid/ontology.hpp"

namespace semreid {

enum class Split { train, query, gallery };

std::string_view split_name(Split s);
Split split_from_name(std::string_view name);

// One image's record: identity/camera metadata, the embedding vector, and
// optional attribute probabilities / ground-truth labels in canonical
// ontology order.
struct Descriptor {
  std::string image_id;
  int person_id = 0;
  int camera_id = 0;
  Split split = Split::train;
  std::vector<double> feature;
  std::optional<std::vector<double>> attr_probs;
  std::optional<std::vector<std::uint8_t>> attr_labels;

  bool operator==(const Descriptor&) const = default;
};

struct Dataset {
  Ontology ontology;
  std::vector<Descriptor> descriptors;
  std::size_t feature_dim = 0;

  std::size_t attribute_count() const { return ontology.attribute_count(); }
};

using DescriptorView = std::vector<const Descriptor*>;

struct SplitViews {
  DescriptorView train;
  DescriptorView query;
  DescriptorView gallery;
};

// Validates and assembles a dataset. Throws ValidationError on duplicate
// image_id, non-uniform feature dimension, feature_dim not divisible by 4,
// attribute vector length != M, probability outside [0,1], non-binary label,
// or negative person/camera id.
Dataset make_dataset(Ontology ontology, std::vector<Descriptor> descriptors);

// Disjoint views partitioning descriptors by split tag; empty views allowed.
SplitViews split_views(const Dataset& ds);

// The four equal parts of a feature vector, top to bottom:
//   head  [0, D/4)      upper [D/4, D/2)
//   lower [D/2, 3D/4)   foot  [3D/4, D)
// and body = [D/4, 3D/4), the merger of upper and lower.
// Throws ValidationError when the dimension is not divisible by 4.
std::span<const double> region_slice(std::span<const double> feature, Region r);
std::span<const double> region_slice(const Descriptor& d, Region r);

// On-disk layout: a manifest naming the ontology document and a records
// file; records are JSON objects, one per line (UTF-8):
//
//   {"image_id": "0003_c1_00", "person_id": 3, "camera_id": 1,
//    "split": "query", "feature": [...], "attr_probs": [...],
//    "attr_labels": [0, 1, ...]}
//
// attr_probs / attr_labels may be omitted per record. Real vectors are
// serialized as JSON numbers in shortest round-trip decimal form (up to 17
// significant digits), so read(write(ds)) reproduces the vectors bit-exactly.
//
// Manifest (JSON): {"schema_version": 1, "ontology": <relative path>,
//   "records": <relative path>, "feature_dim": D, "attribute_count": M,
//   "ontology_checksum": <hex>, "provenance": {...}?}
Dataset read_dataset(const std::filesystem::path& manifest_file);

// Writes ontology.json, records.jsonl and manifest.json under dir; returns
// the manifest path. provenance_json, when non-empty, must be a JSON object
// (e.g. the generator config) and is embedded in the manifest.
std::filesystem::path write_dataset(const Dataset& ds, const std::filesystem::path& dir,
                                    const std::string& provenance_json = "");

}  // namespace semreid
