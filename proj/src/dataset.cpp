#include "semreid/dataset.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "semreid/error.hpp"
#include "semreid/util.hpp"

namespace semreid {

using ordered_json = nlohmann::ordered_json;

std::string_view split_name(Split s) {
  switch (s) {
    case Split::train:
      return "train";
    case Split::query:
      return "query";
    case Split::gallery:
      return "gallery";
  }
  throw ValidationError("invalid split value");
}

Split split_from_name(std::string_view name) {
  if (name == "train") return Split::train;
  if (name == "query") return Split::query;
  if (name == "gallery") return Split::gallery;
  throw ValidationError("unknown split tag: " + std::string(name));
}

Dataset make_dataset(Ontology ontology, std::vector<Descriptor> descriptors) {
  Dataset ds;
  ds.ontology = std::move(ontology);
  ds.descriptors = std::move(descriptors);

  const std::size_t m = ds.ontology.attribute_count();
  std::set<std::string> ids;
  for (const Descriptor& d : ds.descriptors) {
    if (!ids.insert(d.image_id).second) {
      throw ValidationError("duplicate image_id: " + d.image_id);
    }
    if (d.person_id < 0 || d.camera_id < 0) {
      throw ValidationError("negative person/camera id on " + d.image_id);
    }
    if (ds.feature_dim == 0) ds.feature_dim = d.feature.size();
    if (d.feature.size() != ds.feature_dim) {
      throw ValidationError("feature dimension mismatch on " + d.image_id);
    }
    if (d.attr_probs) {
      if (d.attr_probs->size() != m) {
        throw ValidationError("attr_probs length mismatch on " + d.image_id);
      }
      for (double p : *d.attr_probs) {
        if (!(p >= 0.0 && p <= 1.0)) {
          throw ValidationError("attr_probs component outside [0,1] on " + d.image_id);
        }
      }
    }
    if (d.attr_labels) {
      if (d.attr_labels->size() != m) {
        throw ValidationError("attr_labels length mismatch on " + d.image_id);
      }
      for (std::uint8_t v : *d.attr_labels) {
        if (v > 1) throw ValidationError("attr_labels component not binary on " + d.image_id);
      }
    }
  }
  if (ds.feature_dim % 4 != 0) {
    throw ValidationError("feature dimension must be divisible by 4, got " +
                          std::to_string(ds.feature_dim));
  }
  return ds;
}

SplitViews split_views(const Dataset& ds) {
  SplitViews views;
  for (const Descriptor& d : ds.descriptors) {
    switch (d.split) {
      case Split::train:
        views.train.push_back(&d);
        break;
      case Split::query:
        views.query.push_back(&d);
        break;
      case Split::gallery:
        views.gallery.push_back(&d);
        break;
    }
  }
  return views;
}

std::span<const double> region_slice(std::span<const double> feature, Region r) {
  const std::size_t d = feature.size();
  if (d % 4 != 0) {
    throw ValidationError("region_slice: dimension not divisible by 4: " + std::to_string(d));
  }
  const std::size_t q = d / 4;
  switch (r) {
    case Region::head:
      return feature.subspan(0, q);
    case Region::upper:
      return feature.subspan(q, q);
    case Region::lower:
      return feature.subspan(2 * q, q);
    case Region::foot:
      return feature.subspan(3 * q, q);
    case Region::body:
      return feature.subspan(q, 2 * q);
  }
  throw ValidationError("invalid region value");
}

std::span<const double> region_slice(const Descriptor& d, Region r) {
  return region_slice(std::span<const double>(d.feature), r);
}

namespace {

Descriptor parse_record(const std::string& line, std::size_t line_no) {
  ordered_json rec;
  try {
    rec = ordered_json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("records line " + std::to_string(line_no) + ": " + e.what());
  }
  try {
    Descriptor d;
    d.image_id = rec.at("image_id").get<std::string>();
    d.person_id = rec.at("person_id").get<int>();
    d.camera_id = rec.at("camera_id").get<int>();
    d.split = split_from_name(rec.at("split").get<std::string>());
    d.feature = rec.at("feature").get<std::vector<double>>();
    if (rec.contains("attr_probs")) {
      d.attr_probs = rec["attr_probs"].get<std::vector<double>>();
    }
    if (rec.contains("attr_labels")) {
      std::vector<std::uint8_t> labels;
      for (const auto& v : rec["attr_labels"]) {
        const int value = v.get<int>();
        if (value != 0 && value != 1) {
          throw ValidationError("records line " + std::to_string(line_no) +
                                ": attr_labels component not binary");
        }
        labels.push_back(static_cast<std::uint8_t>(value));
      }
      d.attr_labels = std::move(labels);
    }
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("records line " + std::to_string(line_no) + ": " + e.what());
  }
}

ordered_json record_to_json(const Descriptor& d) {
  ordered_json rec;
  rec["image_id"] = d.image_id;
  rec["person_id"] = d.person_id;
  rec["camera_id"] = d.camera_id;
  rec["split"] = std::string(split_name(d.split));
  rec["feature"] = d.feature;
  if (d.attr_probs) rec["attr_probs"] = *d.attr_probs;
  if (d.attr_labels) {
    ordered_json labels = ordered_json::array();
    for (std::uint8_t v : *d.attr_labels) labels.push_back(static_cast<int>(v));
    rec["attr_labels"] = std::move(labels);
  }
  return rec;
}

}  // namespace

Dataset read_dataset(const std::filesystem::path& manifest_file) {
  std::ifstream in(manifest_file);
  if (!in) throw IoError("cannot open dataset manifest: " + manifest_file.string());
  ordered_json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed dataset manifest: ") + e.what());
  }
  if (manifest.value("schema_version", 0) != 1) {
    throw ValidationError("dataset manifest: unsupported schema_version");
  }
  const auto base = manifest_file.parent_path();
  Ontology ontology;
  std::filesystem::path records_file;
  try {
    ontology = load_ontology(base / manifest.at("ontology").get<std::string>());
    records_file = base / manifest.at("records").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed dataset manifest: ") + e.what());
  }
  if (manifest.contains("ontology_checksum") &&
      manifest["ontology_checksum"].get<std::string>() != ontology_checksum(ontology)) {
    throw ValidationError("dataset manifest: ontology checksum mismatch");
  }

  std::ifstream records(records_file);
  if (!records) throw IoError("cannot open records file: " + records_file.string());
  std::vector<Descriptor> descriptors;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(records, line)) {
    ++line_no;
    if (line.empty()) continue;
    descriptors.push_back(parse_record(line, line_no));
  }

  Dataset ds = make_dataset(std::move(ontology), std::move(descriptors));
  if (manifest.contains("feature_dim") &&
      manifest["feature_dim"].get<std::size_t>() != ds.feature_dim) {
    throw ValidationError("dataset manifest: feature_dim does not match records");
  }
  if (manifest.contains("attribute_count") &&
      manifest["attribute_count"].get<std::size_t>() != ds.attribute_count()) {
    throw ValidationError("dataset manifest: attribute_count does not match ontology");
  }
  return ds;
}

std::filesystem::path write_dataset(const Dataset& ds, const std::filesystem::path& dir,
                                    const std::string& provenance_json) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create dataset directory: " + dir.string());

  save_ontology(ds.ontology, dir / "ontology.json");

  std::ofstream records(dir / "records.jsonl");
  if (!records) throw IoError("cannot write records file under " + dir.string());
  for (const Descriptor& d : ds.descriptors) {
    records << record_to_json(d).dump() << "\n";
  }
  records.close();

  ordered_json manifest;
  manifest["schema_version"] = 1;
  manifest["ontology"] = "ontology.json";
  manifest["records"] = "records.jsonl";
  manifest["feature_dim"] = ds.feature_dim;
  manifest["attribute_count"] = ds.attribute_count();
  manifest["ontology_checksum"] = ontology_checksum(ds.ontology);
  if (!provenance_json.empty()) {
    try {
      manifest["provenance"] = ordered_json::parse(provenance_json);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("provenance is not valid JSON: ") + e.what());
    }
  }
  const auto manifest_file = dir / "manifest.json";
  std::ofstream out(manifest_file);
  if (!out) throw IoError("cannot write dataset manifest: " + manifest_file.string());
  out << manifest.dump(2) << "\n";
  return manifest_file;
}

}  // namespace semreid
