#include "semreid/retrieval.hpp"

#include <algorithm>
#include <fstream>

#include "json.hpp"
#include "semreid/error.hpp"
#include "semreid/util.hpp"

namespace semreid {

using ordered_json = nlohmann::ordered_json;

FilterSpec FilterSpec::parse(std::string_view text) {
  FilterSpec spec;
  if (text == "none" || text.empty()) {
    spec.mode = Mode::none;
    return spec;
  }
  if (text.starts_with("attr:")) {
    spec.mode = Mode::single_attribute;
    spec.attributes = {std::string(text.substr(5))};
    if (spec.attributes[0].empty()) throw ValidationError("filter spec: empty attribute name");
    return spec;
  }
  if (text.starts_with("attrs:")) {
    spec.mode = Mode::attribute_set;
    std::string rest(text.substr(6));
    std::size_t pos = 0;
    while (pos <= rest.size()) {
      const std::size_t comma = rest.find(',', pos);
      const std::string name =
          rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      if (name.empty()) throw ValidationError("filter spec: empty attribute name");
      spec.attributes.push_back(name);
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    return spec;
  }
  if (text.starts_with("region:")) {
    spec.mode = Mode::all_of_region;
    spec.region = region_from_name(text.substr(7));
    return spec;
  }
  throw ValidationError("filter spec: cannot parse '" + std::string(text) + "'");
}

std::string FilterSpec::to_string() const {
  switch (mode) {
    case Mode::none:
      return "none";
    case Mode::single_attribute:
      return "attr:" + attributes.at(0);
    case Mode::attribute_set: {
      std::string out = "attrs:";
      for (std::size_t i = 0; i < attributes.size(); ++i) {
        if (i) out += ',';
        out += attributes[i];
      }
      return out;
    }
    case Mode::all_of_region:
      return "region:" + std::string(region_name(region));
  }
  throw ValidationError("invalid filter mode");
}

std::vector<std::size_t> resolve_filter_attributes(const FilterSpec& spec,
                                                   const Ontology& ontology) {
  switch (spec.mode) {
    case FilterSpec::Mode::none:
      return {};
    case FilterSpec::Mode::single_attribute:
    case FilterSpec::Mode::attribute_set: {
      std::vector<std::size_t> out;
      for (const std::string& name : spec.attributes) {
        out.push_back(ontology.attribute_index(name));
      }
      return out;
    }
    case FilterSpec::Mode::all_of_region:
      return ontology.attribute_indices_of_region(spec.region);
  }
  throw ValidationError("invalid filter mode");
}

QueryOrder query_order_from_name(std::string_view name) {
  if (name == "filter-first") return QueryOrder::filter_then_rank;
  if (name == "rank-first") return QueryOrder::rank_then_filter;
  throw ValidationError("unknown query order: " + std::string(name));
}

std::string_view query_order_name(QueryOrder order) {
  return order == QueryOrder::filter_then_rank ? "filter-first" : "rank-first";
}

FilterOutcome attribute_filter(std::span<const std::uint8_t> query_attrs,
                               const std::vector<std::vector<std::uint8_t>>& gallery_attrs,
                               std::span<const std::size_t> attribute_indices,
                               bool fallback_on_empty) {
  FilterOutcome out;
  for (std::size_t g = 0; g < gallery_attrs.size(); ++g) {
    bool match = true;
    for (std::size_t a : attribute_indices) {
      if (a >= query_attrs.size() || a >= gallery_attrs[g].size()) {
        throw ValidationError("attribute_filter: attribute index out of range");
      }
      if (gallery_attrs[g][a] != query_attrs[a]) {
        match = false;
        break;
      }
    }
    if (match) out.survivors.push_back(g);
  }
  out.removed_count = gallery_attrs.size() - out.survivors.size();
  if (out.survivors.empty() && !gallery_attrs.empty() && fallback_on_empty) {
    out.fallback_used = true;
    out.survivors.resize(gallery_attrs.size());
    for (std::size_t g = 0; g < gallery_attrs.size(); ++g) out.survivors[g] = g;
  }
  return out;
}

std::vector<RankedItem> rank_by_distance(std::span<const double> query_feature,
                                         const DescriptorView& candidates) {
  std::vector<RankedItem> ranking;
  ranking.reserve(candidates.size());
  for (const Descriptor* c : candidates) {
    if (c->feature.size() != query_feature.size()) {
      throw ValidationError("rank_by_distance: dimension mismatch on " + c->image_id);
    }
    ranking.push_back({c->image_id, euclidean_distance(query_feature, c->feature)});
  }
  std::sort(ranking.begin(), ranking.end(), [](const RankedItem& a, const RankedItem& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.image_id < b.image_id;
  });
  return ranking;
}

DescriptorView protocol_mask(const Descriptor& query, const DescriptorView& gallery,
                             bool enabled) {
  if (!enabled) return gallery;
  DescriptorView out;
  out.reserve(gallery.size());
  for (const Descriptor* g : gallery) {
    if (g->person_id == query.person_id && g->camera_id == query.camera_id) continue;
    out.push_back(g);
  }
  return out;
}

namespace {

std::vector<std::uint8_t> binarize_with_table(std::span<const double> probs,
                                              const ThresholdTable& thresholds) {
  if (probs.size() != thresholds.entries.size()) {
    throw ValidationError("binarize: attribute vector does not match threshold table");
  }
  std::vector<std::uint8_t> out(probs.size());
  for (std::size_t a = 0; a < probs.size(); ++a) {
    out[a] = probs[a] >= thresholds.entries[a].threshold ? 1 : 0;
  }
  return out;
}

const std::vector<double>& require_probs(const Descriptor& d) {
  if (!d.attr_probs) throw ValidationError("descriptor " + d.image_id + " lacks attr_probs");
  return *d.attr_probs;
}

}  // namespace

QueryResult run_query(const Descriptor& query, const DescriptorView& gallery,
                      const ThresholdTable& thresholds, const Ontology& ontology,
                      const FilterSpec& spec, QueryOrder order) {
  const std::vector<std::size_t> attr_idx = resolve_filter_attributes(spec, ontology);

  QueryResult result;
  result.query_id = query.image_id;

  if (attr_idx.empty()) {
    result.ranking = rank_by_distance(query.feature, gallery);
    return result;
  }

  const std::vector<std::uint8_t> query_attrs = binarize_with_table(require_probs(query),
                                                                    thresholds);
  std::vector<std::vector<std::uint8_t>> gallery_attrs;
  gallery_attrs.reserve(gallery.size());
  for (const Descriptor* g : gallery) {
    gallery_attrs.push_back(binarize_with_table(require_probs(*g), thresholds));
  }
  const FilterOutcome outcome =
      attribute_filter(query_attrs, gallery_attrs, attr_idx, spec.fallback_on_empty);
  result.removed_count = outcome.removed_count;
  result.fallback_used = outcome.fallback_used;

  if (order == QueryOrder::filter_then_rank) {
    DescriptorView survivors;
    survivors.reserve(outcome.survivors.size());
    for (std::size_t g : outcome.survivors) survivors.push_back(gallery[g]);
    result.ranking = rank_by_distance(query.feature, survivors);
  } else {
    // Rank the full gallery first, then drop mismatches keeping the order.
    std::vector<RankedItem> full = rank_by_distance(query.feature, gallery);
    std::vector<bool> keep(gallery.size(), false);
    for (std::size_t g : outcome.survivors) keep[g] = true;
    std::vector<std::string> ids(gallery.size());
    for (std::size_t g = 0; g < gallery.size(); ++g) ids[g] = gallery[g]->image_id;
    for (RankedItem& item : full) {
      const auto it = std::find(ids.begin(), ids.end(), item.image_id);
      if (keep[static_cast<std::size_t>(it - ids.begin())]) {
        result.ranking.push_back(std::move(item));
      }
    }
  }
  return result;
}

QueryBatchResult run_query_batch(const Dataset& ds, const ThresholdTable& thresholds,
                                 const FilterSpec& spec, QueryOrder order, bool mask) {
  if (thresholds.ontology_checksum != ontology_checksum(ds.ontology)) {
    throw ValidationError("run_query_batch: threshold table ontology checksum mismatch");
  }
  const SplitViews views = split_views(ds);
  QueryBatchResult batch;
  batch.ontology_checksum = thresholds.ontology_checksum;
  batch.filter = spec.to_string();
  batch.order = std::string(query_order_name(order));
  batch.protocol_mask = mask;
  batch.results.reserve(views.query.size());
  for (const Descriptor* q : views.query) {
    const DescriptorView admissible = protocol_mask(*q, views.gallery, mask);
    batch.results.push_back(run_query(*q, admissible, thresholds, ds.ontology, spec, order));
  }
  return batch;
}

void save_query_results(const QueryBatchResult& batch, const std::filesystem::path& file) {
  ordered_json doc;
  doc["schema_version"] = 1;
  doc["ontology_checksum"] = batch.ontology_checksum;
  doc["filter"] = batch.filter;
  doc["order"] = batch.order;
  doc["protocol_mask"] = batch.protocol_mask;
  ordered_json results = ordered_json::array();
  for (const QueryResult& r : batch.results) {
    ordered_json entry;
    entry["query"] = r.query_id;
    entry["removed"] = r.removed_count;
    entry["fallback_used"] = r.fallback_used;
    ordered_json ranking = ordered_json::array();
    for (const RankedItem& item : r.ranking) {
      ranking.push_back({{"id", item.image_id}, {"distance", item.distance}});
    }
    entry["ranking"] = std::move(ranking);
    results.push_back(std::move(entry));
  }
  doc["results"] = std::move(results);
  std::ofstream out(file);
  if (!out) throw IoError("cannot write query results: " + file.string());
  out << doc.dump(2) << "\n";
}

QueryBatchResult load_query_results(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open query results: " + file.string());
  ordered_json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed query results: ") + e.what());
  }
  try {
    if (doc.value("schema_version", 0) != 1) {
      throw ValidationError("query results: unsupported schema_version");
    }
    QueryBatchResult batch;
    batch.ontology_checksum = doc.at("ontology_checksum").get<std::string>();
    batch.filter = doc.at("filter").get<std::string>();
    batch.order = doc.at("order").get<std::string>();
    batch.protocol_mask = doc.at("protocol_mask").get<bool>();
    for (const auto& entry : doc.at("results")) {
      QueryResult r;
      r.query_id = entry.at("query").get<std::string>();
      r.removed_count = entry.at("removed").get<std::size_t>();
      r.fallback_used = entry.at("fallback_used").get<bool>();
      for (const auto& item : entry.at("ranking")) {
        r.ranking.push_back({item.at("id").get<std::string>(), item.at("distance").get<double>()});
      }
      batch.results.push_back(std::move(r));
    }
    return batch;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed query results: ") + e.what());
  }
}

}  // namespace semreid
