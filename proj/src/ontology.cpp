#include "semreid/ontology.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "semreid/error.hpp"
#include "semreid/util.hpp"

namespace semreid {

using ordered_json = nlohmann::ordered_json;

std::string_view region_name(Region r) {
  switch (r) {
    case Region::head:
      return "head";
    case Region::upper:
      return "upper";
    case Region::lower:
      return "lower";
    case Region::foot:
      return "foot";
    case Region::body:
      return "body";
  }
  throw ValidationError("invalid region value");
}

Region region_from_name(std::string_view name) {
  for (Region r : kAllRegions) {
    if (region_name(r) == name) return r;
  }
  throw ValidationError("unknown region: " + std::string(name));
}

Ontology Ontology::from_parts(std::string name, std::vector<Category> categories,
                              std::vector<AttributeDef> attributes) {
  Ontology o;
  o.name_ = std::move(name);
  o.categories_ = std::move(categories);
  o.attributes_ = std::move(attributes);

  std::set<std::string> category_names;
  for (const Category& c : o.categories_) {
    if (!category_names.insert(c.name).second) {
      throw ValidationError("duplicate category: " + c.name);
    }
    if (region_is_composite(c.region)) {
      throw ValidationError("category '" + c.name + "' attached to composite region body");
    }
  }

  for (std::size_t i = 0; i < o.attributes_.size(); ++i) {
    const AttributeDef& a = o.attributes_[i];
    if (!o.index_.emplace(a.name, i).second) {
      throw ValidationError("duplicate attribute: " + a.name);
    }
    if (a.positive_rate && (*a.positive_rate < 0.0 || *a.positive_rate > 1.0)) {
      throw ValidationError("attribute '" + a.name + "' positive_rate outside [0,1]");
    }
    if (a.category) {
      auto it = std::find_if(o.categories_.begin(), o.categories_.end(),
                             [&](const Category& c) { return c.name == *a.category; });
      if (it == o.categories_.end()) {
        throw ValidationError("attribute '" + a.name + "' references unknown category '" +
                              *a.category + "'");
      }
      // The region->category->attribute structure must be a tree: an
      // attribute reachable both through its own region and through a
      // category under a different region is rejected.
      if (it->region != a.region) {
        throw ValidationError("attribute '" + a.name + "' reachable via two regions: " +
                              std::string(region_name(a.region)) + " and " +
                              std::string(region_name(it->region)));
      }
    }
  }
  return o;
}

bool Ontology::has_attribute(std::string_view name) const {
  return index_.find(std::string(name)) != index_.end();
}

std::size_t Ontology::attribute_index(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw ValidationError("unknown attribute: " + std::string(name));
  return it->second;
}

Region Ontology::region_of_attribute(std::string_view name) const {
  return attributes_[attribute_index(name)].region;
}

std::vector<AttributeDef> Ontology::attributes_of_region(Region r) const {
  std::vector<AttributeDef> out;
  for (const AttributeDef& a : attributes_) {
    if (a.region == r) out.push_back(a);
  }
  return out;
}

std::vector<std::size_t> Ontology::attribute_indices_of_region(Region r) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < attributes_.size(); ++i) {
    if (attributes_[i].region == r) out.push_back(i);
  }
  return out;
}

bool Ontology::operator==(const Ontology& other) const {
  return name_ == other.name_ && categories_ == other.categories_ &&
         attributes_ == other.attributes_;
}

namespace {

ordered_json ontology_document(const Ontology& o) {
  ordered_json doc;
  doc["schema_version"] = 1;
  doc["name"] = o.name();
  ordered_json regions = ordered_json::array();
  for (Region r : kAllRegions) {
    ordered_json entry;
    entry["name"] = std::string(region_name(r));
    if (region_is_composite(r)) entry["composite"] = {"upper", "lower"};
    regions.push_back(std::move(entry));
  }
  doc["regions"] = std::move(regions);
  ordered_json categories = ordered_json::array();
  for (const Category& c : o.categories()) {
    ordered_json entry;
    entry["name"] = c.name;
    entry["region"] = std::string(region_name(c.region));
    categories.push_back(std::move(entry));
  }
  doc["categories"] = std::move(categories);
  ordered_json attributes = ordered_json::array();
  for (const AttributeDef& a : o.attributes()) {
    ordered_json entry;
    entry["name"] = a.name;
    entry["region"] = std::string(region_name(a.region));
    if (a.category) entry["category"] = *a.category;
    if (a.positive_rate) entry["positive_rate"] = *a.positive_rate;
    attributes.push_back(std::move(entry));
  }
  doc["attributes"] = std::move(attributes);
  return doc;
}

void check_regions_section(const ordered_json& doc) {
  if (!doc.contains("regions") || !doc["regions"].is_array()) {
    throw ValidationError("ontology document: missing regions array");
  }
  std::set<std::string> seen;
  std::set<std::string> composite_refs;
  for (const auto& entry : doc["regions"]) {
    const std::string name = entry.at("name").get<std::string>();
    region_from_name(name);  // rejects unknown names
    if (!seen.insert(name).second) throw ValidationError("duplicate region: " + name);
    const bool has_composite = entry.contains("composite") && !entry["composite"].empty();
    if (name == "body") {
      if (!has_composite) throw ValidationError("region body must be composite over upper+lower");
      for (const auto& m : entry["composite"]) composite_refs.insert(m.get<std::string>());
      if (composite_refs != std::set<std::string>{"upper", "lower"}) {
        throw ValidationError("region body must merge exactly {upper, lower}");
      }
    } else if (has_composite) {
      throw ValidationError("region '" + name + "' may not be composite");
    }
  }
  if (seen.size() != kAllRegions.size()) {
    throw ValidationError("ontology document must declare exactly the five regions");
  }
}

}  // namespace

Ontology parse_ontology(const std::string& json_text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed ontology document: ") + e.what());
  }
  try {
    if (doc.value("schema_version", 0) != 1) {
      throw ValidationError("ontology document: unsupported schema_version");
    }
    check_regions_section(doc);

    std::vector<Category> categories;
    for (const auto& entry : doc.value("categories", ordered_json::array())) {
      categories.push_back({entry.at("name").get<std::string>(),
                            region_from_name(entry.at("region").get<std::string>())});
    }
    std::vector<AttributeDef> attributes;
    for (const auto& entry : doc.value("attributes", ordered_json::array())) {
      AttributeDef a;
      a.name = entry.at("name").get<std::string>();
      a.region = region_from_name(entry.at("region").get<std::string>());
      if (entry.contains("category")) a.category = entry["category"].get<std::string>();
      if (entry.contains("positive_rate")) a.positive_rate = entry["positive_rate"].get<double>();
      attributes.push_back(std::move(a));
    }
    return Ontology::from_parts(doc.value("name", std::string("unnamed")), std::move(categories),
                                std::move(attributes));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed ontology document: ") + e.what());
  }
}

Ontology load_ontology(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open ontology document: " + file.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_ontology(buf.str());
}

std::string ontology_to_json(const Ontology& o) { return ontology_document(o).dump(2) + "\n"; }

void save_ontology(const Ontology& o, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write ontology document: " + file.string());
  out << ontology_to_json(o);
}

std::string ontology_checksum(const Ontology& o) {
  return to_hex(fnv1a64(ontology_document(o).dump()));
}

// Market1501-attribute grouping: 3 head, 3 body (carried items), 9 upper,
// 10 lower, none on foot. The wearing-hat positive rate is the one reported
// for this dataset; rates for the other attributes are left unset.
const std::string& market1501_ontology_json() {
  static const std::string text = R"({
  "schema_version": 1,
  "name": "market1501",
  "regions": [
    {"name": "head"},
    {"name": "upper"},
    {"name": "lower"},
    {"name": "foot"},
    {"name": "body", "composite": ["upper", "lower"]}
  ],
  "categories": [
    {"name": "hat", "region": "head"},
    {"name": "upper clothing", "region": "upper"},
    {"name": "lower clothing", "region": "lower"}
  ],
  "attributes": [
    {"name": "gender", "region": "head"},
    {"name": "hair length", "region": "head"},
    {"name": "wearing hat", "region": "head", "category": "hat", "positive_rate": 0.026},
    {"name": "backpack", "region": "body"},
    {"name": "bag", "region": "body"},
    {"name": "handbag", "region": "body"},
    {"name": "sleeve length", "region": "upper", "category": "upper clothing"},
    {"name": "up black", "region": "upper", "category": "upper clothing"},
    {"name": "up white", "region": "upper", "category": "upper clothing"},
    {"name": "up red", "region": "upper", "category": "upper clothing"},
    {"name": "up purple", "region": "upper", "category": "upper clothing"},
    {"name": "up yellow", "region": "upper", "category": "upper clothing"},
    {"name": "up gray", "region": "upper", "category": "upper clothing"},
    {"name": "up blue", "region": "upper", "category": "upper clothing"},
    {"name": "up green", "region": "upper", "category": "upper clothing"},
    {"name": "lower length", "region": "lower", "category": "lower clothing"},
    {"name": "lower type", "region": "lower", "category": "lower clothing"},
    {"name": "down black", "region": "lower", "category": "lower clothing"},
    {"name": "down white", "region": "lower", "category": "lower clothing"},
    {"name": "down pink", "region": "lower", "category": "lower clothing"},
    {"name": "down yellow", "region": "lower", "category": "lower clothing"},
    {"name": "down gray", "region": "lower", "category": "lower clothing"},
    {"name": "down blue", "region": "lower", "category": "lower clothing"},
    {"name": "down green", "region": "lower", "category": "lower clothing"},
    {"name": "down brown", "region": "lower", "category": "lower clothing"}
  ]
}
)";
  return text;
}

Ontology market1501_ontology() { return parse_ontology(market1501_ontology_json()); }

}  // namespace semreid
