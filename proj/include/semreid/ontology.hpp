#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace semreid {

// Body regions of the attribute ontology. head/upper/lower/foot are the four
// horizontal parts of a person from top to bottom; body is the composite of
// upper and lower and carries its own attributes (e.g. carried items).
enum class Region { head, upper, lower, foot, body };

inline constexpr std::array<Region, 5> kAllRegions = {
    Region::head, Region::upper, Region::lower, Region::foot, Region::body};

std::string_view region_name(Region r);
Region region_from_name(std::string_view name);
inline bool region_is_composite(Region r) { return r == Region::body; }

struct Category {
  std::string name;
  Region region = Region::head;

  bool operator==(const Category&) const = default;
};

struct AttributeDef {
  std::string name;
  Region region = Region::head;
  std::optional<std::string> category;
  std::optional<double> positive_rate;

  bool operator==(const AttributeDef&) const = default;
};

// A validated attribute ontology: regions -> categories -> binary attributes.
// The position of an attribute in attributes() is its canonical index; every
// attribute vector in the system (probabilities, labels, thresholds) uses
// this order. Immutable after construction, safe for concurrent reads.
class Ontology {
 public:
  Ontology() = default;

  // Validates all structural invariants; throws ValidationError on:
  //   - duplicate attribute or category name
  //   - unknown region or category reference
  //   - attribute whose category lives under a different region (the
  //     region->category->attribute paths must form a tree)
  //   - category attached to the composite body region
  //   - positive_rate outside [0, 1]
  static Ontology from_parts(std::string name, std::vector<Category> categories,
                             std::vector<AttributeDef> attributes);

  const std::string& name() const { return name_; }
  const std::vector<Category>& categories() const { return categories_; }
  const std::vector<AttributeDef>& attributes() const { return attributes_; }
  std::size_t attribute_count() const { return attributes_.size(); }

  bool has_attribute(std::string_view name) const;
  // Canonical index of an attribute; throws ValidationError if unknown.
  std::size_t attribute_index(std::string_view name) const;
  // Owning region of an attribute; throws ValidationError if unknown.
  Region region_of_attribute(std::string_view name) const;

  // Attributes whose owning region is exactly r, in canonical order. For
  // body this returns the body-assigned attributes only, not the union of
  // upper and lower.
  std::vector<AttributeDef> attributes_of_region(Region r) const;
  std::vector<std::size_t> attribute_indices_of_region(Region r) const;

  bool operator==(const Ontology& other) const;

 private:
  std::string name_;
  std::vector<Category> categories_;
  std::vector<AttributeDef> attributes_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Ontology document format (JSON, schema_version 1):
//
//   {
//     "schema_version": 1,
//     "name": "market1501",
//     "regions": [
//       {"name": "head"}, {"name": "upper"}, {"name": "lower"},
//       {"name": "foot"}, {"name": "body", "composite": ["upper", "lower"]}
//     ],
//     "categories": [{"name": "hat", "region": "head"}, ...],
//     "attributes": [
//       {"name": "wearing hat", "region": "head", "category": "hat",
//        "positive_rate": 0.026},
//       ...
//     ]
//   }
//
// The document must declare exactly the five regions, with body (and only
// body) composite over {upper, lower}. "category" and "positive_rate" are
// optional per attribute. Attribute order in the array is the canonical
// attribute-vector order and is preserved by save/load round trips.
Ontology parse_ontology(const std::string& json_text);
Ontology load_ontology(const std::filesystem::path& file);
std::string ontology_to_json(const Ontology& o);
void save_ontology(const Ontology& o, const std::filesystem::path& file);

// Checksum of the canonical serialized form; artifacts derived from an
// ontology carry it so stale combinations are rejected.
std::string ontology_checksum(const Ontology& o);

// The bundled Market1501 attribute ontology: 25 binary attributes grouped
// head=3, body=3, upper=9, lower=10, foot=0.
const std::string& market1501_ontology_json();
Ontology market1501_ontology();

}  // namespace semreid
