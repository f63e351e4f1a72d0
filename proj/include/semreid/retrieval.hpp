#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "semreid/calibration.hpp"
#include "semreid/dataset.hpp"
#include "semreid/ontology.hpp"

namespace semreid {

// Which attributes gate the gallery before (or after) distance ranking.
struct FilterSpec {
  enum class Mode { none, single_attribute, attribute_set, all_of_region };

  Mode mode = Mode::none;
  std::vector<std::string> attributes;  // single_attribute / attribute_set
  Region region = Region::head;         // all_of_region
  bool fallback_on_empty = true;

  // Accepts none | attr:NAME | attrs:N1,N2,... | region:R
  static FilterSpec parse(std::string_view text);
  std::string to_string() const;
};

// Canonical attribute indices named by the spec; empty for mode none.
// Throws ValidationError on unknown attribute names.
std::vector<std::size_t> resolve_filter_attributes(const FilterSpec& spec,
                                                   const Ontology& ontology);

struct RankedItem {
  std::string image_id;
  double distance = 0.0;
};

struct QueryResult {
  std::string query_id;
  std::vector<RankedItem> ranking;   // ascending distance
  std::size_t removed_count = 0;     // candidates removed by the filter
  bool fallback_used = false;        // filter emptied the gallery, full set kept
};

enum class QueryOrder { filter_then_rank, rank_then_filter };
QueryOrder query_order_from_name(std::string_view name);  // filter-first | rank-first
std::string_view query_order_name(QueryOrder order);

struct FilterOutcome {
  std::vector<std::size_t> survivors;  // positions into the gallery
  std::size_t removed_count = 0;
  bool fallback_used = false;
};

// A gallery item survives iff its binary attribute value equals the query's
// on every index in attribute_indices. An emptied survivor set falls back to
// the full gallery when requested.
FilterOutcome attribute_filter(std::span<const std::uint8_t> query_attrs,
                               const std::vector<std::vector<std::uint8_t>>& gallery_attrs,
                               std::span<const std::size_t> attribute_indices,
                               bool fallback_on_empty);

// Exhaustive Euclidean ranking, ascending distance; ties broken by image_id.
std::vector<RankedItem> rank_by_distance(std::span<const double> query_feature,
                                         const DescriptorView& candidates);

// Standard cross-camera evaluation mask: drops gallery items sharing both
// person_id and camera_id with the query. No-op when disabled.
DescriptorView protocol_mask(const Descriptor& query, const DescriptorView& gallery,
                             bool enabled = true);

// The two-stage online query: binarizes query and gallery attribute
// probabilities with the calibrated thresholds, then composes the attribute
// filter with distance ranking in the requested order. Both orders produce
// the same ranked survivor list.
QueryResult run_query(const Descriptor& query, const DescriptorView& gallery,
                      const ThresholdTable& thresholds, const Ontology& ontology,
                      const FilterSpec& spec, QueryOrder order = QueryOrder::filter_then_rank);

struct QueryBatchResult {
  std::string ontology_checksum;
  std::string filter;
  std::string order;
  bool protocol_mask = true;
  std::vector<QueryResult> results;
};

// Runs every query-split descriptor against the gallery split.
QueryBatchResult run_query_batch(const Dataset& ds, const ThresholdTable& thresholds,
                                 const FilterSpec& spec,
                                 QueryOrder order = QueryOrder::filter_then_rank,
                                 bool mask = true);

// Results document (JSON): one entry per query with its ranking (ids and
// distances) and filter trace (removed count, fallback flag).
void save_query_results(const QueryBatchResult& batch, const std::filesystem::path& file);
QueryBatchResult load_query_results(const std::filesystem::path& file);

}  // namespace semreid
