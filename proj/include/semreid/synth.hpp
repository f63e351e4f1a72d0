#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "semreid/dataset.hpp"
#include "semreid/ontology.hpp"

namespace semreid {

// Deterministic synthetic dataset generator. Every identity gets a centroid
// in R^D and one ground-truth attribute vector; images are noisy copies of
// the centroid; each attribute's feature signal lives only in its owning
// region's slice, so region-local classifiers can genuinely learn it and
// disjoint slices carry no information about it (body overlaps upper and
// lower by definition, so the no-information guarantee applies to disjoint
// region pairs).
struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t num_identities = 12;       // >= 2
  std::size_t images_per_identity = 4;   // >= 2
  std::size_t feature_dim = 32;          // > 0, divisible by 4
  Ontology ontology;
  double feature_noise_sigma = 0.05;     // >= 0
  double attr_flip_rate = 0.0;           // [0, 0.5)
  double attr_prob_jitter = 0.0;         // >= 0, sigma of noise added to flipped labels
  double default_positive_rate = 0.5;    // (0, 1)
  std::map<std::string, double> positive_rate_per_attr;  // overrides, (0, 1)
  std::size_t camera_count = 2;          // >= 2
  double centroid_scale = 0.5;           // sigma of identity centroids
  double attr_signal = 1.5;              // +/- shift on the attribute's component
  double train_fraction = 0.5;           // fraction of identities tagged train

  // scenario_confusable only
  std::optional<std::string> confusable_attribute;  // default: first attribute
  double pair_gap = 0.0;  // feature-space gap between pair centroids, >= 0

  std::string to_json() const;  // provenance object embedded in manifests
};

// Identity-clustered embeddings with region-localized attribute signals.
// attr_labels are the identity's ground truth; attr_probs are the labels
// flipped at attr_flip_rate, then jittered by Gaussian noise of sigma
// attr_prob_jitter and clamped into [0,1] (a stand-in for an imperfect
// attribute model). Splits: the first round(train_fraction*N) identities are
// train; each remaining identity contributes image 0 as query and the rest
// as gallery. Cameras rotate per image, so every query has a cross-camera
// match. Pure function of the config, including the seed.
Dataset generate(const SynthConfig& cfg);

// Identity pairs with near-identical centroids (distance pair_gap) that
// differ only on the designated attribute, whose feature signal is withheld:
// distance ranking confuses the pair, attribute filtering separates it.
// num_identities must be even.
Dataset scenario_confusable(const SynthConfig& cfg);

}  // namespace semreid
