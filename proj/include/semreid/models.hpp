#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "semreid/dataset.hpp"
#include "semreid/ontology.hpp"

namespace semreid {

struct EmbedderConfig {
  std::size_t output_dim = 16;
  double step_size = 0.01;  // > 0
  int max_epochs = 200;
  double margin = 0.3;  // > 0, required; no default is claimed by the method
  std::size_t num_triplets = 256;
  double init_scale = 0.1;
  std::uint64_t seed = 1;
};

// Linear stand-in for the deep global-feature extractor: one weight matrix
// shared by anchor, positive and negative (siamese sharing), trained with
// the squared-distance margin loss over a fixed set of sampled triplets.
struct LinearEmbedder {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::vector<double> weights;  // row-major input_dim x output_dim

  std::vector<double> embed(std::span<const double> x) const;
};

// Uniform random (anchor, positive, negative) triplets over the view,
// seeded; then plain full-batch gradient descent with a fixed step. Throws
// ValidationError when the view is empty or has fewer than two identities.
LinearEmbedder train_embedder(const DescriptorView& train, const EmbedderConfig& cfg);

// Mean margin loss of the embedder over a triplet set; exposed for tests.
struct TripletIndices {
  std::size_t anchor, positive, negative;
};
std::vector<TripletIndices> sample_triplets(const DescriptorView& view, std::size_t count,
                                            std::uint64_t seed);
double embedder_loss(const LinearEmbedder& e, const DescriptorView& view,
                     const std::vector<TripletIndices>& triplets, double margin);

// Full-batch gradient descent over a fixed triplet set; the building block
// of train_embedder. A zero-loss triplet set has zero gradient, so the
// weights are left untouched.
void fit_triplets(LinearEmbedder& e, const DescriptorView& view,
                  const std::vector<TripletIndices>& triplets, double margin, double step_size,
                  int max_epochs);

struct AttributeClassifier {
  std::string attribute;
  std::vector<double> weights;  // over the owning region's slice
  double bias = 0.0;
  bool degenerate = false;  // constant labels in training data

  double predict(std::span<const double> slice) const;
};

// One logistic head per attribute of a region, all reading the same region
// slice of the raw descriptor feature.
struct RegionClassifierGroup {
  Region region = Region::head;
  std::vector<AttributeClassifier> classifiers;
};

struct GroupTrainConfig {
  double step_size = 2.0;  // > 0
  int max_epochs = 400;
  std::uint64_t seed = 1;
};

// Fits the group's heads by full-batch gradient descent on the
// group-averaged binary cross entropy. Every training descriptor must carry
// attr_labels. Attributes with constant labels are fitted anyway and flagged
// degenerate.
RegionClassifierGroup train_region_group(const DescriptorView& train, Region region,
                                         const Ontology& ontology, const GroupTrainConfig& cfg);

// Probability vector in canonical ontology order; each attribute is computed
// only from its owning region's slice. The groups must cover every ontology
// attribute exactly once.
std::vector<double> predict_attr_probs(const std::vector<RegionClassifierGroup>& groups,
                                       const Descriptor& d, const Ontology& ontology);

struct ToyModels {
  std::string ontology_checksum;
  LinearEmbedder embedder;
  std::vector<RegionClassifierGroup> groups;
};

// Trains the embedder and one classifier group per attribute-bearing region
// on the train split.
ToyModels train_toy_models(const Dataset& ds, const EmbedderConfig& embedder_cfg,
                           const GroupTrainConfig& group_cfg);

// Applies trained models to every descriptor: attr_probs become model
// predictions on the raw feature, then the feature is replaced by its
// embedding. Labels and metadata pass through.
Dataset apply_models(const Dataset& ds, const ToyModels& models);

// Model document (JSON): embedder weights plus per-region classifier groups,
// tagged with the ontology checksum.
void save_models(const ToyModels& models, const std::filesystem::path& file);
ToyModels load_models(const std::filesystem::path& file, const Ontology& ontology);

}  // namespace semreid
