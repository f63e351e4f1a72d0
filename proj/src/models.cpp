#include "semreid/models.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <set>

#include "json.hpp"
#include "semreid/error.hpp"
#include "semreid/losses.hpp"
#include "semreid/util.hpp"

namespace semreid {

using ordered_json = nlohmann::ordered_json;

std::vector<double> LinearEmbedder::embed(std::span<const double> x) const {
  if (x.size() != input_dim) throw ValidationError("embed: dimension mismatch");
  std::vector<double> out(output_dim, 0.0);
  for (std::size_t i = 0; i < input_dim; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* row = weights.data() + i * output_dim;
    for (std::size_t j = 0; j < output_dim; ++j) out[j] += xi * row[j];
  }
  return out;
}

std::vector<TripletIndices> sample_triplets(const DescriptorView& view, std::size_t count,
                                            std::uint64_t seed) {
  if (view.empty()) throw ValidationError("sample_triplets: empty view");
  std::map<int, std::vector<std::size_t>> by_pid;
  for (std::size_t i = 0; i < view.size(); ++i) by_pid[view[i]->person_id].push_back(i);
  if (by_pid.size() < 2) {
    throw ValidationError("sample_triplets: need at least 2 identities for negatives");
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_any(0, view.size() - 1);
  std::vector<TripletIndices> triplets;
  triplets.reserve(count);
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t anchor = pick_any(rng);
    const auto& same = by_pid[view[anchor]->person_id];
    std::size_t positive = anchor;
    if (same.size() > 1) {
      std::uniform_int_distribution<std::size_t> pick_same(0, same.size() - 2);
      std::size_t k = pick_same(rng);
      // skip the anchor itself
      for (std::size_t s : same) {
        if (s == anchor) continue;
        if (k == 0) {
          positive = s;
          break;
        }
        --k;
      }
    }
    std::size_t negative = pick_any(rng);
    while (view[negative]->person_id == view[anchor]->person_id) negative = pick_any(rng);
    triplets.push_back({anchor, positive, negative});
  }
  return triplets;
}

double embedder_loss(const LinearEmbedder& e, const DescriptorView& view,
                     const std::vector<TripletIndices>& triplets, double margin) {
  if (triplets.empty()) return 0.0;
  double sum = 0.0;
  for (const TripletIndices& t : triplets) {
    TripletBatch batch{e.embed(view[t.anchor]->feature), e.embed(view[t.positive]->feature),
                       e.embed(view[t.negative]->feature), margin};
    sum += triplet_loss(batch);
  }
  return sum / static_cast<double>(triplets.size());
}

// One weight matrix is shared by all three triplet members; the parameter
// gradient is chained from the per-embedding gradients.
void fit_triplets(LinearEmbedder& e, const DescriptorView& view,
                  const std::vector<TripletIndices>& triplets, double margin, double step_size,
                  int max_epochs) {
  if (triplets.empty()) return;
  const std::size_t din = e.input_dim;
  const std::size_t dout = e.output_dim;
  const double scale = step_size / static_cast<double>(triplets.size());
  std::vector<double> grad(din * dout);

  for (int epoch = 0; epoch < max_epochs; ++epoch) {
    std::fill(grad.begin(), grad.end(), 0.0);
    bool any_active = false;
    for (const TripletIndices& t : triplets) {
      TripletBatch batch{e.embed(view[t.anchor]->feature), e.embed(view[t.positive]->feature),
                         e.embed(view[t.negative]->feature), margin};
      if (triplet_loss(batch) == 0.0) continue;
      any_active = true;
      const TripletGrad g = triplet_grad(batch);
      const auto accumulate = [&](const std::vector<double>& x, const std::vector<double>& gf) {
        for (std::size_t i = 0; i < din; ++i) {
          if (x[i] == 0.0) continue;
          double* row = grad.data() + i * dout;
          for (std::size_t j = 0; j < dout; ++j) row[j] += x[i] * gf[j];
        }
      };
      accumulate(view[t.anchor]->feature, g.anchor);
      accumulate(view[t.positive]->feature, g.positive);
      accumulate(view[t.negative]->feature, g.negative);
    }
    if (!any_active) break;  // zero loss, zero gradient: stationary
    for (std::size_t i = 0; i < grad.size(); ++i) e.weights[i] -= scale * grad[i];
  }
}

LinearEmbedder train_embedder(const DescriptorView& train, const EmbedderConfig& cfg) {
  if (train.empty()) throw ValidationError("train_embedder: empty training view");
  if (!(cfg.step_size > 0.0)) throw ValidationError("train_embedder: step_size must be > 0");
  if (!(cfg.margin > 0.0)) throw ValidationError("train_embedder: margin must be > 0");
  if (cfg.output_dim == 0 || cfg.output_dim % 4 != 0) {
    throw ValidationError("train_embedder: output_dim must be a positive multiple of 4");
  }

  LinearEmbedder e;
  e.input_dim = train.front()->feature.size();
  e.output_dim = cfg.output_dim;
  e.weights.resize(e.input_dim * e.output_dim);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> init(0.0, cfg.init_scale);
  for (double& w : e.weights) w = init(rng);

  const std::vector<TripletIndices> triplets =
      sample_triplets(train, cfg.num_triplets, cfg.seed ^ 0x9e3779b97f4a7c15ull);
  fit_triplets(e, train, triplets, cfg.margin, cfg.step_size, cfg.max_epochs);
  return e;
}

double AttributeClassifier::predict(std::span<const double> slice) const {
  return sigmoid(dot(weights, slice) + bias);
}

RegionClassifierGroup train_region_group(const DescriptorView& train, Region region,
                                         const Ontology& ontology, const GroupTrainConfig& cfg) {
  if (!(cfg.step_size > 0.0)) throw ValidationError("train_region_group: step_size must be > 0");
  RegionClassifierGroup group;
  group.region = region;
  const std::vector<std::size_t> attrs = ontology.attribute_indices_of_region(region);
  if (attrs.empty()) return group;
  if (train.empty()) throw ValidationError("train_region_group: empty training view");

  std::vector<std::span<const double>> slices;
  slices.reserve(train.size());
  for (const Descriptor* d : train) {
    if (!d->attr_labels) {
      throw ValidationError("train_region_group: descriptor " + d->image_id +
                            " lacks attr_labels");
    }
    slices.push_back(region_slice(*d, region));
  }
  const std::size_t slice_dim = slices.front().size();
  const std::size_t n = train.size();
  const double group_size = static_cast<double>(attrs.size());

  for (std::size_t a : attrs) {
    AttributeClassifier cls;
    cls.attribute = ontology.attributes()[a].name;
    cls.weights.assign(slice_dim, 0.0);  // convex objective, zero init

    bool saw_zero = false, saw_one = false;
    for (const Descriptor* d : train) {
      ((*d->attr_labels)[a] ? saw_one : saw_zero) = true;
    }
    cls.degenerate = !(saw_zero && saw_one);
    group.classifiers.push_back(std::move(cls));
  }

  // Gradient descent on the group-averaged BCE; the per-head gradients are
  // independent, the 1/|group| factor only scales the step.
  const double scale = cfg.step_size / (static_cast<double>(n) * group_size);
  std::vector<double> grad_w(slice_dim);
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    for (std::size_t c = 0; c < attrs.size(); ++c) {
      AttributeClassifier& cls = group.classifiers[c];
      const std::size_t a = attrs[c];
      std::fill(grad_w.begin(), grad_w.end(), 0.0);
      double grad_b = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double p = cls.predict(slices[i]);
        const double err = p - static_cast<double>((*train[i]->attr_labels)[a]);
        for (std::size_t k = 0; k < slice_dim; ++k) grad_w[k] += err * slices[i][k];
        grad_b += err;
      }
      for (std::size_t k = 0; k < slice_dim; ++k) cls.weights[k] -= scale * grad_w[k];
      cls.bias -= scale * grad_b;
    }
  }
  return group;
}

std::vector<double> predict_attr_probs(const std::vector<RegionClassifierGroup>& groups,
                                       const Descriptor& d, const Ontology& ontology) {
  const std::size_t m = ontology.attribute_count();
  std::vector<double> probs(m, 0.0);
  std::vector<bool> covered(m, false);
  for (const RegionClassifierGroup& group : groups) {
    const std::span<const double> slice = region_slice(d, group.region);
    for (const AttributeClassifier& cls : group.classifiers) {
      const std::size_t a = ontology.attribute_index(cls.attribute);
      if (ontology.attributes()[a].region != group.region) {
        throw ValidationError("predict_attr_probs: attribute '" + cls.attribute +
                              "' not owned by group region");
      }
      if (covered[a]) {
        throw ValidationError("predict_attr_probs: attribute '" + cls.attribute +
                              "' covered twice");
      }
      covered[a] = true;
      probs[a] = cls.predict(slice);
    }
  }
  for (std::size_t a = 0; a < m; ++a) {
    if (!covered[a]) {
      throw ValidationError("predict_attr_probs: attribute '" + ontology.attributes()[a].name +
                            "' not covered by any group");
    }
  }
  return probs;
}

ToyModels train_toy_models(const Dataset& ds, const EmbedderConfig& embedder_cfg,
                           const GroupTrainConfig& group_cfg) {
  const SplitViews views = split_views(ds);
  ToyModels models;
  models.ontology_checksum = ontology_checksum(ds.ontology);
  models.embedder = train_embedder(views.train, embedder_cfg);
  for (Region r : kAllRegions) {
    if (ds.ontology.attribute_indices_of_region(r).empty()) continue;
    models.groups.push_back(train_region_group(views.train, r, ds.ontology, group_cfg));
  }
  return models;
}

Dataset apply_models(const Dataset& ds, const ToyModels& models) {
  if (models.ontology_checksum != ontology_checksum(ds.ontology)) {
    throw ValidationError("apply_models: model ontology checksum mismatch");
  }
  std::vector<Descriptor> out;
  out.reserve(ds.descriptors.size());
  for (const Descriptor& d : ds.descriptors) {
    Descriptor nd = d;
    nd.attr_probs = predict_attr_probs(models.groups, d, ds.ontology);
    nd.feature = models.embedder.embed(d.feature);
    out.push_back(std::move(nd));
  }
  return make_dataset(ds.ontology, std::move(out));
}

void save_models(const ToyModels& models, const std::filesystem::path& file) {
  ordered_json doc;
  doc["schema_version"] = 1;
  doc["ontology_checksum"] = models.ontology_checksum;
  ordered_json embedder;
  embedder["input_dim"] = models.embedder.input_dim;
  embedder["output_dim"] = models.embedder.output_dim;
  embedder["weights"] = models.embedder.weights;
  doc["embedder"] = std::move(embedder);
  ordered_json groups = ordered_json::array();
  for (const RegionClassifierGroup& g : models.groups) {
    ordered_json group;
    group["region"] = std::string(region_name(g.region));
    ordered_json classifiers = ordered_json::array();
    for (const AttributeClassifier& c : g.classifiers) {
      ordered_json cls;
      cls["attribute"] = c.attribute;
      cls["weights"] = c.weights;
      cls["bias"] = c.bias;
      cls["degenerate"] = c.degenerate;
      classifiers.push_back(std::move(cls));
    }
    group["classifiers"] = std::move(classifiers);
    groups.push_back(std::move(group));
  }
  doc["region_groups"] = std::move(groups);
  std::ofstream out(file);
  if (!out) throw IoError("cannot write model document: " + file.string());
  out << doc.dump(2) << "\n";
}

ToyModels load_models(const std::filesystem::path& file, const Ontology& ontology) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open model document: " + file.string());
  ordered_json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model document: ") + e.what());
  }
  try {
    if (doc.value("schema_version", 0) != 1) {
      throw ValidationError("model document: unsupported schema_version");
    }
    ToyModels models;
    models.ontology_checksum = doc.at("ontology_checksum").get<std::string>();
    if (models.ontology_checksum != ontology_checksum(ontology)) {
      throw ValidationError("model document: ontology checksum mismatch");
    }
    const auto& embedder = doc.at("embedder");
    models.embedder.input_dim = embedder.at("input_dim").get<std::size_t>();
    models.embedder.output_dim = embedder.at("output_dim").get<std::size_t>();
    models.embedder.weights = embedder.at("weights").get<std::vector<double>>();
    if (models.embedder.weights.size() !=
        models.embedder.input_dim * models.embedder.output_dim) {
      throw ValidationError("model document: embedder weight count mismatch");
    }
    for (const auto& group : doc.at("region_groups")) {
      RegionClassifierGroup g;
      g.region = region_from_name(group.at("region").get<std::string>());
      for (const auto& cls : group.at("classifiers")) {
        AttributeClassifier c;
        c.attribute = cls.at("attribute").get<std::string>();
        c.weights = cls.at("weights").get<std::vector<double>>();
        c.bias = cls.at("bias").get<double>();
        c.degenerate = cls.at("degenerate").get<bool>();
        g.classifiers.push_back(std::move(c));
      }
      models.groups.push_back(std::move(g));
    }
    return models;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed model document: ") + e.what());
  }
}

}  // namespace semreid
