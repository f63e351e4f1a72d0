#include "semreid/synth.hpp"

#include <cmath>
#include <random>

#include "json.hpp"
#include "semreid/error.hpp"
#include "semreid/util.hpp"

namespace semreid {

using ordered_json = nlohmann::ordered_json;

namespace {

void validate_config(const SynthConfig& cfg) {
  if (cfg.num_identities < 2) throw ValidationError("synth: num_identities must be >= 2");
  if (cfg.images_per_identity < 2) {
    throw ValidationError("synth: images_per_identity must be >= 2");
  }
  if (cfg.feature_dim == 0 || cfg.feature_dim % 4 != 0) {
    throw ValidationError("synth: feature_dim must be a positive multiple of 4");
  }
  if (cfg.feature_noise_sigma < 0.0) throw ValidationError("synth: feature_noise_sigma < 0");
  if (cfg.attr_flip_rate < 0.0 || cfg.attr_flip_rate >= 0.5) {
    throw ValidationError("synth: attr_flip_rate must lie in [0, 0.5)");
  }
  if (cfg.attr_prob_jitter < 0.0) throw ValidationError("synth: attr_prob_jitter < 0");
  if (cfg.camera_count < 2) throw ValidationError("synth: camera_count must be >= 2");
  if (!(cfg.default_positive_rate > 0.0 && cfg.default_positive_rate < 1.0)) {
    throw ValidationError("synth: default_positive_rate must lie in (0,1)");
  }
  for (const auto& [name, rate] : cfg.positive_rate_per_attr) {
    if (!cfg.ontology.has_attribute(name)) {
      throw ValidationError("synth: positive rate for unknown attribute: " + name);
    }
    if (!(rate > 0.0 && rate < 1.0)) {
      throw ValidationError("synth: positive rate for '" + name + "' must lie in (0,1)");
    }
  }
  if (cfg.pair_gap < 0.0) throw ValidationError("synth: pair_gap < 0");
  if (!(cfg.train_fraction >= 0.0 && cfg.train_fraction < 1.0)) {
    throw ValidationError("synth: train_fraction must lie in [0,1)");
  }
  if (cfg.confusable_attribute && !cfg.ontology.has_attribute(*cfg.confusable_attribute)) {
    throw ValidationError("synth: unknown confusable attribute: " + *cfg.confusable_attribute);
  }
}

double positive_rate(const SynthConfig& cfg, const AttributeDef& attr) {
  const auto it = cfg.positive_rate_per_attr.find(attr.name);
  if (it != cfg.positive_rate_per_attr.end()) return it->second;
  return cfg.default_positive_rate;
}

// Component carrying each attribute's signal: round-robin within the owning
// region's slice, in canonical attribute order.
std::vector<std::size_t> signal_components(const Ontology& o, std::size_t feature_dim) {
  std::vector<std::size_t> comps(o.attribute_count());
  for (Region r : kAllRegions) {
    const auto attrs = o.attribute_indices_of_region(r);
    if (attrs.empty()) continue;
    // region_slice offsets for a vector of this dimension
    const std::size_t q = feature_dim / 4;
    std::size_t start = 0, len = q;
    switch (r) {
      case Region::head:
        start = 0;
        break;
      case Region::upper:
        start = q;
        break;
      case Region::lower:
        start = 2 * q;
        break;
      case Region::foot:
        start = 3 * q;
        break;
      case Region::body:
        start = q;
        len = 2 * q;
        break;
    }
    for (std::size_t t = 0; t < attrs.size(); ++t) {
      comps[attrs[t]] = start + (t % len);
    }
  }
  return comps;
}

struct IdentityDraw {
  std::vector<double> centroid;
  std::vector<std::uint8_t> labels;
};

std::vector<Descriptor> emit_images(const SynthConfig& cfg,
                                    const std::vector<IdentityDraw>& identities,
                                    std::size_t n_train, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t m = cfg.ontology.attribute_count();

  std::vector<Descriptor> out;
  out.reserve(identities.size() * cfg.images_per_identity);
  for (std::size_t pid = 0; pid < identities.size(); ++pid) {
    const IdentityDraw& ident = identities[pid];
    for (std::size_t k = 0; k < cfg.images_per_identity; ++k) {
      Descriptor d;
      const int camera = static_cast<int>(k % cfg.camera_count) + 1;
      char buf[48];
      std::snprintf(buf, sizeof(buf), "%04zu_c%d_%02zu", pid, camera, k);
      d.image_id = buf;
      d.person_id = static_cast<int>(pid);
      d.camera_id = camera;
      if (pid < n_train) {
        d.split = Split::train;
      } else {
        d.split = (k == 0) ? Split::query : Split::gallery;
      }
      d.feature = ident.centroid;
      if (cfg.feature_noise_sigma > 0.0) {
        for (double& x : d.feature) x += cfg.feature_noise_sigma * noise(rng);
      }
      d.attr_labels = ident.labels;
      std::vector<double> probs(m);
      for (std::size_t a = 0; a < m; ++a) {
        std::uint8_t value = ident.labels[a];
        if (unit(rng) < cfg.attr_flip_rate) value ^= 1;
        double p = static_cast<double>(value);
        if (cfg.attr_prob_jitter > 0.0) p += cfg.attr_prob_jitter * noise(rng);
        probs[a] = clamp01(p);
      }
      d.attr_probs = std::move(probs);
      out.push_back(std::move(d));
    }
  }
  return out;
}

}  // namespace

std::string SynthConfig::to_json() const {
  ordered_json doc;
  doc["seed"] = seed;
  doc["num_identities"] = num_identities;
  doc["images_per_identity"] = images_per_identity;
  doc["feature_dim"] = feature_dim;
  doc["ontology"] = ontology.name();
  doc["feature_noise_sigma"] = feature_noise_sigma;
  doc["attr_flip_rate"] = attr_flip_rate;
  doc["attr_prob_jitter"] = attr_prob_jitter;
  doc["default_positive_rate"] = default_positive_rate;
  if (!positive_rate_per_attr.empty()) {
    ordered_json rates;
    for (const auto& [name, rate] : positive_rate_per_attr) rates[name] = rate;
    doc["positive_rate_per_attr"] = std::move(rates);
  }
  doc["camera_count"] = camera_count;
  doc["centroid_scale"] = centroid_scale;
  doc["attr_signal"] = attr_signal;
  doc["train_fraction"] = train_fraction;
  if (confusable_attribute) {
    doc["confusable_attribute"] = *confusable_attribute;
    doc["pair_gap"] = pair_gap;
  }
  return doc.dump();
}

Dataset generate(const SynthConfig& cfg) {
  validate_config(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t m = cfg.ontology.attribute_count();
  const std::vector<std::size_t> comps = signal_components(cfg.ontology, cfg.feature_dim);

  std::vector<IdentityDraw> identities(cfg.num_identities);
  for (IdentityDraw& ident : identities) {
    ident.centroid.resize(cfg.feature_dim);
    for (double& x : ident.centroid) x = cfg.centroid_scale * noise(rng);
    ident.labels.resize(m);
    for (std::size_t a = 0; a < m; ++a) {
      const double rate = positive_rate(cfg, cfg.ontology.attributes()[a]);
      ident.labels[a] = unit(rng) < rate ? 1 : 0;
      ident.centroid[comps[a]] += ident.labels[a] ? cfg.attr_signal : -cfg.attr_signal;
    }
  }
  const auto n_train =
      static_cast<std::size_t>(std::lround(cfg.train_fraction * cfg.num_identities));
  return make_dataset(cfg.ontology, emit_images(cfg, identities, n_train, rng));
}

Dataset scenario_confusable(const SynthConfig& cfg) {
  validate_config(cfg);
  if (cfg.num_identities % 2 != 0) {
    throw ValidationError("scenario_confusable: num_identities must be even");
  }
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t m = cfg.ontology.attribute_count();
  if (m == 0) throw ValidationError("scenario_confusable: ontology has no attributes");
  const std::vector<std::size_t> comps = signal_components(cfg.ontology, cfg.feature_dim);
  const std::size_t designated = cfg.confusable_attribute
                                     ? cfg.ontology.attribute_index(*cfg.confusable_attribute)
                                     : 0;

  std::vector<IdentityDraw> identities(cfg.num_identities);
  for (std::size_t pair = 0; pair < cfg.num_identities / 2; ++pair) {
    IdentityDraw base;
    base.centroid.resize(cfg.feature_dim);
    for (double& x : base.centroid) x = cfg.centroid_scale * noise(rng);
    base.labels.resize(m);
    for (std::size_t a = 0; a < m; ++a) {
      if (a == designated) continue;  // set per pair member below
      const double rate = positive_rate(cfg, cfg.ontology.attributes()[a]);
      base.labels[a] = unit(rng) < rate ? 1 : 0;
      base.centroid[comps[a]] += base.labels[a] ? cfg.attr_signal : -cfg.attr_signal;
    }

    IdentityDraw first = base;
    first.labels[designated] = 0;
    IdentityDraw second = std::move(base);
    second.labels[designated] = 1;
    // The designated attribute contributes no learned feature signal; the
    // pair differs only by pair_gap on its component.
    second.centroid[comps[designated]] += cfg.pair_gap;
    identities[2 * pair] = std::move(first);
    identities[2 * pair + 1] = std::move(second);
  }
  // Pairs stay whole across the split boundary.
  const auto n_train = 2 * static_cast<std::size_t>(
                               std::lround(cfg.train_fraction * (cfg.num_identities / 2.0)));
  return make_dataset(cfg.ontology, emit_images(cfg, identities, n_train, rng));
}

}  // namespace semreid
