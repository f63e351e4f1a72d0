#include "semreid/losses.hpp"

#include <cmath>

#include "semreid/error.hpp"
#include "semreid/util.hpp"

namespace semreid {

namespace {

void check_batch(const TripletBatch& t) {
  if (t.anchor.size() != t.positive.size() || t.anchor.size() != t.negative.size()) {
    throw ValidationError("triplet: dimension mismatch");
  }
  if (!(t.margin > 0.0)) throw ValidationError("triplet: margin must be > 0");
}

}  // namespace

double triplet_loss(const TripletBatch& t) {
  check_batch(t);
  const double pos = squared_distance(t.anchor, t.positive);
  const double neg = squared_distance(t.anchor, t.negative);
  const double hinge = pos - neg + t.margin;
  return hinge > 0.0 ? hinge : 0.0;
}

TripletGrad triplet_grad(const TripletBatch& t) {
  check_batch(t);
  const std::size_t d = t.anchor.size();
  TripletGrad g{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0),
                std::vector<double>(d, 0.0)};
  if (triplet_loss(t) == 0.0) return g;
  for (std::size_t i = 0; i < d; ++i) {
    g.anchor[i] = 2.0 * (t.negative[i] - t.positive[i]);
    g.positive[i] = -2.0 * (t.anchor[i] - t.positive[i]);
    g.negative[i] = 2.0 * (t.anchor[i] - t.negative[i]);
  }
  return g;
}

double avg_bce_loss(std::span<const double> probs, std::span<const std::uint8_t> labels) {
  if (probs.size() != labels.size()) throw ValidationError("avg_bce: length mismatch");
  if (probs.empty()) throw ValidationError("avg_bce: empty input");
  double sum = 0.0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    const double p = std::min(std::max(probs[j], kProbEps), 1.0 - kProbEps);
    sum += labels[j] ? std::log(p) : std::log(1.0 - p);
  }
  return -sum / static_cast<double>(probs.size());
}

std::vector<double> avg_bce_grad(std::span<const double> probs,
                                 std::span<const std::uint8_t> labels) {
  if (probs.size() != labels.size()) throw ValidationError("avg_bce: length mismatch");
  if (probs.empty()) throw ValidationError("avg_bce: empty input");
  const double m = static_cast<double>(probs.size());
  std::vector<double> g(probs.size(), 0.0);
  for (std::size_t j = 0; j < probs.size(); ++j) {
    const double p = std::min(std::max(probs[j], kProbEps), 1.0 - kProbEps);
    // Zero where the clamp is active, matching the (constant) clamped loss.
    if (probs[j] < kProbEps || probs[j] > 1.0 - kProbEps) continue;
    g[j] = labels[j] ? -1.0 / (m * p) : 1.0 / (m * (1.0 - p));
  }
  return g;
}

}  // namespace semreid
