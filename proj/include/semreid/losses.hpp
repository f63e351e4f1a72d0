#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace semreid {

// Probabilities are clamped into [kProbEps, 1 - kProbEps] before logs; the
// cross-entropy is undefined at exactly 0 or 1.
inline constexpr double kProbEps = 1e-7;

struct TripletBatch {
  std::vector<double> anchor;
  std::vector<double> positive;
  std::vector<double> negative;
  double margin = 0.0;  // must be > 0
};

struct TripletGrad {
  std::vector<double> anchor;
  std::vector<double> positive;
  std::vector<double> negative;
};

// max(0, ||a - p||^2 - ||a - n||^2 + m)
double triplet_loss(const TripletBatch& t);

// Gradients w.r.t. the three embeddings; all zero when the hinge is
// inactive (loss == 0).
TripletGrad triplet_grad(const TripletBatch& t);

// -(1/M) sum_j [ y_j log p_j + (1 - y_j) log(1 - p_j) ]
double avg_bce_loss(std::span<const double> probs, std::span<const std::uint8_t> labels);

// d(avg_bce_loss)/d(probs); matches the loss with its clamp, so it is exact
// only where the clamp is inactive.
std::vector<double> avg_bce_grad(std::span<const double> probs,
                                 std::span<const std::uint8_t> labels);

}  // namespace semreid
