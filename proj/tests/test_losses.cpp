#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <random>

#include "semreid/error.hpp"
#include "semreid/losses.hpp"

using namespace semreid;

namespace {

// Central finite differences, the independent oracle for both losses.
std::vector<double> finite_diff(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double hi = f(x);
    x[i] = orig - h;
    const double lo = f(x);
    x[i] = orig;
    g[i] = (hi - lo) / (2.0 * h);
  }
  return g;
}

void check_close(const std::vector<double>& analytic, const std::vector<double>& numeric,
                 double tol = 1e-5) {
  REQUIRE(analytic.size() == numeric.size());
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double scale = std::max({1.0, std::fabs(analytic[i]), std::fabs(numeric[i])});
    CHECK(std::fabs(analytic[i] - numeric[i]) <= tol * scale);
  }
}

}  // namespace

TEST_CASE("triplet loss worked values") {
  CHECK(triplet_loss({{0, 0}, {0, 0}, {2, 0}, 0.3}) == doctest::Approx(0.0));
  CHECK(triplet_loss({{0, 0}, {2, 0}, {1, 0}, 0.5}) == doctest::Approx(3.5));
  CHECK(triplet_loss({{0, 0}, {1, 0}, {1, 0}, 0.2}) == doctest::Approx(0.2));

  CHECK_THROWS_AS(triplet_loss({{0, 0}, {0, 0, 0}, {1, 0}, 0.3}), ValidationError);
  CHECK_THROWS_AS(triplet_loss({{0, 0}, {0, 0}, {1, 0}, 0.0}), ValidationError);
}

TEST_CASE("triplet gradient worked values") {
  SUBCASE("inactive hinge gives zero gradients") {
    const TripletGrad g = triplet_grad({{0, 0}, {0, 0}, {2, 0}, 0.3});
    CHECK(g.anchor == std::vector<double>{0, 0});
    CHECK(g.positive == std::vector<double>{0, 0});
    CHECK(g.negative == std::vector<double>{0, 0});
  }
  SUBCASE("active hinge") {
    const TripletGrad g = triplet_grad({{0, 0}, {2, 0}, {1, 0}, 0.5});
    CHECK(g.anchor == std::vector<double>{-2, 0});
    CHECK(g.positive == std::vector<double>{4, 0});
    CHECK(g.negative == std::vector<double>{-2, 0});
  }
}

TEST_CASE("triplet gradient matches finite differences on random instances") {
  std::mt19937 rng(123);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::uniform_int_distribution<int> dims(1, 16);

  int active_seen = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = dims(rng);
    TripletBatch t;
    t.margin = 0.1 + 0.9 * std::uniform_real_distribution<double>(0, 1)(rng);
    t.anchor.resize(d);
    t.positive.resize(d);
    t.negative.resize(d);
    for (int i = 0; i < d; ++i) {
      t.anchor[i] = u(rng);
      t.positive[i] = u(rng);
      t.negative[i] = u(rng);
    }
    // keep clear of the hinge kink where the loss is not differentiable
    const double hinge = triplet_loss(t);
    if (std::fabs(hinge) < 1e-3) continue;
    if (hinge > 0) ++active_seen;

    const TripletGrad g = triplet_grad(t);
    const auto loss_of = [&](int member) {
      return [&, member](const std::vector<double>& x) {
        TripletBatch copy = t;
        (member == 0 ? copy.anchor : member == 1 ? copy.positive : copy.negative) = x;
        return triplet_loss(copy);
      };
    };
    check_close(g.anchor, finite_diff(loss_of(0), t.anchor));
    check_close(g.positive, finite_diff(loss_of(1), t.positive));
    check_close(g.negative, finite_diff(loss_of(2), t.negative));
  }
  CHECK(active_seen > 20);  // the sweep covers genuinely active hinges
}

TEST_CASE("triplet loss is non-negative, zero iff margin satisfied") {
  std::mt19937 rng(321);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int trial = 0; trial < 200; ++trial) {
    TripletBatch t;
    t.margin = 0.25;
    t.anchor.resize(6);
    t.positive.resize(6);
    t.negative.resize(6);
    for (int i = 0; i < 6; ++i) {
      t.anchor[i] = u(rng);
      t.positive[i] = u(rng);
      t.negative[i] = u(rng);
    }
    const double loss = triplet_loss(t);
    CHECK(loss >= 0.0);
    double pos = 0, neg = 0;
    for (int i = 0; i < 6; ++i) {
      pos += (t.anchor[i] - t.positive[i]) * (t.anchor[i] - t.positive[i]);
      neg += (t.anchor[i] - t.negative[i]) * (t.anchor[i] - t.negative[i]);
    }
    CHECK((loss == 0.0) == (pos + t.margin <= neg));
  }
}

TEST_CASE("average BCE worked values") {
  SUBCASE("uninformative probabilities") {
    const std::vector<double> probs = {0.5, 0.5};
    const std::vector<std::uint8_t> labels = {1, 0};
    CHECK(avg_bce_loss(probs, labels) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  }
  SUBCASE("perfect prediction collapses to the clamp floor") {
    const std::vector<double> probs = {1.0, 0.0, 1.0};
    const std::vector<std::uint8_t> labels = {1, 0, 1};
    CHECK(avg_bce_loss(probs, labels) <= -std::log(1.0 - kProbEps) + 1e-12);
  }
  SUBCASE("single confident mistake") {
    const std::vector<double> probs = {0.9};
    const std::vector<std::uint8_t> labels = {0};
    CHECK(avg_bce_loss(probs, labels) == doctest::Approx(-std::log(0.1)).epsilon(1e-9));
  }
  SUBCASE("length mismatch") {
    const std::vector<double> probs = {0.9, 0.1};
    const std::vector<std::uint8_t> labels = {0};
    CHECK_THROWS_AS(avg_bce_loss(probs, labels), ValidationError);
  }
}

TEST_CASE("average BCE gradient matches finite differences on random instances") {
  std::mt19937 rng(456);
  std::uniform_real_distribution<double> p(0.05, 0.95);
  std::uniform_int_distribution<int> dims(1, 16);
  std::bernoulli_distribution coin(0.5);

  for (int trial = 0; trial < 100; ++trial) {
    const int m = dims(rng);
    std::vector<double> probs(m);
    std::vector<std::uint8_t> labels(m);
    for (int i = 0; i < m; ++i) {
      probs[i] = p(rng);
      labels[i] = coin(rng) ? 1 : 0;
    }
    const std::vector<double> analytic = avg_bce_grad(probs, labels);
    const std::vector<double> numeric = finite_diff(
        [&](const std::vector<double>& x) { return avg_bce_loss(x, labels); }, probs);
    check_close(analytic, numeric);
  }
}
