#include <cmath>
#include <vector>

#include "dadin/errors.hpp"
#include "dadin/loss.hpp"
#include "dadin/train.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace dadin;

namespace {

const double kLn2 = std::log(2.0);

// Values of only the given partitions moved by one SGD step of size mu.
void step_partitions(ParamStore& params, std::initializer_list<Partition> which, double mu) {
  for (auto& e : params.entries()) {
    if (std::find(which.begin(), which.end(), e.partition) == which.end()) continue;
    auto v = e.value.mutable_values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= mu * e.value.grad()[i];
  }
}

}  // namespace

TEST_SUITE("loss") {

TEST_CASE("click loss closed forms") {
  const double eps = kProbabilityEpsilon;
  CHECK(ctr_loss(std::vector<double>{1 - eps}, std::vector<double>{1}) < 1e-11);
  CHECK(ctr_loss(std::vector<double>{0.5}, std::vector<double>{1}) == doctest::Approx(kLn2).epsilon(1e-15));
  CHECK(std::abs(ctr_loss(std::vector<double>{0.5}, std::vector<double>{1}) - 0.693147) < 1e-6);
  CHECK(ctr_loss(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 0}) == doctest::Approx(kLn2).epsilon(1e-15));
  CHECK_THROWS_AS(ctr_loss(std::vector<double>{}, std::vector<double>{}), DegenerateInputError);
  CHECK_THROWS_AS(ctr_loss(std::vector<double>{0.5}, std::vector<double>{1, 0}), DimensionError);
  // Clamping keeps saturated predictions finite.
  CHECK(std::isfinite(ctr_loss(std::vector<double>{0.0}, std::vector<double>{1})));
  CHECK(ctr_loss(std::vector<double>{0.0}, std::vector<double>{1}) == doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("global confusion loss closed forms") {
  CHECK(global_confusion_loss(std::vector<double>{0.5, 0.5, 0.5}, std::vector<double>{1, 0, 1}) ==
        doctest::Approx(kLn2).epsilon(1e-15));
  CHECK(global_confusion_loss(std::vector<double>{1 - kProbabilityEpsilon}, std::vector<double>{1}) < 1e-11);
  const double want = (-std::log(0.9) - std::log(0.9) - std::log(0.5)) / 3.0;
  CHECK(std::abs(global_confusion_loss(std::vector<double>{0.9, 0.1, 0.5}, std::vector<double>{1, 0, 0}) - want) < 1e-15);
}

TEST_CASE("intra-class losses") {
  const auto empty = intra_class_losses(std::vector<double>{0.5, 0.5}, std::vector<double>{1, 0}, {}, {});
  CHECK(empty.class1 == 0.0);
  CHECK(empty.class0 == doctest::Approx(kLn2).epsilon(1e-15));
  const auto both = intra_class_losses({}, {}, std::vector<double>{0.5}, std::vector<double>{0});
  CHECK(both.class0 == 0.0);
  CHECK(both.class1 == doctest::Approx(kLn2).epsilon(1e-15));
  const auto mixed = intra_class_losses(std::vector<double>{0.8, 0.3}, std::vector<double>{1, 1}, {}, {});
  CHECK(std::abs(mixed.class0 - (-std::log(0.8) - std::log(0.3)) / 2.0) < 1e-12);
}

TEST_CASE("total loss combination") {
  LossBreakdown parts{kLn2, kLn2, kLn2, kLn2};
  CHECK(total_loss(parts, LossWeights{}) == doctest::Approx(3 * kLn2).epsilon(1e-15));
  parts = {0.4, 0.9, 0.7, 0.3};
  CHECK(total_loss(parts, LossWeights{2.0, 0.0, 0.0, 0.5}) == 0.8);
  CHECK(total_loss(parts, LossWeights{1.0, 0.0, 2.0, 1.0}) == doctest::Approx(0.4 + 2.0 * 0.7).epsilon(1e-15));
  CHECK(total_loss(parts, LossWeights{1.0, 1.0, 1.0, 0.25}) ==
        doctest::Approx(0.4 + 0.9 + 0.25 * 0.7 + 0.75 * 0.3).epsilon(1e-15));
  // Linear in each component.
  LossBreakdown doubled = parts;
  doubled.global *= 2.0;
  const LossWeights w{1.0, 0.7, 0.3, 0.5};
  CHECK(total_loss(doubled, w) - total_loss(parts, w) == doctest::Approx(0.7 * 0.9).epsilon(1e-14));

  CHECK_THROWS_AS(LossWeights({1.0, -1.0, 1.0, 0.5}).validate(), ConfigError);
  CHECK_THROWS_AS(LossWeights({1.0, 1.0, 1.0, 1.5}).validate(), ConfigError);
}

TEST_CASE("objective breakdown on a model") {
  Rng rng(7);
  const auto cfg = fixture::tiny_config();
  DadinModel model(cfg, rng);
  fixture::scramble(model.params(), rng);
  const auto batch = fixture::tiny_instances(12, cfg, rng);
  const LossWeights w{1.0, 0.6, 0.8, 0.3};
  const auto obj = fixture::objective(model, batch, w);
  const auto& b = obj.breakdown;
  CHECK(b.n == 12);
  CHECK(b.rho + b.tau == b.n);
  CHECK(b.ctr >= 0.0);
  CHECK(b.global >= 0.0);
  CHECK(b.intra0 >= 0.0);
  CHECK(b.intra1 >= 0.0);
  CHECK(b.total == doctest::Approx(total_loss(b, w)).epsilon(1e-14));

  Rng unused(0);
  const auto out = model.forward(batch, false, unused);
  std::vector<double> y, dom;
  for (const auto& x : batch) {
    y.push_back(x.y);
    dom.push_back(x.domain);
  }
  CHECK(b.ctr == ctr_loss(std::vector<double>(out.y_hat.values().begin(), out.y_hat.values().end()), y));
  CHECK(b.global == global_confusion_loss(std::vector<double>(out.d_hat.values().begin(), out.d_hat.values().end()), dom));

  const auto pure = fixture::objective(model, batch, LossWeights{1.0, 0.0, 0.0, 0.5});
  CHECK(pure.breakdown.total == pure.breakdown.ctr);
}

TEST_CASE("objective gradient against finite differences") {
  Rng rng(19);
  const auto cfg = fixture::tiny_config();
  DadinModel model(cfg, rng);
  fixture::scramble(model.params(), rng);
  const auto batch = fixture::tiny_instances(5, cfg, rng);
  const auto check = fixture::check_model_gradients(model, batch, LossWeights{1.0, 0.7, 1.3, 0.4});
  REQUIRE(check.routing_margin > 1e-3);
  for (const auto& p : check.params) {
    INFO(p.name);
    CHECK(p.worst < 1e-4);
  }
}

TEST_CASE("adversarial sign of the global confusion term") {
  Rng rng(23);
  auto cfg = fixture::tiny_config();
  DadinModel model(cfg, rng);
  fixture::scramble(model.params(), rng);
  const auto batch = fixture::tiny_instances(16, cfg, rng);
  const LossWeights only_global{0.0, 1.0, 0.0, 0.5};
  model.params().zero_grad();
  const double before = fixture::objective(model, batch, only_global).breakdown.global;
  fixture::objective(model, batch, only_global).total.backward();
  const auto saved = model.params().snapshot();
  const double mu = 1e-3;

  step_partitions(model.params(), {Partition::kGlobalDomain}, mu);
  CHECK(fixture::objective(model, batch, only_global).breakdown.global < before);
  model.params().restore(saved);

  step_partitions(model.params(), {Partition::kFeature}, mu);
  CHECK(fixture::objective(model, batch, only_global).breakdown.global > before);
}

}  // TEST_SUITE
