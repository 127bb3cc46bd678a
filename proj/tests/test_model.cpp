#include <cmath>
#include <cstring>
#include <set>
#include <vector>

#include "dadin/errors.hpp"
#include "dadin/model.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace dadin;

namespace {

using Vec = std::vector<double>;

Vec row(const Tensor& t, std::size_t r) {
  const std::size_t c = t.cols();
  return Vec(t.values().begin() + static_cast<std::ptrdiff_t>(r * c),
             t.values().begin() + static_cast<std::ptrdiff_t>((r + 1) * c));
}

Vec affine(const Tensor& w, const Tensor& b, const Vec& x) {
  Vec y(w.rows(), 0.0);
  for (std::size_t o = 0; o < w.rows(); ++o) {
    for (std::size_t i = 0; i < x.size(); ++i) y[o] += w.at(o, i) * x[i];
    if (b.defined()) y[o] += b.at(o);
  }
  return y;
}

Vec relu(Vec x) {
  for (auto& v : x) v = std::max(v, 0.0);
  return x;
}

Vec cat(std::initializer_list<Vec> parts) {
  Vec out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Vec sum_rows(const Tensor& table, const std::vector<std::uint32_t>& ids, std::size_t d) {
  Vec s(d, 0.0);
  for (auto id : ids)
    for (std::size_t k = 0; k < d; ++k) s[k] += table.at(id, k);
  return s;
}

Vec attend(const Tensor& table, const std::vector<std::uint32_t>& hist, const Vec& q, const Vec& p,
           const Tensor& w, const Tensor& h, std::size_t d) {
  if (hist.empty()) return Vec(d, 0.0);
  std::vector<Vec> r;
  Vec score;
  for (auto id : hist) {
    r.push_back(sum_rows(table, {id}, d));
    Vec rq(d);
    for (std::size_t k = 0; k < d; ++k) rq[k] = r.back()[k] * q[k];
    score.push_back(dot(row(h, 0), relu(affine(w, Tensor(), cat({r.back(), q, p, rq})))));
  }
  const double mx = *std::max_element(score.begin(), score.end());
  double z = 0.0;
  for (auto& s : score) z += (s = std::exp(s - mx));
  Vec a(d, 0.0);
  for (std::size_t t = 0; t < r.size(); ++t)
    for (std::size_t k = 0; k < d; ++k) a[k] += score[t] / z * r[t][k];
  return a;
}

// Straight-line evaluation-mode ŷ for the full categorical model.
double hand_forward(const DadinModel& model, const Instance& x) {
  const auto& P = model.params();
  const std::size_t d = model.config().embed_dim;
  const Vec p = sum_rows(P.get("emb.profile"), x.profile_ids, d);
  Vec q = sum_rows(P.get("emb.target_item"), x.target_item, d);
  const Vec qs = sum_rows(P.get("emb.source_item"), x.source_item, d);
  for (std::size_t k = 0; k < d; ++k) q[k] += qs[k];
  const Vec a = attend(P.get("emb.target_item"), x.target_history, q, p, P.get("seq.target.W"), P.get("seq.target.h"), d);
  const Vec b = attend(P.get("emb.source_item"), x.source_history, q, p, P.get("seq.source.W"), P.get("seq.source.h"), d);
  const Vec joint = cat({q, p, a, b});
  auto weight = [&](const char* w) {
    const std::string base = std::string("interest.") + w;
    return std::exp(dot(row(P.get(base + ".g"), 0), relu(affine(P.get(base + ".V"), Tensor(), joint))) +
                    P.get(base + ".b").at(0));
  };
  const double vu = weight("u"), vs = weight("s"), vt = weight("t");
  const auto& c = P.get("bi.c");
  const Vec blocks[4] = {q, p, a, b};
  const double scale[4] = {1.0, vu, vt, vs};
  Vec z(d, 0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      for (std::size_t k = 0; k < d; ++k)
        z[k] += c.at(i) * scale[i] * blocks[i][k] * c.at(j) * scale[j] * blocks[j][k];
  Vec h_spec = z;
  const std::size_t layers = model.config().dnn_hidden.size() + 1;
  for (std::size_t l = 0; l < layers; ++l) {
    const std::string name = "dnn." + std::to_string(l);
    h_spec = affine(P.get(name + ".W"), P.get(name + ".b"), h_spec);
    if (l + 1 < layers) h_spec = relu(h_spec);
  }
  const Vec h_da = relu(affine(P.get("da.W"), P.get("da.b"), h_spec));
  Vec h(d);
  for (std::size_t k = 0; k < d; ++k) h[k] = h_da[k] + h_spec[k];
  const Vec hidden = affine(P.get("label.fc1.W"), P.get("label.fc1.b"), h);
  return oracle::sigmoid(affine(P.get("label.fc2.W"), P.get("label.fc2.b"), hidden)[0]);
}

Dense zero_dense(std::size_t out, std::size_t in) { return {Tensor::zeros({out, in}, true), Tensor::zeros({out}, true)}; }

}  // namespace

TEST_SUITE("model") {

TEST_CASE("field pooling") {
  const auto table = Tensor::matrix(5, 2, {0, 0, 0, 0, 1, 2, 0, 1, 10, 20}, true);
  const std::vector<std::vector<std::uint32_t>> pair{{2, 3}};
  const auto pooled = embed_field(table, pair);
  CHECK(pooled.at(0) == 1.0);
  CHECK(pooled.at(1) == 3.0);
  const std::vector<std::vector<std::uint32_t>> single{{4}};
  CHECK(embed_field(table, single).at(1) == 20.0);
  const std::vector<std::vector<std::uint32_t>> four{{1, 2, 3, 4}};
  const auto p = embed_field(table, four);
  CHECK(p.at(0) == 0 + 1 + 0 + 10);
  CHECK(p.at(1) == 0 + 2 + 1 + 20);
  const std::vector<std::vector<std::uint32_t>> bad{{5}};
  CHECK_THROWS_AS(embed_field(table, bad), LookupError);
  const std::vector<std::vector<std::uint32_t>> empty{{}};
  CHECK_THROWS_AS(embed_field(table, empty), DegenerateInputError);

  sum(embed_field(table, pair)).backward();
  for (std::size_t r = 0; r < 5; ++r) {
    const double want = (r == 2 || r == 3) ? 1.0 : 0.0;
    CHECK(table.grad()[2 * r] == want);
    CHECK(table.grad()[2 * r + 1] == want);
  }
}

TEST_CASE("sequence aggregation") {
  Rng rng(2);
  const std::size_t d = 3;
  AttentionParams params{Tensor::matrix(d, 4 * d, Vec(4 * d * d, 0.0)), Tensor::matrix(1, d, Vec(d, 0.0))};
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto& v : params.weight.mutable_values()) v = n(rng);
  for (auto& v : params.score.mutable_values()) v = n(rng);
  const auto q = Tensor::matrix(1, d, {0.2, -0.1, 0.4});
  const auto p = Tensor::matrix(1, d, {-0.3, 0.5, 0.1});

  SUBCASE("single position returns that row") {
    const auto hist = Tensor::matrix(1, d, {1.5, -2.0, 0.25});
    const auto a = sequence_aggregate(hist, std::vector<std::uint8_t>{1}, q, p, &params, SequenceAggregation::kAttention);
    for (std::size_t k = 0; k < d; ++k) CHECK(a.at(k) == hist.at(k));
  }
  SUBCASE("zero parameters average the unmasked rows") {
    AttentionParams zero{Tensor::matrix(d, 4 * d, Vec(4 * d * d, 0.0)), Tensor::matrix(1, d, Vec(d, 0.0))};
    const auto hist = Tensor::matrix(3, d, {1, 2, 3, 4, 5, 6, 100, 100, 100});
    const auto a = sequence_aggregate(hist, std::vector<std::uint8_t>{1, 1, 0}, q, p, &zero, SequenceAggregation::kAttention);
    CHECK(a.at(0) == doctest::Approx(2.5));
    CHECK(a.at(1) == doctest::Approx(3.5));
    CHECK(a.at(2) == doctest::Approx(4.5));
    const auto avg = sequence_aggregate(hist, std::vector<std::uint8_t>{1, 1, 0}, q, p, nullptr, SequenceAggregation::kAverage);
    CHECK(avg.at(0) == doctest::Approx(2.5));
  }
  SUBCASE("two positions against a hand computation") {
    const Vec r1{0.3, -0.7, 1.1}, r2{-0.4, 0.9, 0.2};
    const auto hist = Tensor::matrix(2, d, cat({r1, r2}));
    Tensor beta;
    const auto a = sequence_aggregate(hist, std::vector<std::uint8_t>{1, 1}, q, p, &params, SequenceAggregation::kAttention, &beta);
    auto score = [&](const Vec& r) {
      Vec rq(d);
      for (std::size_t k = 0; k < d; ++k) rq[k] = r[k] * q.at(k);
      return dot(row(params.score, 0), relu(affine(params.weight, Tensor(), cat({r, row(q, 0), row(p, 0), rq}))));
    };
    const double s1 = score(r1), s2 = score(r2);
    const double b1 = 1.0 / (1.0 + std::exp(s2 - s1));
    CHECK(std::abs(beta.at(0) - b1) < 1e-12);
    for (std::size_t k = 0; k < d; ++k) CHECK(std::abs(a.at(k) - (b1 * r1[k] + (1 - b1) * r2[k])) < 1e-10);
  }
  SUBCASE("fully masked history aggregates to zero") {
    const auto hist = Tensor::matrix(2, d, {1, 2, 3, 4, 5, 6});
    const auto a = sequence_aggregate(hist, std::vector<std::uint8_t>{0, 0}, q, p, &params, SequenceAggregation::kAttention);
    for (std::size_t k = 0; k < d; ++k) CHECK(a.at(k) == 0.0);
  }
  SUBCASE("padded positions never change the aggregate") {
    const std::vector<std::uint8_t> mask{1, 0, 1};
    auto hist = Tensor::matrix(3, d, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    const auto a = sequence_aggregate(hist, mask, q, p, &params, SequenceAggregation::kAttention);
    for (std::size_t k = 0; k < d; ++k) hist.mutable_values()[d + k] = 1e6 * (k + 1);
    const auto b = sequence_aggregate(hist, mask, q, p, &params, SequenceAggregation::kAttention);
    for (std::size_t k = 0; k < d; ++k) CHECK(a.at(k) == b.at(k));
  }
}

TEST_CASE("interest attention weights") {
  const std::size_t d = 2;
  auto zero = [&] {
    return InterestWeightParams{Tensor::matrix(d, 4 * d, Vec(4 * d * d, 0.0)), Tensor::matrix(1, d, Vec(d, 0.0)), Tensor::vector({0.0})};
  };
  InterestAttentionParams params{zero(), zero(), zero()};
  const auto q = Tensor::matrix(1, d, {1, 2});
  const auto p = Tensor::matrix(1, d, {3, 4});
  const auto a = Tensor::matrix(1, d, {5, 6});
  const auto b = Tensor::matrix(1, d, {7, 8});
  auto r = interest_attention_concat(q, p, a, b, &params, InterestConcat::kAttention);
  CHECK(r.v_u.at(0) == 1.0);
  CHECK(r.v_s.at(0) == 1.0);
  CHECK(r.v_t.at(0) == 1.0);
  for (std::size_t k = 0; k < 8; ++k) CHECK(r.m.at(k) == static_cast<double>(k + 1));

  params.user.bias.mutable_values()[0] = std::log(2.0);
  r = interest_attention_concat(q, p, a, b, &params, InterestConcat::kAttention);
  CHECK(r.v_u.at(0) == 2.0);
  CHECK(r.m.at(2) == 6.0);

  const auto eq = interest_attention_concat(q, p, a, b, nullptr, InterestConcat::kEqual);
  for (std::size_t k = 0; k < 8; ++k) CHECK(eq.m.at(k) == static_cast<double>(k + 1));
  CHECK(eq.v_u.at(0) == 1.0);

  Rng rng(8);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int trial = 0; trial < 50; ++trial) {
    for (auto* w : {&params.user, &params.source, &params.target}) {
      for (auto& v : w->weight.mutable_values()) v = n(rng);
      for (auto& v : w->gate.mutable_values()) v = n(rng);
      w->bias.mutable_values()[0] = n(rng);
    }
    const auto s = interest_attention_concat(q, p, a, b, &params, InterestConcat::kAttention);
    CHECK(s.v_u.at(0) > 0.0);
    CHECK(s.v_s.at(0) > 0.0);
    CHECK(s.v_t.at(0) > 0.0);
  }
}

TEST_CASE("bi-interaction") {
  const auto ones = Tensor::vector({1, 1, 1, 1});
  const auto zero = bi_interaction(Tensor::matrix(1, 8, Vec(8, 0.0)), ones);
  CHECK(zero.at(0) == 0.0);
  CHECK(zero.at(1) == 0.0);

  const Vec m{1, 0, 0, 1, 1, 1, 2, 0};
  const auto brute = oracle::pairwise_interaction(m, Vec{1, 1, 1, 1}, 2);
  CHECK(brute == Vec{5, 1});
  const auto fast = bi_interaction(Tensor::matrix(1, 8, m), ones);
  CHECK(fast.at(0) == 5.0);
  CHECK(fast.at(1) == 1.0);

  Rng rng(17);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> width(1, 16);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t d = width(rng);
    Vec mv(4 * d), cv(4);
    for (auto& v : mv) v = n(rng);
    for (auto& v : cv) v = n(rng);
    const auto t_fast = bi_interaction(Tensor::matrix(1, 4 * d, mv), Tensor::vector(cv));
    const auto t_pair = bi_interaction_pairwise(Tensor::matrix(1, 4 * d, mv), Tensor::vector(cv));
    const auto want = oracle::pairwise_interaction(mv, cv, d);
    for (std::size_t k = 0; k < d; ++k) {
      CHECK(std::abs(t_fast.at(k) - want[k]) < 1e-10);
      CHECK(std::abs(t_pair.at(k) - want[k]) < 1e-10);
    }
  }
  CHECK_THROWS_AS(bi_interaction(Tensor::matrix(1, 6, Vec(6, 1.0)), ones), DimensionError);
  CHECK_THROWS_AS(bi_interaction(Tensor::matrix(1, 8, Vec(8, 1.0)), Tensor::vector({1, 1, 1})), DimensionError);
}

TEST_CASE("dnn tower") {
  const std::vector<Dense> zero{zero_dense(3, 2), zero_dense(2, 3)};
  const auto out = dnn_forward(Tensor::matrix(1, 2, {4, -1}), zero);
  CHECK(out.at(0) == 0.0);
  CHECK(out.at(1) == 0.0);

  Rng rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<Dense> layers{zero_dense(4, 3), zero_dense(3, 4)};
  for (auto& l : layers) {
    for (auto& v : l.weight.mutable_values()) v = n(rng);
    for (auto& v : l.bias.mutable_values()) v = n(rng);
  }
  auto x = Tensor::matrix(2, 3, {0.5, -1.0, 0.3, 1.2, 0.1, -0.4}, true);
  auto f = [&] { return sum(sigmoid(dnn_forward(x, layers))); };
  f().backward();
  auto value = [&] { return f().item(); };
  CHECK(oracle::finite_difference(x, value).worst < 1e-4);
  for (auto& l : layers) {
    CHECK(oracle::finite_difference(l.weight, value).worst < 1e-4);
    CHECK(oracle::finite_difference(l.bias, value).worst < 1e-4);
  }
}

TEST_CASE("domain-agnostic layer") {
  const auto h_spec = Tensor::matrix(2, 3, {1, -2, 3, 0.5, 0.25, -4});
  const Dense zero = zero_dense(3, 3);
  const auto z = domain_agnostic(h_spec, &zero);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(z.h_da.at(i) == 0.0);
    CHECK(z.h.at(i) == h_spec.at(i));
  }
  const auto off = domain_agnostic(h_spec, nullptr);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(off.h_da.at(i) == h_spec.at(i));
    CHECK(off.h.at(i) == h_spec.at(i));
  }
  Rng rng(12);
  std::normal_distribution<double> n(0.0, 1.0);
  Dense layer = zero_dense(3, 3);
  for (int trial = 0; trial < 20; ++trial) {
    for (auto& v : layer.weight.mutable_values()) v = n(rng);
    for (auto& v : layer.bias.mutable_values()) v = n(rng);
    const auto r = domain_agnostic(h_spec, &layer);
    // Exact up to the rounding of the one addition.
    for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(r.h.at(i) - h_spec.at(i) - r.h_da.at(i)) <= 1e-15 * std::abs(r.h.at(i)) + 1e-300);
  }
}

TEST_CASE("click predictor") {
  Rng rng(1);
  const auto h = Tensor::matrix(2, 3, {1, 2, 3, -1, 0, 4});
  const Dense hidden = zero_dense(100, 3), out = zero_dense(1, 100);
  const auto y = predict_ctr(h, hidden, out, 0.5, true, rng);
  CHECK(y.at(0) == 0.5);
  CHECK(y.at(1) == 0.5);

  Dense h1 = zero_dense(4, 3), o1 = zero_dense(1, 4);
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto* t : {&h1.weight, &h1.bias, &o1.weight, &o1.bias})
    for (auto& v : t->mutable_values()) v = n(rng);
  const auto e1 = predict_ctr(h, h1, o1, 0.5, false, rng);
  const auto e2 = predict_ctr(h, h1, o1, 0.5, false, rng);
  CHECK(std::memcmp(e1.values().data(), e2.values().data(), 2 * sizeof(double)) == 0);

  const Dense w1{Tensor::matrix(1, 1, {0.7}), Tensor::vector({-0.2})};
  const Dense w2{Tensor::matrix(1, 1, {1.3}), Tensor::vector({0.4})};
  const auto s = predict_ctr(Tensor::matrix(1, 1, {0.9}), w1, w2, 0.0, false, rng);
  CHECK(std::abs(s.at(0) - oracle::sigmoid(1.3 * (0.7 * 0.9 - 0.2) + 0.4)) < 1e-12);
}

TEST_CASE("global domain classifier") {
  Rng rng(14);
  std::normal_distribution<double> n(0.0, 1.0);
  Dense zero = zero_dense(1, 3);
  const auto h0 = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(domain_classify_global(h0, zero).at(0) == 0.5);

  Dense layer = zero_dense(1, 3);
  for (auto& v : layer.weight.mutable_values()) v = n(rng);
  layer.bias.mutable_values()[0] = 0.3;
  auto a = Tensor::matrix(2, 3, {0.1, -0.2, 0.5, 1.0, 0.3, -0.7}, true);
  auto b = Tensor::matrix(2, 3, {0.1, -0.2, 0.5, 1.0, 0.3, -0.7}, true);
  const auto with = domain_classify_global(a, layer);
  const auto without = sigmoid(linear(b, layer));
  CHECK(std::memcmp(with.values().data(), without.values().data(), 2 * sizeof(double)) == 0);
  const std::vector<double> dom{1.0, 0.0};
  binary_cross_entropy(with, dom).backward();
  binary_cross_entropy(without, dom).backward();
  for (std::size_t i = 0; i < 6; ++i) CHECK(a.grad()[i] == -b.grad()[i]);
  const auto fd = oracle::finite_difference(b, [&] { return binary_cross_entropy(sigmoid(linear(b, layer)), dom).item(); });
  CHECK(fd.worst < 1e-6);
}

TEST_CASE("intra-class routing") {
  const auto h_da = Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6});
  const auto y_hat = Tensor::matrix(3, 1, {0.7, 0.5, 0.2});
  Dense c1{Tensor::matrix(1, 2, {1.0, 0.0}), Tensor::vector({0.0})};
  Dense c0{Tensor::matrix(1, 2, {0.0, 0.0}), Tensor::vector({0.8})};
  const auto r = domain_classify_intra(h_da, y_hat, 0.5, c1, c0);
  CHECK(r.branch == std::vector<int>{1, 1, 0});
  CHECK(r.rows1 == std::vector<std::size_t>{0, 1});
  CHECK(r.rows0 == std::vector<std::size_t>{2});
  CHECK(r.logit1.at(0) == 0.7 * 1.0);
  CHECK(r.logit1.at(1) == 0.5 * 3.0);
  CHECK(r.d_hat0.at(0) == oracle::sigmoid(0.8));
  CHECK(r.d_hat0.at(0) == sigmoid(Tensor::scalar(0.8)).item());

  CHECK_THROWS_AS(domain_classify_intra(h_da, y_hat, 0.0, c1, c0), ConfigError);
  CHECK_THROWS_AS(domain_classify_intra(h_da, y_hat, 1.0, c1, c0), ConfigError);

  // The gate is differentiable unless detached.
  auto gate = Tensor::matrix(3, 1, {0.7, 0.5, 0.2}, true);
  const auto g = domain_classify_intra(h_da, gate, 0.5, c1, c0);
  sum(add(sum(g.logit1), sum(g.logit0))).backward();
  CHECK(gate.grad()[0] != 0.0);
  auto frozen = Tensor::matrix(3, 1, {0.7, 0.5, 0.2}, true);
  frozen.zero_grad();
  const auto f = domain_classify_intra(Tensor(h_da.shape(), Vec(h_da.values().begin(), h_da.values().end()), true),
                                       frozen, 0.5, c1, c0, true);
  sum(f.logit1).backward();
  CHECK(frozen.grad()[0] == 0.0);
}

TEST_CASE("variants") {
  CHECK(variant_by_name("DADIN++") == VariantConfig{});
  CHECK(variant_names().size() == 10);
  std::set<std::string> seen;
  for (const auto& name : variant_names()) {
    const auto v = variant_by_name(name);
    if (name != "DADIN++") CHECK_FALSE(v == VariantConfig{});
    seen.insert(name);
  }
  CHECK(variant_by_name("DADIN1").sequence_aggregation == SequenceAggregation::kAverage);
  CHECK(variant_by_name("DADIN2").interest_concat == InterestConcat::kEqual);
  CHECK_FALSE(variant_by_name("DADIN6").use_domain_agnostic_layer);
  const auto nine = variant_by_name("DADIN9");
  CHECK_FALSE(nine.use_global_confusion);
  CHECK_FALSE(nine.use_intra_confusion);
  CHECK_THROWS_AS(variant_by_name("DADIN10"), ConfigError);
}

TEST_CASE("full forward against a straight-line computation") {
  Rng rng(31);
  auto cfg = fixture::tiny_config(2, 2);
  cfg.dnn_hidden = {3};
  cfg.label_hidden = 100;
  DadinModel model(cfg, rng);
  fixture::scramble(model.params(), rng);
  const auto batch = fixture::tiny_instances(6, cfg, rng);
  const auto out = model.forward(batch, false, rng);
  REQUIRE(out.size() == 6);
  for (std::size_t i = 0; i < batch.size(); ++i) CHECK(std::abs(out.y_hat.at(i) - hand_forward(model, batch[i])) < 1e-8);

  CHECK(model.params().get("label.fc1.W").shape() == Shape{100, 2});
  CHECK(model.params().get("seq.target.W").shape() == Shape{2, 8});
  CHECK(model.params().get("interest.u.V").shape() == Shape{2, 8});
  CHECK(model.params().get("domain.global.W").shape() == Shape{1, 2});
  CHECK(model.params().get("bi.c").size() == 4);
}

TEST_CASE("forward outputs and determinism") {
  Rng rng(4);
  const auto cfg = fixture::tiny_config();
  DadinModel model(cfg, rng);
  fixture::scramble(model.params(), rng);
  auto batch = fixture::tiny_instances(1, cfg, rng);
  const auto one = model.forward(batch, false, rng);
  CHECK(one.y_hat.size() == 1);
  CHECK(one.d_hat.size() == 1);
  CHECK(one.intra.rows0.size() + one.intra.rows1.size() == 1);

  batch.push_back(batch[0]);
  const auto two = model.forward(batch, false, rng);
  CHECK(two.y_hat.at(0) == two.y_hat.at(1));
  CHECK(two.d_hat.at(0) == two.d_hat.at(1));
  const auto again = model.forward(batch, false, rng);
  CHECK(again.y_hat.at(0) == two.y_hat.at(0));

  for (std::size_t i = 0; i < two.h.size(); ++i) CHECK(two.h.at(i) == two.h_spec.at(i) + two.h_da.at(i));

  auto broken = batch;
  broken[1].source_item = {2};
  CHECK_THROWS_WITH_AS(model.forward(broken, false, rng), doctest::Contains("instance 1"), DataError);
  broken = batch;
  broken[0].target_item.clear();
  CHECK_THROWS_AS(model.forward(broken, false, rng), DataError);
  broken = batch;
  broken[0].domain = kSourceDomain;
  CHECK_THROWS_AS(model.forward(broken, false, rng), DataError);
}

TEST_CASE("interest weights are positive and DADIN2 reports ones") {
  Rng rng(5);
  auto cfg = fixture::tiny_config();
  DadinModel model(cfg, rng);
  fixture::scramble(model.params(), rng, 2.0);
  const auto batch = fixture::tiny_instances(20, cfg, rng);
  const auto out = model.forward(batch, true, rng);
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(out.v_u.at(i) > 0.0);
    CHECK(out.v_s.at(i) > 0.0);
    CHECK(out.v_t.at(i) > 0.0);
  }
  cfg.variant = variant_by_name("DADIN2");
  DadinModel equal(cfg, rng);
  const auto eq = equal.forward(batch, true, rng);
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(eq.v_u.at(i) == 1.0);
    CHECK(eq.v_s.at(i) == 1.0);
    CHECK(eq.v_t.at(i) == 1.0);
  }
}

TEST_CASE("parameter partitions are exhaustive and disjoint") {
  Rng rng(2);
  for (const auto& name : variant_names()) {
    auto cfg = fixture::tiny_config();
    cfg.variant = variant_by_name(name);
    DadinModel model(cfg, rng);
    std::size_t total = 0;
    for (auto p : kAllPartitions) total += model.params().scalar_count(p);
    CHECK(total == model.params().scalar_count());
    std::set<std::string> names;
    for (const auto& e : model.params().entries()) {
      CHECK(names.insert(e.name).second);
      CHECK(parse_partition(partition_name(e.partition)) == e.partition);
    }
    CHECK(model.params().entry("label.fc1.W").partition == Partition::kLabel);
    CHECK(model.params().entry("domain.global.W").partition == Partition::kGlobalDomain);
    CHECK(model.params().entry("domain.intra0.W").partition == Partition::kIntraDomain0);
    CHECK(model.params().entry("domain.intra1.W").partition == Partition::kIntraDomain1);
    CHECK(model.params().entry("emb.profile").partition == Partition::kFeature);
  }
}

TEST_CASE("initialisation") {
  Rng rng(3);
  auto cfg = fixture::tiny_config(8, 2);
  cfg.profile_vocab = 2000;
  DadinModel model(cfg, rng);
  const auto& P = model.params();
  const auto w = P.get("da.W");
  for (double v : w.values()) CHECK(std::abs(v) <= 1.0 / std::sqrt(8.0));
  for (double v : P.get("da.b").values()) CHECK(v == 0.0);
  const auto emb = P.get("emb.profile").values();
  double ss = 0.0;
  for (double v : emb) ss += v * v;
  CHECK(std::sqrt(ss / static_cast<double>(emb.size())) == doctest::Approx(0.01).epsilon(0.05));
}

}  // TEST_SUITE
