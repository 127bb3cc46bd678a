#include "dadin/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dadin/errors.hpp"

namespace dadin {

// --- partitions and parameter store ------------------------------------------------

std::string_view partition_name(Partition p) {
  switch (p) {
    case Partition::kFeature: return "feature";
    case Partition::kLabel: return "label";
    case Partition::kGlobalDomain: return "domain_global";
    case Partition::kIntraDomain0: return "domain_intra0";
    case Partition::kIntraDomain1: return "domain_intra1";
  }
  return "?";
}

Partition parse_partition(std::string_view name) {
  for (auto p : kAllPartitions) {
    if (partition_name(p) == name) return p;
  }
  throw CheckpointError("unknown parameter partition '" + std::string(name) + "'");
}

Tensor& ParamStore::add(std::string name, Partition partition, Tensor value) {
  if (contains(name)) throw ContractError("duplicate parameter '" + name + "'");
  entries_.push_back({std::move(name), partition, std::move(value)});
  return entries_.back().value;
}

const Parameter& ParamStore::entry(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e;
  }
  throw LookupError("no parameter named '" + std::string(name) + "'");
}

Tensor& ParamStore::get(std::string_view name) {
  return const_cast<Tensor&>(static_cast<const ParamStore&>(*this).get(name));
}

const Tensor& ParamStore::get(std::string_view name) const { return entry(name).value; }

bool ParamStore::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.name == name; });
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.value.zero_grad();
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.value.size();
  return n;
}

std::size_t ParamStore::scalar_count(Partition p) const {
  std::size_t n = 0;
  for (const auto& e : entries_) {
    if (e.partition == p) n += e.value.size();
  }
  return n;
}

std::vector<std::vector<double>> ParamStore::snapshot() const {
  std::vector<std::vector<double>> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.emplace_back(e.value.values().begin(), e.value.values().end());
  return out;
}

void ParamStore::restore(const std::vector<std::vector<double>>& values) {
  if (values.size() != entries_.size()) throw ContractError("snapshot does not match parameter set");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto dst = entries_[i].value.mutable_values();
    if (dst.size() != values[i].size()) throw ContractError("snapshot does not match " + entries_[i].name);
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

// --- variants -----------------------------------------------------------------------

const std::vector<std::string>& variant_names() {
  static const std::vector<std::string> names{"DADIN1", "DADIN2", "DADIN3", "DADIN4",
                                              "DADIN5", "DADIN6", "DADIN7", "DADIN8",
                                              "DADIN9", "DADIN++"};
  return names;
}

VariantConfig variant_by_name(std::string_view name) {
  VariantConfig v;
  if (name == "DADIN++") return v;
  if (name == "DADIN1") {
    v.sequence_aggregation = SequenceAggregation::kAverage;
  } else if (name == "DADIN2") {
    v.interest_concat = InterestConcat::kEqual;
  } else if (name == "DADIN3") {
    v.use_bi_interaction = false;
  } else if (name == "DADIN4") {
    v.use_dnn = false;
  } else if (name == "DADIN5") {
    v.use_bi_interaction = false;
    v.use_dnn = false;
  } else if (name == "DADIN6") {
    v.use_domain_agnostic_layer = false;
  } else if (name == "DADIN7") {
    v.use_global_confusion = false;
  } else if (name == "DADIN8") {
    v.use_intra_confusion = false;
  } else if (name == "DADIN9") {
    v.use_global_confusion = false;
    v.use_intra_confusion = false;
  } else {
    std::string valid;
    for (const auto& n : variant_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw ConfigError("unknown variant '" + std::string(name) + "' (valid: " + valid + ")");
  }
  return v;
}

// --- configuration ------------------------------------------------------------------------

std::size_t ModelConfig::rep_dim() const {
  if (input == InputKind::kDense) return tower_widths.empty() ? 0 : tower_widths.back();
  return embed_dim;
}

void ModelConfig::validate() const {
  if (input == InputKind::kCategorical) {
    if (embed_dim == 0) throw ConfigError("embed-dim must be positive");
    if (seqlen == 0) throw ConfigError("seqlen must be positive");
    if (profile_vocab < 2 || target_item_vocab < 2 || source_item_vocab < 2) {
      throw ConfigError("vocabulary sizes must include the two reserved ids");
    }
    for (auto w : dnn_hidden) {
      if (w == 0) throw ConfigError("DNN hidden widths must be positive");
    }
  } else {
    if (dense_input_dim == 0) throw ConfigError("dense input width must be positive");
    if (tower_widths.empty()) throw ConfigError("dense tower needs at least one layer");
    for (auto w : tower_widths) {
      if (w == 0) throw ConfigError("tower widths must be positive");
    }
  }
  if (label_hidden == 0) throw ConfigError("label predictor width must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold T must lie in (0, 1)");
}

// --- building blocks ------------------------------------------------------------------------

Tensor linear(const Tensor& x, const Dense& layer) {
  return add_bias(matmul_nt(x, layer.weight), layer.bias);
}

Tensor embed_field(const Tensor& table, std::span<const std::vector<std::uint32_t>> ids) {
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i].empty()) throw DegenerateInputError("field pooling over an empty id list (row " + std::to_string(i) + ")");
  }
  return embedding_bag_sum(table, ids);
}

Tensor sequence_aggregate(const Tensor& history, std::span<const std::uint8_t> mask,
                          const Tensor& candidate, const Tensor& user,
                          const AttentionParams* params, SequenceAggregation mode,
                          Tensor* weights_out) {
  const std::size_t n = candidate.rows();
  const std::size_t d = candidate.cols();
  if (history.cols() != d || user.cols() != d || user.rows() != n) {
    throw DimensionError("sequence_aggregate: history " + shape_string(history.shape()) +
                         ", candidate " + shape_string(candidate.shape()) + ", user " +
                         shape_string(user.shape()));
  }
  if (history.rows() % n != 0) {
    throw DimensionError("sequence_aggregate: " + std::to_string(history.rows()) +
                         " history rows for " + std::to_string(n) + " instances");
  }
  const std::size_t len = history.rows() / n;
  if (mask.size() != n * len) throw DimensionError("sequence_aggregate: mask length mismatch");

  Tensor scores;
  if (mode == SequenceAggregation::kAttention) {
    if (params == nullptr) throw ContractError("sequence_aggregate: attention parameters missing");
    const Tensor q = repeat_rows(candidate, len);
    const Tensor x = concat({history, q, repeat_rows(user, len), mul(history, q)});
    const Tensor hidden = relu(matmul_nt(x, params->weight));
    scores = reshape(matmul_nt(hidden, params->score), {n, len});
  } else {
    scores = Tensor::zeros({n, len});
  }
  Tensor beta = softmax(scores, mask, EmptyRows::kZero);
  if (weights_out) *weights_out = beta;
  return sum_row_groups(scale_rows(history, beta), len);
}

InterestConcatResult interest_attention_concat(const Tensor& q, const Tensor& p, const Tensor& a,
                                               const Tensor& b,
                                               const InterestAttentionParams* params,
                                               InterestConcat mode) {
  const std::size_t n = q.rows();
  InterestConcatResult r;
  if (mode == InterestConcat::kEqual) {
    r.m = concat({q, p, a, b});
    r.v_u = r.v_s = r.v_t = Tensor::full({n, 1}, 1.0);
    return r;
  }
  if (params == nullptr) throw ContractError("interest_attention_concat: parameters missing");
  const Tensor joint = concat({q, p, a, b});
  auto weight = [&](const InterestWeightParams& w) {
    return exp(add_bias(matmul_nt(relu(matmul_nt(joint, w.weight)), w.gate), w.bias));
  };
  r.v_u = weight(params->user);
  r.v_s = weight(params->source);
  r.v_t = weight(params->target);
  r.m = concat({q, scale_rows(p, r.v_u), scale_rows(a, r.v_t), scale_rows(b, r.v_s)});
  return r;
}

namespace {

std::vector<Tensor> scaled_blocks(const Tensor& m, const Tensor& coeffs) {
  if (m.cols() % 4 != 0) {
    throw DimensionError("bi_interaction: width of " + shape_string(m.shape()) + " is not 4 blocks");
  }
  if (coeffs.size() != 4) {
    throw DimensionError("bi_interaction: expected 4 coefficients, got " + shape_string(coeffs.shape()));
  }
  const std::size_t d = m.cols() / 4;
  const Tensor c = coeffs.rank() == 1 ? coeffs : reshape(coeffs, {4});
  std::vector<Tensor> blocks;
  for (std::size_t i = 0; i < 4; ++i) blocks.push_back(scale(slice_cols(m, i * d, d), slice_cols(c, i, 1)));
  return blocks;
}

}  // namespace

Tensor bi_interaction(const Tensor& m, const Tensor& coeffs) {
  const auto e = scaled_blocks(m, coeffs);
  const Tensor total = add(add(e[0], e[1]), add(e[2], e[3]));
  const Tensor squares = add(add(mul(e[0], e[0]), mul(e[1], e[1])), add(mul(e[2], e[2]), mul(e[3], e[3])));
  return mul_scalar(sub(mul(total, total), squares), 0.5);
}

Tensor bi_interaction_pairwise(const Tensor& m, const Tensor& coeffs) {
  const auto e = scaled_blocks(m, coeffs);
  Tensor acc;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) {
      const Tensor pair = mul(e[i], e[j]);
      acc = acc.defined() ? add(acc, pair) : pair;
    }
  }
  return acc;
}

Tensor dnn_forward(const Tensor& z, std::span<const Dense> layers) {
  Tensor x = z;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    x = linear(x, layers[k]);
    if (k + 1 < layers.size()) x = relu(x);
  }
  return x;
}

DomainAgnosticOutput domain_agnostic(const Tensor& h_spec, const Dense* layer) {
  if (layer == nullptr) return {h_spec, h_spec};
  Tensor h_da = relu(linear(h_spec, *layer));
  Tensor h = add(h_da, h_spec);
  return {std::move(h_da), std::move(h)};
}

Tensor ctr_logit(const Tensor& h, const Dense& hidden, const Dense& out, double dropout_rate, bool training,
                 Rng& rng) {
  return linear(dropout(linear(h, hidden), dropout_rate, training, rng), out);
}

Tensor predict_ctr(const Tensor& h, const Dense& hidden, const Dense& out, double dropout_rate,
                   bool training, Rng& rng) {
  return sigmoid(ctr_logit(h, hidden, out, dropout_rate, training, rng));
}

Tensor global_domain_logit(const Tensor& h_da, const Dense& layer) { return linear(grad_reverse(h_da), layer); }

Tensor domain_classify_global(const Tensor& h_da, const Dense& layer) {
  return sigmoid(global_domain_logit(h_da, layer));
}

IntraClassOutput domain_classify_intra(const Tensor& h_da, const Tensor& y_hat, double threshold,
                                       const Dense& class1, const Dense& class0, bool detach_gate) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ConfigError("threshold T must lie in (0, 1), got " + std::to_string(threshold));
  }
  const std::size_t n = h_da.rows();
  if (y_hat.size() != n) {
    throw DimensionError("domain_classify_intra: " + shape_string(y_hat.shape()) +
                         " predictions for " + shape_string(h_da.shape()));
  }
  IntraClassOutput out;
  out.branch.resize(n);
  auto yv = y_hat.values();
  for (std::size_t i = 0; i < n; ++i) {
    out.branch[i] = yv[i] >= threshold ? 1 : 0;
    (out.branch[i] ? out.rows1 : out.rows0).push_back(i);
  }
  const Tensor gate = reshape(detach_gate ? y_hat.detach() : y_hat, {n, 1});
  if (!out.rows1.empty()) {
    const Tensor in = scale_rows(gather_rows(h_da, out.rows1), gather_rows(gate, out.rows1));
    out.logit1 = linear(grad_reverse(in), class1);
    out.d_hat1 = sigmoid(out.logit1);
  }
  if (!out.rows0.empty()) {
    const Tensor g0 = add_scalar(mul_scalar(gather_rows(gate, out.rows0), -1.0), 1.0);
    const Tensor in = scale_rows(gather_rows(h_da, out.rows0), g0);
    out.logit0 = linear(grad_reverse(in), class0);
    out.d_hat0 = sigmoid(out.logit0);
  }
  return out;
}

// --- model ---------------------------------------------------------------------------------

namespace {

Tensor uniform_matrix(std::size_t rows, std::size_t cols, Rng* rng) {
  std::vector<double> v(rows * cols, 0.0);
  if (rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& e : v) e = dist(*rng);
  }
  return Tensor::matrix(rows, cols, std::move(v), true);
}

Tensor embedding_table(std::size_t vocab, std::size_t dim, Rng* rng) {
  std::vector<double> v(vocab * dim, 0.0);
  if (rng) {
    std::normal_distribution<double> dist(0.0, 0.01);
    for (auto& e : v) e = dist(*rng);
  }
  return Tensor::matrix(vocab, dim, std::move(v), true);
}

Tensor zero_vector(std::size_t n) { return Tensor::zeros({n}, true); }

}  // namespace

DadinModel::DadinModel(ModelConfig config, Rng& rng) : config_(std::move(config)) {
  config_.validate();
  create_parameters(&rng);
  bind();
}

DadinModel::DadinModel(ModelConfig config, ParamStore params) : config_(std::move(config)) {
  config_.validate();
  create_parameters(nullptr);
  const auto& expected = params_.entries();
  const auto& given = params.entries();
  if (expected.size() != given.size()) {
    throw CheckpointError("parameter set has " + std::to_string(given.size()) +
                          " tensors, model configuration expects " + std::to_string(expected.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (expected[i].name != given[i].name || expected[i].partition != given[i].partition ||
        expected[i].value.shape() != given[i].value.shape()) {
      throw CheckpointError("parameter '" + given[i].name + "' " + shape_string(given[i].value.shape()) +
                            " does not match expected '" + expected[i].name + "' " +
                            shape_string(expected[i].value.shape()));
    }
  }
  params_ = std::move(params);
  for (auto& e : params_.entries()) {
    if (!e.value.requires_grad()) e.value = Tensor(e.value.shape(), {e.value.values().begin(), e.value.values().end()}, true);
  }
  bind();
}

void DadinModel::create_parameters(Rng* rng) {
  const std::size_t d = config_.rep_dim();
  const auto& v = config_.variant;
  auto dense = [&](const std::string& name, std::size_t out, std::size_t in, Partition part) {
    params_.add(name + ".W", part, uniform_matrix(out, in, rng));
    params_.add(name + ".b", part, zero_vector(out));
  };

  if (config_.input == InputKind::kCategorical) {
    params_.add("emb.profile", Partition::kFeature, embedding_table(config_.profile_vocab, d, rng));
    params_.add("emb.target_item", Partition::kFeature, embedding_table(config_.target_item_vocab, d, rng));
    params_.add("emb.source_item", Partition::kFeature, embedding_table(config_.source_item_vocab, d, rng));
    if (v.sequence_aggregation == SequenceAggregation::kAttention) {
      for (const char* dom : {"target", "source"}) {
        params_.add(std::string("seq.") + dom + ".W", Partition::kFeature, uniform_matrix(d, 4 * d, rng));
        params_.add(std::string("seq.") + dom + ".h", Partition::kFeature, uniform_matrix(1, d, rng));
      }
    }
    if (v.interest_concat == InterestConcat::kAttention) {
      for (const char* which : {"u", "s", "t"}) {
        const std::string base = std::string("interest.") + which;
        params_.add(base + ".V", Partition::kFeature, uniform_matrix(d, 4 * d, rng));
        params_.add(base + ".g", Partition::kFeature, uniform_matrix(1, d, rng));
        params_.add(base + ".b", Partition::kFeature, zero_vector(1));
      }
    }
    if (v.use_bi_interaction) {
      params_.add("bi.c", Partition::kFeature, Tensor::full({4}, 1.0, true));
    }
    if (v.use_dnn) {
      std::size_t in = v.use_bi_interaction ? d : 4 * d;
      std::size_t k = 0;
      for (auto width : config_.dnn_hidden) {
        dense("dnn." + std::to_string(k++), width, in, Partition::kFeature);
        in = width;
      }
      dense("dnn." + std::to_string(k), d, in, Partition::kFeature);
    }
  } else {
    std::size_t in = config_.dense_input_dim;
    for (std::size_t k = 0; k < config_.tower_widths.size(); ++k) {
      dense("tower." + std::to_string(k), config_.tower_widths[k], in, Partition::kFeature);
      in = config_.tower_widths[k];
    }
  }

  if (v.use_domain_agnostic_layer) dense("da", d, d, Partition::kFeature);
  dense("label.fc1", config_.label_hidden, d, Partition::kLabel);
  dense("label.fc2", 1, config_.label_hidden, Partition::kLabel);
  dense("domain.global", 1, d, Partition::kGlobalDomain);
  dense("domain.intra1", 1, d, Partition::kIntraDomain1);
  dense("domain.intra0", 1, d, Partition::kIntraDomain0);
}

void DadinModel::bind() {
  auto dense = [&](const std::string& name) { return Dense{params_.get(name + ".W"), params_.get(name + ".b")}; };
  const auto& v = config_.variant;
  if (config_.input == InputKind::kCategorical) {
    profile_table_ = params_.get("emb.profile");
    target_table_ = params_.get("emb.target_item");
    source_table_ = params_.get("emb.source_item");
    if (v.sequence_aggregation == SequenceAggregation::kAttention) {
      target_attention_ = {params_.get("seq.target.W"), params_.get("seq.target.h")};
      source_attention_ = {params_.get("seq.source.W"), params_.get("seq.source.h")};
    }
    if (v.interest_concat == InterestConcat::kAttention) {
      auto weights = [&](const char* which) {
        const std::string base = std::string("interest.") + which;
        return InterestWeightParams{params_.get(base + ".V"), params_.get(base + ".g"), params_.get(base + ".b")};
      };
      interest_ = {weights("u"), weights("s"), weights("t")};
    }
    if (v.use_bi_interaction) bi_coeffs_ = params_.get("bi.c");
    dnn_.clear();
    if (v.use_dnn) {
      for (std::size_t k = 0; k <= config_.dnn_hidden.size(); ++k) dnn_.push_back(dense("dnn." + std::to_string(k)));
    }
  } else {
    tower_.clear();
    for (std::size_t k = 0; k < config_.tower_widths.size(); ++k) tower_.push_back(dense("tower." + std::to_string(k)));
  }
  if (v.use_domain_agnostic_layer) domain_agnostic_ = dense("da");
  label_hidden_ = dense("label.fc1");
  label_out_ = dense("label.fc2");
  global_domain_ = dense("domain.global");
  intra1_ = dense("domain.intra1");
  intra0_ = dense("domain.intra0");
}

Tensor DadinModel::features_categorical(std::span<const Instance* const> batch,
                                        ForwardOutputs& out) const {
  const std::size_t n = batch.size();
  const std::size_t len = config_.seqlen;
  const auto& v = config_.variant;

  std::vector<std::vector<std::uint32_t>> profile(n), target_item(n), source_item(n);
  std::vector<std::size_t> target_hist(n * len, kPaddingId), source_hist(n * len, kPaddingId);
  std::vector<std::uint8_t> target_mask(n * len, 0), source_mask(n * len, 0);

  auto place = [&](std::size_t i, const std::vector<std::uint32_t>& hist, std::vector<std::size_t>& ids,
                   std::vector<std::uint8_t>& mask) {
    const std::size_t keep = std::min(hist.size(), len);
    const std::size_t first = hist.size() - keep;
    for (std::size_t t = 0; t < keep; ++t) {
      const auto id = hist[first + t];
      if (id == kPaddingId) throw DataError("instance " + std::to_string(i) + ": padding id inside a history");
      ids[i * len + t] = id;
      mask[i * len + t] = 1;
    }
  };

  for (std::size_t i = 0; i < n; ++i) {
    const Instance& inst = *batch[i];
    const bool has_target = !inst.target_item.empty();
    const bool has_source = !inst.source_item.empty();
    if (has_target == has_source) {
      throw DataError("instance " + std::to_string(i) + ": needs exactly one item field, has " +
                      (has_target ? "both" : "none"));
    }
    if ((has_target && inst.domain != kTargetDomain) || (has_source && inst.domain != kSourceDomain)) {
      throw DataError("instance " + std::to_string(i) + ": item field disagrees with domain label " +
                      std::to_string(inst.domain));
    }
    if (inst.profile_ids.empty()) throw DataError("instance " + std::to_string(i) + ": empty user profile");
    profile[i] = inst.profile_ids;
    (has_target ? target_item[i] : source_item[i]) = has_target ? inst.target_item : inst.source_item;
    place(i, inst.target_history, target_hist, target_mask);
    place(i, inst.source_history, source_hist, source_mask);
  }

  const Tensor p = embed_field(profile_table_, profile);
  const Tensor q = add(embedding_bag_sum(target_table_, target_item), embedding_bag_sum(source_table_, source_item));

  const Tensor a = sequence_aggregate(gather_rows(target_table_, target_hist), target_mask, q, p,
                                      &target_attention_, v.sequence_aggregation, &out.beta_target);
  const Tensor b = sequence_aggregate(gather_rows(source_table_, source_hist), source_mask, q, p,
                                      &source_attention_, v.sequence_aggregation, &out.beta_source);

  auto interest = interest_attention_concat(q, p, a, b, &interest_, v.interest_concat);
  out.v_u = interest.v_u;
  out.v_s = interest.v_s;
  out.v_t = interest.v_t;

  if (v.use_bi_interaction) {
    const Tensor z = bi_interaction(interest.m, bi_coeffs_);
    return v.use_dnn ? dnn_forward(z, dnn_) : z;
  }
  if (v.use_dnn) return dnn_forward(interest.m, dnn_);
  // Without any crossing the four field blocks are sum-pooled back to width d.
  const std::size_t d = config_.embed_dim;
  return add(add(slice_cols(interest.m, 0, d), slice_cols(interest.m, d, d)),
             add(slice_cols(interest.m, 2 * d, d), slice_cols(interest.m, 3 * d, d)));
}

Tensor DadinModel::features_dense(std::span<const Instance* const> batch) const {
  const std::size_t n = batch.size();
  const std::size_t in = config_.dense_input_dim;
  std::vector<double> x(n * in);
  for (std::size_t i = 0; i < n; ++i) {
    if (batch[i]->dense.size() != in) {
      throw DataError("instance " + std::to_string(i) + ": expected " + std::to_string(in) +
                      " dense features, got " + std::to_string(batch[i]->dense.size()));
    }
    std::copy(batch[i]->dense.begin(), batch[i]->dense.end(), x.begin() + static_cast<std::ptrdiff_t>(i * in));
  }
  Tensor h = Tensor::matrix(n, in, std::move(x));
  for (std::size_t k = 0; k < tower_.size(); ++k) {
    h = linear(h, tower_[k]);
    if (k + 1 < tower_.size()) h = relu(h);
  }
  return h;
}

ForwardOutputs DadinModel::forward(std::span<const Instance* const> batch, bool training, Rng& rng) const {
  if (batch.empty()) throw DegenerateInputError("forward on an empty batch");
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const int d = batch[i]->domain;
    if (d != kSourceDomain && d != kTargetDomain) {
      throw DataError("instance " + std::to_string(i) + ": domain label must be 0 or 1");
    }
  }
  ForwardOutputs out;
  out.h_spec = config_.input == InputKind::kCategorical ? features_categorical(batch, out) : features_dense(batch);
  auto da = domain_agnostic(out.h_spec, config_.variant.use_domain_agnostic_layer ? &domain_agnostic_ : nullptr);
  out.h_da = da.h_da;
  out.h = da.h;
  out.y_logit = ctr_logit(out.h, label_hidden_, label_out_, config_.dropout, training, rng);
  out.y_hat = sigmoid(out.y_logit);
  out.d_logit = global_domain_logit(out.h_da, global_domain_);
  out.d_hat = sigmoid(out.d_logit);
  out.intra = domain_classify_intra(out.h_da, out.y_hat, config_.threshold, intra1_, intra0_, config_.detach_gate);
  return out;
}

ForwardOutputs DadinModel::forward(std::span<const Instance> batch, bool training, Rng& rng) const {
  std::vector<const Instance*> ptrs;
  ptrs.reserve(batch.size());
  for (const auto& inst : batch) ptrs.push_back(&inst);
  return forward(std::span<const Instance* const>(ptrs), training, rng);
}

}  // namespace dadin
