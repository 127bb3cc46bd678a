#pragma once

// The DADIN computation graph.
//
// Categorical inputs flow through field pooling, attention-based sequence
// aggregation of both behaviour histories, interest-weighted concatenation,
// bi-interaction pooling and a DNN to give h_spec. Dense inputs (toy
// experiments) replace all of that with a plain MLP tower. Both share the
// adversarial head: the skip-connected domain-agnostic layer, the label
// predictor and three gradient-reversed domain classifiers.
//
// Every building block is exposed as a free function on row batches
// ([n × width] tensors, one instance per row) so it can be tested alone.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dadin/instance.hpp"
#include "dadin/tensor.hpp"

namespace dadin {

// The five disjoint parameter groups the adversarial updates act on.
enum class Partition {
  kFeature,        // embeddings through the domain-agnostic layer
  kLabel,          // label predictor
  kGlobalDomain,   // global domain classifier
  kIntraDomain0,   // classifier for instances routed to class 0
  kIntraDomain1,   // classifier for instances routed to class 1
};

inline constexpr Partition kAllPartitions[] = {Partition::kFeature, Partition::kLabel,
                                               Partition::kGlobalDomain, Partition::kIntraDomain0,
                                               Partition::kIntraDomain1};

std::string_view partition_name(Partition p);
Partition parse_partition(std::string_view name);

struct Parameter {
  std::string name;
  Partition partition;
  Tensor value;
};

// Named, partitioned parameter set in creation order.
class ParamStore {
 public:
  Tensor& add(std::string name, Partition partition, Tensor value);
  Tensor& get(std::string_view name);
  const Tensor& get(std::string_view name) const;
  bool contains(std::string_view name) const;
  const Parameter& entry(std::string_view name) const;

  std::vector<Parameter>& entries() { return entries_; }
  const std::vector<Parameter>& entries() const { return entries_; }

  void zero_grad();
  std::size_t scalar_count() const;
  std::size_t scalar_count(Partition p) const;

  // Value copies, used for best-checkpoint tracking.
  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& values);

 private:
  std::vector<Parameter> entries_;
};

enum class SequenceAggregation { kAttention, kAverage };
enum class InterestConcat { kAttention, kEqual };

// Structural switches for the ablation variants.
struct VariantConfig {
  SequenceAggregation sequence_aggregation = SequenceAggregation::kAttention;
  InterestConcat interest_concat = InterestConcat::kAttention;
  bool use_bi_interaction = true;
  bool use_dnn = true;
  bool use_domain_agnostic_layer = true;
  bool use_global_confusion = true;
  bool use_intra_confusion = true;

  bool operator==(const VariantConfig&) const = default;
};

// "DADIN1" ... "DADIN9", "DADIN++". Unknown names raise ConfigError listing the valid ones.
VariantConfig variant_by_name(std::string_view name);
const std::vector<std::string>& variant_names();

enum class InputKind { kCategorical, kDense };

struct ModelConfig {
  InputKind input = InputKind::kCategorical;

  // Categorical inputs.
  std::size_t embed_dim = 64;
  std::size_t seqlen = 10;
  std::size_t profile_vocab = 2;
  std::size_t target_item_vocab = 2;
  std::size_t source_item_vocab = 2;
  std::vector<std::size_t> dnn_hidden{512, 128};

  // Dense inputs; the last tower width is the representation width.
  std::size_t dense_input_dim = 2;
  std::vector<std::size_t> tower_widths{16, 16, 8};

  std::size_t label_hidden = 100;
  double dropout = 0.5;
  double threshold = 0.5;
  // Stop gradients through ŷ where it gates the intra-class classifiers.
  bool detach_gate = false;
  VariantConfig variant;

  // Width d of h_spec, h_DA and h.
  std::size_t rep_dim() const;
  void validate() const;
};

// --- building blocks -----------------------------------------------------------

struct Dense {
  Tensor weight;  // [out × in]
  Tensor bias;    // [out]
};

Tensor linear(const Tensor& x, const Dense& layer);

// Field pooling: row i is the sum of table rows ids[i]; every list must be non-empty.
Tensor embed_field(const Tensor& table, std::span<const std::vector<std::uint32_t>> ids);

struct AttentionParams {
  Tensor weight;  // W_j, [d × 4d]
  Tensor score;   // h_j, [1 × d]
};

// history: [n·L × d] (L positions per instance), mask: n·L bytes, q and p:
// [n × d]. Returns a: [n × d]. A fully masked history aggregates to zero.
// When `weights_out` is given it receives β as [n × L].
Tensor sequence_aggregate(const Tensor& history, std::span<const std::uint8_t> mask,
                          const Tensor& candidate, const Tensor& user,
                          const AttentionParams* params, SequenceAggregation mode,
                          Tensor* weights_out = nullptr);

struct InterestWeightParams {
  Tensor weight;  // V_*, [d × 4d]
  Tensor gate;    // g_*, [1 × d]
  Tensor bias;    // b_*, [1]
};

struct InterestAttentionParams {
  InterestWeightParams user;
  InterestWeightParams source;
  InterestWeightParams target;
};

struct InterestConcatResult {
  Tensor m;    // [n × 4d] = [q ‖ v_u·p ‖ v_t·a ‖ v_s·b]
  Tensor v_u;  // [n × 1] each
  Tensor v_s;
  Tensor v_t;
};

// With InterestConcat::kEqual the plain concatenation is returned and the
// weights are reported as constant ones.
InterestConcatResult interest_attention_concat(const Tensor& q, const Tensor& p, const Tensor& a,
                                               const Tensor& b,
                                               const InterestAttentionParams* params,
                                               InterestConcat mode);

// Σ_{i<j} (mⁱcᵢ) ⊙ (mʲcⱼ) over the four d-wide blocks of m, computed as
// ½[(Σ mⁱcᵢ)² − Σ (mⁱcᵢ)²]. coeffs holds c₁..c₄.
Tensor bi_interaction(const Tensor& m, const Tensor& coeffs);
// Same quantity by explicit enumeration of the six block pairs.
Tensor bi_interaction_pairwise(const Tensor& m, const Tensor& coeffs);

// ReLU between layers, none after the last.
Tensor dnn_forward(const Tensor& z, std::span<const Dense> layers);

struct DomainAgnosticOutput {
  Tensor h_da;
  Tensor h;
};

// h_DA = ReLU(W·h_spec + b), h = h_DA + h_spec. A null layer switches the
// block off: h_DA = h = h_spec.
DomainAgnosticOutput domain_agnostic(const Tensor& h_spec, const Dense* layer);

// Pre-sigmoid score W₂·Dropout(W₁h + b₁) + b₂, [n × 1].
Tensor ctr_logit(const Tensor& h, const Dense& hidden, const Dense& out, double dropout_rate, bool training,
                 Rng& rng);
// ŷ = σ(W₂·Dropout(W₁h + b₁) + b₂), [n × 1].
Tensor predict_ctr(const Tensor& h, const Dense& hidden, const Dense& out, double dropout_rate,
                   bool training, Rng& rng);

// W₃·Rev(h_DA) + b₃, [n × 1].
Tensor global_domain_logit(const Tensor& h_da, const Dense& layer);
// d̂ = σ(W₃·Rev(h_DA) + b₃), [n × 1].
Tensor domain_classify_global(const Tensor& h_da, const Dense& layer);

struct IntraClassOutput {
  std::vector<int> branch;           // per instance, 1 when ŷ ≥ T
  std::vector<std::size_t> rows1;    // instances routed to class 1
  std::vector<std::size_t> rows0;
  Tensor d_hat1;                     // [ρ × 1], undefined when ρ = 0
  Tensor d_hat0;                     // [τ × 1], undefined when τ = 0
  Tensor logit1;                     // pre-sigmoid scores of the two branches
  Tensor logit0;
};

// Class 1: σ(W₄·Rev(ŷ·h_DA) + b₄); class 0: σ(W₅·Rev((1−ŷ)·h_DA) + b₅).
IntraClassOutput domain_classify_intra(const Tensor& h_da, const Tensor& y_hat, double threshold,
                                       const Dense& class1, const Dense& class0,
                                       bool detach_gate = false);

// --- full model ------------------------------------------------------------------

struct ForwardOutputs {
  Tensor y_hat;  // [n × 1]
  Tensor d_hat;  // [n × 1]
  Tensor y_logit;  // pre-sigmoid scores; the objective differentiates through these
  Tensor d_logit;
  IntraClassOutput intra;
  Tensor h_spec;
  Tensor h_da;
  Tensor h;
  // Interest weights and sequence attention; undefined for dense inputs.
  Tensor v_u;
  Tensor v_s;
  Tensor v_t;
  Tensor beta_target;  // [n × L]
  Tensor beta_source;

  std::size_t size() const { return y_hat.defined() ? y_hat.rows() : 0; }
};

class DadinModel {
 public:
  // Fresh parameters drawn from rng in a fixed order.
  DadinModel(ModelConfig config, Rng& rng);
  // Adopts existing parameters (e.g. from a checkpoint); names and shapes must match.
  DadinModel(ModelConfig config, ParamStore params);

  DadinModel(const DadinModel&) = delete;
  DadinModel& operator=(const DadinModel&) = delete;
  DadinModel(DadinModel&&) = default;
  DadinModel& operator=(DadinModel&&) = default;

  const ModelConfig& config() const { return config_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Throws DataError naming the first instance that violates the input schema.
  ForwardOutputs forward(std::span<const Instance* const> batch, bool training, Rng& rng) const;
  ForwardOutputs forward(std::span<const Instance> batch, bool training, Rng& rng) const;

 private:
  void create_parameters(Rng* rng);
  void bind();
  Tensor features_categorical(std::span<const Instance* const> batch, ForwardOutputs& out) const;
  Tensor features_dense(std::span<const Instance* const> batch) const;

  ModelConfig config_;
  ParamStore params_;

  // Handles into params_, bound after construction.
  Tensor profile_table_, target_table_, source_table_;
  AttentionParams target_attention_, source_attention_;
  InterestAttentionParams interest_;
  Tensor bi_coeffs_;
  std::vector<Dense> dnn_;
  std::vector<Dense> tower_;
  Dense domain_agnostic_;
  Dense label_hidden_, label_out_;
  Dense global_domain_, intra1_, intra0_;
};

}  // namespace dadin
