#pragma once

// Dense double-precision tensors with reverse-mode automatic differentiation.
//
// A Tensor is a cheap handle onto a shared node. Operations below allocate a
// new node that remembers its parents and a backward closure; calling
// backward() on a scalar result replays those closures in reverse creation
// order. Only rank-1 and rank-2 tensors are used: a rank-1 tensor of width k
// behaves as a single row wherever an operation works row by row.
//
// There is no implicit broadcasting. Every shape alignment (bias rows,
// per-row scaling, repetition) is its own explicit operation.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace dadin {

using Shape = std::vector<std::size_t>;
using Rng = std::mt19937_64;

std::string shape_string(const Shape& shape);

namespace detail {
struct Node;
}  // namespace detail

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                       bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  // Rank-1 tensors count as one row.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const;
  // Direct write access for initialisation and optimiser updates. Only legal
  // on leaves; writing into an interior node would desynchronise the graph.
  std::span<double> mutable_values();
  double item() const;
  double at(std::size_t i) const { return values()[i]; }
  double at(std::size_t r, std::size_t c) const { return values()[r * cols() + c]; }

  bool requires_grad() const;
  bool is_leaf() const;
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();
  // Allocates a zero gradient buffer (or clears an existing one).
  void zero_grad();
  void clear_grad();

  // Reverse sweep from this scalar. Leaf gradients accumulate across calls.
  void backward() const;

  // Copy of the values with no history and no gradient tracking.
  Tensor detach() const;

  const detail::Node* node() const { return node_.get(); }

 private:
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  std::shared_ptr<detail::Node> node_;

  friend struct OpAccess;
};

// Forward value of binary_cross_entropy; shared with the metric code so that
// training loss and evaluation LogLoss agree bit for bit.
double binary_cross_entropy_value(std::span<const double> probs, std::span<const double> targets,
                                  double eps);

enum class EmptyRows {
  kReject,  // a fully masked row is a DegenerateInputError
  kZero,    // a fully masked row yields all-zero weights
};

// --- linear algebra -------------------------------------------------------
Tensor matmul(const Tensor& a, const Tensor& b);
// a · bᵀ, the natural form for row-major batches against [out × in] weights.
Tensor matmul_nt(const Tensor& a, const Tensor& b);

// --- elementwise ----------------------------------------------------------
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor mul_scalar(const Tensor& x, double c);
Tensor add_scalar(const Tensor& x, double c);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor exp(const Tensor& x);

// --- explicit alignment ---------------------------------------------------
// x[n × m] plus the same bias row b[m] on every row.
Tensor add_bias(const Tensor& x, const Tensor& bias);
// Row i of x[n × m] times s[i]; s has n entries.
Tensor scale_rows(const Tensor& x, const Tensor& s);
// Every entry of x times the single entry of s.
Tensor scale(const Tensor& x, const Tensor& s);
// [n × m] -> [n·times × m], each row repeated `times` times consecutively.
Tensor repeat_rows(const Tensor& x, std::size_t times);
// [n·group × m] -> [n × m], summing each run of `group` consecutive rows.
Tensor sum_row_groups(const Tensor& x, std::size_t group);
Tensor reshape(const Tensor& x, Shape shape);

// --- structure ------------------------------------------------------------
Tensor concat(std::span<const Tensor> parts);
Tensor concat(std::initializer_list<Tensor> parts);
Tensor slice_cols(const Tensor& x, std::size_t offset, std::size_t width);
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> rows);
// Row i of the result is the sum of table rows ids[i]; an empty list gives a
// zero row. Gradients scatter back to exactly the referenced rows.
Tensor embedding_bag_sum(const Tensor& table, std::span<const std::vector<std::uint32_t>> ids);

// --- reductions -----------------------------------------------------------
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// --- probability ----------------------------------------------------------
// Row-wise softmax (whole tensor for rank 1). mask, when non-empty, has one
// byte per entry; zero bytes are excluded and receive weight exactly 0.
Tensor softmax(const Tensor& x, std::span<const std::uint8_t> mask = {},
               EmptyRows empty = EmptyRows::kReject);
// Mean of −[y·log p + (1−y)·log(1−p)] with p clamped to [eps, 1−eps].
Tensor binary_cross_entropy(const Tensor& probs, std::span<const double> targets,
                            double eps = 1e-12);
// Same value as binary_cross_entropy(sigmoid(logits)), bit for bit. The
// gradient is taken in logit space, (σ(z) − y)/n, so it stays informative
// when the sigmoid saturates.
Tensor binary_cross_entropy_with_logits(const Tensor& logits, std::span<const double> targets,
                                        double eps = 1e-12);

// --- training-time layers -------------------------------------------------
// Identity forward, gradient multiplied by −1 backward.
Tensor grad_reverse(const Tensor& x);
// Inverted dropout: survivors scaled by 1/(1−rate) while training, identity otherwise.
Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng);

}  // namespace dadin
