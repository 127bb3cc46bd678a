#include "dadin/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "dadin/errors.hpp"

namespace dadin {

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;
  bool requires_grad = false;
  std::uint64_t seq = 0;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  std::span<double> grad_buffer() {
    if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
    return grad;
  }
};

namespace {

std::atomic<std::uint64_t> g_sequence{0};

std::size_t extent_product(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

void validate_shape(const Shape& shape) {
  if (shape.empty() || shape.size() > 2) {
    throw DimensionError("tensor rank must be 1 or 2, got shape " + shape_string(shape));
  }
  for (auto e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_string(shape));
  }
}

}  // namespace
}  // namespace detail

using detail::Node;

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

// Builds interior nodes; the only code allowed to touch Tensor::node_ besides Tensor itself.
struct OpAccess {
  static const std::shared_ptr<Node>& node(const Tensor& t) {
    if (!t.node_) throw ContractError("operation on an undefined tensor");
    return t.node_;
  }

  template <typename Backward>
  static Tensor make(const char* op, Shape shape, std::vector<double> values,
                     std::vector<Tensor> inputs, Backward&& backward) {
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->values = std::move(values);
    n->op = op;
    n->seq = detail::g_sequence.fetch_add(1, std::memory_order_relaxed);
    for (const auto& in : inputs) {
      if (node(in)->requires_grad) n->requires_grad = true;
    }
    if (n->requires_grad) {
      n->parents.reserve(inputs.size());
      for (const auto& in : inputs) n->parents.push_back(node(in));
      n->backward = std::forward<Backward>(backward);
    }
    return Tensor(std::move(n));
  }
};

namespace {

// Parent gradient buffer, or an empty span when the parent is not tracked.
std::span<double> parent_grad(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  if (!p.requires_grad) return {};
  return p.grad_buffer();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                         " vs " + shape_string(b.shape()));
  }
}

void require_rank2(const Tensor& a, const char* op) {
  if (a.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_string(a.shape()));
  }
}

template <typename F, typename D>
Tensor unary(const char* op, const Tensor& x, F&& f, D&& df) {
  auto in = x.values();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  return OpAccess::make(op, x.shape(), std::move(out), {x},
                        [df = std::forward<D>(df)](Node& self) {
                          auto gx = parent_grad(self, 0);
                          const auto& xv = self.parents[0]->values;
                          for (std::size_t i = 0; i < gx.size(); ++i) {
                            gx[i] += self.grad[i] * df(xv[i], self.values[i]);
                          }
                        });
}

}  // namespace

// --- Tensor -----------------------------------------------------------------

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  detail::validate_shape(shape);
  if (values.size() != detail::extent_product(shape)) {
    throw DimensionError("value count " + std::to_string(values.size()) +
                         " does not match shape " + shape_string(shape));
  }
  node_ = std::make_shared<Node>();
  node_->shape = std::move(shape);
  node_->values = std::move(values);
  node_->requires_grad = requires_grad;
  node_->seq = detail::g_sequence.fetch_add(1, std::memory_order_relaxed);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  detail::validate_shape(shape);
  auto n = detail::extent_product(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor({1}, {value}, requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  auto n = values.size();
  return Tensor({n}, std::move(values), requires_grad);
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values,
                      bool requires_grad) {
  return Tensor({rows, cols}, std::move(values), requires_grad);
}

const Shape& Tensor::shape() const { return OpAccess::node(*this)->shape; }
std::size_t Tensor::size() const { return OpAccess::node(*this)->values.size(); }
std::size_t Tensor::rows() const { return rank() == 1 ? 1 : shape()[0]; }
std::size_t Tensor::cols() const { return rank() == 1 ? shape()[0] : shape()[1]; }
std::span<const double> Tensor::values() const { return OpAccess::node(*this)->values; }

std::span<double> Tensor::mutable_values() {
  auto& n = OpAccess::node(*this);
  if (!n->parents.empty()) throw ContractError("mutable_values on a non-leaf tensor");
  return n->values;
}

double Tensor::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + shape_string(shape()));
  return values()[0];
}

bool Tensor::requires_grad() const { return OpAccess::node(*this)->requires_grad; }
bool Tensor::is_leaf() const { return OpAccess::node(*this)->parents.empty(); }
bool Tensor::has_grad() const {
  const auto& n = OpAccess::node(*this);
  return !n->grad.empty() && n->grad.size() == n->values.size();
}
std::span<const double> Tensor::grad() const { return OpAccess::node(*this)->grad; }
std::span<double> Tensor::mutable_grad() { return OpAccess::node(*this)->grad_buffer(); }

void Tensor::zero_grad() {
  auto& n = OpAccess::node(*this);
  n->grad.assign(n->values.size(), 0.0);
}

void Tensor::clear_grad() {
  auto& n = OpAccess::node(*this);
  n->grad.clear();
  n->grad.shrink_to_fit();
}

void Tensor::backward() const {
  const auto& root = OpAccess::node(*this);
  if (root->values.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " + shape_string(root->shape));
  }
  if (!root->requires_grad) {
    throw ContractError("backward() on a loss that does not depend on any tracked tensor");
  }

  // Collect the tracked subgraph, then order it by creation sequence so every
  // node is visited after all of its consumers.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<Node*> stack{root.get()};
  while (!stack.empty()) {
    Node* n = stack.back();
    stack.pop_back();
    if (!n->requires_grad || !seen.insert(n).second) continue;
    order.push_back(n);
    for (const auto& p : n->parents) stack.push_back(p.get());
  }
  std::sort(order.begin(), order.end(), [](const Node* a, const Node* b) { return a->seq > b->seq; });

  for (Node* n : order) {
    if (n->parents.empty()) {
      n->grad_buffer();
    } else {
      n->grad.assign(n->values.size(), 0.0);
    }
  }
  root->grad[0] += 1.0;
  for (Node* n : order) {
    if (n->backward) n->backward(*n);
  }
  // Interior gradients are scratch space for one sweep.
  for (Node* n : order) {
    if (!n->parents.empty()) {
      n->grad.clear();
      n->grad.shrink_to_fit();
    }
  }
}

Tensor Tensor::detach() const {
  const auto& n = OpAccess::node(*this);
  return Tensor(n->shape, n->values, false);
}

double binary_cross_entropy_value(std::span<const double> probs, std::span<const double> targets,
                                  double eps) {
  if (probs.size() != targets.size()) {
    throw DimensionError("cross entropy: " + std::to_string(probs.size()) + " predictions vs " +
                         std::to_string(targets.size()) + " labels");
  }
  if (probs.empty()) throw DegenerateInputError("cross entropy over an empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], eps, 1.0 - eps);
    const double y = targets[i];
    total += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
  }
  return total / static_cast<double>(probs.size());
}

// --- linear algebra -----------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  if (b.shape()[0] != k) {
    throw DimensionError("matmul: inner extents differ, " + shape_string(a.shape()) + " · " +
                         shape_string(b.shape()));
  }
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = &bv[p * n];
      double* orow = &out[i * n];
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return OpAccess::make("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    const auto& g = self.grad;
    const auto& av = self.parents[0]->values;
    const auto& bv = self.parents[1]->values;
    if (auto ga = parent_grad(self, 0); !ga.empty()) {
      // dA = G · Bᵀ
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += g[i * n + j] * bv[p * n + j];
          ga[i * k + p] += s;
        }
      }
    }
    if (auto gb = parent_grad(self, 1); !gb.empty()) {
      // dB = Aᵀ · G
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = av[i * k + p];
          if (aip == 0.0) continue;
          for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * g[i * n + j];
        }
      }
    }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul_nt");
  require_rank2(b, "matmul_nt");
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[0];
  if (b.shape()[1] != k) {
    throw DimensionError("matmul_nt: inner extents differ, " + shape_string(a.shape()) + " · " +
                         shape_string(b.shape()) + "ᵀ");
  }
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = &av[i * k];
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = &bv[j * k];
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      out[i * n + j] = s;
    }
  }
  return OpAccess::make("matmul_nt", {m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    const auto& g = self.grad;
    const auto& av = self.parents[0]->values;
    const auto& bv = self.parents[1]->values;
    auto ga = parent_grad(self, 0);
    auto gb = parent_grad(self, 1);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double gij = g[i * n + j];
        if (gij == 0.0) continue;
        if (!ga.empty()) {
          for (std::size_t p = 0; p < k; ++p) ga[i * k + p] += gij * bv[j * k + p];
        }
        if (!gb.empty()) {
          for (std::size_t p = 0; p < k; ++p) gb[j * k + p] += gij * av[i * k + p];
        }
      }
    }
  });
}

// --- elementwise ----------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return OpAccess::make("add", a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (auto g = parent_grad(self, k); !g.empty()) {
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i];
  return OpAccess::make("sub", a.shape(), std::move(out), {a, b}, [](Node& self) {
    if (auto g = parent_grad(self, 0); !g.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (auto g = parent_grad(self, 1); !g.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  auto av = a.values();
  auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return OpAccess::make("mul", a.shape(), std::move(out), {a, b}, [](Node& self) {
    const auto& av = self.parents[0]->values;
    const auto& bv = self.parents[1]->values;
    if (auto g = parent_grad(self, 0); !g.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * bv[i];
    }
    if (auto g = parent_grad(self, 1); !g.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * av[i];
    }
  });
}

Tensor mul_scalar(const Tensor& x, double c) {
  return unary("mul_scalar", x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

Tensor add_scalar(const Tensor& x, double c) {
  return unary("add_scalar", x, [c](double v) { return v + c; }, [](double, double) { return 1.0; });
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
}

namespace {

double logistic(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

Tensor sigmoid(const Tensor& x) {
  return unary("sigmoid", x, logistic, [](double, double y) { return y * (1.0 - y); });
}

Tensor exp(const Tensor& x) {
  return unary(
      "exp", x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

// --- explicit alignment -----------------------------------------------------------

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  const std::size_t n = x.rows(), m = x.cols();
  if (bias.size() != m) {
    throw DimensionError("add_bias: bias " + shape_string(bias.shape()) + " for rows of " +
                         shape_string(x.shape()));
  }
  auto xv = x.values();
  auto bv = bias.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = xv[i * m + j] + bv[j];
  }
  return OpAccess::make("add_bias", x.shape(), std::move(out), {x, bias}, [n, m](Node& self) {
    if (auto g = parent_grad(self, 0); !g.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
    if (auto g = parent_grad(self, 1); !g.empty()) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) g[j] += self.grad[i * m + j];
      }
    }
  });
}

Tensor scale_rows(const Tensor& x, const Tensor& s) {
  const std::size_t n = x.rows(), m = x.cols();
  if (s.size() != n) {
    throw DimensionError("scale_rows: " + shape_string(s.shape()) + " factors for " +
                         shape_string(x.shape()));
  }
  auto xv = x.values();
  auto sv = s.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = xv[i * m + j] * sv[i];
  }
  return OpAccess::make("scale_rows", x.shape(), std::move(out), {x, s}, [n, m](Node& self) {
    const auto& xv = self.parents[0]->values;
    const auto& sv = self.parents[1]->values;
    if (auto g = parent_grad(self, 0); !g.empty()) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) g[i * m + j] += self.grad[i * m + j] * sv[i];
      }
    }
    if (auto g = parent_grad(self, 1); !g.empty()) {
      for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) acc += self.grad[i * m + j] * xv[i * m + j];
        g[i] += acc;
      }
    }
  });
}

Tensor scale(const Tensor& x, const Tensor& s) {
  if (s.size() != 1) throw DimensionError("scale: factor must be a single value, got " + shape_string(s.shape()));
  const double c = s.values()[0];
  auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * c;
  return OpAccess::make("scale", x.shape(), std::move(out), {x, s}, [](Node& self) {
    const auto& xv = self.parents[0]->values;
    const double c = self.parents[1]->values[0];
    if (auto g = parent_grad(self, 0); !g.empty()) {
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * c;
    }
    if (auto g = parent_grad(self, 1); !g.empty()) {
      double acc = 0.0;
      for (std::size_t i = 0; i < xv.size(); ++i) acc += self.grad[i] * xv[i];
      g[0] += acc;
    }
  });
}

Tensor repeat_rows(const Tensor& x, std::size_t times) {
  if (times == 0) throw DimensionError("repeat_rows: repeat count must be positive");
  const std::size_t n = x.rows(), m = x.cols();
  auto xv = x.values();
  std::vector<double> out(n * times * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < times; ++t) {
      std::copy_n(&xv[i * m], m, &out[(i * times + t) * m]);
    }
  }
  return OpAccess::make("repeat_rows", {n * times, m}, std::move(out), {x},
                        [n, m, times](Node& self) {
                          auto g = parent_grad(self, 0);
                          for (std::size_t i = 0; i < n; ++i) {
                            for (std::size_t t = 0; t < times; ++t) {
                              const double* src = &self.grad[(i * times + t) * m];
                              for (std::size_t j = 0; j < m; ++j) g[i * m + j] += src[j];
                            }
                          }
                        });
}

Tensor sum_row_groups(const Tensor& x, std::size_t group) {
  const std::size_t total = x.rows(), m = x.cols();
  if (group == 0 || total % group != 0) {
    throw DimensionError("sum_row_groups: " + std::to_string(total) +
                         " rows do not split into groups of " + std::to_string(group));
  }
  const std::size_t n = total / group;
  auto xv = x.values();
  std::vector<double> out(n * m, 0.0);
  for (std::size_t r = 0; r < total; ++r) {
    double* dst = &out[(r / group) * m];
    for (std::size_t j = 0; j < m; ++j) dst[j] += xv[r * m + j];
  }
  return OpAccess::make("sum_row_groups", {n, m}, std::move(out), {x}, [total, group, m](Node& self) {
    auto g = parent_grad(self, 0);
    for (std::size_t r = 0; r < total; ++r) {
      const double* src = &self.grad[(r / group) * m];
      for (std::size_t j = 0; j < m; ++j) g[r * m + j] += src[j];
    }
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  detail::validate_shape(shape);
  if (detail::extent_product(shape) != x.size()) {
    throw DimensionError("reshape: cannot view " + shape_string(x.shape()) + " as " +
                         shape_string(shape));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  return OpAccess::make("reshape", std::move(shape), std::move(out), {x}, [](Node& self) {
    auto g = parent_grad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

// --- structure ----------------------------------------------------------------------

Tensor concat(std::initializer_list<Tensor> parts) {
  return concat(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor concat(std::span<const Tensor> parts) {
  if (parts.empty()) throw DegenerateInputError("concat of an empty list");
  const bool vectors = parts.front().rank() == 1;
  const std::size_t n = parts.front().rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if ((p.rank() == 1) != vectors || p.rows() != n) {
      throw DimensionError("concat: part " + shape_string(p.shape()) + " does not align with " +
                           shape_string(parts.front().shape()));
    }
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(n * total);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto v = parts[k].values();
    for (std::size_t i = 0; i < n; ++i) {
      std::copy_n(&v[i * widths[k]], widths[k], &out[i * total + offset]);
    }
    offset += widths[k];
  }
  Shape shape = vectors ? Shape{total} : Shape{n, total};
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return OpAccess::make("concat", std::move(shape), std::move(out), std::move(inputs),
                        [n, total, widths](Node& self) {
                          std::size_t offset = 0;
                          for (std::size_t k = 0; k < widths.size(); ++k) {
                            if (auto g = parent_grad(self, k); !g.empty()) {
                              for (std::size_t i = 0; i < n; ++i) {
                                for (std::size_t j = 0; j < widths[k]; ++j) {
                                  g[i * widths[k] + j] += self.grad[i * total + offset + j];
                                }
                              }
                            }
                            offset += widths[k];
                          }
                        });
}

Tensor slice_cols(const Tensor& x, std::size_t offset, std::size_t width) {
  const std::size_t n = x.rows(), m = x.cols();
  if (width == 0 || offset + width > m) {
    throw DimensionError("slice_cols: columns [" + std::to_string(offset) + ", " +
                         std::to_string(offset + width) + ") out of " + shape_string(x.shape()));
  }
  auto xv = x.values();
  std::vector<double> out(n * width);
  for (std::size_t i = 0; i < n; ++i) std::copy_n(&xv[i * m + offset], width, &out[i * width]);
  Shape shape = x.rank() == 1 ? Shape{width} : Shape{n, width};
  return OpAccess::make("slice_cols", std::move(shape), std::move(out), {x},
                        [n, m, offset, width](Node& self) {
                          auto g = parent_grad(self, 0);
                          for (std::size_t i = 0; i < n; ++i) {
                            for (std::size_t j = 0; j < width; ++j) {
                              g[i * m + offset + j] += self.grad[i * width + j];
                            }
                          }
                        });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> rows) {
  require_rank2(table, "gather_rows");
  const std::size_t vocab = table.shape()[0], m = table.shape()[1];
  if (rows.empty()) throw DegenerateInputError("gather_rows with no indices");
  auto tv = table.values();
  std::vector<double> out(rows.size() * m);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= vocab) {
      throw LookupError("row index " + std::to_string(rows[i]) + " outside table of " +
                        std::to_string(vocab) + " rows");
    }
    std::copy_n(&tv[rows[i] * m], m, &out[i * m]);
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return OpAccess::make("gather_rows", {rows.size(), m}, std::move(out), {table},
                        [idx = std::move(idx), m](Node& self) {
                          auto g = parent_grad(self, 0);
                          for (std::size_t i = 0; i < idx.size(); ++i) {
                            for (std::size_t j = 0; j < m; ++j) g[idx[i] * m + j] += self.grad[i * m + j];
                          }
                        });
}

Tensor embedding_bag_sum(const Tensor& table, std::span<const std::vector<std::uint32_t>> ids) {
  require_rank2(table, "embedding_bag_sum");
  const std::size_t vocab = table.shape()[0], m = table.shape()[1];
  if (ids.empty()) throw DegenerateInputError("embedding_bag_sum with no rows");
  auto tv = table.values();
  std::vector<double> out(ids.size() * m, 0.0);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    for (auto id : ids[i]) {
      if (id >= vocab) {
        throw LookupError("embedding id " + std::to_string(id) + " outside vocabulary of " +
                          std::to_string(vocab));
      }
      for (std::size_t j = 0; j < m; ++j) out[i * m + j] += tv[id * m + j];
    }
  }
  std::vector<std::vector<std::uint32_t>> bags(ids.begin(), ids.end());
  return OpAccess::make("embedding_bag_sum", {ids.size(), m}, std::move(out), {table},
                        [bags = std::move(bags), m](Node& self) {
                          auto g = parent_grad(self, 0);
                          for (std::size_t i = 0; i < bags.size(); ++i) {
                            for (auto id : bags[i]) {
                              for (std::size_t j = 0; j < m; ++j) g[id * m + j] += self.grad[i * m + j];
                            }
                          }
                        });
}

// --- reductions ------------------------------------------------------------------------

Tensor sum(const Tensor& x) {
  auto v = x.values();
  double s = 0.0;
  for (double e : v) s += e;
  return OpAccess::make("sum", {1}, {s}, {x}, [](Node& self) {
    auto g = parent_grad(self, 0);
    for (auto& e : g) e += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  return mul_scalar(sum(x), 1.0 / static_cast<double>(x.size()));
}

// --- probability ---------------------------------------------------------------------------

Tensor softmax(const Tensor& x, std::span<const std::uint8_t> mask, EmptyRows empty) {
  const std::size_t n = x.rows(), m = x.cols();
  if (!mask.empty() && mask.size() != x.size()) {
    throw DimensionError("softmax: mask of " + std::to_string(mask.size()) + " entries for " +
                         shape_string(x.shape()));
  }
  auto active = [&](std::size_t k) { return mask.empty() || mask[k] != 0; };
  auto xv = x.values();
  std::vector<double> out(xv.size(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double hi = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < m; ++j) {
      if (active(i * m + j)) {
        hi = std::max(hi, xv[i * m + j]);
        any = true;
      }
    }
    if (!any) {
      if (empty == EmptyRows::kReject) {
        throw DegenerateInputError("softmax: row " + std::to_string(i) + " has every entry masked");
      }
      continue;
    }
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      if (active(i * m + j)) {
        out[i * m + j] = std::exp(xv[i * m + j] - hi);
        z += out[i * m + j];
      }
    }
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] /= z;
  }
  return OpAccess::make("softmax", x.shape(), std::move(out), {x}, [n, m](Node& self) {
    // Masked entries have y = 0, so they receive no gradient.
    auto g = parent_grad(self, 0);
    const auto& y = self.values;
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < m; ++j) dot += self.grad[i * m + j] * y[i * m + j];
      for (std::size_t j = 0; j < m; ++j) {
        g[i * m + j] += y[i * m + j] * (self.grad[i * m + j] - dot);
      }
    }
  });
}

Tensor binary_cross_entropy(const Tensor& probs, std::span<const double> targets, double eps) {
  const double value = binary_cross_entropy_value(probs.values(), targets, eps);
  std::vector<double> y(targets.begin(), targets.end());
  return OpAccess::make("binary_cross_entropy", {1}, {value}, {probs},
                        [y = std::move(y), eps](Node& self) {
                          auto g = parent_grad(self, 0);
                          const auto& p = self.parents[0]->values;
                          const double scale = self.grad[0] / static_cast<double>(p.size());
                          for (std::size_t i = 0; i < p.size(); ++i) {
                            // The clamp is flat outside [eps, 1−eps].
                            if (p[i] < eps || p[i] > 1.0 - eps) continue;
                            g[i] += scale * (-y[i] / p[i] + (1.0 - y[i]) / (1.0 - p[i]));
                          }
                        });
}

Tensor binary_cross_entropy_with_logits(const Tensor& logits, std::span<const double> targets, double eps) {
  std::vector<double> p(logits.size());
  auto z = logits.values();
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = logistic(z[i]);
  const double value = binary_cross_entropy_value(p, targets, eps);
  std::vector<double> y(targets.begin(), targets.end());
  return OpAccess::make("binary_cross_entropy_with_logits", {1}, {value}, {logits},
                        [y = std::move(y), p = std::move(p)](Node& self) {
                          auto g = parent_grad(self, 0);
                          const double scale = self.grad[0] / static_cast<double>(p.size());
                          for (std::size_t i = 0; i < p.size(); ++i) g[i] += scale * (p[i] - y[i]);
                        });
}

// --- training-time layers ----------------------------------------------------------------------

Tensor grad_reverse(const Tensor& x) {
  std::vector<double> out(x.values().begin(), x.values().end());
  return OpAccess::make("grad_reverse", x.shape(), std::move(out), {x}, [](Node& self) {
    auto g = parent_grad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= self.grad[i];
  });
}

Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  std::bernoulli_distribution drop(rate);
  std::vector<double> mask(x.size());
  for (auto& e : mask) e = drop(rng) ? 0.0 : keep_scale;
  auto xv = x.values();
  std::vector<double> out(xv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * mask[i];
  return OpAccess::make("dropout", x.shape(), std::move(out), {x}, [mask = std::move(mask)](Node& self) {
    auto g = parent_grad(self, 0);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * mask[i];
  });
}

}  // namespace dadin
