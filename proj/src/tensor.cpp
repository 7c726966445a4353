#include "twvae/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace twvae {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using detail::Node;
using detail::Buffer;
using NodePtr = std::shared_ptr<Node>;

CMapMat cmap(const Buffer& v, std::size_t rows, std::size_t cols) {
  return CMapMat(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
MapMat map(Buffer& v, std::size_t rows, std::size_t cols) {
  return MapMat(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
CMapMat cmap(const double* p, std::size_t rows, std::size_t cols) {
  return CMapMat(p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
MapMat map(double* p, std::size_t rows, std::size_t cols) {
  return MapMat(p, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw std::invalid_argument(std::string(op) + ": undefined tensor");
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require_defined(a, op);
  require_defined(b, op);
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                                " vs " + shape_string(b.shape()));
  }
}

Tensor make_result(Shape shape, Buffer value, std::vector<const Tensor*> inputs,
                   std::function<void(Node&)> backward_fn) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  bool any = false;
  for (const Tensor* t : inputs) any = any || (t->defined() && t->requires_grad());
  if (any) {
    node->requires_grad = true;
    for (const Tensor* t : inputs) node->parents.push_back(t->defined() ? t->node() : nullptr);
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor::from_node(std::move(node));
}

// Gradient buffer of parent i, or nullptr if it does not need one.
Buffer* parent_grad(Node& self, std::size_t i) {
  Node* p = self.parents[i].get();
  if (p == nullptr || !p->requires_grad) return nullptr;
  return &p->grad_buffer();
}

template <class F>
Tensor unary(const Tensor& a, const char* op, F&& fwd_and_deriv) {
  require_defined(a, op);
  const auto& x = a.node()->value;
  Buffer out(x.size());
  Buffer deriv(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto [y, dy] = fwd_and_deriv(x[i]);
    out[i] = y;
    deriv[i] = dy;
  }
  return make_result(a.shape(), std::move(out), {&a},
                     [deriv = std::move(deriv)](Node& self) {
                       if (auto* g = parent_grad(self, 0)) {
                         for (std::size_t i = 0; i < deriv.size(); ++i) (*g)[i] += deriv[i] * self.grad[i];
                       }
                     });
}

}  // namespace

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> values_in, bool requires_grad) {
  Buffer values(values_in.begin(), values_in.end());
  for (std::size_t d : shape) {
    if (d == 0) throw std::invalid_argument("Tensor: zero extent in shape " + shape_string(shape));
  }
  if (shape_numel(shape) != values.size()) {
    throw std::invalid_argument("Tensor: shape " + shape_string(shape) + " needs " +
                                std::to_string(shape_numel(shape)) + " values, got " +
                                std::to_string(values.size()));
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw std::domain_error("Tensor: non-finite value");
  }
  node_ = std::make_shared<Node>();
  node_->shape = std::move(shape);
  node_->value = std::move(values);
  node_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return Tensor({}, {value}, requires_grad); }

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values), requires_grad);
}

Tensor Tensor::from_node(std::shared_ptr<detail::Node> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

const Shape& Tensor::shape() const {
  if (!node_) throw std::logic_error("Tensor: undefined");
  return node_->shape;
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank()) throw std::out_of_range("Tensor::dim: axis out of range");
  return shape()[axis];
}

std::size_t Tensor::numel() const { return node_ ? node_->value.size() : 0; }
bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }

std::span<const double> Tensor::values() const {
  if (!node_) throw std::logic_error("Tensor: undefined");
  return node_->value;
}

std::span<double> Tensor::mutable_values() {
  if (!node_) throw std::logic_error("Tensor: undefined");
  if (node_->backward_fn) throw std::logic_error("Tensor: only leaf tensors may be mutated");
  return node_->value;
}

double Tensor::item() const {
  if (numel() != 1) throw std::invalid_argument("Tensor::item: not a scalar " + shape_string(shape()));
  return node_->value[0];
}

std::vector<double> Tensor::grad() const {
  if (!node_) throw std::logic_error("Tensor: undefined");
  if (node_->grad.size() != node_->value.size()) return std::vector<double>(node_->value.size(), 0.0);
  return std::vector<double>(node_->grad.begin(), node_->grad.end());
}

std::span<double> Tensor::mutable_grad() {
  if (!node_) throw std::logic_error("Tensor: undefined");
  return node_->grad_buffer();
}

void Tensor::zero_grad() {
  if (node_) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
  auto node = std::make_shared<Node>();
  node->shape = shape();
  node->value = node_->value;
  return from_node(std::move(node));
}

void backward(const Tensor& root) {
  require_defined(root, "backward");
  if (root.numel() != 1) {
    throw std::invalid_argument("backward: root must be a scalar, got " + shape_string(root.shape()));
  }
  if (!std::isfinite(root.item())) throw std::domain_error("backward: non-finite root value");
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p != nullptr && p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) n->grad.assign(n->value.size(), 0.0);
  root.node()->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn) n->backward_fn(*n);
  }
}

void check_finite(const Tensor& t, const std::string& context) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) throw std::domain_error(context + ": non-finite value");
  }
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Buffer out(a.numel());
  const auto& x = a.node()->value;
  const auto& y = b.node()->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + y[i];
  return make_result(a.shape(), std::move(out), {&a, &b}, [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (auto* g = parent_grad(self, k)) {
        for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Buffer out(a.numel());
  const auto& x = a.node()->value;
  const auto& y = b.node()->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] - y[i];
  return make_result(a.shape(), std::move(out), {&a, &b}, [](Node& self) {
    if (auto* g = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    }
    if (auto* g = parent_grad(self, 1)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Buffer out(a.numel());
  const auto& x = a.node()->value;
  const auto& y = b.node()->value;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * y[i];
  return make_result(a.shape(), std::move(out), {&a, &b}, [](Node& self) {
    const auto& x = self.parents[0]->value;
    const auto& y = self.parents[1]->value;
    if (auto* g = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * y[i];
    }
    if (auto* g = parent_grad(self, 1)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i] * x[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(a, "scale", [factor](double x) { return std::pair{factor * x, factor}; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(a, "add_scalar", [offset](double x) { return std::pair{x + offset, 1.0}; });
}

Tensor square(const Tensor& a) {
  return unary(a, "square", [](double x) { return std::pair{x * x, 2.0 * x}; });
}

Tensor exp(const Tensor& a) {
  return unary(a, "exp", [](double x) {
    const double e = std::exp(x);
    return std::pair{e, e};
  });
}

Tensor log(const Tensor& a) {
  require_defined(a, "log");
  for (double v : a.values()) {
    if (!(v > 0.0)) throw std::domain_error("log: nonpositive input");
  }
  return unary(a, "log", [](double x) { return std::pair{std::log(x), 1.0 / x}; });
}

Tensor relu(const Tensor& a) {
  return unary(a, "relu", [](double x) { return x > 0.0 ? std::pair{x, 1.0} : std::pair{0.0, 0.0}; });
}

Tensor elu(const Tensor& a, double alpha) {
  require_defined(a, "elu");
  const auto& x = a.node()->value;
  const auto n = static_cast<Eigen::Index>(x.size());
  Buffer out(x.size());
  Buffer deriv(x.size());
  // Eigen's packet exp is vectorized; scalar expm1 dominated decoder time.
  const Eigen::Map<const Eigen::ArrayXd> xa(x.data(), n);
  const Eigen::ArrayXd e = alpha * xa.min(0.0).exp();
  Eigen::Map<Eigen::ArrayXd>(out.data(), n) = (xa > 0.0).select(xa, e - alpha);
  Eigen::Map<Eigen::ArrayXd>(deriv.data(), n) = (xa > 0.0).select(Eigen::ArrayXd::Ones(n), e);
  return make_result(a.shape(), std::move(out), {&a}, [deriv = std::move(deriv)](Node& self) {
    if (auto* g = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < deriv.size(); ++i) (*g)[i] += deriv[i] * self.grad[i];
    }
  });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
  return unary(a, "clamp", [lo, hi](double x) {
    if (x < lo) return std::pair{lo, 0.0};
    if (x > hi) return std::pair{hi, 0.0};
    return std::pair{x, 1.0};
  });
}

Tensor sum(const Tensor& a) {
  require_defined(a, "sum");
  double s = 0.0;
  for (double v : a.values()) s += v;
  return make_result({}, {s}, {&a}, [](Node& self) {
    if (auto* g = parent_grad(self, 0)) {
      const double up = self.grad[0];
      for (double& v : *g) v += up;
    }
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor dot(const Tensor& a, const Tensor& b) { return sum(mul(a, b)); }

Tensor sum_last(const Tensor& a) {
  require_defined(a, "sum_last");
  if (a.rank() == 0) throw std::invalid_argument("sum_last: scalar input");
  const std::size_t cols = a.shape().back();
  const std::size_t rows = a.numel() / cols;
  Shape out_shape(a.shape().begin(), a.shape().end() - 1);
  if (out_shape.empty()) out_shape = {1};
  Buffer out(rows, 0.0);
  const auto& x = a.node()->value;
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += x[r * cols + c];
    out[r] = s;
  }
  return make_result(std::move(out_shape), std::move(out), {&a}, [rows, cols](Node& self) {
    if (auto* g = parent_grad(self, 0)) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) (*g)[r * cols + c] += self.grad[r];
      }
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  require_defined(a, "reshape");
  if (shape_numel(shape) != a.numel()) {
    throw std::invalid_argument("reshape: " + shape_string(a.shape()) + " -> " + shape_string(shape));
  }
  return make_result(std::move(shape), a.node()->value, {&a}, [](Node& self) {
    if (auto* g = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < g->size(); ++i) (*g)[i] += self.grad[i];
    }
  });
}

Tensor swap_last2(const Tensor& a) {
  require_defined(a, "swap_last2");
  if (a.rank() != 3) throw std::invalid_argument("swap_last2: expected rank 3, got " + shape_string(a.shape()));
  const std::size_t b = a.dim(0), p = a.dim(1), q = a.dim(2);
  Buffer out(a.numel());
  const auto& x = a.node()->value;
  for (std::size_t k = 0; k < b; ++k) {
    map(out.data() + k * p * q, q, p) = cmap(x.data() + k * p * q, p, q).transpose();
  }
  return make_result({b, q, p}, std::move(out), {&a}, [b, p, q](Node& self) {
    if (auto* g = parent_grad(self, 0)) {
      for (std::size_t k = 0; k < b; ++k) {
        map(g->data() + k * p * q, p, q) += cmap(self.grad.data() + k * p * q, q, p).transpose();
      }
    }
  });
}

Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows) {
  require_defined(a, "gather_rows");
  if (a.rank() != 2) throw std::invalid_argument("gather_rows: expected rank 2, got " + shape_string(a.shape()));
  if (rows.empty()) throw std::invalid_argument("gather_rows: no rows");
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  Buffer out(idx.size() * c);
  const auto& x = a.node()->value;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= r) throw std::out_of_range("gather_rows: row index out of range");
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(idx[i] * c), c, out.begin() + static_cast<std::ptrdiff_t>(i * c));
  }
  const std::size_t n = idx.size();
  return make_result({n, c}, std::move(out), {&a}, [idx = std::move(idx), c](Node& self) {
    if (auto* g = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < idx.size(); ++i) {
        for (std::size_t k = 0; k < c; ++k) (*g)[idx[i] * c + k] += self.grad[i * c + k];
      }
    }
  });
}

Tensor softmax(const Tensor& a) {
  require_defined(a, "softmax");
  if (a.rank() == 0) throw std::invalid_argument("softmax: scalar input");
  const std::size_t cols = a.shape().back();
  const std::size_t rows = a.numel() / cols;
  const auto& x = a.node()->value;
  Buffer out(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = x.data() + r * cols;
    double* o = out.data() + r * cols;
    const double mx = *std::max_element(in, in + cols);
    double z = 0.0;
    for (std::size_t c = 0; c < cols; ++c) z += (o[c] = std::exp(in[c] - mx));
    for (std::size_t c = 0; c < cols; ++c) o[c] /= z;
  }
  Buffer probs = out;
  return make_result(a.shape(), std::move(out), {&a}, [probs = std::move(probs), rows, cols](Node& self) {
    if (auto* g = parent_grad(self, 0)) {
      for (std::size_t r = 0; r < rows; ++r) {
        const double* p = probs.data() + r * cols;
        const double* up = self.grad.data() + r * cols;
        double inner = 0.0;
        for (std::size_t c = 0; c < cols; ++c) inner += p[c] * up[c];
        for (std::size_t c = 0; c < cols; ++c) (*g)[r * cols + c] += p[c] * (up[c] - inner);
      }
    }
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw std::invalid_argument("matmul: incompatible shapes " + shape_string(a.shape()) + " and " +
                                shape_string(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Buffer out(m * n);
  map(out, m, n).noalias() = cmap(a.node()->value, m, k) * cmap(b.node()->value, k, n);
  return make_result({m, n}, std::move(out), {&a, &b}, [m, k, n](Node& self) {
    auto up = cmap(self.grad, m, n);
    if (auto* g = parent_grad(self, 0)) map(*g, m, k).noalias() += up * cmap(self.parents[1]->value, k, n).transpose();
    if (auto* g = parent_grad(self, 1)) map(*g, k, n).noalias() += cmap(self.parents[0]->value, m, k).transpose() * up;
  });
}

Tensor fully_connected(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_defined(x, "fully_connected");
  require_defined(weight, "fully_connected");
  require_defined(bias, "fully_connected");
  if (x.rank() != 2 || weight.rank() != 2 || bias.rank() != 1 || weight.dim(1) != x.dim(1) ||
      bias.dim(0) != weight.dim(0)) {
    throw std::invalid_argument("fully_connected: incompatible shapes x" + shape_string(x.shape()) + " W" +
                                shape_string(weight.shape()) + " b" + shape_string(bias.shape()));
  }
  const std::size_t rows = x.dim(0), in = x.dim(1), out_dim = weight.dim(0);
  Buffer out(rows * out_dim);
  auto o = map(out, rows, out_dim);
  o.noalias() = cmap(x.node()->value, rows, in) * cmap(weight.node()->value, out_dim, in).transpose();
  o.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(bias.node()->value.data(), static_cast<Eigen::Index>(out_dim));
  return make_result({rows, out_dim}, std::move(out), {&x, &weight, &bias}, [rows, in, out_dim](Node& self) {
    auto up = cmap(self.grad, rows, out_dim);
    if (auto* g = parent_grad(self, 0)) map(*g, rows, in).noalias() += up * cmap(self.parents[1]->value, out_dim, in);
    if (auto* g = parent_grad(self, 1)) {
      map(*g, out_dim, in).noalias() += up.transpose() * cmap(self.parents[0]->value, rows, in);
    }
    if (auto* g = parent_grad(self, 2)) {
      Eigen::Map<Eigen::RowVectorXd>(g->data(), static_cast<Eigen::Index>(out_dim)) += up.colwise().sum();
    }
  });
}

Tensor conv1d(const Tensor& input, const Tensor& kernels, std::size_t stride, const Tensor& bias) {
  require_defined(input, "conv1d");
  require_defined(kernels, "conv1d");
  if (stride < 1) throw std::invalid_argument("conv1d: stride must be >= 1");
  if (kernels.rank() != 3) throw std::invalid_argument("conv1d: kernels must be [C_out x C_in x k]");
  const bool batched = input.rank() == 3;
  if (!batched && input.rank() != 2) throw std::invalid_argument("conv1d: input must be [C_in x T] or [B x C_in x T]");
  const std::size_t nb = batched ? input.dim(0) : 1;
  const std::size_t cin = input.dim(batched ? 1 : 0);
  const std::size_t len = input.dim(batched ? 2 : 1);
  const std::size_t cout = kernels.dim(0), k = kernels.dim(2);
  if (kernels.dim(1) != cin) {
    throw std::invalid_argument("conv1d: channel mismatch, input has " + std::to_string(cin) + ", kernels expect " +
                                std::to_string(kernels.dim(1)));
  }
  if (k > len) throw std::invalid_argument("conv1d: kernel longer than input");
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != cout)) {
    throw std::invalid_argument("conv1d: bias must be [C_out]");
  }
  const std::size_t pad = (k - 1) / 2;
  const std::size_t padded = len + 2 * pad;
  const std::size_t lout = (padded - k) / stride + 1;
  const std::size_t width = cin * k;

  // Per item, columns are [width x lout] with row (c_in, tap), so that
  // kernels [cout x width] times columns lands directly in [cout x lout].
  // Valid output positions for a tap: lo <= t < hi.
  auto tap_range = [=](std::size_t tap) {
    std::size_t lo = 0;
    while (lo < lout && lo * stride + tap < pad) ++lo;
    std::size_t hi = lo;
    while (hi < lout && hi * stride + tap - pad < len) ++hi;
    return std::pair{lo, hi};
  };
  std::vector<std::pair<std::size_t, std::size_t>> ranges(k);
  for (std::size_t tap = 0; tap < k; ++tap) ranges[tap] = tap_range(tap);

  Buffer cols(nb * width * lout, 0.0);
  const auto& x = input.node()->value;
  for (std::size_t b = 0; b < nb; ++b) {
    for (std::size_t c = 0; c < cin; ++c) {
      const double* src = x.data() + (b * cin + c) * len;
      for (std::size_t tap = 0; tap < k; ++tap) {
        double* row = cols.data() + (b * width + c * k + tap) * lout;
        const auto [lo, hi] = ranges[tap];
        for (std::size_t t = lo; t < hi; ++t) row[t] = src[t * stride + tap - pad];
      }
    }
  }
  Buffer out(nb * cout * lout);
  const auto kmat = cmap(kernels.node()->value, cout, width);
  for (std::size_t b = 0; b < nb; ++b) {
    auto o = map(out.data() + b * cout * lout, cout, lout);
    o.noalias() = kmat * cmap(cols.data() + b * width * lout, width, lout);
    if (bias.defined()) o.colwise() += Eigen::Map<const Eigen::VectorXd>(bias.node()->value.data(), static_cast<Eigen::Index>(cout));
  }
  Shape shape = batched ? Shape{nb, cout, lout} : Shape{cout, lout};
  std::vector<const Tensor*> inputs{&input, &kernels};
  if (bias.defined()) inputs.push_back(&bias);
  return make_result(std::move(shape), std::move(out), inputs,
                     [cols = std::move(cols), ranges = std::move(ranges), nb, cin, len, cout, k, lout, width, pad,
                      stride](Node& self) {
                       auto* gk = parent_grad(self, 1);
                       auto* gb = self.parents.size() > 2 ? parent_grad(self, 2) : nullptr;
                       auto* gx = parent_grad(self, 0);
                       RowMat dcols(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(lout));
                       for (std::size_t b = 0; b < nb; ++b) {
                         const auto up = cmap(self.grad.data() + b * cout * lout, cout, lout);
                         if (gk) map(*gk, cout, width).noalias() += up * cmap(cols.data() + b * width * lout, width, lout).transpose();
                         if (gb) Eigen::Map<Eigen::VectorXd>(gb->data(), static_cast<Eigen::Index>(cout)) += up.rowwise().sum();
                         if (gx) {
                           dcols.noalias() = cmap(self.parents[1]->value, cout, width).transpose() * up;
                           for (std::size_t c = 0; c < cin; ++c) {
                             double* dst = gx->data() + (b * cin + c) * len;
                             for (std::size_t tap = 0; tap < k; ++tap) {
                               const double* row = dcols.data() + (c * k + tap) * lout;
                               const auto [lo, hi] = ranges[tap];
                               for (std::size_t t = lo; t < hi; ++t) dst[t * stride + tap - pad] += row[t];
                             }
                           }
                         }
                       }
                     });
}

Tensor upsample_repeat(const Tensor& input, std::size_t factor) {
  require_defined(input, "upsample_repeat");
  if (factor < 1) throw std::invalid_argument("upsample_repeat: factor must be >= 1");
  if (input.rank() == 0) throw std::invalid_argument("upsample_repeat: scalar input");
  Shape shape = input.shape();
  const std::size_t len = shape.back();
  const std::size_t rows = input.numel() / len;
  shape.back() = len * factor;
  const auto& x = input.node()->value;
  Buffer out(rows * len * factor);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t t = 0; t < len; ++t) {
      for (std::size_t f = 0; f < factor; ++f) out[(r * len + t) * factor + f] = x[r * len + t];
    }
  }
  return make_result(std::move(shape), std::move(out), {&input}, [rows, len, factor](Node& self) {
    if (auto* g = parent_grad(self, 0)) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t t = 0; t < len; ++t) {
          double s = 0.0;
          for (std::size_t f = 0; f < factor; ++f) s += self.grad[(r * len + t) * factor + f];
          (*g)[r * len + t] += s;
        }
      }
    }
  });
}

Tensor factorized_product(const Tensor& time_features, const Tensor& latent_mats) {
  require_defined(time_features, "factorized_product");
  require_defined(latent_mats, "factorized_product");
  if (time_features.rank() != 3 || latent_mats.rank() != 3 || time_features.dim(2) != latent_mats.dim(2)) {
    throw std::invalid_argument("factorized_product: incompatible shapes " + shape_string(time_features.shape()) +
                                " and " + shape_string(latent_mats.shape()));
  }
  const std::size_t groups = time_features.dim(0), steps = time_features.dim(1), width = time_features.dim(2);
  const std::size_t nb = latent_mats.dim(0), n = latent_mats.dim(1);
  if (groups != 1 && groups != nb) throw std::invalid_argument("factorized_product: time batch must be 1 or B");
  Buffer out(nb * steps * n);
  const auto& tf = time_features.node()->value;
  const auto& lm = latent_mats.node()->value;
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t gi = groups == 1 ? 0 : b;
    map(out.data() + b * steps * n, steps, n).noalias() =
        cmap(tf.data() + gi * steps * width, steps, width) * cmap(lm.data() + b * n * width, n, width).transpose();
  }
  return make_result({nb, steps, n}, std::move(out), {&time_features, &latent_mats},
                     [groups, steps, width, nb, n](Node& self) {
                       const auto& tf = self.parents[0]->value;
                       const auto& lm = self.parents[1]->value;
                       auto* gt = parent_grad(self, 0);
                       auto* gl = parent_grad(self, 1);
                       for (std::size_t b = 0; b < nb; ++b) {
                         const std::size_t gi = groups == 1 ? 0 : b;
                         auto up = cmap(self.grad.data() + b * steps * n, steps, n);
                         if (gt) {
                           map(gt->data() + gi * steps * width, steps, width).noalias() +=
                               up * cmap(lm.data() + b * n * width, n, width);
                         }
                         if (gl) {
                           map(gl->data() + b * n * width, n, width).noalias() +=
                               up.transpose() * cmap(tf.data() + gi * steps * width, steps, width);
                         }
                       }
                     });
}

}  // namespace twvae
