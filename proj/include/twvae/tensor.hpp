#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace twvae {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

// Eigen's vectorized reductions peel a head whose length depends on the
// buffer address; a fixed 64-byte alignment keeps results run-to-run identical.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};
  AlignedAllocator() = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) {}
  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlign)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, kAlign); }
  template <class U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

struct Node {
  Shape shape;
  Buffer value;
  Buffer grad;  // allocated lazily, same length as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  Buffer& grad_buffer() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
    return grad;
  }
};

}  // namespace detail

/// Dense row-major array of doubles that records the operations producing it
/// so that gradients can be pulled back with backward(). Copies share the
/// underlying storage; values are immutable once a tensor participates in a
/// graph, except through mutable_values() on leaves (optimizer updates).
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;
  bool requires_grad() const;

  std::span<const double> values() const;
  std::span<double> mutable_values();
  double item() const;
  double operator[](std::size_t flat_index) const { return values()[flat_index]; }

  /// Gradient accumulated by the last backward(); zeros if none reached it.
  std::vector<double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad();

  /// Same values, no history, no gradient tracking.
  Tensor detach() const;

  const std::shared_ptr<detail::Node>& node() const { return node_; }
  static Tensor from_node(std::shared_ptr<detail::Node> node);

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Reverse-mode sweep from a scalar root. Gradients of every reachable leaf
/// that requires grad are reset and then set to d(root)/d(leaf).
void backward(const Tensor& root);

/// Throws std::domain_error naming `context` when any value is NaN or Inf.
void check_finite(const Tensor& t, const std::string& context);

// Elementwise and structural operations. Binary elementwise operations need
// identical shapes; nothing broadcasts implicitly.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double offset);
Tensor square(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor elu(const Tensor& a, double alpha = 1.0);
/// Gradient is zero where the input lies outside [lo, hi].
Tensor clamp(const Tensor& a, double lo, double hi);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor dot(const Tensor& a, const Tensor& b);
/// Sums each row of a [rows x cols] view of `a` (the last axis is the column
/// axis) giving shape [rows].
Tensor sum_last(const Tensor& a);

Tensor reshape(const Tensor& a, Shape shape);
/// [B x P x Q] -> [B x Q x P].
Tensor swap_last2(const Tensor& a);
/// [R x C] indexed by row -> [indices.size() x C]. Gradients scatter-add.
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> rows);

/// Softmax along the last axis.
Tensor softmax(const Tensor& a);

/// [M x K] * [K x N].
Tensor matmul(const Tensor& a, const Tensor& b);
/// x [B x in], weight [out x in], bias [out] -> [B x out].
Tensor fully_connected(const Tensor& x, const Tensor& weight, const Tensor& bias);

/// 1-D convolution over the last axis with zero padding of (k-1)/2 on both
/// sides. input [C_in x T] or [B x C_in x T]; kernels [C_out x C_in x k];
/// optional bias [C_out]. Output length floor((T + 2*pad - k)/stride) + 1.
Tensor conv1d(const Tensor& input, const Tensor& kernels, std::size_t stride,
              const Tensor& bias = Tensor());

/// Repeats every element along the last axis `factor` times.
Tensor upsample_repeat(const Tensor& input, std::size_t factor);

/// time_features [G x T x m] with G == 1 (shared) or G == B, latent_mats
/// [B x n x m] -> [B x T x n] with out[b,t,i] = sum_k latent[b,i,k] * time[g,t,k].
Tensor factorized_product(const Tensor& time_features, const Tensor& latent_mats);

}  // namespace twvae
