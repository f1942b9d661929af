#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tridef {

/// Feed-forward architecture description. The default profile used by the
/// agent is hidden sizes {64, 256, 512} with layer normalization, ReLU
/// hidden activations and a linear (critic) or tanh-bounded (actor) head.
struct NetworkSpec {
  int input_dim = 13;
  std::vector<int> hidden = {64, 256, 512};
  int output_dim = 1;
  bool tanh_head = false;
  bool layer_norm = true;

  bool operator==(const NetworkSpec&) const = default;
  void validate() const;
};

/// Dense network with exact reverse-mode gradients. Parameters live in one
/// flat vector (per hidden layer: weight, bias, norm gain, norm offset;
/// then head weight and bias) so the optimizer, soft updates and
/// checkpoints can treat the network as a single array.
///
/// Instantiated for double (reference/tests/checkpoints) and float
/// (training hot path); reductions and norm statistics accumulate in
/// double in both instantiations.
template <typename Scalar>
class Mlp {
 public:
  Mlp() = default;
  Mlp(const NetworkSpec& spec, std::uint64_t seed);

  const NetworkSpec& spec() const { return spec_; }
  std::size_t param_count() const { return params_.size(); }
  std::span<Scalar> params() { return params_; }
  std::span<const Scalar> params() const { return params_; }

  /// Single-sample inference.
  void forward(std::span<const Scalar> input, std::span<Scalar> output) const;
  std::vector<Scalar> forward(std::span<const Scalar> input) const;

  /// Forward/backward workspace; reusable across batches of the same size.
  struct Batch {
    int n = 0;
    std::vector<Scalar> input;                  // n x in
    std::vector<std::vector<Scalar>> zhat;      // per layer: n x h normalized pre-activation
    std::vector<std::vector<Scalar>> inv_std;   // per layer: n (0 when variance degenerate)
    std::vector<std::vector<Scalar>> act;       // per layer: n x h post-activation
    std::vector<Scalar> out;                    // n x out
    std::vector<Scalar> scratch_a, scratch_b;   // gradient propagation buffers
  };

  void forward_batch(const Scalar* input, int n, Batch& ws) const;

  /// Reverse pass for the batch held in ws. dout is n x output_dim and is
  /// consumed as given (include any 1/n loss scaling in it). When grad is
  /// non-null, parameter gradients are accumulated into it (param_count
  /// length); when dinput is non-null, input gradients (n x input_dim) are
  /// written. Passing grad = nullptr skips the weight-gradient work, which
  /// is what the policy update wants when chaining through the critic.
  void backward_batch(const Scalar* dout, Batch& ws, Scalar* grad, Scalar* dinput) const;

 private:
  struct LayerView {
    std::size_t w, b, gain, offset;  // offsets into the flat parameter vector
    int in, out;
  };
  LayerView layer(std::size_t i) const;  // hidden layers then head

  NetworkSpec spec_;
  std::vector<Scalar> params_;
  std::size_t n_layers_ = 0;  // hidden + 1
};

/// Adaptive-moment optimizer over a flat parameter array. Moments are kept
/// in double regardless of the parameter scalar.
template <typename Scalar>
class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(std::size_t n, double lr) : lr_(lr), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::span<Scalar> params, std::span<const Scalar> grad);

  double lr() const { return lr_; }
  long step_count() const { return t_; }

  // serialized state
  std::vector<double>& first_moment() { return m_; }
  std::vector<double>& second_moment() { return v_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }
  void restore(long t) { t_ = t; }

  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

 private:
  double lr_ = 3e-4;
  long t_ = 0;
  std::vector<double> m_, v_;
};

namespace linalg {
/// C = alpha * op(A) @ op(B) + beta * C, row-major. Backed by CBLAS when
/// available, otherwise by a portable kernel.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a,
          int lda, const double* b, int ldb, double beta, double* c, int ldc);
void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha, const float* a,
          int lda, const float* b, int ldb, float beta, float* c, int ldc);
}  // namespace linalg

}  // namespace tridef
