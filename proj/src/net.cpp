#include "tridef/net.hpp"

#include "tridef/engagement.hpp"  // ConfigError
#include "tridef/rng.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#ifdef TRIDEF_HAVE_CBLAS
#include <cblas.h>
#endif

namespace tridef {

void NetworkSpec::validate() const {
  if (input_dim <= 0 || output_dim <= 0) throw ConfigError("network dims must be > 0");
  for (int h : hidden)
    if (h <= 0) throw ConfigError("hidden sizes must be > 0");
}

namespace linalg {

#ifdef TRIDEF_HAVE_CBLAS
void gemm(bool ta, bool tb, int m, int n, int k, double alpha, const double* a, int lda,
          const double* b, int ldb, double beta, double* c, int ldc) {
  cblas_dgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans,
              m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}
void gemm(bool ta, bool tb, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc) {
  cblas_sgemm(CblasRowMajor, ta ? CblasTrans : CblasNoTrans, tb ? CblasTrans : CblasNoTrans,
              m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}
#else
namespace {
template <typename S>
void gemm_naive(bool ta, bool tb, int m, int n, int k, S alpha, const S* a, int lda,
                const S* b, int ldb, S beta, S* c, int ldc) {
  auto at = [&](int i, int l) { return ta ? a[l * lda + i] : a[i * lda + l]; };
  auto bt = [&](int l, int j) { return tb ? b[j * ldb + l] : b[l * ldb + j]; };
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) c[i * ldc + j] *= beta;
    for (int l = 0; l < k; ++l) {
      const S av = alpha * at(i, l);
      if (av == S(0)) continue;
      for (int j = 0; j < n; ++j) c[i * ldc + j] += av * bt(l, j);
    }
  }
}
}  // namespace
void gemm(bool ta, bool tb, int m, int n, int k, double alpha, const double* a, int lda,
          const double* b, int ldb, double beta, double* c, int ldc) {
  gemm_naive(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}
void gemm(bool ta, bool tb, int m, int n, int k, float alpha, const float* a, int lda,
          const float* b, int ldb, float beta, float* c, int ldc) {
  gemm_naive(ta, tb, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
}
#endif

}  // namespace linalg

template <typename Scalar>
typename Mlp<Scalar>::LayerView Mlp<Scalar>::layer(std::size_t i) const {
  LayerView v{};
  std::size_t off = 0;
  int in = spec_.input_dim;
  for (std::size_t l = 0; l < spec_.hidden.size(); ++l) {
    const int out = spec_.hidden[l];
    if (l == i) {
      v = {off, off + std::size_t(out) * in, off + std::size_t(out) * in + out,
           off + std::size_t(out) * in + 2 * std::size_t(out), in, out};
      return v;
    }
    off += std::size_t(out) * in + 3 * std::size_t(out);
    in = out;
  }
  // head
  return {off, off + std::size_t(spec_.output_dim) * in, 0, 0, in, spec_.output_dim};
}

template <typename Scalar>
Mlp<Scalar>::Mlp(const NetworkSpec& spec, std::uint64_t seed) : spec_(spec) {
  spec_.validate();
  n_layers_ = spec_.hidden.size() + 1;
  std::size_t count = 0;
  int in = spec_.input_dim;
  for (int h : spec_.hidden) {
    count += std::size_t(h) * in + 3 * std::size_t(h);
    in = h;
  }
  count += std::size_t(spec_.output_dim) * in + spec_.output_dim;
  params_.assign(count, Scalar(0));

  Rng rng(seed);
  in = spec_.input_dim;
  for (std::size_t l = 0; l < n_layers_; ++l) {
    const auto v = layer(l);
    const bool head = l + 1 == n_layers_;
    const double bound = 1.0 / std::sqrt(double(v.in));
    const double scale = (head && spec_.tanh_head) ? 0.01 : 1.0;
    for (int i = 0; i < v.out * v.in; ++i)
      params_[v.w + i] = Scalar(scale * rng.uniform(-bound, bound));
    for (int i = 0; i < v.out; ++i)
      params_[v.b + i] = Scalar(scale * rng.uniform(-bound, bound));
    if (!head && spec_.layer_norm) {
      for (int i = 0; i < v.out; ++i) {
        params_[v.gain + i] = Scalar(1);
        params_[v.offset + i] = Scalar(0);
      }
    }
  }
}

namespace {
constexpr double kNormFloor = 1e-12;
}

template <typename Scalar>
void Mlp<Scalar>::forward_batch(const Scalar* input, int n, Batch& ws) const {
  const std::size_t n_hidden = spec_.hidden.size();
  ws.n = n;
  ws.input.assign(input, input + std::size_t(n) * spec_.input_dim);
  ws.zhat.resize(n_hidden);
  ws.inv_std.resize(n_hidden);
  ws.act.resize(n_hidden);

  const Scalar* x = ws.input.data();
  int in = spec_.input_dim;
  for (std::size_t l = 0; l < n_hidden; ++l) {
    const auto v = layer(l);
    auto& z = ws.zhat[l];
    auto& a = ws.act[l];
    auto& is = ws.inv_std[l];
    z.assign(std::size_t(n) * v.out, Scalar(0));
    a.assign(std::size_t(n) * v.out, Scalar(0));
    is.assign(n, Scalar(0));

    // z = x @ W^T (+ bias folded in below)
    linalg::gemm(false, true, n, v.out, v.in, Scalar(1), x, v.in, &params_[v.w], v.in,
                 Scalar(0), a.data(), v.out);
    for (int r = 0; r < n; ++r) {
      Scalar* row = a.data() + std::size_t(r) * v.out;
      for (int j = 0; j < v.out; ++j) row[j] += params_[v.b + j];
    }

    if (spec_.layer_norm) {
      for (int r = 0; r < n; ++r) {
        Scalar* row = a.data() + std::size_t(r) * v.out;
        Scalar* zr = z.data() + std::size_t(r) * v.out;
        double mean = 0.0;
        for (int j = 0; j < v.out; ++j) mean += double(row[j]);
        mean /= v.out;
        double var = 0.0;
        for (int j = 0; j < v.out; ++j) {
          const double d = double(row[j]) - mean;
          var += d * d;
        }
        var /= v.out;
        const double istd = var < kNormFloor ? 0.0 : 1.0 / std::sqrt(var);
        is[r] = Scalar(istd);
        for (int j = 0; j < v.out; ++j) {
          const Scalar zh = Scalar((double(row[j]) - mean) * istd);
          zr[j] = zh;
          const Scalar pre = params_[v.gain + j] * zh + params_[v.offset + j];
          row[j] = pre > Scalar(0) ? pre : Scalar(0);  // relu
        }
      }
    } else {
      for (std::size_t i = 0; i < a.size(); ++i) {
        z[i] = a[i];
        a[i] = a[i] > Scalar(0) ? a[i] : Scalar(0);
      }
    }
    x = a.data();
    in = v.out;
  }

  const auto head = layer(n_hidden);
  ws.out.assign(std::size_t(n) * head.out, Scalar(0));
  linalg::gemm(false, true, n, head.out, head.in, Scalar(1), x, head.in, &params_[head.w],
               head.in, Scalar(0), ws.out.data(), head.out);
  for (int r = 0; r < n; ++r) {
    Scalar* row = ws.out.data() + std::size_t(r) * head.out;
    for (int j = 0; j < head.out; ++j) {
      row[j] += params_[head.b + j];
      if (spec_.tanh_head) row[j] = std::tanh(row[j]);
    }
  }
  (void)in;
}

template <typename Scalar>
void Mlp<Scalar>::backward_batch(const Scalar* dout, Batch& ws, Scalar* grad,
                                 Scalar* dinput) const {
  const int n = ws.n;
  const std::size_t n_hidden = spec_.hidden.size();
  const auto head = layer(n_hidden);

  auto& cur = ws.scratch_a;   // gradient w.r.t. current layer output
  auto& prev = ws.scratch_b;  // gradient w.r.t. layer input
  cur.assign(std::size_t(n) * head.out, Scalar(0));

  // head (tanh or identity)
  for (int r = 0; r < n; ++r) {
    for (int j = 0; j < head.out; ++j) {
      const std::size_t k = std::size_t(r) * head.out + j;
      Scalar g = dout[k];
      if (spec_.tanh_head) {
        const Scalar y = ws.out[k];
        g *= (Scalar(1) - y * y);
      }
      cur[k] = g;
    }
  }

  const Scalar* head_in = n_hidden ? ws.act[n_hidden - 1].data() : ws.input.data();
  if (grad) {
    linalg::gemm(true, false, head.out, head.in, n, Scalar(1), cur.data(), head.out,
                 head_in, head.in, Scalar(1), grad + head.w, head.in);
    for (int r = 0; r < n; ++r)
      for (int j = 0; j < head.out; ++j)
        grad[head.b + j] += cur[std::size_t(r) * head.out + j];
  }
  prev.assign(std::size_t(n) * head.in, Scalar(0));
  linalg::gemm(false, false, n, head.in, head.out, Scalar(1), cur.data(), head.out,
               &params_[head.w], head.in, Scalar(0), prev.data(), head.in);
  std::swap(cur, prev);

  for (std::size_t li = n_hidden; li-- > 0;) {
    const auto v = layer(li);
    auto& z = ws.zhat[li];
    auto& a = ws.act[li];
    auto& is = ws.inv_std[li];

    // relu then layer norm, in place on cur (n x v.out)
    for (int r = 0; r < n; ++r) {
      Scalar* g = cur.data() + std::size_t(r) * v.out;
      const Scalar* ar = a.data() + std::size_t(r) * v.out;
      const Scalar* zr = z.data() + std::size_t(r) * v.out;
      for (int j = 0; j < v.out; ++j)
        if (ar[j] <= Scalar(0)) g[j] = Scalar(0);

      if (spec_.layer_norm) {
        if (grad) {
          for (int j = 0; j < v.out; ++j) {
            grad[v.gain + j] += g[j] * zr[j];
            grad[v.offset + j] += g[j];
          }
        }
        // d z = istd * (d zhat - mean(d zhat) - zhat * mean(d zhat * zhat))
        double m1 = 0.0, m2 = 0.0;
        for (int j = 0; j < v.out; ++j) {
          const double dz = double(g[j]) * double(params_[v.gain + j]);
          m1 += dz;
          m2 += dz * double(zr[j]);
        }
        m1 /= v.out;
        m2 /= v.out;
        const double istd = double(is[r]);
        for (int j = 0; j < v.out; ++j) {
          const double dz = double(g[j]) * double(params_[v.gain + j]);
          g[j] = Scalar(istd * (dz - m1 - double(zr[j]) * m2));
        }
      }
    }

    const Scalar* lin = li == 0 ? ws.input.data() : ws.act[li - 1].data();
    if (grad) {
      linalg::gemm(true, false, v.out, v.in, n, Scalar(1), cur.data(), v.out, lin, v.in,
                   Scalar(1), grad + v.w, v.in);
      for (int r = 0; r < n; ++r)
        for (int j = 0; j < v.out; ++j) grad[v.b + j] += cur[std::size_t(r) * v.out + j];
    }
    const bool need_dx = li > 0 || dinput != nullptr;
    if (need_dx) {
      prev.assign(std::size_t(n) * v.in, Scalar(0));
      linalg::gemm(false, false, n, v.in, v.out, Scalar(1), cur.data(), v.out,
                   &params_[v.w], v.in, Scalar(0), prev.data(), v.in);
      std::swap(cur, prev);
    }
  }
  if (dinput) std::memcpy(dinput, cur.data(), sizeof(Scalar) * std::size_t(n) * spec_.input_dim);
}

template <typename Scalar>
void Mlp<Scalar>::forward(std::span<const Scalar> input, std::span<Scalar> output) const {
  if (int(input.size()) != spec_.input_dim || int(output.size()) != spec_.output_dim)
    throw std::invalid_argument("mlp forward: dimension mismatch");
  thread_local std::vector<Scalar> buf_a, buf_b;
  const std::size_t n_hidden = spec_.hidden.size();
  buf_a.assign(input.begin(), input.end());

  for (std::size_t l = 0; l < n_hidden; ++l) {
    const auto v = layer(l);
    buf_b.assign(v.out, Scalar(0));
    for (int j = 0; j < v.out; ++j) {
      double acc = double(params_[v.b + j]);
      const Scalar* wr = &params_[v.w + std::size_t(j) * v.in];
      for (int i = 0; i < v.in; ++i) acc += double(wr[i]) * double(buf_a[i]);
      buf_b[j] = Scalar(acc);
    }
    if (spec_.layer_norm) {
      double mean = 0.0;
      for (int j = 0; j < v.out; ++j) mean += double(buf_b[j]);
      mean /= v.out;
      double var = 0.0;
      for (int j = 0; j < v.out; ++j) {
        const double d = double(buf_b[j]) - mean;
        var += d * d;
      }
      var /= v.out;
      const double istd = var < kNormFloor ? 0.0 : 1.0 / std::sqrt(var);
      for (int j = 0; j < v.out; ++j) {
        const Scalar zh = Scalar((double(buf_b[j]) - mean) * istd);
        buf_b[j] = params_[v.gain + j] * zh + params_[v.offset + j];
      }
    }
    for (int j = 0; j < v.out; ++j) buf_b[j] = buf_b[j] > Scalar(0) ? buf_b[j] : Scalar(0);
    std::swap(buf_a, buf_b);
  }

  const auto head = layer(n_hidden);
  for (int j = 0; j < head.out; ++j) {
    double acc = double(params_[head.b + j]);
    const Scalar* wr = &params_[head.w + std::size_t(j) * head.in];
    for (int i = 0; i < head.in; ++i) acc += double(wr[i]) * double(buf_a[i]);
    output[j] = spec_.tanh_head ? Scalar(std::tanh(acc)) : Scalar(acc);
  }
}

template <typename Scalar>
std::vector<Scalar> Mlp<Scalar>::forward(std::span<const Scalar> input) const {
  std::vector<Scalar> out(spec_.output_dim);
  forward(input, out);
  return out;
}

template <typename Scalar>
void AdamOptimizer<Scalar>::step(std::span<Scalar> params, std::span<const Scalar> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw std::invalid_argument("adam: size mismatch");
  ++t_;
  const double bc1 = 1.0 - std::pow(kBeta1, double(t_));
  const double bc2 = 1.0 - std::pow(kBeta2, double(t_));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    const double g = double(grad[i]);
    m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * g;
    v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * g * g;
    const double mhat = m_[i] / bc1;
    const double vhat = v_[i] / bc2;
    params[i] = Scalar(double(params[i]) - lr_ * mhat / (std::sqrt(vhat) + kEps));
  }
}

template class Mlp<double>;
template class Mlp<float>;
template class AdamOptimizer<double>;
template class AdamOptimizer<float>;

}  // namespace tridef
