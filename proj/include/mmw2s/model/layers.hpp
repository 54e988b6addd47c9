#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "mmw2s/model/params.hpp"

namespace mmw2s {

/// y = x W + b, row-wise. W is in x out.
struct Linear {
  std::size_t w = 0;
  std::size_t b = 0;
  bool has_bias = true;

  static Linear create(ParamStore& ps, const std::string& name, Eigen::Index in, Eigen::Index out, bool bias,
                       Rng& rng) {
    Linear l;
    l.w = ps.add(name + ".w", in, out);
    init_xavier(ps.mutable_value(l.w), rng);
    l.has_bias = bias;
    if (bias) l.b = ps.add(name + ".b", 1, out);
    return l;
  }

  Mat forward(const ParamStore& p, const Mat& x) const {
    Mat y = x * p[w];
    if (has_bias) y.rowwise() += p[b].row(0);
    return y;
  }

  Mat backward(const ParamStore& p, const Mat& x, const Mat& dy, Gradients& g) const {
    g[w].noalias() += x.transpose() * dy;
    if (has_bias) g[b] += dy.colwise().sum();
    return dy * p[w].transpose();
  }
};

namespace gelu_detail {
inline constexpr double kC = 0.7978845608028654;  // sqrt(2 / pi)
inline constexpr double kA = 0.044715;
}  // namespace gelu_detail

/// Tanh approximation of GELU.
inline double gelu(double x) {
  using namespace gelu_detail;
  return 0.5 * x * (1.0 + std::tanh(kC * (x + kA * x * x * x)));
}

inline double gelu_grad(double x) {
  using namespace gelu_detail;
  const double t = std::tanh(kC * (x + kA * x * x * x));
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * kC * (1.0 + 3.0 * kA * x * x);
}

inline Mat gelu(const Mat& x) {
  return x.unaryExpr([](double v) { return gelu(v); });
}

inline Mat gelu_backward(const Mat& x, const Mat& dy) {
  return dy.cwiseProduct(x.unaryExpr([](double v) { return gelu_grad(v); }));
}

struct LayerNorm {
  std::size_t gamma = 0;
  std::size_t beta = 0;
  double eps = 1e-5;

  struct Cache {
    Mat xhat;
    Eigen::VectorXd rstd;
  };

  static LayerNorm create(ParamStore& ps, const std::string& name, Eigen::Index d) {
    LayerNorm ln;
    ln.gamma = ps.add(name + ".gamma", 1, d);
    ps.mutable_value(ln.gamma).setOnes();
    ln.beta = ps.add(name + ".beta", 1, d);
    return ln;
  }

  Mat forward(const ParamStore& p, const Mat& x, Cache& c) const {
    const auto d = static_cast<double>(x.cols());
    c.xhat.resize(x.rows(), x.cols());
    c.rstd.resize(x.rows());
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      const double mean = x.row(r).sum() / d;
      const double var = (x.row(r).array() - mean).square().sum() / d;
      c.rstd(r) = 1.0 / std::sqrt(var + eps);
      c.xhat.row(r) = (x.row(r).array() - mean) * c.rstd(r);
    }
    Mat y = c.xhat.array().rowwise() * p[gamma].row(0).array();
    y.rowwise() += p[beta].row(0);
    return y;
  }

  Mat backward(const ParamStore& p, const Cache& c, const Mat& dy, Gradients& g) const {
    g[gamma] += dy.cwiseProduct(c.xhat).colwise().sum();
    g[beta] += dy.colwise().sum();
    const Mat dxhat = dy.array().rowwise() * p[gamma].row(0).array();
    const auto d = static_cast<double>(dy.cols());
    Mat dx(dy.rows(), dy.cols());
    for (Eigen::Index r = 0; r < dy.rows(); ++r) {
      const double m1 = dxhat.row(r).sum() / d;
      const double m2 = dxhat.row(r).dot(c.xhat.row(r)) / d;
      dx.row(r) = c.rstd(r) * (dxhat.row(r).array() - m1 - c.xhat.row(r).array() * m2);
    }
    return dx;
  }
};

/// Multi-head self-attention over all rows of x. The key projection has no
/// bias: it would only shift every score in a row equally.
struct MultiHeadAttention {
  Linear q, k, v, o;
  std::size_t n_heads = 1;

  struct Cache {
    Mat x, Q, K, V, C;
    /// Per-head attention weights, rows = queries.
    std::vector<Mat> P;
  };

  static MultiHeadAttention create(ParamStore& ps, const std::string& name, Eigen::Index d, std::size_t heads,
                                   Rng& rng) {
    MultiHeadAttention a;
    a.q = Linear::create(ps, name + ".q", d, d, true, rng);
    a.k = Linear::create(ps, name + ".k", d, d, false, rng);
    a.v = Linear::create(ps, name + ".v", d, d, true, rng);
    a.o = Linear::create(ps, name + ".o", d, d, true, rng);
    a.n_heads = heads;
    return a;
  }

  Mat forward(const ParamStore& p, const Mat& x, Cache& c) const {
    const Eigen::Index n = x.rows();
    const Eigen::Index dh = x.cols() / static_cast<Eigen::Index>(n_heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    c.x = x;
    c.Q = q.forward(p, x);
    c.K = k.forward(p, x);
    c.V = v.forward(p, x);
    c.C.resize(n, x.cols());
    c.P.resize(n_heads);
    for (std::size_t h = 0; h < n_heads; ++h) {
      const Eigen::Index off = static_cast<Eigen::Index>(h) * dh;
      Mat s = (c.Q.middleCols(off, dh) * c.K.middleCols(off, dh).transpose()) * scale;
      for (Eigen::Index r = 0; r < n; ++r) {
        const double mx = s.row(r).maxCoeff();
        s.row(r) = (s.row(r).array() - mx).exp();
        s.row(r) /= s.row(r).sum();
      }
      c.C.middleCols(off, dh).noalias() = s * c.V.middleCols(off, dh);
      c.P[h] = std::move(s);
    }
    return o.forward(p, c.C);
  }

  Mat backward(const ParamStore& p, const Cache& c, const Mat& dy, Gradients& g) const {
    const Eigen::Index n = c.x.rows();
    const Eigen::Index dh = c.x.cols() / static_cast<Eigen::Index>(n_heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    const Mat dC = o.backward(p, c.C, dy, g);
    Mat dQ(n, c.x.cols()), dK(n, c.x.cols()), dV(n, c.x.cols());
    for (std::size_t h = 0; h < n_heads; ++h) {
      const Eigen::Index off = static_cast<Eigen::Index>(h) * dh;
      const Mat& P = c.P[h];
      const Mat dP = dC.middleCols(off, dh) * c.V.middleCols(off, dh).transpose();
      dV.middleCols(off, dh).noalias() = P.transpose() * dC.middleCols(off, dh);
      Mat dS = P.cwiseProduct(dP);
      const Eigen::VectorXd row_dot = dS.rowwise().sum();
      dS -= P.cwiseProduct(row_dot.replicate(1, n));
      dS *= scale;
      dQ.middleCols(off, dh).noalias() = dS * c.K.middleCols(off, dh);
      dK.middleCols(off, dh).noalias() = dS.transpose() * c.Q.middleCols(off, dh);
    }
    Mat dx = q.backward(p, c.x, dQ, g);
    dx += k.backward(p, c.x, dK, g);
    dx += v.backward(p, c.x, dV, g);
    return dx;
  }
};

/// Pre-norm block: x + Attn(LN(x)), then + MLP(LN(.)).
struct TransformerBlock {
  LayerNorm ln1, ln2;
  MultiHeadAttention attn;
  Linear fc1, fc2;

  struct Cache {
    LayerNorm::Cache ln1, ln2;
    MultiHeadAttention::Cache attn;
    Mat h1, x1, h2, u, gu;
  };

  static TransformerBlock create(ParamStore& ps, const std::string& name, Eigen::Index d, std::size_t heads,
                                 std::size_t mlp_ratio, Rng& rng) {
    TransformerBlock b;
    b.ln1 = LayerNorm::create(ps, name + ".ln1", d);
    b.attn = MultiHeadAttention::create(ps, name + ".attn", d, heads, rng);
    b.ln2 = LayerNorm::create(ps, name + ".ln2", d);
    const auto hidden = d * static_cast<Eigen::Index>(mlp_ratio);
    b.fc1 = Linear::create(ps, name + ".fc1", d, hidden, true, rng);
    b.fc2 = Linear::create(ps, name + ".fc2", hidden, d, true, rng);
    return b;
  }

  Mat forward(const ParamStore& p, const Mat& x, Cache& c) const {
    c.h1 = ln1.forward(p, x, c.ln1);
    c.x1 = x + attn.forward(p, c.h1, c.attn);
    c.h2 = ln2.forward(p, c.x1, c.ln2);
    c.u = fc1.forward(p, c.h2);
    c.gu = gelu(c.u);
    return c.x1 + fc2.forward(p, c.gu);
  }

  Mat backward(const ParamStore& p, const Cache& c, const Mat& dy, Gradients& g) const {
    const Mat dgu = fc2.backward(p, c.gu, dy, g);
    const Mat dh2 = fc1.backward(p, c.h2, gelu_backward(c.u, dgu), g);
    const Mat dx1 = dy + ln2.backward(p, c.ln2, dh2, g);
    const Mat dh1 = attn.backward(p, c.attn, dx1, g);
    return dx1 + ln1.backward(p, c.ln1, dh1, g);
  }
};

/// 1-D convolution over time (rows) with "same" padding: ceil(n / stride)
/// outputs. Implemented as im2col followed by a Linear.
struct Conv1d {
  Linear lin;
  Eigen::Index in_channels = 0;
  Eigen::Index kernel = 3;
  Eigen::Index stride = 1;

  struct Cache {
    Mat cols;
    Eigen::Index n_in = 0;
  };

  static Conv1d create(ParamStore& ps, const std::string& name, Eigen::Index in, Eigen::Index out,
                       Eigen::Index kernel, Eigen::Index stride, Rng& rng) {
    Conv1d c;
    c.lin = Linear::create(ps, name, kernel * in, out, true, rng);
    c.in_channels = in;
    c.kernel = kernel;
    c.stride = stride;
    return c;
  }

  Eigen::Index output_length(Eigen::Index n) const { return (n + stride - 1) / stride; }
  Eigen::Index pad_left(Eigen::Index n) const {
    const Eigen::Index total = std::max<Eigen::Index>((output_length(n) - 1) * stride + kernel - n, 0);
    return total / 2;
  }

  Mat forward(const ParamStore& p, const Mat& x, Cache& c) const {
    const Eigen::Index n = x.rows();
    const Eigen::Index out = output_length(n);
    const Eigen::Index left = pad_left(n);
    c.n_in = n;
    c.cols = Mat::Zero(out, kernel * in_channels);
    for (Eigen::Index t = 0; t < out; ++t) {
      for (Eigen::Index j = 0; j < kernel; ++j) {
        const Eigen::Index src = t * stride + j - left;
        if (src >= 0 && src < n) c.cols.block(t, j * in_channels, 1, in_channels) = x.row(src);
      }
    }
    return lin.forward(p, c.cols);
  }

  Mat backward(const ParamStore& p, const Cache& c, const Mat& dy, Gradients& g) const {
    const Mat dcols = lin.backward(p, c.cols, dy, g);
    const Eigen::Index left = pad_left(c.n_in);
    Mat dx = Mat::Zero(c.n_in, in_channels);
    for (Eigen::Index t = 0; t < dcols.rows(); ++t) {
      for (Eigen::Index j = 0; j < kernel; ++j) {
        const Eigen::Index src = t * stride + j - left;
        if (src >= 0 && src < c.n_in) dx.row(src) += dcols.block(t, j * in_channels, 1, in_channels);
      }
    }
    return dx;
  }
};

/// Standard sinusoidal position table, n x d.
inline Mat sinusoidal_positions(Eigen::Index n, Eigen::Index d) {
  Mat pe(n, d);
  for (Eigen::Index pos = 0; pos < n; ++pos) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(d));
      pe(pos, i) = (i % 2 == 0) ? std::sin(static_cast<double>(pos) * rate) : std::cos(static_cast<double>(pos) * rate);
    }
  }
  return pe;
}

}  // namespace mmw2s
