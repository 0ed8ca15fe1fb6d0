/* Copyright 2026 The nuclass Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "layers.hpp"

#include <cmath>
#include <cstring>

#include <fmt/format.h>

namespace nuclass {

namespace {

constexpr double kNormEps = 1e-5;

// 64-byte SIMD vectors via the GCC/Clang vector extension.
template <class Real>
struct VecType;
template <>
struct VecType<float> {
  typedef float type __attribute__((vector_size(64)));
};
template <>
struct VecType<double> {
  typedef double type __attribute__((vector_size(64)));
};

template <class Real>
struct Simd {
  using V = typename VecType<Real>::type;
  static constexpr int lanes = 64 / sizeof(Real);
  static V load(const Real* p) {
    V v;
    std::memcpy(&v, p, sizeof(V));
    return v;
  }
  static V load_partial(const Real* p, int n) {
    V v = {};
    std::memcpy(&v, p, sizeof(Real) * n);
    return v;
  }
  static void store(Real* p, V v) { std::memcpy(p, &v, sizeof(V)); }
  static Real sum(V v) {
    Real s = 0;
    for (int l = 0; l < lanes; ++l) s += v[l];
    return s;
  }
};

constexpr int kCoBlock = 4;

// NCO output channels x NV vectors of adjacent columns, accumulators in registers.
template <int NCO, int NV, class Real>
inline void correlate_tile(const Real* P, int cin, std::size_t plane, int Wp, const Real* w, std::size_t w_co_stride,
                           int k, Real* out, std::size_t out_co_stride) {
  using S = Simd<Real>;
  using V = typename S::V;
  V acc[NCO][NV] = {};
  const int kk = k * k;
  for (int ci = 0; ci < cin; ++ci) {
    const Real* pc = P + ci * plane;
    const Real* wc = w + static_cast<std::size_t>(ci) * kk;
    for (int ky = 0; ky < k; ++ky) {
      const Real* prow = pc + static_cast<std::size_t>(ky) * Wp;
      const Real* wrow = wc + ky * k;
      for (int kx = 0; kx < k; ++kx) {
        V v[NV];
        for (int j = 0; j < NV; ++j) v[j] = S::load(prow + kx + j * S::lanes);
        for (int b = 0; b < NCO; ++b) {
          const Real wv = wrow[b * w_co_stride + kx];
          for (int j = 0; j < NV; ++j) acc[b][j] += wv * v[j];
        }
      }
    }
  }
  for (int b = 0; b < NCO; ++b)
    for (int j = 0; j < NV; ++j) S::store(out + b * out_co_stride + j * S::lanes, acc[b][j]);
}

template <int NV, class Real>
inline void correlate_tile_dispatch(int nco, const Real* P, int cin, std::size_t plane, int Wp, const Real* w,
                                    std::size_t w_co_stride, int k, Real* out, std::size_t out_co_stride) {
  switch (nco) {
    case 4: correlate_tile<4, NV>(P, cin, plane, Wp, w, w_co_stride, k, out, out_co_stride); break;
    case 3: correlate_tile<3, NV>(P, cin, plane, Wp, w, w_co_stride, k, out, out_co_stride); break;
    case 2: correlate_tile<2, NV>(P, cin, plane, Wp, w, w_co_stride, k, out, out_co_stride); break;
    default: correlate_tile<1, NV>(P, cin, plane, Wp, w, w_co_stride, k, out, out_co_stride); break;
  }
}

// out[co][y][x] = sum w[co][ci][ky][kx] * P[ci][y*rs + ky][x + kx]
template <class Real>
void correlate(const Real* P, int cin, int Hp, int Wp, const Real* w, int cout, int k, int rs, Real* out, int Ho,
               int Wo) {
  constexpr int L = Simd<Real>::lanes;
  const std::size_t plane = static_cast<std::size_t>(Hp) * Wp;
  const std::size_t w_co_stride = static_cast<std::size_t>(cin) * k * k;
  const std::size_t out_plane = static_cast<std::size_t>(Ho) * Wo;
  for (int co0 = 0; co0 < cout; co0 += kCoBlock) {
    const int nco = std::min(kCoBlock, cout - co0);
    const Real* wb = w + co0 * w_co_stride;
    for (int y = 0; y < Ho; ++y) {
      const Real* prow = P + static_cast<std::size_t>(y) * rs * Wp;
      Real* orow = out + co0 * out_plane + static_cast<std::size_t>(y) * Wo;
      int x0 = 0;
      for (; x0 + 2 * L <= Wo; x0 += 2 * L)
        correlate_tile_dispatch<2>(nco, prow + x0, cin, plane, Wp, wb, w_co_stride, k, orow + x0, out_plane);
      for (; x0 + L <= Wo; x0 += L)
        correlate_tile_dispatch<1>(nco, prow + x0, cin, plane, Wp, wb, w_co_stride, k, orow + x0, out_plane);
      if (x0 < Wo && Wo >= L) {
        // Overlapping last tile recomputes a few columns instead of a scalar tail.
        x0 = Wo - L;
        correlate_tile_dispatch<1>(nco, prow + x0, cin, plane, Wp, wb, w_co_stride, k, orow + x0, out_plane);
        x0 = Wo;
      }
      for (int b = 0; b < nco; ++b)
        for (int x = x0; x < Wo; ++x) {
          Real acc = 0;
          for (int ci = 0; ci < cin; ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx)
                acc += wb[b * w_co_stride + (ci * k + ky) * k + kx] * prow[ci * plane + ky * Wp + x + kx];
          orow[b * out_plane + x] = acc;
        }
    }
  }
}

// dW[co][ci][ky][kx] += sum_y sum_x G[co][y][x] * P[ci][y + ky][x + kx] for one
// channel block and tap row; the K taps of the row stay in registers.
template <int NCO, int K, class Real>
void weight_grad_row(const Real* Pc, int Wp, const Real* G, std::size_t g_plane, int Ho, int Wo, int ky, Real* dw,
                     std::size_t dw_co_stride) {
  using S = Simd<Real>;
  using V = typename S::V;
  constexpr int L = S::lanes;
  V acc[NCO][K] = {};
  const int xfull = Wo - Wo % L;
  const int rem = Wo - xfull;
  for (int y = 0; y < Ho; ++y) {
    const Real* prow = Pc + static_cast<std::size_t>(y + ky) * Wp;
    const Real* grow = G + static_cast<std::size_t>(y) * Wo;
    for (int x0 = 0; x0 < xfull; x0 += L) {
      V g[NCO];
      for (int b = 0; b < NCO; ++b) g[b] = S::load(grow + b * g_plane + x0);
      for (int kx = 0; kx < K; ++kx) {
        const V v = S::load(prow + x0 + kx);
        for (int b = 0; b < NCO; ++b) acc[b][kx] += g[b] * v;
      }
    }
    if (rem) {
      V g[NCO];
      for (int b = 0; b < NCO; ++b) g[b] = S::load_partial(grow + b * g_plane + xfull, rem);
      for (int kx = 0; kx < K; ++kx) {
        const V v = S::load_partial(prow + xfull + kx, rem);
        for (int b = 0; b < NCO; ++b) acc[b][kx] += g[b] * v;
      }
    }
  }
  for (int b = 0; b < NCO; ++b)
    for (int kx = 0; kx < K; ++kx) dw[b * dw_co_stride + ky * K + kx] += S::sum(acc[b][kx]);
}

template <int K, class Real>
void weight_grad_k(const Real* P, int cin, int Hp, int Wp, int cout, const Real* G, int Ho, int Wo, Real* dW) {
  const std::size_t plane = static_cast<std::size_t>(Hp) * Wp;
  const std::size_t g_plane = static_cast<std::size_t>(Ho) * Wo;
  const std::size_t co_stride = static_cast<std::size_t>(cin) * K * K;
  for (int ci = 0; ci < cin; ++ci)
    for (int co0 = 0; co0 < cout; co0 += 2) {
      Real* dw = dW + co0 * co_stride + static_cast<std::size_t>(ci) * K * K;
      const Real* g = G + co0 * g_plane;
      for (int ky = 0; ky < K; ++ky) {
        if (cout - co0 >= 2)
          weight_grad_row<2, K>(P + ci * plane, Wp, g, g_plane, Ho, Wo, ky, dw, co_stride);
        else
          weight_grad_row<1, K>(P + ci * plane, Wp, g, g_plane, Ho, Wo, ky, dw, co_stride);
      }
    }
}

template <class Real>
void weight_grad_generic(const Real* P, int cin, int Hp, int Wp, int cout, int k, const Real* G, int Ho, int Wo,
                         Real* dW) {
  const std::size_t plane = static_cast<std::size_t>(Hp) * Wp;
  for (int co = 0; co < cout; ++co)
    for (int ci = 0; ci < cin; ++ci)
      for (int ky = 0; ky < k; ++ky)
        for (int kx = 0; kx < k; ++kx) {
          Real acc = 0;
          for (int y = 0; y < Ho; ++y)
            for (int x = 0; x < Wo; ++x)
              acc += G[(static_cast<std::size_t>(co) * Ho + y) * Wo + x] * P[ci * plane + (y + ky) * Wp + x + kx];
          dW[((static_cast<std::size_t>(co) * cin + ci) * k + ky) * k + kx] += acc;
        }
}

// Adjoint of a stride-1 correlate: dW += G (x) P, and dP = full correlation
// of G with the flipped, channel-transposed kernel.
template <class Real>
void correlate_backward(const Real* P, int cin, int Hp, int Wp, const Real* w, int cout, int k, const Real* G,
                        int Ho, int Wo, Real* dW, Real* dP) {
  switch (k) {
    case 1: weight_grad_k<1>(P, cin, Hp, Wp, cout, G, Ho, Wo, dW); break;
    case 3: weight_grad_k<3>(P, cin, Hp, Wp, cout, G, Ho, Wo, dW); break;
    case 5: weight_grad_k<5>(P, cin, Hp, Wp, cout, G, Ho, Wo, dW); break;
    case 7: weight_grad_k<7>(P, cin, Hp, Wp, cout, G, Ho, Wo, dW); break;
    default: weight_grad_generic(P, cin, Hp, Wp, cout, k, G, Ho, Wo, dW); break;
  }
  if (!dP) return;
  const int e = k - 1;
  const int Hg = Ho + 2 * e, Wg = Wo + 2 * e;
  std::vector<Real> gpad(static_cast<std::size_t>(cout) * Hg * Wg + Simd<Real>::lanes, Real(0));
  for (int co = 0; co < cout; ++co)
    for (int y = 0; y < Ho; ++y)
      std::copy_n(G + (static_cast<std::size_t>(co) * Ho + y) * Wo, Wo,
                  gpad.data() + (static_cast<std::size_t>(co) * Hg + y + e) * Wg + e);
  std::vector<Real> wt(static_cast<std::size_t>(cin) * cout * k * k);
  for (int co = 0; co < cout; ++co)
    for (int ci = 0; ci < cin; ++ci)
      for (int t = 0; t < k * k; ++t)
        wt[(static_cast<std::size_t>(ci) * cout + co) * k * k + (k * k - 1 - t)] =
            w[(static_cast<std::size_t>(co) * cin + ci) * k * k + t];
  correlate(gpad.data(), cout, Hg, Wg, wt.data(), cin, k, 1, dP, Hp, Wp);
}

template <class Real>
BasicTensor<Real> prepare_input(const ConvSpec& s, const BasicTensor<Real>& in) {
  const int H = in.height(), W = in.width(), C = in.channels();
  if (s.transpose) {
    const int q = s.kernel - 1 - s.padding;
    BasicTensor<Real> P(Shape{C, 2 * H + 2 * q, 2 * W + 2 * q});
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) P.at(c, q + 2 * y, q + 2 * x) = in.at(c, y, x);
    return P;
  }
  const int p = s.padding;
  if (p == 0) return in;
  BasicTensor<Real> P(Shape{C, H + 2 * p, W + 2 * p});
  std::vector<int> cols(W + 2 * p);
  for (int x = 0; x < W + 2 * p; ++x) cols[x] = reflect_index(x - p, W);
  for (int c = 0; c < C; ++c)
    for (int r = 0; r < H + 2 * p; ++r) {
      const Real* src = &in.at(c, reflect_index(r - p, H), 0);
      Real* dst = &P.at(c, r, 0);
      std::copy_n(src, W, dst + p);
      for (int x = 0; x < p; ++x) dst[x] = src[cols[x]];
      for (int x = W + p; x < W + 2 * p; ++x) dst[x] = src[cols[x]];
    }
  return P;
}

template <class Real>
BasicTensor<Real> fold_input_grad(const ConvSpec& s, const BasicTensor<Real>& dP, const Shape& in_shape) {
  const int H = in_shape.height, W = in_shape.width, C = in_shape.channels;
  BasicTensor<Real> dX(in_shape);
  if (s.transpose) {
    const int q = s.kernel - 1 - s.padding;
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) dX.at(c, y, x) = dP.at(c, q + 2 * y, q + 2 * x);
    return dX;
  }
  const int p = s.padding;
  if (p == 0) return dP;
  std::vector<int> cols(W + 2 * p);
  for (int x = 0; x < W + 2 * p; ++x) cols[x] = reflect_index(x - p, W);
  for (int c = 0; c < C; ++c)
    for (int r = 0; r < H + 2 * p; ++r) {
      Real* dst = &dX.at(c, reflect_index(r - p, H), 0);
      const Real* src = &dP.at(c, r, 0);
      for (int x = 0; x < W + 2 * p; ++x) dst[cols[x]] += src[x];
    }
  return dX;
}

}  // namespace

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

template <class Real>
ConvParams<Real>::ConvParams(const ConvSpec& s)
    : spec(s),
      weight(static_cast<std::size_t>(s.out_channels) * s.in_channels * s.kernel * s.kernel, Real(0)),
      bias(s.bias ? s.out_channels : 0, Real(0)),
      gamma(s.normalized ? s.out_channels : 0, Real(1)),
      beta(s.normalized ? s.out_channels : 0, Real(0)) {}

template <class Real>
void ConvParams<Real>::zero() {
  for (auto* v : {&weight, &bias, &gamma, &beta}) std::fill(v->begin(), v->end(), Real(0));
}

template <class Real>
BasicTensor<Real> conv_forward(const ConvParams<Real>& p, const BasicTensor<Real>& in, const LayerMode& mode,
                               ConvCache<Real>* cache) {
  const ConvSpec& s = p.spec;
  if (in.channels() != s.in_channels)
    throw ShapeError(fmt::format("convolution expects {} input channels, got {}", s.in_channels, in.channels()));
  BasicTensor<Real> P = prepare_input(s, in);
  const int k = s.kernel;
  const int rs = s.transpose ? 1 : s.stride;
  const int Ho = (P.height() - k) / rs + 1;
  const int Wf = P.width() - k + 1;
  BasicTensor<Real> out(Shape{s.out_channels, Ho, Wf});
  correlate(P.data(), s.in_channels, P.height(), P.width(), p.weight.data(), s.out_channels, k, rs, out.data(), Ho, Wf);
  if (!s.transpose && s.stride == 2) {
    BasicTensor<Real> sub(Shape{s.out_channels, Ho, (Wf + 1) / 2});
    for (int c = 0; c < sub.channels(); ++c)
      for (int y = 0; y < Ho; ++y)
        for (int x = 0; x < sub.width(); ++x) sub.at(c, y, x) = out.at(c, y, 2 * x);
    out = std::move(sub);
  }
  const std::size_t plane = out.shape().plane();
  if (s.bias)
    for (int c = 0; c < out.channels(); ++c) {
      Real* o = out.channel(c);
      for (std::size_t i = 0; i < plane; ++i) o[i] += p.bias[c];
    }
  if (cache) {
    cache->in_shape = in.shape();
    cache->padded = std::move(P);
  }
  if (mode.linear) return out;

  if (s.normalized) {
    std::vector<double> inv_std(out.channels());
    BasicTensor<Real> xhat(out.shape());
    for (int c = 0; c < out.channels(); ++c) {
      const Real* z = out.channel(c);
      double mean = 0;
      for (std::size_t i = 0; i < plane; ++i) mean += z[i];
      mean /= static_cast<double>(plane);
      double var = 0;
      for (std::size_t i = 0; i < plane; ++i) var += (z[i] - mean) * (z[i] - mean);
      var /= static_cast<double>(plane);
      inv_std[c] = 1.0 / std::sqrt(var + kNormEps);
      Real* xh = xhat.channel(c);
      Real* o = out.channel(c);
      for (std::size_t i = 0; i < plane; ++i) {
        xh[i] = static_cast<Real>((z[i] - mean) * inv_std[c]);
        o[i] = p.gamma[c] * xh[i] + p.beta[c];
      }
    }
    if (cache) {
      cache->xhat = std::move(xhat);
      cache->inv_std = std::move(inv_std);
    }
  }
  if (s.activated) {
    if (cache) cache->pre = out;
    const Real slope = static_cast<Real>(mode.leaky_slope);
    for (auto& v : out.values()) v = v > 0 ? v : v * slope;
  }
  return out;
}

template <class Real>
BasicTensor<Real> conv_backward(const ConvParams<Real>& p, const ConvCache<Real>& cache, BasicTensor<Real> g,
                                const LayerMode& mode, ConvParams<Real>& grads, bool want_input_grad) {
  const ConvSpec& s = p.spec;
  const std::size_t plane = g.shape().plane();
  if (!mode.linear && s.activated) {
    const Real slope = static_cast<Real>(mode.leaky_slope);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (!(cache.pre[i] > 0)) g[i] *= slope;
  }
  if (!mode.linear && s.normalized) {
    for (int c = 0; c < g.channels(); ++c) {
      Real* gc = g.channel(c);
      const Real* xh = cache.xhat.channel(c);
      double sum_g = 0, sum_gx = 0;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_g += gc[i];
        sum_gx += static_cast<double>(gc[i]) * xh[i];
      }
      grads.gamma[c] += static_cast<Real>(sum_gx);
      grads.beta[c] += static_cast<Real>(sum_g);
      // dz = gamma * inv_std / N * (N*g - sum(g) - xhat*sum(g*xhat))
      const double n = static_cast<double>(plane);
      const double scale = p.gamma[c] * cache.inv_std[c] / n;
      for (std::size_t i = 0; i < plane; ++i)
        gc[i] = static_cast<Real>(scale * (n * gc[i] - sum_g - xh[i] * sum_gx));
    }
  }
  if (s.bias)
    for (int c = 0; c < g.channels(); ++c) {
      const Real* gc = g.channel(c);
      double acc = 0;
      for (std::size_t i = 0; i < plane; ++i) acc += gc[i];
      grads.bias[c] += static_cast<Real>(acc);
    }

  const BasicTensor<Real>& P = cache.padded;
  const int k = s.kernel;
  const int Ho = P.height() - k + 1;
  const int Wo = P.width() - k + 1;
  if (!s.transpose && s.stride == 2) {
    // Zero-interleave back onto the stride-1 grid.
    BasicTensor<Real> full(Shape{g.channels(), Ho, Wo});
    for (int c = 0; c < g.channels(); ++c)
      for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x) full.at(c, 2 * y, 2 * x) = g.at(c, y, x);
    g = std::move(full);
  }
  BasicTensor<Real> dP;
  if (want_input_grad) dP = BasicTensor<Real>(P.shape());
  correlate_backward(P.data(), s.in_channels, P.height(), P.width(), p.weight.data(), s.out_channels, k, g.data(), Ho,
                     Wo, grads.weight.data(), want_input_grad ? dP.data() : nullptr);
  if (!want_input_grad) return {};
  return fold_input_grad(s, dP, cache.in_shape);
}

template <class Real>
BasicTensor<Real> residual_block_apply(const ResidualBlock<Real>& block, const BasicTensor<Real>& x,
                                       const LayerMode& mode) {
  if (x.channels() != block.spec.channels)
    throw ShapeError(
        fmt::format("residual block expects {} channels, got {}", block.spec.channels, x.channels()));
  BasicTensor<Real> f = x;
  for (const auto& conv : block.convs) f = conv_forward(conv, f, mode, static_cast<ConvCache<Real>*>(nullptr));
  require_same_shape(f.shape(), x.shape(), "residual block branch");
  for (std::size_t i = 0; i < f.size(); ++i) f[i] += x[i];
  return f;
}

#define NUCLASS_INSTANTIATE(Real)                                                                          \
  template struct ConvParams<Real>;                                                                        \
  template BasicTensor<Real> conv_forward(const ConvParams<Real>&, const BasicTensor<Real>&, const LayerMode&, \
                                          ConvCache<Real>*);                                               \
  template BasicTensor<Real> conv_backward(const ConvParams<Real>&, const ConvCache<Real>&, BasicTensor<Real>, \
                                           const LayerMode&, ConvParams<Real>&, bool);                     \
  template BasicTensor<Real> residual_block_apply(const ResidualBlock<Real>&, const BasicTensor<Real>&,     \
                                                  const LayerMode&);

NUCLASS_INSTANTIATE(float)
NUCLASS_INSTANTIATE(double)

#undef NUCLASS_INSTANTIATE

}  // namespace nuclass
