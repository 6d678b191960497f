#include "afenet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "afenet/error.hpp"

namespace afenet::ops {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

void require_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape " + a.shape().str() + " vs " +
                     b.shape().str());
  }
}

std::int64_t conv_out(std::int64_t in, int stride) { return (in + stride - 1) / stride; }

// Unfold k x k patches (zero padded) into a (Cin*k*k) x (Ho*Wo) matrix.
void im2col(const double* x, std::int64_t cin, std::int64_t h, std::int64_t w, int k,
            int stride, std::int64_t ho, std::int64_t wo, double* cols) {
  const int pad = (k - 1) / 2;
  for (std::int64_t c = 0; c < cin; ++c) {
    const double* plane = x + c * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* row = cols + ((c * k + ky) * k + kx) * ho * wo;
        for (std::int64_t oy = 0; oy < ho; ++oy) {
          const std::int64_t iy = oy * stride + ky - pad;
          double* dst = row + oy * wo;
          if (iy < 0 || iy >= h) {
            std::fill(dst, dst + wo, 0.0);
            continue;
          }
          const double* src = plane + iy * w;
          for (std::int64_t ox = 0; ox < wo; ++ox) {
            const std::int64_t ix = ox * stride + kx - pad;
            dst[ox] = (ix >= 0 && ix < w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im(const double* cols, std::int64_t cin, std::int64_t h, std::int64_t w, int k,
            int stride, std::int64_t ho, std::int64_t wo, double* x) {
  const int pad = (k - 1) / 2;
  for (std::int64_t c = 0; c < cin; ++c) {
    double* plane = x + c * h * w;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* row = cols + ((c * k + ky) * k + kx) * ho * wo;
        for (std::int64_t oy = 0; oy < ho; ++oy) {
          const std::int64_t iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          const double* src = row + oy * wo;
          double* dst = plane + iy * w;
          for (std::int64_t ox = 0; ox < wo; ++ox) {
            const std::int64_t ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < w) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

// Output columns ox whose tap kx lands inside [0, w): [lo, hi).
std::pair<std::int64_t, std::int64_t> valid_range(std::int64_t w, std::int64_t wo, int kx,
                                                  int pad, int stride) {
  const std::int64_t off = kx - pad;
  std::int64_t lo = off >= 0 ? 0 : (-off + stride - 1) / stride;
  std::int64_t hi = (w - 1 - off) >= 0 ? (w - 1 - off) / stride + 1 : 0;
  hi = std::min(hi, wo);
  return {lo, std::max(lo, hi)};
}

struct LerpTable {
  std::vector<std::int64_t> i0, i1;
  std::vector<double> lambda;
};

LerpTable lerp_table(std::int64_t in, std::int64_t out) {
  LerpTable t;
  t.i0.resize(out);
  t.i1.resize(out);
  t.lambda.resize(out);
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::int64_t o = 0; o < out; ++o) {
    double src = (static_cast<double>(o) + 0.5) * ratio - 0.5;
    if (src < 0.0) src = 0.0;
    std::int64_t i0 = static_cast<std::int64_t>(src);
    if (i0 > in - 1) i0 = in - 1;
    t.i0[o] = i0;
    t.i1[o] = i0 < in - 1 ? i0 + 1 : i0;
    t.lambda[o] = src - static_cast<double>(i0);
  }
  return t;
}

double gelu_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2)); }

}  // namespace

Var add(const Var& a, const Var& b) {
  require_same_shape(a, b, "add");
  Tensor out = a.value();
  out.add_(b.value());
  return make_result(std::move(out), {a, b}, [a, b](const Tensor& g) {
    accumulate_grad(a, g);
    accumulate_grad(b, g);
  });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape(a, b, "sub");
  Tensor out = a.value();
  out.axpy_(-1.0, b.value());
  return make_result(std::move(out), {a, b}, [a, b](const Tensor& g) {
    accumulate_grad(a, g);
    if (b.requires_grad()) {
      Tensor neg = g;
      neg.scale_(-1.0);
      accumulate_grad(b, neg);
    }
  });
}

Var mul(const Var& a, const Var& b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  const std::int64_t n = out.numel();
  const double* pa = a.value().data();
  const double* pb = b.value().data();
  double* po = out.data();
  for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
  return make_result(std::move(out), {a, b}, [a, b](const Tensor& g) {
    const std::int64_t n = g.numel();
    if (a.requires_grad()) {
      Tensor ga(g.shape());
      const double* pb = b.value().data();
      for (std::int64_t i = 0; i < n; ++i) ga[i] = g[i] * pb[i];
      accumulate_grad(a, ga);
    }
    if (b.requires_grad()) {
      Tensor gb(g.shape());
      const double* pa = a.value().data();
      for (std::int64_t i = 0; i < n; ++i) gb[i] = g[i] * pa[i];
      accumulate_grad(b, gb);
    }
  });
}

Var scale(const Var& x, double factor) {
  Tensor out = x.value();
  out.scale_(factor);
  return make_result(std::move(out), {x}, [x, factor](const Tensor& g) {
    Tensor gx = g;
    gx.scale_(factor);
    accumulate_grad(x, gx);
  });
}

Var conv2d(const Var& x, const Var& weight, const Var& bias, int stride) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  if (stride != 1 && stride != 2) throw Unsupported("conv2d: stride must be 1 or 2");
  if (ws.h != ws.w || ws.h % 2 == 0) throw ShapeError("conv2d: kernel must be odd and square");
  if (ws.c != xs.c) {
    throw ShapeError("conv2d: input has " + std::to_string(xs.c) + " channels, kernel expects " +
                     std::to_string(ws.c));
  }
  if (bias.defined() && bias.value().numel() != ws.n) throw ShapeError("conv2d: bias size");

  const int k = static_cast<int>(ws.h);
  const std::int64_t cout = ws.n, cin = xs.c, ho = conv_out(xs.h, stride),
                     wo = conv_out(xs.w, stride);
  const std::int64_t kdim = cin * k * k, ospatial = ho * wo;
  const bool pointwise = (k == 1 && stride == 1);

  Tensor out(Shape{xs.n, cout, ho, wo});
  ConstMatMap wmat(weight.value().data(), cout, kdim);
  std::vector<double> cols(pointwise ? 0 : static_cast<std::size_t>(kdim * ospatial));
  for (std::int64_t n = 0; n < xs.n; ++n) {
    const double* xin = x.value().plane(n, 0);
    const double* src = xin;
    if (!pointwise) {
      im2col(xin, cin, xs.h, xs.w, k, stride, ho, wo, cols.data());
      src = cols.data();
    }
    MatMap omat(out.plane(n, 0), cout, ospatial);
    omat.noalias() = wmat * ConstMatMap(src, kdim, ospatial);
    if (bias.defined()) {
      for (std::int64_t c = 0; c < cout; ++c) omat.row(c).array() += bias.value()[c];
    }
  }

  return make_result(std::move(out), {x, weight, bias}, [=](const Tensor& g) {
    Tensor gx = x.requires_grad() ? Tensor(xs) : Tensor();
    Tensor gw = weight.requires_grad() ? Tensor(ws) : Tensor();
    std::vector<double> cols(pointwise ? 0 : static_cast<std::size_t>(kdim * ospatial));
    std::vector<double> gcols(pointwise ? 0 : static_cast<std::size_t>(kdim * ospatial));
    ConstMatMap wmat(weight.value().data(), cout, kdim);
    for (std::int64_t n = 0; n < xs.n; ++n) {
      ConstMatMap gmat(g.plane(n, 0), cout, ospatial);
      if (weight.requires_grad()) {
        const double* src = x.value().plane(n, 0);
        if (!pointwise) {
          im2col(src, cin, xs.h, xs.w, k, stride, ho, wo, cols.data());
          src = cols.data();
        }
        MatMap(gw.data(), cout, kdim).noalias() +=
            gmat * ConstMatMap(src, kdim, ospatial).transpose();
      }
      if (x.requires_grad()) {
        if (pointwise) {
          MatMap(gx.plane(n, 0), cin, ospatial).noalias() = wmat.transpose() * gmat;
        } else {
          MatMap(gcols.data(), kdim, ospatial).noalias() = wmat.transpose() * gmat;
          col2im(gcols.data(), cin, xs.h, xs.w, k, stride, ho, wo, gx.plane(n, 0));
        }
      }
    }
    if (x.requires_grad()) accumulate_grad(x, gx);
    if (weight.requires_grad()) accumulate_grad(weight, gw);
    if (bias.defined() && bias.requires_grad()) {
      Tensor gb(bias.shape());
      for (std::int64_t n = 0; n < xs.n; ++n) {
        for (std::int64_t c = 0; c < cout; ++c) {
          const double* p = g.plane(n, c);
          double s = 0.0;
          for (std::int64_t i = 0; i < ospatial; ++i) s += p[i];
          gb[c] += s;
        }
      }
      accumulate_grad(bias, gb);
    }
  });
}

Var depthwise_conv2d(const Var& x, const Var& weight, const Var& bias, int stride) {
  const Shape xs = x.shape();
  const Shape ws = weight.shape();
  if (stride != 1 && stride != 2) throw Unsupported("depthwise_conv2d: stride must be 1 or 2");
  if (ws.n != xs.c || ws.c != 1 || ws.h != ws.w || ws.h % 2 == 0) {
    throw ShapeError("depthwise_conv2d: kernel " + ws.str() + " incompatible with input " +
                     xs.str());
  }
  if (bias.defined() && bias.value().numel() != xs.c) {
    throw ShapeError("depthwise_conv2d: bias size");
  }
  const int k = static_cast<int>(ws.h);
  const int pad = (k - 1) / 2;
  const std::int64_t ho = conv_out(xs.h, stride), wo = conv_out(xs.w, stride);

  Tensor out(Shape{xs.n, xs.c, ho, wo});
  for (std::int64_t n = 0; n < xs.n; ++n) {
    for (std::int64_t c = 0; c < xs.c; ++c) {
      const double* in = x.value().plane(n, c);
      const double* kern = weight.value().data() + c * k * k;
      double* o = out.plane(n, c);
      if (bias.defined()) std::fill(o, o + ho * wo, bias.value()[c]);
      for (std::int64_t oy = 0; oy < ho; ++oy) {
        double* orow = o + oy * wo;
        for (int ky = 0; ky < k; ++ky) {
          const std::int64_t iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= xs.h) continue;
          const double* irow = in + iy * xs.w;
          for (int kx = 0; kx < k; ++kx) {
            const double wv = kern[ky * k + kx];
            const auto [lo, hi] = valid_range(xs.w, wo, kx, pad, stride);
            const std::int64_t off = kx - pad;
            if (stride == 1) {
              const double* ip = irow + off;
              for (std::int64_t ox = lo; ox < hi; ++ox) orow[ox] += wv * ip[ox];
            } else {
              for (std::int64_t ox = lo; ox < hi; ++ox) orow[ox] += wv * irow[ox * stride + off];
            }
          }
        }
      }
    }
  }

  return make_result(std::move(out), {x, weight, bias}, [=](const Tensor& g) {
    Tensor gx = x.requires_grad() ? Tensor(xs) : Tensor();
    Tensor gw = weight.requires_grad() ? Tensor(ws) : Tensor();
    for (std::int64_t n = 0; n < xs.n; ++n) {
      for (std::int64_t c = 0; c < xs.c; ++c) {
        const double* in = x.value().plane(n, c);
        const double* kern = weight.value().data() + c * k * k;
        const double* gp = g.plane(n, c);
        double* gxp = x.requires_grad() ? gx.plane(n, c) : nullptr;
        double* gwp = weight.requires_grad() ? gw.data() + c * k * k : nullptr;
        for (std::int64_t oy = 0; oy < ho; ++oy) {
          const double* grow = gp + oy * wo;
          for (int ky = 0; ky < k; ++ky) {
            const std::int64_t iy = oy * stride + ky - pad;
            if (iy < 0 || iy >= xs.h) continue;
            const double* irow = in + iy * xs.w;
            for (int kx = 0; kx < k; ++kx) {
              const auto [lo, hi] = valid_range(xs.w, wo, kx, pad, stride);
              const std::int64_t off = kx - pad;
              if (gxp) {
                const double wv = kern[ky * k + kx];
                double* gxrow = gxp + iy * xs.w;
                for (std::int64_t ox = lo; ox < hi; ++ox) gxrow[ox * stride + off] += wv * grow[ox];
              }
              if (gwp) {
                double s = 0.0;
                for (std::int64_t ox = lo; ox < hi; ++ox) s += grow[ox] * irow[ox * stride + off];
                gwp[ky * k + kx] += s;
              }
            }
          }
        }
      }
    }
    if (x.requires_grad()) accumulate_grad(x, gx);
    if (weight.requires_grad()) accumulate_grad(weight, gw);
    if (bias.defined() && bias.requires_grad()) {
      Tensor gb(bias.shape());
      for (std::int64_t n = 0; n < xs.n; ++n) {
        for (std::int64_t c = 0; c < xs.c; ++c) {
          const double* p = g.plane(n, c);
          double s = 0.0;
          for (std::int64_t i = 0; i < ho * wo; ++i) s += p[i];
          gb[c] += s;
        }
      }
      accumulate_grad(bias, gb);
    }
  });
}

Var resize_bilinear(const Var& x, std::int64_t out_h, std::int64_t out_w) {
  const Shape xs = x.shape();
  if (out_h < 1 || out_w < 1) throw ShapeError("resize_bilinear: empty output");
  auto ty = std::make_shared<LerpTable>(lerp_table(xs.h, out_h));
  auto tx = std::make_shared<LerpTable>(lerp_table(xs.w, out_w));

  Tensor out(Shape{xs.n, xs.c, out_h, out_w});
  std::vector<double> rowbuf(static_cast<std::size_t>(out_w));
  for (std::int64_t n = 0; n < xs.n; ++n) {
    for (std::int64_t c = 0; c < xs.c; ++c) {
      const double* in = x.value().plane(n, c);
      double* o = out.plane(n, c);
      for (std::int64_t oy = 0; oy < out_h; ++oy) {
        const double* r0 = in + ty->i0[oy] * xs.w;
        const double* r1 = in + ty->i1[oy] * xs.w;
        const double ly = ty->lambda[oy];
        double* orow = o + oy * out_w;
        for (std::int64_t ox = 0; ox < out_w; ++ox) {
          const std::int64_t x0 = tx->i0[ox], x1 = tx->i1[ox];
          const double lx = tx->lambda[ox];
          const double top = r0[x0] + lx * (r0[x1] - r0[x0]);
          const double bot = r1[x0] + lx * (r1[x1] - r1[x0]);
          orow[ox] = top + ly * (bot - top);
        }
      }
    }
  }

  return make_result(std::move(out), {x}, [x, xs, ty, tx, out_h, out_w](const Tensor& g) {
    Tensor gx(xs);
    for (std::int64_t n = 0; n < xs.n; ++n) {
      for (std::int64_t c = 0; c < xs.c; ++c) {
        const double* gp = g.plane(n, c);
        double* gi = gx.plane(n, c);
        for (std::int64_t oy = 0; oy < out_h; ++oy) {
          double* r0 = gi + ty->i0[oy] * xs.w;
          double* r1 = gi + ty->i1[oy] * xs.w;
          const double ly = ty->lambda[oy];
          const double* grow = gp + oy * out_w;
          for (std::int64_t ox = 0; ox < out_w; ++ox) {
            const double lx = tx->lambda[ox];
            const double gt = grow[ox] * (1.0 - ly);
            const double gb = grow[ox] * ly;
            r0[tx->i0[ox]] += gt * (1.0 - lx);
            r0[tx->i1[ox]] += gt * lx;
            r1[tx->i0[ox]] += gb * (1.0 - lx);
            r1[tx->i1[ox]] += gb * lx;
          }
        }
      }
    }
    accumulate_grad(x, gx);
  });
}

Var upsample_bilinear(const Var& x, int factor) {
  if (factor != 2 && factor != 4) throw Unsupported("upsample_bilinear: factor must be 2 or 4");
  return resize_bilinear(x, x.shape().h * factor, x.shape().w * factor);
}

Var layer_norm(const Var& x, const Var& gain, const Var& offset, double eps) {
  const Shape xs = x.shape();
  if (gain.value().numel() != xs.c || offset.value().numel() != xs.c) {
    throw ShapeError("layer_norm: affine parameters must have one entry per channel");
  }
  if (!(eps > 0.0)) throw InvalidArgument("layer_norm: epsilon must be positive");
  const std::int64_t hw = xs.plane();
  const double inv_c = 1.0 / static_cast<double>(xs.c);

  auto xhat = std::make_shared<Tensor>(xs);
  auto inv_std = std::make_shared<std::vector<double>>(static_cast<std::size_t>(xs.n * hw));
  Tensor out(xs);
  std::vector<double> mean(static_cast<std::size_t>(hw));
  std::vector<double> var(static_cast<std::size_t>(hw));
  for (std::int64_t n = 0; n < xs.n; ++n) {
    std::fill(mean.begin(), mean.end(), 0.0);
    std::fill(var.begin(), var.end(), 0.0);
    for (std::int64_t c = 0; c < xs.c; ++c) {
      const double* p = x.value().plane(n, c);
      for (std::int64_t i = 0; i < hw; ++i) mean[i] += p[i];
    }
    for (std::int64_t i = 0; i < hw; ++i) mean[i] *= inv_c;
    for (std::int64_t c = 0; c < xs.c; ++c) {
      const double* p = x.value().plane(n, c);
      for (std::int64_t i = 0; i < hw; ++i) {
        const double d = p[i] - mean[i];
        var[i] += d * d;
      }
    }
    double* is = inv_std->data() + n * hw;
    for (std::int64_t i = 0; i < hw; ++i) is[i] = 1.0 / std::sqrt(var[i] * inv_c + eps);
    for (std::int64_t c = 0; c < xs.c; ++c) {
      const double* p = x.value().plane(n, c);
      double* xh = xhat->plane(n, c);
      double* o = out.plane(n, c);
      const double gc = gain.value()[c], bc = offset.value()[c];
      for (std::int64_t i = 0; i < hw; ++i) {
        xh[i] = (p[i] - mean[i]) * is[i];
        o[i] = gc * xh[i] + bc;
      }
    }
  }

  return make_result(std::move(out), {x, gain, offset},
                     [x, gain, offset, xs, hw, inv_c, xhat, inv_std](const Tensor& g) {
    if (gain.requires_grad() || offset.requires_grad()) {
      Tensor gg(gain.shape()), gb(offset.shape());
      for (std::int64_t n = 0; n < xs.n; ++n) {
        for (std::int64_t c = 0; c < xs.c; ++c) {
          const double* gp = g.plane(n, c);
          const double* xh = xhat->plane(n, c);
          double s1 = 0.0, s2 = 0.0;
          for (std::int64_t i = 0; i < hw; ++i) {
            s1 += gp[i] * xh[i];
            s2 += gp[i];
          }
          gg[c] += s1;
          gb[c] += s2;
        }
      }
      accumulate_grad(gain, gg);
      accumulate_grad(offset, gb);
    }
    if (!x.requires_grad()) return;
    Tensor gx(xs);
    std::vector<double> m1(static_cast<std::size_t>(hw)), m2(static_cast<std::size_t>(hw));
    for (std::int64_t n = 0; n < xs.n; ++n) {
      std::fill(m1.begin(), m1.end(), 0.0);
      std::fill(m2.begin(), m2.end(), 0.0);
      for (std::int64_t c = 0; c < xs.c; ++c) {
        const double* gp = g.plane(n, c);
        const double* xh = xhat->plane(n, c);
        const double gc = gain.value()[c];
        for (std::int64_t i = 0; i < hw; ++i) {
          const double d = gp[i] * gc;
          m1[i] += d;
          m2[i] += d * xh[i];
        }
      }
      const double* is = inv_std->data() + n * hw;
      for (std::int64_t c = 0; c < xs.c; ++c) {
        const double* gp = g.plane(n, c);
        const double* xh = xhat->plane(n, c);
        double* o = gx.plane(n, c);
        const double gc = gain.value()[c];
        for (std::int64_t i = 0; i < hw; ++i) {
          o[i] = is[i] * (gp[i] * gc - m1[i] * inv_c - xh[i] * m2[i] * inv_c);
        }
      }
    }
    accumulate_grad(x, gx);
  });
}

Var gelu(const Var& x) {
  Tensor out(x.shape());
  const std::int64_t n = out.numel();
  const double* px = x.value().data();
  for (std::int64_t i = 0; i < n; ++i) out[i] = px[i] * gelu_cdf(px[i]);
  return make_result(std::move(out), {x}, [x](const Tensor& g) {
    const std::int64_t n = g.numel();
    Tensor gx(g.shape());
    const double* px = x.value().data();
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    for (std::int64_t i = 0; i < n; ++i) {
      const double v = px[i];
      const double d = gelu_cdf(v) + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
      gx[i] = g[i] * d;
    }
    accumulate_grad(x, gx);
  });
}

Var sigmoid(const Var& x) {
  Tensor out(x.shape());
  const std::int64_t n = out.numel();
  const double* px = x.value().data();
  for (std::int64_t i = 0; i < n; ++i) {
    const double v = px[i];
    if (v >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      out[i] = e / (1.0 + e);
    }
  }
  auto y = std::make_shared<Tensor>(out);
  return make_result(std::move(out), {x}, [x, y](const Tensor& g) {
    Tensor gx(g.shape());
    for (std::int64_t i = 0; i < g.numel(); ++i) gx[i] = g[i] * (*y)[i] * (1.0 - (*y)[i]);
    accumulate_grad(x, gx);
  });
}

Var softmax(const Var& x, int axis) {
  if (axis == 2) return transpose(softmax(transpose(x), 3));
  if (axis != 3) throw Unsupported("softmax: axis must be 2 or 3");
  const Shape xs = x.shape();
  const std::int64_t rows = xs.n * xs.c * xs.h, len = xs.w;
  Tensor out(xs);
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* in = x.value().data() + r * len;
    double* o = out.data() + r * len;
    double m = -std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < len; ++i) m = std::max(m, in[i]);
    double s = 0.0;
    for (std::int64_t i = 0; i < len; ++i) {
      o[i] = std::exp(in[i] - m);
      s += o[i];
    }
    const double inv = 1.0 / s;
    for (std::int64_t i = 0; i < len; ++i) o[i] *= inv;
  }
  auto y = std::make_shared<Tensor>(out);
  return make_result(std::move(out), {x}, [x, y, rows, len](const Tensor& g) {
    Tensor gx(g.shape());
    for (std::int64_t r = 0; r < rows; ++r) {
      const double* yp = y->data() + r * len;
      const double* gp = g.data() + r * len;
      double dotp = 0.0;
      for (std::int64_t i = 0; i < len; ++i) dotp += yp[i] * gp[i];
      double* o = gx.data() + r * len;
      for (std::int64_t i = 0; i < len; ++i) o[i] = yp[i] * (gp[i] - dotp);
    }
    accumulate_grad(x, gx);
  });
}

Var l2_normalize(const Var& x, double eps) {
  const Shape xs = x.shape();
  const std::int64_t rows = xs.n * xs.c * xs.h, len = xs.w;
  Tensor out(xs);
  auto norms = std::make_shared<std::vector<double>>(static_cast<std::size_t>(rows));
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* in = x.value().data() + r * len;
    double s = 0.0;
    for (std::int64_t i = 0; i < len; ++i) s += in[i] * in[i];
    const double nrm = std::sqrt(s);
    (*norms)[r] = nrm;
    const double inv = 1.0 / std::max(nrm, eps);
    double* o = out.data() + r * len;
    for (std::int64_t i = 0; i < len; ++i) o[i] = in[i] * inv;
  }
  auto y = std::make_shared<Tensor>(out);
  return make_result(std::move(out), {x}, [x, y, norms, rows, len, eps](const Tensor& g) {
    Tensor gx(g.shape());
    for (std::int64_t r = 0; r < rows; ++r) {
      const double nrm = (*norms)[r];
      const double* gp = g.data() + r * len;
      double* o = gx.data() + r * len;
      if (nrm <= eps) {
        for (std::int64_t i = 0; i < len; ++i) o[i] = gp[i] / eps;
        continue;
      }
      const double* yp = y->data() + r * len;
      double dotp = 0.0;
      for (std::int64_t i = 0; i < len; ++i) dotp += yp[i] * gp[i];
      for (std::int64_t i = 0; i < len; ++i) o[i] = (gp[i] - yp[i] * dotp) / nrm;
    }
    accumulate_grad(x, gx);
  });
}

Var matmul(const Var& a, const Var& b) {
  const Shape as = a.shape(), bs = b.shape();
  if (as.n != bs.n || as.c != bs.c || as.w != bs.h) {
    throw ShapeError("matmul: " + as.str() + " x " + bs.str());
  }
  const std::int64_t m = as.h, k = as.w, p = bs.w;
  Tensor out(Shape{as.n, as.c, m, p});
  for (std::int64_t n = 0; n < as.n; ++n) {
    for (std::int64_t c = 0; c < as.c; ++c) {
      MatMap(out.plane(n, c), m, p).noalias() =
          ConstMatMap(a.value().plane(n, c), m, k) * ConstMatMap(b.value().plane(n, c), k, p);
    }
  }
  return make_result(std::move(out), {a, b}, [a, b, as, m, k, p](const Tensor& g) {
    Tensor ga = a.requires_grad() ? Tensor(a.shape()) : Tensor();
    Tensor gb = b.requires_grad() ? Tensor(b.shape()) : Tensor();
    for (std::int64_t n = 0; n < as.n; ++n) {
      for (std::int64_t c = 0; c < as.c; ++c) {
        ConstMatMap gm(g.plane(n, c), m, p);
        if (a.requires_grad()) {
          MatMap(ga.plane(n, c), m, k).noalias() =
              gm * ConstMatMap(b.value().plane(n, c), k, p).transpose();
        }
        if (b.requires_grad()) {
          MatMap(gb.plane(n, c), k, p).noalias() =
              ConstMatMap(a.value().plane(n, c), m, k).transpose() * gm;
        }
      }
    }
    accumulate_grad(a, ga);
    accumulate_grad(b, gb);
  });
}

namespace {
Tensor transpose_planes(const Tensor& t) {
  const Shape s = t.shape();
  Tensor out(Shape{s.n, s.c, s.w, s.h});
  for (std::int64_t n = 0; n < s.n; ++n) {
    for (std::int64_t c = 0; c < s.c; ++c) {
      MatMap(out.plane(n, c), s.w, s.h) = ConstMatMap(t.plane(n, c), s.h, s.w).transpose();
    }
  }
  return out;
}
}  // namespace

Var transpose(const Var& x) {
  return make_result(transpose_planes(x.value()), {x},
                     [x](const Tensor& g) { accumulate_grad(x, transpose_planes(g)); });
}

Var reshape(const Var& x, Shape shape) {
  const Shape orig = x.shape();
  return make_result(x.value().reshaped(shape), {x},
                     [x, orig](const Tensor& g) { accumulate_grad(x, g.reshaped(orig)); });
}

Var divide_channels(const Var& x, const Var& divisor) {
  const Shape xs = x.shape();
  if (divisor.value().numel() != xs.c) {
    throw ShapeError("divide_channels: divisor needs one entry per channel");
  }
  const std::int64_t plane = xs.plane();
  Tensor out(xs);
  for (std::int64_t n = 0; n < xs.n; ++n) {
    for (std::int64_t c = 0; c < xs.c; ++c) {
      const double inv = 1.0 / divisor.value()[c];
      const double* p = x.value().plane(n, c);
      double* o = out.plane(n, c);
      for (std::int64_t i = 0; i < plane; ++i) o[i] = p[i] * inv;
    }
  }
  return make_result(std::move(out), {x, divisor}, [x, divisor, xs, plane](const Tensor& g) {
    Tensor gx = x.requires_grad() ? Tensor(xs) : Tensor();
    Tensor gd = divisor.requires_grad() ? Tensor(divisor.shape()) : Tensor();
    for (std::int64_t n = 0; n < xs.n; ++n) {
      for (std::int64_t c = 0; c < xs.c; ++c) {
        const double d = divisor.value()[c];
        const double* gp = g.plane(n, c);
        const double* p = x.value().plane(n, c);
        if (x.requires_grad()) {
          double* o = gx.plane(n, c);
          for (std::int64_t i = 0; i < plane; ++i) o[i] = gp[i] / d;
        }
        if (divisor.requires_grad()) {
          double s = 0.0;
          for (std::int64_t i = 0; i < plane; ++i) s += gp[i] * p[i];
          gd[c] -= s / (d * d);
        }
      }
    }
    accumulate_grad(x, gx);
    accumulate_grad(divisor, gd);
  });
}

Var concat_channels(std::span<const Var> xs) {
  if (xs.empty()) throw InvalidArgument("concat_channels: no inputs");
  const Shape first = xs.front().shape();
  std::int64_t total = 0;
  for (const Var& v : xs) {
    const Shape s = v.shape();
    if (s.n != first.n || s.h != first.h || s.w != first.w) {
      throw ShapeError("concat_channels: " + s.str() + " vs " + first.str());
    }
    total += s.c;
  }
  const std::int64_t plane = first.plane();
  Tensor out(Shape{first.n, total, first.h, first.w});
  for (std::int64_t n = 0; n < first.n; ++n) {
    std::int64_t c0 = 0;
    for (const Var& v : xs) {
      const std::int64_t count = v.shape().c * plane;
      std::copy_n(v.value().plane(n, 0), count, out.plane(n, c0));
      c0 += v.shape().c;
    }
  }
  std::vector<Var> parts(xs.begin(), xs.end());
  return make_result(std::move(out), parts, [parts, first, plane](const Tensor& g) {
    std::int64_t c0 = 0;
    for (const Var& v : parts) {
      const Shape s = v.shape();
      if (v.requires_grad()) {
        Tensor gv(s);
        for (std::int64_t n = 0; n < s.n; ++n) {
          std::copy_n(g.plane(n, c0), s.c * plane, gv.plane(n, 0));
        }
        accumulate_grad(v, gv);
      }
      c0 += s.c;
    }
  });
}

Var slice_channels(const Var& x, std::int64_t start, std::int64_t count) {
  const Shape xs = x.shape();
  if (start < 0 || count < 1 || start + count > xs.c) {
    throw ShapeError("slice_channels: range out of bounds for " + xs.str());
  }
  const std::int64_t plane = xs.plane();
  Tensor out(Shape{xs.n, count, xs.h, xs.w});
  for (std::int64_t n = 0; n < xs.n; ++n) {
    std::copy_n(x.value().plane(n, start), count * plane, out.plane(n, 0));
  }
  return make_result(std::move(out), {x}, [x, xs, start, count, plane](const Tensor& g) {
    Tensor gx(xs);
    for (std::int64_t n = 0; n < xs.n; ++n) {
      std::copy_n(g.plane(n, 0), count * plane, gx.plane(n, start));
    }
    accumulate_grad(x, gx);
  });
}

Var adaptive_max_pool(const Var& x, std::int64_t out_h, std::int64_t out_w) {
  const Shape xs = x.shape();
  if (out_h < 1 || out_w < 1 || out_h > xs.h || out_w > xs.w) {
    throw ShapeError("adaptive_max_pool: output " + std::to_string(out_h) + "x" +
                     std::to_string(out_w) + " invalid for input " + xs.str());
  }
  Tensor out(Shape{xs.n, xs.c, out_h, out_w});
  auto argmax = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(out.numel()));
  std::int64_t k = 0;
  for (std::int64_t n = 0; n < xs.n; ++n) {
    for (std::int64_t c = 0; c < xs.c; ++c) {
      const double* p = x.value().plane(n, c);
      for (std::int64_t oy = 0; oy < out_h; ++oy) {
        const std::int64_t y0 = (oy * xs.h) / out_h;
        const std::int64_t y1 = ((oy + 1) * xs.h + out_h - 1) / out_h;
        for (std::int64_t ox = 0; ox < out_w; ++ox, ++k) {
          const std::int64_t x0 = (ox * xs.w) / out_w;
          const std::int64_t x1 = ((ox + 1) * xs.w + out_w - 1) / out_w;
          std::int64_t best = y0 * xs.w + x0;
          for (std::int64_t yy = y0; yy < y1; ++yy) {
            for (std::int64_t xx = x0; xx < x1; ++xx) {
              if (p[yy * xs.w + xx] > p[best]) best = yy * xs.w + xx;
            }
          }
          out[k] = p[best];
          (*argmax)[k] = best;
        }
      }
    }
  }
  return make_result(std::move(out), {x}, [x, xs, argmax, out_h, out_w](const Tensor& g) {
    Tensor gx(xs);
    std::int64_t k = 0;
    for (std::int64_t n = 0; n < xs.n; ++n) {
      for (std::int64_t c = 0; c < xs.c; ++c) {
        double* gp = gx.plane(n, c);
        for (std::int64_t i = 0; i < out_h * out_w; ++i, ++k) gp[(*argmax)[k]] += g[k];
      }
    }
    accumulate_grad(x, gx);
  });
}

Var avg_pool(const Var& x, int k) {
  const Shape xs = x.shape();
  if (k < 1 || xs.h % k != 0 || xs.w % k != 0) {
    throw ShapeError("avg_pool: " + xs.str() + " not divisible by " + std::to_string(k));
  }
  const std::int64_t ho = xs.h / k, wo = xs.w / k;
  const double inv = 1.0 / static_cast<double>(k * k);
  Tensor out(Shape{xs.n, xs.c, ho, wo});
  for (std::int64_t n = 0; n < xs.n; ++n) {
    for (std::int64_t c = 0; c < xs.c; ++c) {
      const double* p = x.value().plane(n, c);
      double* o = out.plane(n, c);
      for (std::int64_t y = 0; y < xs.h; ++y) {
        for (std::int64_t xx = 0; xx < xs.w; ++xx) o[(y / k) * wo + xx / k] += p[y * xs.w + xx];
      }
      for (std::int64_t i = 0; i < ho * wo; ++i) o[i] *= inv;
    }
  }
  return make_result(std::move(out), {x}, [x, xs, k, wo, inv](const Tensor& g) {
    Tensor gx(xs);
    for (std::int64_t n = 0; n < xs.n; ++n) {
      for (std::int64_t c = 0; c < xs.c; ++c) {
        const double* gp = g.plane(n, c);
        double* o = gx.plane(n, c);
        for (std::int64_t y = 0; y < xs.h; ++y) {
          for (std::int64_t xx = 0; xx < xs.w; ++xx) o[y * xs.w + xx] = gp[(y / k) * wo + xx / k] * inv;
        }
      }
    }
    accumulate_grad(x, gx);
  });
}

Var l1_loss(const Var& pred, const Var& target) {
  require_same_shape(pred, target, "l1_loss");
  const std::int64_t n = pred.value().numel();
  const double* p = pred.value().data();
  const double* t = target.value().data();
  double s = 0.0;
  for (std::int64_t i = 0; i < n; ++i) s += std::abs(p[i] - t[i]);
  Tensor out(Shape{1, 1, 1, 1}, s / static_cast<double>(n));
  return make_result(std::move(out), {pred, target}, [pred, target, n](const Tensor& g) {
    const double scale = g[0] / static_cast<double>(n);
    Tensor gp(pred.shape());
    const double* p = pred.value().data();
    const double* t = target.value().data();
    for (std::int64_t i = 0; i < n; ++i) {
      const double d = p[i] - t[i];
      gp[i] = d > 0.0 ? scale : (d < 0.0 ? -scale : 0.0);
    }
    accumulate_grad(pred, gp);
    if (target.requires_grad()) {
      gp.scale_(-1.0);
      accumulate_grad(target, gp);
    }
  });
}

Var dot(const Var& x, const Tensor& weights) {
  if (weights.numel() != x.value().numel()) throw ShapeError("dot: size mismatch");
  double s = 0.0;
  for (std::int64_t i = 0; i < weights.numel(); ++i) s += x.value()[i] * weights[i];
  auto w = std::make_shared<Tensor>(weights);
  return make_result(Tensor(Shape{1, 1, 1, 1}, s), {x}, [x, w](const Tensor& g) {
    Tensor gx = w->reshaped(x.shape());
    gx.scale_(g[0]);
    accumulate_grad(x, gx);
  });
}

Var sum(const Var& x) {
  return make_result(Tensor(Shape{1, 1, 1, 1}, x.value().sum()), {x}, [x](const Tensor& g) {
    accumulate_grad(x, Tensor(x.shape(), g[0]));
  });
}

}  // namespace afenet::ops
