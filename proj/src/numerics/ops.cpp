// Copyright 2026 The AdaCred Authors
// SPDX-License-Identifier: Apache-2.0

#include "adacred/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "adacred/errors.hpp"
#include "adacred/numerics/kernels.hpp"

namespace adacred::ops {

namespace {

using detail::Node;

// Gradient buffer of an input, or nullptr when it does not need one.
Real* grad_of(Node& node, std::size_t input) {
  Node& in = *node.inputs[input];
  if (!in.requires_grad) return nullptr;
  in.ensure_grad();
  return in.grad.data();
}

const Real* value_of(const Node& node, std::size_t input) {
  return node.inputs[input]->value.data();
}

std::size_t broadcast_inner(const Tensor& a, const Tensor& b, const char* op) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  bool ok = bs.size() <= as.size() && std::equal(bs.rbegin(), bs.rend(), as.rbegin());
  if (!ok) {
    throw DimensionError(std::string(op) + ": cannot broadcast " + shape_str(bs) + " onto " +
                         shape_str(as));
  }
  return b.numel();
}

Shape drop_last(const Shape& s) { return Shape(s.begin(), s.end() - 1); }

template <typename Fwd, typename Bwd>
Tensor unary(const Tensor& x, Fwd fwd, Bwd dfdx) {
  std::vector<Real> out(x.numel());
  auto xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(xv[i]);
  return make_op_result(x.shape(), std::move(out), {x}, [dfdx](Node& self) {
    Real* gx = grad_of(self, 0);
    if (!gx) return;
    const Real* xv = value_of(self, 0);
    const Real* yv = self.value.data();
    for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i] * dfdx(xv[i], yv[i]);
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  const std::size_t inner = broadcast_inner(a, b, "add");
  const std::size_t outer = a.numel() / inner;
  std::vector<Real> out(a.data().begin(), a.data().end());
  auto bv = b.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t j = 0; j < inner; ++j) out[o * inner + j] += bv[j];
  }
  return make_op_result(a.shape(), std::move(out), {a, b}, [inner, outer](Node& self) {
    const Real* g = self.grad.data();
    if (Real* ga = grad_of(self, 0)) {
      for (std::size_t i = 0; i < outer * inner; ++i) ga[i] += g[i];
    }
    if (Real* gb = grad_of(self, 1)) {
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t j = 0; j < inner; ++j) gb[j] += g[o * inner + j];
      }
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  const std::size_t inner = broadcast_inner(a, b, "sub");
  const std::size_t outer = a.numel() / inner;
  std::vector<Real> out(a.data().begin(), a.data().end());
  auto bv = b.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t j = 0; j < inner; ++j) out[o * inner + j] -= bv[j];
  }
  return make_op_result(a.shape(), std::move(out), {a, b}, [inner, outer](Node& self) {
    const Real* g = self.grad.data();
    if (Real* ga = grad_of(self, 0)) {
      for (std::size_t i = 0; i < outer * inner; ++i) ga[i] += g[i];
    }
    if (Real* gb = grad_of(self, 1)) {
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t j = 0; j < inner; ++j) gb[j] -= g[o * inner + j];
      }
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  const std::size_t inner = broadcast_inner(a, b, "mul");
  const std::size_t outer = a.numel() / inner;
  std::vector<Real> out(a.numel());
  auto av = a.data();
  auto bv = b.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t j = 0; j < inner; ++j) out[o * inner + j] = av[o * inner + j] * bv[j];
  }
  return make_op_result(a.shape(), std::move(out), {a, b}, [inner, outer](Node& self) {
    const Real* g = self.grad.data();
    const Real* av = value_of(self, 0);
    const Real* bv = value_of(self, 1);
    if (Real* ga = grad_of(self, 0)) {
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t j = 0; j < inner; ++j) ga[o * inner + j] += g[o * inner + j] * bv[j];
      }
    }
    if (Real* gb = grad_of(self, 1)) {
      for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t j = 0; j < inner; ++j) gb[j] += g[o * inner + j] * av[o * inner + j];
      }
    }
  });
}

Tensor scale(const Tensor& a, Real factor) {
  return unary(
      a, [factor](Real x) { return x * factor; }, [factor](Real, Real) { return factor; });
}

Tensor add_scalar(const Tensor& a, Real value) {
  return unary(
      a, [value](Real x) { return x + value; }, [](Real, Real) { return Real(1); });
}

Tensor square(const Tensor& a) {
  return unary(
      a, [](Real x) { return x * x; }, [](Real x, Real) { return Real(2) * x; });
}

Tensor gelu(const Tensor& x) {
  constexpr Real c = Real(0.7978845608028654);  // sqrt(2/pi)
  constexpr Real k = Real(0.044715);
  return unary(
      x,
      [](Real v) { return Real(0.5) * v * (Real(1) + std::tanh(c * (v + k * v * v * v))); },
      [](Real v, Real) {
        const Real t = std::tanh(c * (v + k * v * v * v));
        return Real(0.5) * (Real(1) + t) +
               Real(0.5) * v * (Real(1) - t * t) * c * (Real(1) + Real(3) * k * v * v);
      });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      x, [](Real v) { return Real(1) / (Real(1) + std::exp(-v)); },
      [](Real, Real y) { return y * (Real(1) - y); });
}

Tensor tanh(const Tensor& x) {
  return unary(
      x, [](Real v) { return std::tanh(v); }, [](Real, Real y) { return Real(1) - y * y; });
}

Tensor relu(const Tensor& x) {
  return unary(
      x, [](Real v) { return v > Real(0) ? v : Real(0); },
      [](Real v, Real) { return v > Real(0) ? Real(1) : Real(0); });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<Real> out(m * n);
  kernels::gemm_nn(m, n, k, a.data().data(), b.data().data(), out.data(), false);
  return make_op_result({m, n}, std::move(out), {a, b}, [m, n, k](Node& self) {
    const Real* g = self.grad.data();
    if (Real* ga = grad_of(self, 0)) kernels::gemm_nt(m, k, n, g, value_of(self, 1), ga, true);
    if (Real* gb = grad_of(self, 1)) kernels::gemm_tn(k, n, m, value_of(self, 0), g, gb, true);
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor* bias) {
  if (x.rank() < 1 || weight.rank() != 2 || x.shape().back() != weight.dim(0)) {
    throw DimensionError("linear: input " + shape_str(x.shape()) + " vs weight " +
                         shape_str(weight.shape()));
  }
  const std::size_t k = weight.dim(0), n = weight.dim(1);
  if (bias && (bias->rank() != 1 || bias->dim(0) != n)) {
    throw DimensionError("linear: bias " + shape_str(bias->shape()) + " vs weight " +
                         shape_str(weight.shape()));
  }
  const std::size_t m = x.numel() / k;
  std::vector<Real> out(m * n);
  kernels::gemm_nn(m, n, k, x.data().data(), weight.data().data(), out.data(), false);
  if (bias) {
    auto bv = bias->data();
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += bv[j];
    }
  }
  Shape shape = drop_last(x.shape());
  shape.push_back(n);
  std::vector<Tensor> inputs{x, weight};
  if (bias) inputs.push_back(*bias);
  const bool has_bias = bias != nullptr;
  return make_op_result(std::move(shape), std::move(out), std::move(inputs),
                        [m, n, k, has_bias](Node& self) {
                          const Real* g = self.grad.data();
                          if (Real* gx = grad_of(self, 0)) {
                            kernels::gemm_nt(m, k, n, g, value_of(self, 1), gx, true);
                          }
                          if (Real* gw = grad_of(self, 1)) {
                            kernels::gemm_tn(k, n, m, value_of(self, 0), g, gw, true);
                          }
                          if (has_bias) {
                            if (Real* gb = grad_of(self, 2)) {
                              for (std::size_t i = 0; i < m; ++i) {
                                for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
                              }
                            }
                          }
                        });
}

Tensor bmm(const Tensor& a, const Tensor& b, bool transpose_b) {
  if (a.rank() < 2 || a.rank() != b.rank()) {
    throw DimensionError("bmm: rank mismatch " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
  }
  const std::size_t r = a.rank();
  for (std::size_t i = 0; i + 2 < r; ++i) {
    if (a.dim(i) != b.dim(i)) {
      throw DimensionError("bmm: batch extents differ " + shape_str(a.shape()) + " and " +
                           shape_str(b.shape()));
    }
  }
  const std::size_t m = a.dim(r - 2), k = a.dim(r - 1);
  const std::size_t bk = transpose_b ? b.dim(r - 1) : b.dim(r - 2);
  const std::size_t n = transpose_b ? b.dim(r - 2) : b.dim(r - 1);
  if (bk != k) {
    throw DimensionError("bmm: inner extents differ " + shape_str(a.shape()) + " and " +
                         shape_str(b.shape()));
  }
  const std::size_t batch = a.numel() / (m * k);
  std::vector<Real> out(batch * m * n);
  const Real* av = a.data().data();
  const Real* bv = b.data().data();
  for (std::size_t s = 0; s < batch; ++s) {
    if (transpose_b) {
      kernels::gemm_nt(m, n, k, av + s * m * k, bv + s * n * k, out.data() + s * m * n, false);
    } else {
      kernels::gemm_nn(m, n, k, av + s * m * k, bv + s * k * n, out.data() + s * m * n, false);
    }
  }
  Shape shape(a.shape().begin(), a.shape().end() - 2);
  shape.push_back(m);
  shape.push_back(n);
  return make_op_result(std::move(shape), std::move(out), {a, b},
                        [batch, m, n, k, transpose_b](Node& self) {
                          const Real* g = self.grad.data();
                          const Real* av = value_of(self, 0);
                          const Real* bv = value_of(self, 1);
                          Real* ga = grad_of(self, 0);
                          Real* gb = grad_of(self, 1);
                          for (std::size_t s = 0; s < batch; ++s) {
                            const Real* gs = g + s * m * n;
                            if (ga) {
                              if (transpose_b) {
                                kernels::gemm_nn(m, k, n, gs, bv + s * n * k, ga + s * m * k, true);
                              } else {
                                kernels::gemm_nt(m, k, n, gs, bv + s * k * n, ga + s * m * k, true);
                              }
                            }
                            if (gb) {
                              if (transpose_b) {
                                kernels::gemm_tn(n, k, m, gs, av + s * m * k, gb + s * n * k, true);
                              } else {
                                kernels::gemm_tn(k, n, m, av + s * m * k, gs, gb + s * k * n, true);
                              }
                            }
                          }
                        });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw DimensionError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(shape));
  }
  std::vector<Real> out(x.data().begin(), x.data().end());
  return make_op_result(std::move(shape), std::move(out), {x}, [](Node& self) {
    if (Real* gx = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i];
    }
  });
}

Tensor permute(const Tensor& x, const std::vector<std::size_t>& order) {
  const std::size_t r = x.rank();
  if (order.size() != r) throw DimensionError("permute: order length differs from rank");
  std::vector<bool> seen(r, false);
  for (std::size_t ax : order) {
    if (ax >= r || seen[ax]) throw DimensionError("permute: invalid axis order");
    seen[ax] = true;
  }
  std::vector<std::size_t> in_strides(r, 1);
  for (std::size_t i = r; i-- > 1;) in_strides[i - 1] = in_strides[i] * x.dim(i);
  Shape out_shape(r);
  std::vector<std::size_t> src_stride(r);
  for (std::size_t i = 0; i < r; ++i) {
    out_shape[i] = x.dim(order[i]);
    src_stride[i] = in_strides[order[i]];
  }
  // gather index for every output element
  const std::size_t total = x.numel();
  auto index = std::make_shared<std::vector<std::size_t>>(total);
  std::vector<std::size_t> counter(r, 0);
  std::size_t src = 0;
  for (std::size_t flat = 0; flat < total; ++flat) {
    (*index)[flat] = src;
    for (std::size_t ax = r; ax-- > 0;) {
      ++counter[ax];
      src += src_stride[ax];
      if (counter[ax] < out_shape[ax]) break;
      src -= src_stride[ax] * counter[ax];
      counter[ax] = 0;
    }
  }
  std::vector<Real> out(total);
  auto xv = x.data();
  for (std::size_t i = 0; i < total; ++i) out[i] = xv[(*index)[i]];
  return make_op_result(std::move(out_shape), std::move(out), {x}, [index](Node& self) {
    if (Real* gx = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) gx[(*index)[i]] += self.grad[i];
    }
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  const Shape& ref = parts.front().shape();
  if (axis >= ref.size()) throw DimensionError("concat: axis out of range");
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= ref[i];
  for (std::size_t i = axis + 1; i < ref.size(); ++i) inner *= ref[i];
  std::vector<std::size_t> widths;
  std::size_t total_axis = 0;
  for (const Tensor& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == ref.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = (i == axis) || s[i] == ref[i];
    if (!ok) throw DimensionError("concat: " + shape_str(s) + " incompatible with " + shape_str(ref));
    widths.push_back(s[axis] * inner);
    total_axis += s[axis];
  }
  const std::size_t row = total_axis * inner;
  std::vector<Real> out(outer * row);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    auto pv = parts[p].data();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(pv.begin() + o * widths[p], widths[p], out.begin() + o * row + offset);
    }
    offset += widths[p];
  }
  Shape shape = ref;
  shape[axis] = total_axis;
  return make_op_result(std::move(shape), std::move(out), parts, [outer, row, widths](Node& self) {
    std::size_t offset = 0;
    for (std::size_t p = 0; p < widths.size(); ++p) {
      if (Real* gp = grad_of(self, p)) {
        for (std::size_t o = 0; o < outer; ++o) {
          const Real* src = self.grad.data() + o * row + offset;
          Real* dst = gp + o * widths[p];
          for (std::size_t j = 0; j < widths[p]; ++j) dst[j] += src[j];
        }
      }
      offset += widths[p];
    }
  });
}

Tensor index_select(const Tensor& x, std::size_t axis, const std::vector<std::size_t>& indices) {
  if (axis >= x.rank()) throw DimensionError("index_select: axis out of range");
  if (indices.empty()) throw DimensionError("index_select: empty index list");
  const std::size_t extent = x.dim(axis);
  for (std::size_t idx : indices) {
    if (idx >= extent) throw RangeError("index_select: index " + std::to_string(idx) + " >= " +
                                        std::to_string(extent));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  const std::size_t count = indices.size();
  std::vector<Real> out(outer * count * inner);
  auto xv = x.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t c = 0; c < count; ++c) {
      std::copy_n(xv.begin() + (o * extent + indices[c]) * inner, inner,
                  out.begin() + (o * count + c) * inner);
    }
  }
  Shape shape = x.shape();
  shape[axis] = count;
  return make_op_result(std::move(shape), std::move(out), {x},
                        [outer, inner, extent, indices](Node& self) {
                          Real* gx = grad_of(self, 0);
                          if (!gx) return;
                          const std::size_t count = indices.size();
                          for (std::size_t o = 0; o < outer; ++o) {
                            for (std::size_t c = 0; c < count; ++c) {
                              const Real* src = self.grad.data() + (o * count + c) * inner;
                              Real* dst = gx + (o * extent + indices[c]) * inner;
                              for (std::size_t j = 0; j < inner; ++j) dst[j] += src[j];
                            }
                          }
                        });
}

Tensor softmax(const Tensor& x, std::size_t axis) {
  if (axis >= x.rank()) throw DimensionError("softmax: axis out of range for " + shape_str(x.shape()));
  const std::size_t n = x.dim(axis);
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
  for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);
  std::vector<Real> out(x.numel());
  auto xv = x.data();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      Real mx = xv[base];
      for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, xv[base + j * inner]);
      Real total = 0;
      for (std::size_t j = 0; j < n; ++j) {
        const Real e = std::exp(xv[base + j * inner] - mx);
        out[base + j * inner] = e;
        total += e;
      }
      const Real inv = Real(1) / total;
      for (std::size_t j = 0; j < n; ++j) out[base + j * inner] *= inv;
    }
  }
  return make_op_result(x.shape(), std::move(out), {x}, [outer, inner, n](Node& self) {
    Real* gx = grad_of(self, 0);
    if (!gx) return;
    const Real* y = self.value.data();
    const Real* g = self.grad.data();
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * n * inner + in;
        Real dotv = 0;
        for (std::size_t j = 0; j < n; ++j) dotv += g[base + j * inner] * y[base + j * inner];
        for (std::size_t j = 0; j < n; ++j) {
          const std::size_t idx = base + j * inner;
          gx[idx] += y[idx] * (g[idx] - dotv);
        }
      }
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, Real eps) {
  if (x.rank() < 1) throw DimensionError("layer_norm: scalar input");
  const std::size_t d = x.shape().back();
  if (gain.numel() != d || bias.numel() != d) {
    throw DimensionError("layer_norm: affine parameters must have " + std::to_string(d) + " entries");
  }
  const std::size_t rows = x.numel() / d;
  std::vector<Real> out(x.numel());
  // per-row normalized values and inverse std, kept for the backward pass
  auto xhat = std::make_shared<std::vector<Real>>(x.numel());
  auto rstd = std::make_shared<std::vector<Real>>(rows);
  auto xv = x.data();
  auto gv = gain.data();
  auto bv = bias.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* row = xv.data() + r * d;
    Real mu = 0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= Real(d);
    Real var = 0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= Real(d);
    const Real inv = Real(1) / std::sqrt(var + eps);
    (*rstd)[r] = inv;
    for (std::size_t j = 0; j < d; ++j) {
      const Real h = (row[j] - mu) * inv;
      (*xhat)[r * d + j] = h;
      out[r * d + j] = h * gv[j] + bv[j];
    }
  }
  return make_op_result(x.shape(), std::move(out), {x, gain, bias}, [rows, d, xhat, rstd](Node& self) {
    const Real* g = self.grad.data();
    const Real* gv = value_of(self, 1);
    if (Real* ggain = grad_of(self, 1)) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < d; ++j) ggain[j] += g[r * d + j] * (*xhat)[r * d + j];
      }
    }
    if (Real* gbias = grad_of(self, 2)) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < d; ++j) gbias[j] += g[r * d + j];
      }
    }
    if (Real* gx = grad_of(self, 0)) {
      for (std::size_t r = 0; r < rows; ++r) {
        Real mean_gh = 0, mean_ghh = 0;
        for (std::size_t j = 0; j < d; ++j) {
          const Real gh = g[r * d + j] * gv[j];
          mean_gh += gh;
          mean_ghh += gh * (*xhat)[r * d + j];
        }
        mean_gh /= Real(d);
        mean_ghh /= Real(d);
        for (std::size_t j = 0; j < d; ++j) {
          const Real gh = g[r * d + j] * gv[j];
          gx[r * d + j] += (*rstd)[r] * (gh - mean_gh - (*xhat)[r * d + j] * mean_ghh);
        }
      }
    }
  });
}

Tensor conv2d(const Tensor& img, const Tensor& kernels, const Tensor* bias, std::size_t stride) {
  if (stride == 0) throw ParameterError("conv2d: stride must be positive");
  const bool batched = img.rank() == 4;
  if (!batched && img.rank() != 3) throw DimensionError("conv2d: image must be [C,H,W] or [N,C,H,W]");
  if (kernels.rank() != 4 || kernels.dim(2) != kernels.dim(3)) {
    throw DimensionError("conv2d: kernels must be [C',C,k,k], got " + shape_str(kernels.shape()));
  }
  const std::size_t n = batched ? img.dim(0) : 1;
  const std::size_t c = img.dim(batched ? 1 : 0);
  const std::size_t h = img.dim(batched ? 2 : 1);
  const std::size_t w = img.dim(batched ? 3 : 2);
  const std::size_t co = kernels.dim(0);
  const std::size_t k = kernels.dim(2);
  if (kernels.dim(1) != c) {
    throw DimensionError("conv2d: kernel channels " + std::to_string(kernels.dim(1)) + " vs image " +
                         std::to_string(c));
  }
  if (k > h || k > w) {
    throw DimensionError("conv2d: kernel " + std::to_string(k) + " larger than image " +
                         std::to_string(h) + "x" + std::to_string(w));
  }
  if (bias && bias->numel() != co) throw DimensionError("conv2d: bias must have C' entries");
  const std::size_t ho = (h - k) / stride + 1;
  const std::size_t wo = (w - k) / stride + 1;
  std::vector<Real> out(n * co * ho * wo);
  auto xv = img.data();
  auto kv = kernels.data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t oc = 0; oc < co; ++oc) {
      const Real b0 = bias ? bias->data()[oc] : Real(0);
      for (std::size_t oy = 0; oy < ho; ++oy) {
        for (std::size_t ox = 0; ox < wo; ++ox) {
          Real acc = b0;
          for (std::size_t ic = 0; ic < c; ++ic) {
            for (std::size_t ky = 0; ky < k; ++ky) {
              const Real* xrow = xv.data() + ((b * c + ic) * h + oy * stride + ky) * w + ox * stride;
              const Real* krow = kv.data() + ((oc * c + ic) * k + ky) * k;
              for (std::size_t kx = 0; kx < k; ++kx) acc += xrow[kx] * krow[kx];
            }
          }
          out[((b * co + oc) * ho + oy) * wo + ox] = acc;
        }
      }
    }
  }
  Shape shape = batched ? Shape{n, co, ho, wo} : Shape{co, ho, wo};
  std::vector<Tensor> inputs{img, kernels};
  if (bias) inputs.push_back(*bias);
  const bool has_bias = bias != nullptr;
  return make_op_result(std::move(shape), std::move(out), std::move(inputs),
                        [=](Node& self) {
                          const Real* g = self.grad.data();
                          const Real* xv = value_of(self, 0);
                          const Real* kv = value_of(self, 1);
                          Real* gx = grad_of(self, 0);
                          Real* gk = grad_of(self, 1);
                          Real* gb = has_bias ? grad_of(self, 2) : nullptr;
                          for (std::size_t b = 0; b < n; ++b) {
                            for (std::size_t oc = 0; oc < co; ++oc) {
                              for (std::size_t oy = 0; oy < ho; ++oy) {
                                for (std::size_t ox = 0; ox < wo; ++ox) {
                                  const Real go = g[((b * co + oc) * ho + oy) * wo + ox];
                                  if (gb) gb[oc] += go;
                                  for (std::size_t ic = 0; ic < c; ++ic) {
                                    for (std::size_t ky = 0; ky < k; ++ky) {
                                      const std::size_t xoff =
                                          ((b * c + ic) * h + oy * stride + ky) * w + ox * stride;
                                      const std::size_t koff = ((oc * c + ic) * k + ky) * k;
                                      for (std::size_t kx = 0; kx < k; ++kx) {
                                        if (gx) gx[xoff + kx] += go * kv[koff + kx];
                                        if (gk) gk[koff + kx] += go * xv[xoff + kx];
                                      }
                                    }
                                  }
                                }
                              }
                            }
                          }
                        });
}

Tensor sum(const Tensor& x) {
  Real total = 0;
  for (Real v : x.data()) total += v;
  return make_op_result({}, {total}, {x}, [](Node& self) {
    if (Real* gx = grad_of(self, 0)) {
      const Real g = self.grad[0];
      const std::size_t count = self.inputs[0]->value.size();
      for (std::size_t i = 0; i < count; ++i) gx[i] += g;
    }
  });
}

Tensor mean(const Tensor& x) {
  return scale(sum(x), Real(1) / Real(x.numel()));
}

Tensor dot_const(const Tensor& x, std::span<const Real> weights) {
  if (weights.size() != x.numel()) throw DimensionError("dot_const: weight count differs from numel");
  Real total = 0;
  auto xv = x.data();
  for (std::size_t i = 0; i < weights.size(); ++i) total += xv[i] * weights[i];
  std::vector<Real> w(weights.begin(), weights.end());
  return make_op_result({}, {total}, {x}, [w = std::move(w)](Node& self) {
    if (Real* gx = grad_of(self, 0)) {
      const Real g = self.grad[0];
      for (std::size_t i = 0; i < w.size(); ++i) gx[i] += g * w[i];
    }
  });
}

Tensor embedding(const Tensor& table, const std::vector<std::size_t>& ids) {
  if (table.rank() != 2) throw DimensionError("embedding: table must be [V,D]");
  if (ids.empty()) throw DimensionError("embedding: empty id list");
  const std::size_t vocab = table.dim(0), d = table.dim(1);
  std::vector<Real> out(ids.size() * d);
  auto tv = table.data();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= vocab) {
      throw RangeError("embedding: id " + std::to_string(ids[i]) + " >= vocabulary " + std::to_string(vocab));
    }
    std::copy_n(tv.begin() + ids[i] * d, d, out.begin() + i * d);
  }
  return make_op_result({ids.size(), d}, std::move(out), {table}, [ids, d](Node& self) {
    if (Real* gt = grad_of(self, 0)) {
      for (std::size_t i = 0; i < ids.size(); ++i) {
        for (std::size_t j = 0; j < d; ++j) gt[ids[i] * d + j] += self.grad[i * d + j];
      }
    }
  });
}

Tensor gate_rows(const Tensor& x, const Tensor& m) {
  if (x.rank() < 1 || drop_last(x.shape()) != m.shape()) {
    throw DimensionError("gate_rows: mask " + shape_str(m.shape()) + " does not match " + shape_str(x.shape()));
  }
  const std::size_t d = x.shape().back();
  const std::size_t rows = m.numel();
  std::vector<Real> out(x.numel());
  auto xv = x.data();
  auto mv = m.data();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < d; ++j) out[r * d + j] = xv[r * d + j] * mv[r];
  }
  return make_op_result(x.shape(), std::move(out), {x, m}, [rows, d](Node& self) {
    const Real* g = self.grad.data();
    const Real* xv = value_of(self, 0);
    const Real* mv = value_of(self, 1);
    if (Real* gx = grad_of(self, 0)) {
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < d; ++j) gx[r * d + j] += g[r * d + j] * mv[r];
      }
    }
    if (Real* gm = grad_of(self, 1)) {
      for (std::size_t r = 0; r < rows; ++r) {
        Real acc = 0;
        for (std::size_t j = 0; j < d; ++j) acc += g[r * d + j] * xv[r * d + j];
        gm[r] += acc;
      }
    }
  });
}

Tensor cross_entropy(const Tensor& logits, const std::vector<std::size_t>& targets,
                     std::span<const Real> weights) {
  if (logits.rank() != 2) throw DimensionError("cross_entropy: logits must be [N,K]");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  if (targets.size() != n || weights.size() != n) {
    throw DimensionError("cross_entropy: targets/weights must have N entries");
  }
  Real total_w = 0;
  for (Real w : weights) total_w += w;
  if (!(total_w > Real(0))) throw ContractError("cross_entropy: no positive-weight rows");
  auto probs = std::make_shared<std::vector<Real>>(n * k);
  auto lv = logits.data();
  double loss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (targets[i] >= k) throw RangeError("cross_entropy: target " + std::to_string(targets[i]) + " >= K");
    const Real* row = lv.data() + i * k;
    Real mx = *std::max_element(row, row + k);
    Real z = 0;
    for (std::size_t j = 0; j < k; ++j) {
      const Real e = std::exp(row[j] - mx);
      (*probs)[i * k + j] = e;
      z += e;
    }
    for (std::size_t j = 0; j < k; ++j) (*probs)[i * k + j] /= z;
    if (weights[i] != Real(0)) {
      loss += double(weights[i]) * (double(mx) + std::log(double(z)) - double(row[targets[i]]));
    }
  }
  const Real value = Real(loss / double(total_w));
  std::vector<Real> w(weights.begin(), weights.end());
  return make_op_result({}, {value}, {logits}, [probs, targets, w = std::move(w), n, k, total_w](Node& self) {
    Real* gl = grad_of(self, 0);
    if (!gl) return;
    const Real g = self.grad[0] / total_w;
    for (std::size_t i = 0; i < n; ++i) {
      if (w[i] == Real(0)) continue;
      const Real s = g * w[i];
      for (std::size_t j = 0; j < k; ++j) {
        const Real onehot = j == targets[i] ? Real(1) : Real(0);
        gl[i * k + j] += s * ((*probs)[i * k + j] - onehot);
      }
    }
  });
}

Tensor dropout(const Tensor& x, double p, Rng& rng) {
  if (p < 0.0 || p >= 1.0) throw ParameterError("dropout: p must be in [0,1)");
  if (p == 0.0) return x;
  const Real keep_scale = Real(1.0 / (1.0 - p));
  auto mask = std::make_shared<std::vector<Real>>(x.numel());
  std::vector<Real> out(x.numel());
  auto xv = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    (*mask)[i] = rng.uniform() < p ? Real(0) : keep_scale;
    out[i] = xv[i] * (*mask)[i];
  }
  return make_op_result(x.shape(), std::move(out), {x}, [mask](Node& self) {
    if (Real* gx = grad_of(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i] += self.grad[i] * (*mask)[i];
    }
  });
}

}  // namespace adacred::ops
