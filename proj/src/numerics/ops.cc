// Copyright 2026 The AVSR Kit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "avsr/numerics/ops.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>

#include "avsr/numerics/gemm.h"

namespace avsr::ops {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Tape& SameTape(Var a) {
  if (!a.valid()) throw ContractError("op applied to an unbound Var");
  return *a.tape();
}

Tape& SameTape(Var a, Var b) {
  Tape& t = SameTape(a);
  if (b.tape() != &t) throw ContractError("op inputs live on different tapes");
  return t;
}

void CheckAxis(const Shape& shape, int axis, const char* op) {
  if (axis < 0 || axis >= static_cast<int>(shape.size())) {
    throw ShapeError(StrCat(op, ": axis ", axis, " invalid for shape ",
                            ShapeString(shape)));
  }
}

// outer x n x inner decomposition around one axis.
struct AxisSplit {
  int64_t outer = 1, n = 1, inner = 1;
};

AxisSplit SplitAt(const Shape& shape, int axis) {
  AxisSplit s;
  for (int i = 0; i < axis; ++i) s.outer *= shape[i];
  s.n = shape[axis];
  for (size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

// ---------------------------------------------------------------------------
// Broadcasting

struct BroadcastPlan {
  Shape out;
  std::vector<int64_t> stride_a, stride_b;  // per out axis, 0 if broadcast
  enum class Kind { kSame, kSuffixB, kGeneral } kind = Kind::kGeneral;
};

std::vector<int64_t> RowMajorStrides(const Shape& shape) {
  std::vector<int64_t> s(shape.size(), 1);
  for (int i = static_cast<int>(shape.size()) - 2; i >= 0; --i) {
    s[i] = s[i + 1] * shape[i + 1];
  }
  return s;
}

BroadcastPlan MakeBroadcastPlan(const Shape& a, const Shape& b) {
  BroadcastPlan p;
  const size_t rank = std::max(a.size(), b.size());
  p.out.assign(rank, 1);
  Shape pa(rank, 1), pb(rank, 1);
  std::copy(a.begin(), a.end(), pa.begin() + (rank - a.size()));
  std::copy(b.begin(), b.end(), pb.begin() + (rank - b.size()));
  for (size_t i = 0; i < rank; ++i) {
    if (pa[i] != pb[i] && pa[i] != 1 && pb[i] != 1) {
      throw ShapeError(StrCat("cannot broadcast shapes ", ShapeString(a),
                              " and ", ShapeString(b)));
    }
    p.out[i] = std::max(pa[i], pb[i]);
  }
  auto sa = RowMajorStrides(pa), sb = RowMajorStrides(pb);
  p.stride_a.resize(rank);
  p.stride_b.resize(rank);
  for (size_t i = 0; i < rank; ++i) {
    p.stride_a[i] = pa[i] == 1 ? 0 : sa[i];
    p.stride_b[i] = pb[i] == 1 ? 0 : sb[i];
  }
  if (a == b) {
    p.kind = BroadcastPlan::Kind::kSame;
  } else if (pa == p.out) {
    // b repeats as a contiguous suffix block when its leading padded axes are
    // all 1 and the remaining axes match the output exactly.
    size_t first = 0;
    while (first < rank && pb[first] == 1 && p.out[first] != 1) ++first;
    bool suffix = true;
    for (size_t i = first; i < rank; ++i) suffix &= pb[i] == p.out[i];
    if (suffix) p.kind = BroadcastPlan::Kind::kSuffixB;
  }
  return p;
}

// Calls fn(out_index, a_index, b_index) for every output element.
template <typename Fn>
void ForEachBroadcast(const BroadcastPlan& p, int64_t size_b, Fn&& fn) {
  const int64_t total = NumElements(p.out);
  switch (p.kind) {
    case BroadcastPlan::Kind::kSame:
      for (int64_t i = 0; i < total; ++i) fn(i, i, i);
      return;
    case BroadcastPlan::Kind::kSuffixB:
      for (int64_t i = 0; i < total; ++i) fn(i, i, i % size_b);
      return;
    case BroadcastPlan::Kind::kGeneral:
      break;
  }
  const size_t rank = p.out.size();
  std::vector<int64_t> idx(rank, 0);
  int64_t ia = 0, ib = 0;
  for (int64_t i = 0; i < total; ++i) {
    fn(i, ia, ib);
    for (int ax = static_cast<int>(rank) - 1; ax >= 0; --ax) {
      if (++idx[ax] < p.out[ax]) {
        ia += p.stride_a[ax];
        ib += p.stride_b[ax];
        break;
      }
      ia -= p.stride_a[ax] * (p.out[ax] - 1);
      ib -= p.stride_b[ax] * (p.out[ax] - 1);
      idx[ax] = 0;
    }
  }
}

// f(x, y) with partials dfx(x, y, out), dfy(x, y, out).
template <typename F, typename Dx, typename Dy>
Var BinaryOp(Var a, Var b, F f, Dx dfx, Dy dfy) {
  Tape& tape = SameTape(a, b);
  const Tensor& va = a.value();
  const Tensor& vb = b.value();
  auto plan = std::make_shared<BroadcastPlan>(
      MakeBroadcastPlan(va.shape(), vb.shape()));
  Tensor out(plan->out, PromoteTypes(va.dtype(), vb.dtype()));
  {
    const double* pa = va.data().data();
    const double* pb = vb.data().data();
    double* po = out.data().data();
    ForEachBroadcast(*plan, vb.size(), [&](int64_t i, int64_t ia, int64_t ib) {
      po[i] = f(pa[ia], pb[ib]);
    });
  }
  return tape.Record(
      std::move(out), {a, b},
      [a, b, plan, dfx, dfy](Tape& t, const Tensor& out, const Tensor& g) {
        const Tensor& va = a.value();
        const Tensor& vb = b.value();
        Tensor ga(va.shape()), gb(vb.shape());
        const double* pa = va.data().data();
        const double* pb = vb.data().data();
        const double* po = out.data().data();
        const double* pg = g.data().data();
        double* qa = ga.data().data();
        double* qb = gb.data().data();
        const bool need_a = a.requires_grad(), need_b = b.requires_grad();
        ForEachBroadcast(*plan, vb.size(),
                         [&](int64_t i, int64_t ia, int64_t ib) {
                           if (need_a) qa[ia] += pg[i] * dfx(pa[ia], pb[ib], po[i]);
                           if (need_b) qb[ib] += pg[i] * dfy(pa[ia], pb[ib], po[i]);
                         });
        if (need_a) t.Accumulate(a, std::move(ga));
        if (need_b) t.Accumulate(b, std::move(gb));
      });
}

// f(x) with derivative df(x, out).
template <typename F, typename D>
Var UnaryOp(Var x, F f, D df) {
  Tape& tape = SameTape(x);
  const Tensor& vx = x.value();
  Tensor out(vx.shape(), vx.dtype());
  for (int64_t i = 0; i < vx.size(); ++i) out[i] = f(vx[i]);
  return tape.Record(std::move(out), {x},
                     [x, df](Tape& t, const Tensor& out, const Tensor& g) {
                       const Tensor& vx = x.value();
                       Tensor gx(vx.shape());
                       for (int64_t i = 0; i < vx.size(); ++i) {
                         gx[i] = g[i] * df(vx[i], out[i]);
                       }
                       t.Accumulate(x, std::move(gx));
                     });
}

double StableSigmoid(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

// ---------------------------------------------------------------------------
// Elementwise

Var Add(Var a, Var b) {
  return BinaryOp(
      a, b, [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

Var Sub(Var a, Var b) {
  return BinaryOp(
      a, b, [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

Var Mul(Var a, Var b) {
  return BinaryOp(
      a, b, [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; },
      [](double x, double, double) { return x; });
}

Var Div(Var a, Var b) {
  return BinaryOp(
      a, b, [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double x, double y, double) { return -x / (y * y); });
}

Var Scale(Var x, double factor) {
  return UnaryOp(
      x, [factor](double v) { return v * factor; },
      [factor](double, double) { return factor; });
}

Var AddScalar(Var x, double value) {
  return UnaryOp(
      x, [value](double v) { return v + value; },
      [](double, double) { return 1.0; });
}

Var Neg(Var x) { return Scale(x, -1.0); }

Var Exp(Var x) {
  return UnaryOp(
      x, [](double v) { return std::exp(v); },
      [](double, double out) { return out; });
}

Var Log(Var x) {
  return UnaryOp(
      x, [](double v) { return std::log(v); },
      [](double v, double) { return 1.0 / v; });
}

Var Sigmoid(Var x) {
  return UnaryOp(
      x, [](double v) { return StableSigmoid(v); },
      [](double, double out) { return out * (1.0 - out); });
}

namespace {
thread_local KinkRecorder* active_recorder = nullptr;
}  // namespace

KinkRecorder::KinkRecorder() : previous_(active_recorder) { active_recorder = this; }
KinkRecorder::~KinkRecorder() { active_recorder = previous_; }
KinkRecorder* KinkRecorder::Active() { return active_recorder; }

Var Relu(Var x) {
  if (KinkRecorder* r = KinkRecorder::Active()) {
    for (double v : x.value().data()) r->Mix(v > 0 ? 1 : 0);
  }
  return UnaryOp(
      x, [](double v) { return v > 0 ? v : 0.0; },
      [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

Var Swish(Var x) {
  return UnaryOp(
      x, [](double v) { return v * StableSigmoid(v); },
      [](double v, double) {
        const double s = StableSigmoid(v);
        return s * (1.0 + v * (1.0 - s));
      });
}

Var Square(Var x) {
  return UnaryOp(
      x, [](double v) { return v * v; },
      [](double v, double) { return 2.0 * v; });
}

// ---------------------------------------------------------------------------
// Reductions

Var Sum(Var x) {
  Tape& tape = SameTape(x);
  const Tensor& vx = x.value();
  double s = 0.0;
  for (double v : vx.data()) s += v;
  return tape.Record(Tensor({1}, {s}, vx.dtype()), {x},
                     [x](Tape& t, const Tensor&, const Tensor& g) {
                       t.Accumulate(x, Tensor::Full(x.shape(), g[0]));
                     });
}

Var Mean(Var x) { return Scale(Sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var SumAxes(Var x, const std::vector<int>& axes) {
  Tape& tape = SameTape(x);
  const Tensor& vx = x.value();
  const Shape& in = vx.shape();
  std::vector<bool> reduce(in.size(), false);
  for (int a : axes) {
    CheckAxis(in, a, "SumAxes");
    reduce[a] = true;
  }
  Shape out_shape;
  for (size_t i = 0; i < in.size(); ++i) {
    if (!reduce[i]) out_shape.push_back(in[i]);
  }
  if (out_shape.empty()) out_shape.push_back(1);
  // Stride of each input axis inside the output (0 for reduced axes).
  auto ostr_full = RowMajorStrides(out_shape);
  auto ostride = std::make_shared<std::vector<int64_t>>(in.size(), 0);
  {
    size_t k = 0;
    for (size_t i = 0; i < in.size(); ++i) {
      if (!reduce[i]) (*ostride)[i] = ostr_full[k++];
    }
  }
  auto for_each = [in, ostride](auto&& fn) {
    const int64_t total = NumElements(in);
    std::vector<int64_t> idx(in.size(), 0);
    int64_t o = 0;
    for (int64_t i = 0; i < total; ++i) {
      fn(i, o);
      for (int ax = static_cast<int>(in.size()) - 1; ax >= 0; --ax) {
        if (++idx[ax] < in[ax]) {
          o += (*ostride)[ax];
          break;
        }
        o -= (*ostride)[ax] * (in[ax] - 1);
        idx[ax] = 0;
      }
    }
  };
  Tensor out(out_shape, vx.dtype());
  for_each([&](int64_t i, int64_t o) { out[o] += vx[i]; });
  return tape.Record(std::move(out), {x},
                     [x, for_each](Tape& t, const Tensor&, const Tensor& g) {
                       Tensor gx(x.shape());
                       for_each([&](int64_t i, int64_t o) { gx[i] = g[o]; });
                       t.Accumulate(x, std::move(gx));
                     });
}

Var MeanAxes(Var x, const std::vector<int>& axes) {
  int64_t count = 1;
  for (int a : axes) count *= x.value().dim(a);
  return Scale(SumAxes(x, axes), 1.0 / static_cast<double>(count));
}

// ---------------------------------------------------------------------------
// Matrix product

Var MatMul(Var a, Var b) {
  Tape& tape = SameTape(a, b);
  const Tensor& va = a.value();
  const Tensor& vb = b.value();
  if (va.rank() < 2 || vb.rank() < 2) {
    throw ShapeError(StrCat("MatMul needs rank >= 2 operands, got ",
                            ShapeString(va.shape()), " and ",
                            ShapeString(vb.shape())));
  }
  const int64_t m = va.dim(va.rank() - 2), k = va.dim(va.rank() - 1);
  const int64_t k2 = vb.dim(vb.rank() - 2), n = vb.dim(vb.rank() - 1);
  if (k != k2) {
    throw ShapeError(StrCat("MatMul inner extents differ: ",
                            ShapeString(va.shape()), " x ",
                            ShapeString(vb.shape())));
  }
  Shape batch_a(va.shape().begin(), va.shape().end() - 2);
  Shape batch_b(vb.shape().begin(), vb.shape().end() - 2);
  if (batch_a.empty()) batch_a.push_back(1);
  if (batch_b.empty()) batch_b.push_back(1);
  BroadcastPlan plan;
  try {
    plan = MakeBroadcastPlan(batch_a, batch_b);
  } catch (const ShapeError&) {
    throw ShapeError(StrCat("MatMul batch extents not broadcastable: ",
                            ShapeString(va.shape()), " x ",
                            ShapeString(vb.shape())));
  }
  plan.kind = BroadcastPlan::Kind::kGeneral;
  Shape out_shape;
  if (va.rank() == 2 && vb.rank() == 2) {
    out_shape = {m, n};
  } else {
    out_shape = plan.out;
    out_shape.push_back(m);
    out_shape.push_back(n);
  }
  auto pairs = std::make_shared<std::vector<std::array<int64_t, 3>>>();
  ForEachBroadcast(plan, 0, [&](int64_t i, int64_t ia, int64_t ib) {
    pairs->push_back({i, ia, ib});
  });
  Tensor out(out_shape, PromoteTypes(va.dtype(), vb.dtype()));
  for (const auto& [io, ia, ib] : *pairs) {
    Gemm(false, false, m, n, k, va.data().data() + ia * m * k,
         vb.data().data() + ib * k * n, out.data().data() + io * m * n, false);
  }
  return tape.Record(
      std::move(out), {a, b},
      [a, b, pairs, m, n, k](Tape& t, const Tensor&, const Tensor& g) {
        const Tensor& va = a.value();
        const Tensor& vb = b.value();
        if (a.requires_grad()) {
          Tensor ga(va.shape());
          for (const auto& [io, ia, ib] : *pairs) {
            // dA = dC * B^T
            Gemm(false, true, m, k, n, g.data().data() + io * m * n,
                 vb.data().data() + ib * k * n, ga.data().data() + ia * m * k,
                 true);
          }
          t.Accumulate(a, std::move(ga));
        }
        if (b.requires_grad()) {
          Tensor gb(vb.shape());
          for (const auto& [io, ia, ib] : *pairs) {
            // dB = A^T * dC
            Gemm(true, false, k, n, m, va.data().data() + ia * m * k,
                 g.data().data() + io * m * n, gb.data().data() + ib * k * n,
                 true);
          }
          t.Accumulate(b, std::move(gb));
        }
      });
}

// ---------------------------------------------------------------------------
// Layout

Var Reshape(Var x, Shape shape) {
  Tape& tape = SameTape(x);
  Tensor out = x.value().Reshaped(std::move(shape));
  return tape.Record(std::move(out), {x},
                     [x](Tape& t, const Tensor&, const Tensor& g) {
                       t.Accumulate(x, g.Reshaped(x.shape()));
                     });
}

Var Permute(Var x, const std::vector<int>& perm) {
  Tape& tape = SameTape(x);
  const Tensor& vx = x.value();
  const Shape& in = vx.shape();
  if (perm.size() != in.size()) {
    throw ShapeError(StrCat("Permute: perm size ", perm.size(),
                            " vs shape ", ShapeString(in)));
  }
  std::vector<bool> seen(in.size(), false);
  Shape out_shape(in.size());
  for (size_t i = 0; i < perm.size(); ++i) {
    CheckAxis(in, perm[i], "Permute");
    if (seen[perm[i]]) throw ShapeError("Permute: repeated axis");
    seen[perm[i]] = true;
    out_shape[i] = in[perm[i]];
  }
  auto in_strides = RowMajorStrides(in);
  // Input stride for each output axis.
  auto src = std::make_shared<std::vector<int64_t>>(in.size());
  for (size_t i = 0; i < perm.size(); ++i) (*src)[i] = in_strides[perm[i]];
  auto for_each = [out_shape, src](auto&& fn) {
    const int64_t total = NumElements(out_shape);
    const size_t rank = out_shape.size();
    std::vector<int64_t> idx(rank, 0);
    int64_t s = 0;
    for (int64_t i = 0; i < total; ++i) {
      fn(i, s);
      for (int ax = static_cast<int>(rank) - 1; ax >= 0; --ax) {
        if (++idx[ax] < out_shape[ax]) {
          s += (*src)[ax];
          break;
        }
        s -= (*src)[ax] * (out_shape[ax] - 1);
        idx[ax] = 0;
      }
    }
  };
  Tensor out(out_shape, vx.dtype());
  for_each([&](int64_t i, int64_t s) { out[i] = vx[s]; });
  return tape.Record(std::move(out), {x},
                     [x, for_each](Tape& t, const Tensor&, const Tensor& g) {
                       Tensor gx(x.shape());
                       for_each([&](int64_t i, int64_t s) { gx[s] += g[i]; });
                       t.Accumulate(x, std::move(gx));
                     });
}

Var Transpose(Var x, int axis0, int axis1) {
  std::vector<int> perm(static_cast<size_t>(x.rank()));
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = static_cast<int>(i);
  CheckAxis(x.shape(), axis0, "Transpose");
  CheckAxis(x.shape(), axis1, "Transpose");
  std::swap(perm[axis0], perm[axis1]);
  return Permute(x, perm);
}

Var Concat(const std::vector<Var>& xs, int axis) {
  if (xs.empty()) throw ContractError("Concat of zero tensors");
  Tape& tape = SameTape(xs[0]);
  const Shape& first = xs[0].shape();
  CheckAxis(first, axis, "Concat");
  Shape out_shape = first;
  out_shape[axis] = 0;
  DType dtype = xs[0].value().dtype();
  for (const Var& v : xs) {
    if (v.tape() != &tape) throw ContractError("Concat across tapes");
    const Shape& s = v.shape();
    bool ok = s.size() == first.size();
    for (size_t i = 0; ok && i < s.size(); ++i) {
      if (static_cast<int>(i) != axis && s[i] != first[i]) ok = false;
    }
    if (!ok) {
      throw ShapeError(StrCat("Concat shape mismatch: ", ShapeString(first),
                              " vs ", ShapeString(s), " on axis ", axis));
    }
    out_shape[axis] += s[axis];
    dtype = PromoteTypes(dtype, v.value().dtype());
  }
  const AxisSplit os = SplitAt(out_shape, axis);
  Tensor out(out_shape, dtype);
  auto offsets = std::make_shared<std::vector<int64_t>>();
  int64_t off = 0;
  for (const Var& v : xs) {
    offsets->push_back(off);
    const AxisSplit s = SplitAt(v.shape(), axis);
    const int64_t chunk = s.n * s.inner;
    for (int64_t o = 0; o < s.outer; ++o) {
      std::copy_n(v.value().data().data() + o * chunk, chunk,
                  out.data().data() + o * os.n * os.inner + off * os.inner);
    }
    off += s.n;
  }
  return tape.Record(
      std::move(out), xs,
      [xs, axis, offsets, os](Tape& t, const Tensor&, const Tensor& g) {
        for (size_t j = 0; j < xs.size(); ++j) {
          if (!xs[j].requires_grad()) continue;
          const AxisSplit s = SplitAt(xs[j].shape(), axis);
          const int64_t chunk = s.n * s.inner;
          Tensor gx(xs[j].shape());
          for (int64_t o = 0; o < s.outer; ++o) {
            std::copy_n(
                g.data().data() + o * os.n * os.inner + (*offsets)[j] * os.inner,
                chunk, gx.data().data() + o * chunk);
          }
          t.Accumulate(xs[j], std::move(gx));
        }
      });
}

Var Slice(Var x, int axis, int64_t start, int64_t length) {
  Tape& tape = SameTape(x);
  const Shape& in = x.shape();
  CheckAxis(in, axis, "Slice");
  if (start < 0 || length < 1 || start + length > in[axis]) {
    throw ShapeError(StrCat("Slice [", start, ", ", start + length,
                            ") out of range on axis ", axis, " of ",
                            ShapeString(in)));
  }
  Shape out_shape = in;
  out_shape[axis] = length;
  const AxisSplit s = SplitAt(in, axis);
  Tensor out(out_shape, x.value().dtype());
  for (int64_t o = 0; o < s.outer; ++o) {
    std::copy_n(x.value().data().data() + (o * s.n + start) * s.inner,
                length * s.inner, out.data().data() + o * length * s.inner);
  }
  return tape.Record(std::move(out), {x},
                     [x, s, start, length](Tape& t, const Tensor&, const Tensor& g) {
                       Tensor gx(x.shape());
                       for (int64_t o = 0; o < s.outer; ++o) {
                         std::copy_n(g.data().data() + o * length * s.inner,
                                     length * s.inner,
                                     gx.data().data() + (o * s.n + start) * s.inner);
                       }
                       t.Accumulate(x, std::move(gx));
                     });
}

// ---------------------------------------------------------------------------
// Softmax family

Var LogSoftmax(Var x, int axis) {
  Tape& tape = SameTape(x);
  const Tensor& vx = x.value();
  CheckAxis(vx.shape(), axis, "LogSoftmax");
  const AxisSplit s = SplitAt(vx.shape(), axis);
  Tensor out(vx.shape(), vx.dtype());
  for (int64_t o = 0; o < s.outer; ++o) {
    for (int64_t in = 0; in < s.inner; ++in) {
      const int64_t base = o * s.n * s.inner + in;
      double mx = kNegInf;
      for (int64_t j = 0; j < s.n; ++j) {
        const double v = vx[base + j * s.inner];
        if (std::isnan(v)) throw NumericError("LogSoftmax: NaN input");
        mx = std::max(mx, v);
      }
      double sum = 0.0;
      for (int64_t j = 0; j < s.n; ++j) sum += std::exp(vx[base + j * s.inner] - mx);
      const double lse = mx + std::log(sum);
      for (int64_t j = 0; j < s.n; ++j) {
        out[base + j * s.inner] = vx[base + j * s.inner] - lse;
      }
    }
  }
  return tape.Record(std::move(out), {x},
                     [x, s](Tape& t, const Tensor& out, const Tensor& g) {
                       Tensor gx(x.shape());
                       for (int64_t o = 0; o < s.outer; ++o) {
                         for (int64_t in = 0; in < s.inner; ++in) {
                           const int64_t base = o * s.n * s.inner + in;
                           double gs = 0.0;
                           for (int64_t j = 0; j < s.n; ++j) gs += g[base + j * s.inner];
                           for (int64_t j = 0; j < s.n; ++j) {
                             const int64_t idx = base + j * s.inner;
                             gx[idx] = g[idx] - std::exp(out[idx]) * gs;
                           }
                         }
                       }
                       t.Accumulate(x, std::move(gx));
                     });
}

Var Softmax(Var x, int axis) {
  Tape& tape = SameTape(x);
  const Tensor& vx = x.value();
  CheckAxis(vx.shape(), axis, "Softmax");
  const AxisSplit s = SplitAt(vx.shape(), axis);
  Tensor out(vx.shape(), vx.dtype());
  for (int64_t o = 0; o < s.outer; ++o) {
    for (int64_t in = 0; in < s.inner; ++in) {
      const int64_t base = o * s.n * s.inner + in;
      double mx = kNegInf;
      for (int64_t j = 0; j < s.n; ++j) {
        const double v = vx[base + j * s.inner];
        if (std::isnan(v)) throw NumericError("Softmax: NaN input");
        mx = std::max(mx, v);
      }
      double sum = 0.0;
      for (int64_t j = 0; j < s.n; ++j) {
        const double e = std::exp(vx[base + j * s.inner] - mx);
        out[base + j * s.inner] = e;
        sum += e;
      }
      for (int64_t j = 0; j < s.n; ++j) out[base + j * s.inner] /= sum;
    }
  }
  return tape.Record(std::move(out), {x},
                     [x, s](Tape& t, const Tensor& out, const Tensor& g) {
                       Tensor gx(x.shape());
                       for (int64_t o = 0; o < s.outer; ++o) {
                         for (int64_t in = 0; in < s.inner; ++in) {
                           const int64_t base = o * s.n * s.inner + in;
                           double dot = 0.0;
                           for (int64_t j = 0; j < s.n; ++j) {
                             dot += g[base + j * s.inner] * out[base + j * s.inner];
                           }
                           for (int64_t j = 0; j < s.n; ++j) {
                             const int64_t idx = base + j * s.inner;
                             gx[idx] = out[idx] * (g[idx] - dot);
                           }
                         }
                       }
                       t.Accumulate(x, std::move(gx));
                     });
}

// ---------------------------------------------------------------------------
// Normalization

Var LayerNorm(Var x, Var gain, Var bias, double eps) {
  Tape& tape = SameTape(x);
  const Tensor& vx = x.value();
  const int64_t c = vx.dim(vx.rank() - 1);
  if (gain.value().size() != c || bias.value().size() != c) {
    throw ShapeError(StrCat("LayerNorm: gain/bias extent must be ", c));
  }
  const int64_t rows = vx.size() / c;
  auto mean = std::make_shared<std::vector<double>>(rows);
  auto inv = std::make_shared<std::vector<double>>(rows);
  const Tensor& vg = gain.value();
  const Tensor& vb = bias.value();
  Tensor out(vx.shape(), PromoteTypes(vx.dtype(), vg.dtype()));
  for (int64_t r = 0; r < rows; ++r) {
    const double* px = vx.data().data() + r * c;
    double mu = 0.0;
    for (int64_t j = 0; j < c; ++j) mu += px[j];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (int64_t j = 0; j < c; ++j) var += (px[j] - mu) * (px[j] - mu);
    var /= static_cast<double>(c);
    const double is = 1.0 / std::sqrt(var + eps);
    (*mean)[r] = mu;
    (*inv)[r] = is;
    double* po = out.data().data() + r * c;
    for (int64_t j = 0; j < c; ++j) po[j] = (px[j] - mu) * is * vg[j] + vb[j];
  }
  return tape.Record(
      std::move(out), {x, gain, bias},
      [x, gain, bias, mean, inv, c, rows](Tape& t, const Tensor&, const Tensor& g) {
        const Tensor& vx = x.value();
        const Tensor& vg = gain.value();
        Tensor gx(vx.shape()), gg(vg.shape()), gb(vg.shape());
        std::vector<double> xhat(c), dxhat(c);
        for (int64_t r = 0; r < rows; ++r) {
          const double* px = vx.data().data() + r * c;
          const double* pg = g.data().data() + r * c;
          double s1 = 0.0, s2 = 0.0;
          for (int64_t j = 0; j < c; ++j) {
            xhat[j] = (px[j] - (*mean)[r]) * (*inv)[r];
            dxhat[j] = pg[j] * vg[j];
            s1 += dxhat[j];
            s2 += dxhat[j] * xhat[j];
            gg[j] += pg[j] * xhat[j];
            gb[j] += pg[j];
          }
          double* qx = gx.data().data() + r * c;
          const double cn = static_cast<double>(c);
          for (int64_t j = 0; j < c; ++j) {
            qx[j] = (*inv)[r] / cn * (cn * dxhat[j] - s1 - xhat[j] * s2);
          }
        }
        t.Accumulate(x, std::move(gx));
        t.Accumulate(gain, std::move(gg));
        t.Accumulate(bias, std::move(gb));
      });
}

// ---------------------------------------------------------------------------
// Convolution

int64_t ConvOutputLength(int64_t length, int64_t kernel, int64_t stride,
                         int64_t padding) {
  if (stride < 1 || padding < 0 || kernel < 1) {
    throw ConfigError(StrCat("invalid conv geometry kernel=", kernel,
                             " stride=", stride, " padding=", padding));
  }
  const int64_t padded = length + 2 * padding;
  if (kernel > padded) {
    throw ShapeError(StrCat("kernel ", kernel, " larger than padded input ",
                            padded, " (length ", length, ", padding ",
                            padding, ")"));
  }
  return (padded - kernel) / stride + 1;
}

namespace {

// Geometry normalized to three spatial axes (missing axes have extent 1).
struct ConvGeom {
  int64_t n = 1, ci = 1, co = 1;
  int64_t in[3] = {1, 1, 1};
  int64_t k[3] = {1, 1, 1};
  int64_t st[3] = {1, 1, 1};
  int64_t pad[3] = {0, 0, 0};
  int64_t out[3] = {1, 1, 1};
  int64_t InSize() const { return in[0] * in[1] * in[2]; }
  int64_t OutSize() const { return out[0] * out[1] * out[2]; }
  int64_t KSize() const { return k[0] * k[1] * k[2]; }
  int64_t Rows() const { return ci * KSize(); }
  int64_t Cols() const { return n * OutSize(); }
};

// cols: [ci * K, n * P]
void Im2Col(const ConvGeom& g, const double* x, double* cols) {
  const int64_t P = g.OutSize();
  const int64_t ncols = g.Cols();
  int64_t r = 0;
  for (int64_t c = 0; c < g.ci; ++c) {
    for (int64_t k0 = 0; k0 < g.k[0]; ++k0) {
      for (int64_t k1 = 0; k1 < g.k[1]; ++k1) {
        for (int64_t k2 = 0; k2 < g.k[2]; ++k2, ++r) {
          double* row = cols + r * ncols;
          for (int64_t b = 0; b < g.n; ++b) {
            const double* xb = x + (b * g.ci + c) * g.InSize();
            double* dst = row + b * P;
            for (int64_t o0 = 0; o0 < g.out[0]; ++o0) {
              const int64_t s0 = o0 * g.st[0] - g.pad[0] + k0;
              const bool v0 = s0 >= 0 && s0 < g.in[0];
              for (int64_t o1 = 0; o1 < g.out[1]; ++o1) {
                const int64_t s1 = o1 * g.st[1] - g.pad[1] + k1;
                const bool v1 = v0 && s1 >= 0 && s1 < g.in[1];
                double* d = dst + (o0 * g.out[1] + o1) * g.out[2];
                if (!v1) {
                  std::fill_n(d, g.out[2], 0.0);
                  continue;
                }
                const double* src = xb + (s0 * g.in[1] + s1) * g.in[2];
                for (int64_t o2 = 0; o2 < g.out[2]; ++o2) {
                  const int64_t s2 = o2 * g.st[2] - g.pad[2] + k2;
                  d[o2] = (s2 >= 0 && s2 < g.in[2]) ? src[s2] : 0.0;
                }
              }
            }
          }
        }
      }
    }
  }
}

void Col2Im(const ConvGeom& g, const double* cols, double* x) {
  const int64_t P = g.OutSize();
  const int64_t ncols = g.Cols();
  int64_t r = 0;
  for (int64_t c = 0; c < g.ci; ++c) {
    for (int64_t k0 = 0; k0 < g.k[0]; ++k0) {
      for (int64_t k1 = 0; k1 < g.k[1]; ++k1) {
        for (int64_t k2 = 0; k2 < g.k[2]; ++k2, ++r) {
          const double* row = cols + r * ncols;
          for (int64_t b = 0; b < g.n; ++b) {
            double* xb = x + (b * g.ci + c) * g.InSize();
            const double* srcb = row + b * P;
            for (int64_t o0 = 0; o0 < g.out[0]; ++o0) {
              const int64_t s0 = o0 * g.st[0] - g.pad[0] + k0;
              if (s0 < 0 || s0 >= g.in[0]) continue;
              for (int64_t o1 = 0; o1 < g.out[1]; ++o1) {
                const int64_t s1 = o1 * g.st[1] - g.pad[1] + k1;
                if (s1 < 0 || s1 >= g.in[1]) continue;
                const double* s = srcb + (o0 * g.out[1] + o1) * g.out[2];
                double* d = xb + (s0 * g.in[1] + s1) * g.in[2];
                for (int64_t o2 = 0; o2 < g.out[2]; ++o2) {
                  const int64_t s2 = o2 * g.st[2] - g.pad[2] + k2;
                  if (s2 >= 0 && s2 < g.in[2]) d[s2] += s[o2];
                }
              }
            }
          }
        }
      }
    }
  }
}

}  // namespace

Var ConvNd(Var x, Var weight, Var bias, const std::vector<int64_t>& stride,
           const std::vector<int64_t>& padding) {
  Tape& tape = SameTape(x, weight);
  const Tensor& vx = x.value();
  const Tensor& vw = weight.value();
  const int spatial = vx.rank() - 2;
  if (spatial < 1 || spatial > 3 || vw.rank() != vx.rank() ||
      static_cast<int>(stride.size()) != spatial ||
      static_cast<int>(padding.size()) != spatial) {
    throw ShapeError(StrCat("ConvNd: incompatible input ",
                            ShapeString(vx.shape()), " and kernel ",
                            ShapeString(vw.shape())));
  }
  if (vw.dim(1) != vx.dim(1)) {
    throw ShapeError(StrCat("ConvNd: kernel expects ", vw.dim(1),
                            " input channels, input ", ShapeString(vx.shape()),
                            " has ", vx.dim(1)));
  }
  auto geom = std::make_shared<ConvGeom>();
  ConvGeom& g = *geom;
  g.n = vx.dim(0);
  g.ci = vx.dim(1);
  g.co = vw.dim(0);
  const int off = 3 - spatial;
  for (int i = 0; i < spatial; ++i) {
    g.in[off + i] = vx.dim(2 + i);
    g.k[off + i] = vw.dim(2 + i);
    g.st[off + i] = stride[i];
    g.pad[off + i] = padding[i];
    g.out[off + i] = ConvOutputLength(g.in[off + i], g.k[off + i],
                                      g.st[off + i], g.pad[off + i]);
  }
  if (bias.valid() && bias.value().size() != g.co) {
    throw ShapeError(StrCat("ConvNd: bias extent ", bias.value().size(),
                            " vs ", g.co, " output channels"));
  }
  Shape out_shape = {g.n, g.co};
  for (int i = 0; i < spatial; ++i) out_shape.push_back(g.out[off + i]);

  const int64_t P = g.OutSize();
  std::vector<double> cols(static_cast<size_t>(g.Rows() * g.Cols()));
  Im2Col(g, vx.data().data(), cols.data());
  std::vector<double> prod(static_cast<size_t>(g.co * g.Cols()));
  Gemm(false, false, g.co, g.Cols(), g.Rows(), vw.data().data(), cols.data(),
       prod.data(), false);
  DType dtype = PromoteTypes(vx.dtype(), vw.dtype());
  Tensor out(out_shape, dtype);
  for (int64_t b = 0; b < g.n; ++b) {
    for (int64_t c = 0; c < g.co; ++c) {
      const double bv = bias.valid() ? bias.value()[c] : 0.0;
      const double* src = prod.data() + c * g.Cols() + b * P;
      double* dst = out.data().data() + (b * g.co + c) * P;
      for (int64_t p = 0; p < P; ++p) dst[p] = src[p] + bv;
    }
  }
  std::vector<Var> inputs = {x, weight};
  if (bias.valid()) inputs.push_back(bias);
  return tape.Record(
      std::move(out), inputs,
      [x, weight, bias, geom](Tape& t, const Tensor&, const Tensor& grad) {
        const ConvGeom& g = *geom;
        const int64_t P = g.OutSize();
        std::vector<double> dprod(static_cast<size_t>(g.co * g.Cols()));
        for (int64_t b = 0; b < g.n; ++b) {
          for (int64_t c = 0; c < g.co; ++c) {
            std::copy_n(grad.data().data() + (b * g.co + c) * P, P,
                        dprod.data() + c * g.Cols() + b * P);
          }
        }
        if (bias.valid() && bias.requires_grad()) {
          Tensor gb(bias.shape());
          for (int64_t c = 0; c < g.co; ++c) {
            double s = 0.0;
            const double* row = dprod.data() + c * g.Cols();
            for (int64_t j = 0; j < g.Cols(); ++j) s += row[j];
            gb[c] = s;
          }
          t.Accumulate(bias, std::move(gb));
        }
        if (weight.requires_grad()) {
          std::vector<double> cols(static_cast<size_t>(g.Rows() * g.Cols()));
          Im2Col(g, x.value().data().data(), cols.data());
          Tensor gw(weight.shape());
          Gemm(false, true, g.co, g.Rows(), g.Cols(), dprod.data(),
               cols.data(), gw.data().data(), false);
          t.Accumulate(weight, std::move(gw));
        }
        if (x.requires_grad()) {
          std::vector<double> dcols(static_cast<size_t>(g.Rows() * g.Cols()));
          Gemm(true, false, g.Rows(), g.Cols(), g.co,
               weight.value().data().data(), dprod.data(), dcols.data(), false);
          Tensor gx(x.shape());
          Col2Im(g, dcols.data(), gx.data().data());
          t.Accumulate(x, std::move(gx));
        }
      });
}

Var Conv1d(Var x, Var weight, Var bias, int64_t stride, int64_t padding) {
  if (x.rank() != 2 || weight.rank() != 3) {
    throw ShapeError(StrCat("Conv1d expects x [C, L] and kernel [Co, Ci, K], "
                            "got ", ShapeString(x.shape()), " and ",
                            ShapeString(weight.shape())));
  }
  Var xb = Reshape(x, {1, x.dim(0), x.dim(1)});
  Var y = ConvNd(xb, weight, bias, {stride}, {padding});
  return Reshape(y, {y.dim(1), y.dim(2)});
}

Var Conv2d(Var x, Var weight, Var bias, int64_t stride, int64_t padding) {
  if (x.rank() != 4 || weight.rank() != 4) {
    throw ShapeError(StrCat("Conv2d expects x [N, C, H, W] and kernel "
                            "[Co, Ci, Kh, Kw], got ", ShapeString(x.shape()),
                            " and ", ShapeString(weight.shape())));
  }
  return ConvNd(x, weight, bias, {stride, stride}, {padding, padding});
}

Var Conv3d(Var x, Var weight, Var bias, const std::vector<int64_t>& stride,
           const std::vector<int64_t>& padding) {
  if (x.rank() != 4 || weight.rank() != 5) {
    throw ShapeError(StrCat("Conv3d expects x [C, T, H, W] and kernel "
                            "[Co, Ci, Kt, Kh, Kw], got ",
                            ShapeString(x.shape()), " and ",
                            ShapeString(weight.shape())));
  }
  Shape s = x.shape();
  s.insert(s.begin(), 1);
  Var y = ConvNd(Reshape(x, s), weight, bias, stride, padding);
  Shape o(y.shape().begin() + 1, y.shape().end());
  return Reshape(y, o);
}

Var DepthwiseConv1d(Var x, Var weight, Var bias) {
  Tape& tape = SameTape(x, weight);
  const Tensor& vx = x.value();
  const Tensor& vw = weight.value();
  if (vx.rank() != 2 || vw.rank() != 2 || vw.dim(0) != vx.dim(1)) {
    throw ShapeError(StrCat("DepthwiseConv1d: input ", ShapeString(vx.shape()),
                            " needs kernel bank [", vx.dim(1), ", K], got ",
                            ShapeString(vw.shape())));
  }
  const int64_t T = vx.dim(0), C = vx.dim(1), K = vw.dim(1);
  if (K % 2 == 0) {
    throw ConfigError(StrCat("DepthwiseConv1d: same padding needs an odd "
                             "kernel, got ", K));
  }
  if (bias.valid() && bias.value().size() != C) {
    throw ShapeError("DepthwiseConv1d: bias extent mismatch");
  }
  const int64_t half = K / 2;
  Tensor out(vx.shape(), PromoteTypes(vx.dtype(), vw.dtype()));
  for (int64_t t = 0; t < T; ++t) {
    double* po = out.data().data() + t * C;
    for (int64_t c = 0; c < C; ++c) po[c] = bias.valid() ? bias.value()[c] : 0.0;
    for (int64_t k = 0; k < K; ++k) {
      const int64_t s = t + k - half;
      if (s < 0 || s >= T) continue;
      const double* px = vx.data().data() + s * C;
      for (int64_t c = 0; c < C; ++c) po[c] += vw[c * K + k] * px[c];
    }
  }
  std::vector<Var> inputs = {x, weight};
  if (bias.valid()) inputs.push_back(bias);
  return tape.Record(
      std::move(out), inputs,
      [x, weight, bias, T, C, K, half](Tape& t, const Tensor&, const Tensor& g) {
        const Tensor& vx = x.value();
        const Tensor& vw = weight.value();
        Tensor gx(vx.shape()), gw(vw.shape());
        for (int64_t tt = 0; tt < T; ++tt) {
          const double* pg = g.data().data() + tt * C;
          for (int64_t k = 0; k < K; ++k) {
            const int64_t s = tt + k - half;
            if (s < 0 || s >= T) continue;
            const double* px = vx.data().data() + s * C;
            double* qx = gx.data().data() + s * C;
            for (int64_t c = 0; c < C; ++c) {
              qx[c] += pg[c] * vw[c * K + k];
              gw[c * K + k] += pg[c] * px[c];
            }
          }
        }
        if (bias.valid()) {
          Tensor gb(bias.shape());
          for (int64_t tt = 0; tt < T; ++tt) {
            for (int64_t c = 0; c < C; ++c) gb[c] += g[tt * C + c];
          }
          t.Accumulate(bias, std::move(gb));
        }
        t.Accumulate(x, std::move(gx));
        t.Accumulate(weight, std::move(gw));
      });
}

Var Glu(Var x) {
  Tape& tape = SameTape(x);
  const Tensor& vx = x.value();
  const int64_t two_d = vx.dim(vx.rank() - 1);
  if (two_d % 2 != 0) {
    throw ShapeError(StrCat("Glu needs an even last extent, got shape ",
                            ShapeString(vx.shape())));
  }
  const int64_t d = two_d / 2;
  const int64_t rows = vx.size() / two_d;
  Shape out_shape = vx.shape();
  out_shape.back() = d;
  Tensor out(out_shape, vx.dtype());
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t j = 0; j < d; ++j) {
      out[r * d + j] = vx[r * two_d + j] * StableSigmoid(vx[r * two_d + d + j]);
    }
  }
  return tape.Record(std::move(out), {x},
                     [x, rows, d](Tape& t, const Tensor&, const Tensor& g) {
                       const Tensor& vx = x.value();
                       const int64_t two_d = 2 * d;
                       Tensor gx(vx.shape());
                       for (int64_t r = 0; r < rows; ++r) {
                         for (int64_t j = 0; j < d; ++j) {
                           const double a = vx[r * two_d + j];
                           const double s = StableSigmoid(vx[r * two_d + d + j]);
                           const double gg = g[r * d + j];
                           gx[r * two_d + j] = gg * s;
                           gx[r * two_d + d + j] = gg * a * s * (1.0 - s);
                         }
                       }
                       t.Accumulate(x, std::move(gx));
                     });
}

// ---------------------------------------------------------------------------
// Pooling

Var MaxPool2d(Var x, int64_t kernel, int64_t stride, int64_t padding) {
  Tape& tape = SameTape(x);
  const Tensor& vx = x.value();
  if (vx.rank() != 4) {
    throw ShapeError(StrCat("MaxPool2d expects [N, C, H, W], got ",
                            ShapeString(vx.shape())));
  }
  const int64_t N = vx.dim(0), C = vx.dim(1), H = vx.dim(2), W = vx.dim(3);
  const int64_t Ho = ConvOutputLength(H, kernel, stride, padding);
  const int64_t Wo = ConvOutputLength(W, kernel, stride, padding);
  Tensor out({N, C, Ho, Wo}, vx.dtype());
  auto arg = std::make_shared<std::vector<int64_t>>(
      static_cast<size_t>(out.size()), -1);
  for (int64_t nc = 0; nc < N * C; ++nc) {
    const double* px = vx.data().data() + nc * H * W;
    for (int64_t oh = 0; oh < Ho; ++oh) {
      for (int64_t ow = 0; ow < Wo; ++ow) {
        double best = kNegInf;
        int64_t besti = -1;
        for (int64_t kh = 0; kh < kernel; ++kh) {
          const int64_t h = oh * stride - padding + kh;
          if (h < 0 || h >= H) continue;
          for (int64_t kw = 0; kw < kernel; ++kw) {
            const int64_t w = ow * stride - padding + kw;
            if (w < 0 || w >= W) continue;
            const double v = px[h * W + w];
            if (besti < 0 || v > best) {
              best = v;
              besti = nc * H * W + h * W + w;
            }
          }
        }
        const int64_t o = (nc * Ho + oh) * Wo + ow;
        out[o] = best;
        (*arg)[o] = besti;
      }
    }
  }
  if (KinkRecorder* r = KinkRecorder::Active()) {
    for (int64_t a : *arg) r->Mix(static_cast<uint64_t>(a));
  }
  return tape.Record(std::move(out), {x},
                     [x, arg](Tape& t, const Tensor&, const Tensor& g) {
                       Tensor gx(x.shape());
                       for (size_t o = 0; o < arg->size(); ++o) {
                         if ((*arg)[o] >= 0) gx[(*arg)[o]] += g[o];
                       }
                       t.Accumulate(x, std::move(gx));
                     });
}

Var AvgPool1d(Var x, int64_t kernel, int64_t stride) {
  Tape& tape = SameTape(x);
  const Tensor& vx = x.value();
  if (vx.rank() != 2) {
    throw ShapeError(StrCat("AvgPool1d expects [C, L], got ",
                            ShapeString(vx.shape())));
  }
  const int64_t C = vx.dim(0), L = vx.dim(1);
  const int64_t Lo = ConvOutputLength(L, kernel, stride, 0);
  Tensor out({C, Lo}, vx.dtype());
  const double inv = 1.0 / static_cast<double>(kernel);
  for (int64_t c = 0; c < C; ++c) {
    for (int64_t o = 0; o < Lo; ++o) {
      double s = 0.0;
      for (int64_t k = 0; k < kernel; ++k) s += vx[c * L + o * stride + k];
      out[c * Lo + o] = s * inv;
    }
  }
  return tape.Record(std::move(out), {x},
                     [x, C, L, Lo, kernel, stride, inv](Tape& t, const Tensor&,
                                                        const Tensor& g) {
                       Tensor gx(x.shape());
                       for (int64_t c = 0; c < C; ++c) {
                         for (int64_t o = 0; o < Lo; ++o) {
                           for (int64_t k = 0; k < kernel; ++k) {
                             gx[c * L + o * stride + k] += g[c * Lo + o] * inv;
                           }
                         }
                       }
                       t.Accumulate(x, std::move(gx));
                     });
}

// ---------------------------------------------------------------------------
// Indexing

Var Embedding(Var table, const std::vector<int>& ids) {
  Tape& tape = SameTape(table);
  const Tensor& vt = table.value();
  if (vt.rank() != 2) throw ShapeError("Embedding table must be [V, d]");
  if (ids.empty()) throw ContractError("Embedding of an empty id list");
  const int64_t V = vt.dim(0), d = vt.dim(1);
  Tensor out({static_cast<int64_t>(ids.size()), d}, vt.dtype());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= V) {
      throw ContractError(StrCat("Embedding id ", ids[i], " outside [0, ", V, ")"));
    }
    std::copy_n(vt.data().data() + ids[i] * d, d, out.data().data() + i * d);
  }
  return tape.Record(std::move(out), {table},
                     [table, ids, d](Tape& t, const Tensor&, const Tensor& g) {
                       Tensor gt(table.shape());
                       for (size_t i = 0; i < ids.size(); ++i) {
                         for (int64_t j = 0; j < d; ++j) {
                           gt[ids[i] * d + j] += g[static_cast<int64_t>(i) * d + j];
                         }
                       }
                       t.Accumulate(table, std::move(gt));
                     });
}

Var Pick(Var x, const std::vector<int>& ids) {
  Tape& tape = SameTape(x);
  const Tensor& vx = x.value();
  if (vx.rank() != 2 || vx.dim(0) != static_cast<int64_t>(ids.size())) {
    throw ShapeError(StrCat("Pick: ", ids.size(), " ids for input ",
                            ShapeString(vx.shape())));
  }
  const int64_t V = vx.dim(1);
  Tensor out({static_cast<int64_t>(ids.size())}, vx.dtype());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= V) {
      throw ContractError(StrCat("Pick id ", ids[i], " outside [0, ", V, ")"));
    }
    out[static_cast<int64_t>(i)] = vx[static_cast<int64_t>(i) * V + ids[i]];
  }
  return tape.Record(std::move(out), {x},
                     [x, ids, V](Tape& t, const Tensor&, const Tensor& g) {
                       Tensor gx(x.shape());
                       for (size_t i = 0; i < ids.size(); ++i) {
                         gx[static_cast<int64_t>(i) * V + ids[i]] =
                             g[static_cast<int64_t>(i)];
                       }
                       t.Accumulate(x, std::move(gx));
                     });
}

Var RelShift(Var x) {
  Tape& tape = SameTape(x);
  const Tensor& vx = x.value();
  if (vx.rank() != 3 || vx.dim(2) != 2 * vx.dim(1) - 1) {
    throw ShapeError(StrCat("RelShift expects [H, T, 2T-1], got ",
                            ShapeString(vx.shape())));
  }
  const int64_t H = vx.dim(0), T = vx.dim(1), R = vx.dim(2);
  Tensor out({H, T, T}, vx.dtype());
  for (int64_t h = 0; h < H; ++h) {
    for (int64_t i = 0; i < T; ++i) {
      const double* src = vx.data().data() + (h * T + i) * R;
      double* dst = out.data().data() + (h * T + i) * T;
      for (int64_t j = 0; j < T; ++j) dst[j] = src[i - j + T - 1];
    }
  }
  return tape.Record(std::move(out), {x},
                     [x, H, T, R](Tape& t, const Tensor&, const Tensor& g) {
                       Tensor gx(x.shape());
                       for (int64_t h = 0; h < H; ++h) {
                         for (int64_t i = 0; i < T; ++i) {
                           double* dst = gx.data().data() + (h * T + i) * R;
                           const double* src = g.data().data() + (h * T + i) * T;
                           for (int64_t j = 0; j < T; ++j) dst[i - j + T - 1] += src[j];
                         }
                       }
                       t.Accumulate(x, std::move(gx));
                     });
}

Var Dropout(Var x, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) throw ConfigError("dropout rate must be < 1");
  Tape& tape = SameTape(x);
  const Tensor& vx = x.value();
  auto mask = std::make_shared<std::vector<double>>(static_cast<size_t>(vx.size()));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor out(vx.shape(), vx.dtype());
  for (int64_t i = 0; i < vx.size(); ++i) {
    (*mask)[i] = u(rng) < rate ? 0.0 : keep_scale;
    out[i] = vx[i] * (*mask)[i];
  }
  return tape.Record(std::move(out), {x},
                     [x, mask](Tape& t, const Tensor&, const Tensor& g) {
                       Tensor gx(x.shape());
                       for (int64_t i = 0; i < gx.size(); ++i) gx[i] = g[i] * (*mask)[i];
                       t.Accumulate(x, std::move(gx));
                     });
}

Var Linear(Var x, Var weight, Var bias) {
  if (weight.rank() != 2 || x.dim(x.rank() - 1) != weight.dim(0)) {
    throw ShapeError(StrCat("Linear: input ", ShapeString(x.shape()),
                            " incompatible with weight ",
                            ShapeString(weight.shape())));
  }
  Var flat = x;
  if (x.rank() != 2) flat = Reshape(x, {x.value().size() / x.dim(x.rank() - 1), x.dim(x.rank() - 1)});
  Var y = MatMul(flat, weight);
  if (bias.valid()) y = Add(y, bias);
  if (x.rank() != 2) {
    Shape s = x.shape();
    s.back() = weight.dim(1);
    y = Reshape(y, s);
  }
  return y;
}

}  // namespace avsr::ops
