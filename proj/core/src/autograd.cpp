#include "seqnlg/autograd.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "seqnlg/errors.hpp"
#include "seqnlg/kernels.hpp"

namespace seqnlg::nn {

namespace {

std::atomic<std::uint64_t> next_tape_id{1};

}  // namespace

Tape::Tape() : id_(next_tape_id.fetch_add(1)) {}

void Tape::check(Var v) const {
  if (v.tape_id != id_ || v.index >= nodes_.size()) {
    throw std::invalid_argument("variable was not recorded on this tape");
  }
}

Var Tape::parameter(const Tensor& value, Tensor& grad_sink) {
  if (!value.same_shape(grad_sink)) {
    throw ShapeError("gradient sink " + grad_sink.shape_string() + " does not match parameter " +
                     value.shape_string());
  }
  Node& n = nodes_.emplace_back();
  n.external = &value;
  n.sink = &grad_sink;
  n.requires_grad = true;
  return {static_cast<std::uint32_t>(nodes_.size() - 1), id_};
}

Var Tape::variable(Tensor value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = true;
  return {static_cast<std::uint32_t>(nodes_.size() - 1), id_};
}

Var Tape::constant(Tensor value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  return {static_cast<std::uint32_t>(nodes_.size() - 1), id_};
}

const Tensor& Tape::value(Var v) const {
  check(v);
  return value_at(v.index);
}

const Tensor& Tape::value_at(std::uint32_t index) const {
  const Node& n = nodes_[index];
  return n.external ? *n.external : n.value;
}

bool Tape::requires_grad(Var v) const {
  check(v);
  return nodes_[v.index].requires_grad;
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::record(Tensor value, std::span<const Var> inputs, Backward backward) {
  bool needs = false;
  for (Var v : inputs) {
    check(v);
    needs = needs || nodes_[v.index].requires_grad;
  }
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(backward);
  return {static_cast<std::uint32_t>(nodes_.size() - 1), id_};
}

Tensor& Tape::grad_buffer(std::uint32_t index) {
  Node& n = nodes_[index];
  if (n.sink) return *n.sink;
  if (!n.grad_ready) {
    n.grad = Tensor::zeros_like(value_at(index));
    n.grad_ready = true;
  }
  return n.grad;
}

bool Tape::has_grad(std::uint32_t index) const {
  const Node& n = nodes_[index];
  return n.sink != nullptr || n.grad_ready;
}

void Tape::backward(Var loss) {
  check(loss);
  if (value(loss).size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got " + value(loss).shape_string());
  }
  Tensor& seed = grad_buffer(loss.index);
  seed[0] += 1.0;
  for (std::uint32_t i = loss.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.backward && n.grad_ready) n.backward(*this, i);
  }
  backward_done_ = true;
}

const Tensor& Tape::grad(Var v) const {
  check(v);
  if (!backward_done_) throw std::logic_error("grad() queried before backward()");
  const Node& n = nodes_[v.index];
  if (!n.requires_grad) throw std::invalid_argument("variable does not track a gradient");
  if (n.sink) return *n.sink;
  if (!n.grad_ready) {
    // Never reached by the loss: its gradient is exactly zero.
    Node& mut = const_cast<Node&>(n);
    mut.grad = Tensor::zeros_like(value_at(v.index));
    mut.grad_ready = true;
  }
  return n.grad;
}

namespace ops {

namespace {

void require_vector(const Tensor& t, const char* op) {
  if (t.rank() != 1) throw ShapeError(std::string(op) + ": expected a vector, got " + t.shape_string());
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + ": shapes " + a.shape_string() + " and " + b.shape_string() +
                     " differ");
  }
}

Tensor scalar(double v) { return Tensor::vector({v}); }

}  // namespace

Var vecmat(Tape& t, Var x, Var w) {
  const Tensor& xv = t.value(x);
  const Tensor& wv = t.value(w);
  require_vector(xv, "vecmat");
  if (wv.rank() != 2) throw ShapeError("vecmat: expected a matrix, got " + wv.shape_string());
  Tensor out = nn::vecmat(xv, wv);
  return t.record(std::move(out), {x, w}, [x, w](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    const Tensor& wv = tp.value_at(w.index);
    const Tensor& xv = tp.value_at(x.index);
    const std::size_t n = wv.rows();
    const std::size_t m = wv.cols();
    if (tp.requires_grad_at(x.index)) {
      Tensor& gx = tp.grad_buffer(x.index);
      for (std::size_t i = 0; i < n; ++i) {
        const double* wr = wv.data() + i * m;
        double acc = 0.0;
        for (std::size_t j = 0; j < m; ++j) acc += wr[j] * g[j];
        gx[i] += acc;
      }
    }
    if (tp.requires_grad_at(w.index)) {
      Tensor& gw = tp.grad_buffer(w.index);
      for (std::size_t i = 0; i < n; ++i) {
        const double xi = xv[i];
        if (xi == 0.0) continue;
        double* gr = gw.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) gr[j] += xi * g[j];
      }
    }
  });
}

Var matmul(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.cols() != bv.rows()) {
    throw ShapeError("matmul: cannot multiply " + av.shape_string() + " by " + bv.shape_string());
  }
  const std::size_t r = av.rows();
  const std::size_t m = bv.cols();
  Tensor out({r, m});
  for (std::size_t i = 0; i < r; ++i) nn::vecmat(av.row(i), bv, out.row(i));
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    const Tensor& av = tp.value_at(a.index);
    const Tensor& bv = tp.value_at(b.index);
    const std::size_t r = av.rows();
    const std::size_t n = av.cols();
    const std::size_t m = bv.cols();
    if (tp.requires_grad_at(a.index)) {
      Tensor& ga = tp.grad_buffer(a.index);
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
          double acc = 0.0;
          for (std::size_t j = 0; j < m; ++j) acc += bv.data()[k * m + j] * g.data()[i * m + j];
          ga.data()[i * n + k] += acc;
        }
      }
    }
    if (tp.requires_grad_at(b.index)) {
      Tensor& gb = tp.grad_buffer(b.index);
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
          const double aik = av.data()[i * n + k];
          for (std::size_t j = 0; j < m; ++j) gb.data()[k * m + j] += aik * g.data()[i * m + j];
        }
      }
    }
  });
}

Var add(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_same(av, bv, "add");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    for (Var in : {a, b}) {
      if (!tp.requires_grad_at(in.index)) continue;
      Tensor& gi = tp.grad_buffer(in.index);
      for (std::size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
    }
  });
}

Var mul(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_same(av, bv, "mul");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    const Tensor& av = tp.value_at(a.index);
    const Tensor& bv = tp.value_at(b.index);
    if (tp.requires_grad_at(a.index)) {
      Tensor& ga = tp.grad_buffer(a.index);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (tp.requires_grad_at(b.index)) {
      Tensor& gb = tp.grad_buffer(b.index);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Tape& t, Var a, double k) {
  Tensor out = t.value(a);
  for (double& v : out.values()) v *= k;
  return t.record(std::move(out), {a}, [a, k](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    Tensor& ga = tp.grad_buffer(a.index);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += k * g[i];
  });
}

Var concat(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_vector(av, "concat");
  require_vector(bv, "concat");
  std::vector<double> out(av.values().begin(), av.values().end());
  out.insert(out.end(), bv.values().begin(), bv.values().end());
  const std::size_t na = av.size();
  return t.record(Tensor::vector(std::move(out)), {a, b}, [a, b, na](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    if (tp.requires_grad_at(a.index)) {
      Tensor& ga = tp.grad_buffer(a.index);
      for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
    }
    if (tp.requires_grad_at(b.index)) {
      Tensor& gb = tp.grad_buffer(b.index);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[na + i];
    }
  });
}

Var slice(Tape& t, Var a, std::size_t offset, std::size_t length) {
  const Tensor& av = t.value(a);
  require_vector(av, "slice");
  if (length == 0 || offset + length > av.size()) {
    throw ShapeError("slice [" + std::to_string(offset) + ", +" + std::to_string(length) +
                     ") outside vector of length " + std::to_string(av.size()));
  }
  std::vector<double> out(av.values().begin() + offset, av.values().begin() + offset + length);
  return t.record(Tensor::vector(std::move(out)), {a}, [a, offset](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    Tensor& ga = tp.grad_buffer(a.index);
    for (std::size_t i = 0; i < g.size(); ++i) ga[offset + i] += g[i];
  });
}

Var row(Tape& t, Var w, std::size_t index) {
  const Tensor& wv = t.value(w);
  if (wv.rank() != 2 || index >= wv.rows()) {
    throw ShapeError("row " + std::to_string(index) + " outside matrix " + wv.shape_string());
  }
  auto r = wv.row(index);
  return t.record(Tensor::vector({r.begin(), r.end()}), {w}, [w, index](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    Tensor& gw = tp.grad_buffer(w.index);
    auto gr = gw.row(index);
    for (std::size_t i = 0; i < g.size(); ++i) gr[i] += g[i];
  });
}

Var stack_rows(Tape& t, std::span<const Var> rows) {
  if (rows.empty()) throw ShapeError("stack_rows of zero rows");
  const std::size_t width = t.value(rows[0]).size();
  std::vector<double> out;
  out.reserve(rows.size() * width);
  for (Var r : rows) {
    const Tensor& rv = t.value(r);
    require_vector(rv, "stack_rows");
    if (rv.size() != width) throw ShapeError("stack_rows: rows of unequal length");
    out.insert(out.end(), rv.values().begin(), rv.values().end());
  }
  std::vector<Var> inputs(rows.begin(), rows.end());
  Tensor value = Tensor::matrix(rows.size(), width, std::move(out));
  return t.record(std::move(value), rows, [inputs, width](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    for (std::size_t r = 0; r < inputs.size(); ++r) {
      if (!tp.requires_grad_at(inputs[r].index)) continue;
      Tensor& gr = tp.grad_buffer(inputs[r].index);
      for (std::size_t i = 0; i < width; ++i) gr[i] += g[r * width + i];
    }
  });
}

Var tanh(Tape& t, Var a) {
  Tensor out = t.value(a);
  for (double& v : out.values()) v = std::tanh(v);
  return t.record(std::move(out), {a}, [a](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    const Tensor& y = tp.value_at(self);
    Tensor& ga = tp.grad_buffer(a.index);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var sigmoid(Tape& t, Var a) {
  Tensor out = nn::sigmoid(t.value(a));
  return t.record(std::move(out), {a}, [a](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    const Tensor& y = tp.value_at(self);
    Tensor& ga = tp.grad_buffer(a.index);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var softmax(Tape& t, Var a) {
  require_vector(t.value(a), "softmax");
  Tensor out = nn::softmax(t.value(a));
  return t.record(std::move(out), {a}, [a](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    const Tensor& y = tp.value_at(self);
    double dotp = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) dotp += g[i] * y[i];
    Tensor& ga = tp.grad_buffer(a.index);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += y[i] * (g[i] - dotp);
  });
}

Var lstm_gates(Tape& t, Var z, Var c_prev) {
  const Tensor& zv = t.value(z);
  const Tensor& cv = t.value(c_prev);
  require_vector(zv, "lstm_gates");
  require_vector(cv, "lstm_gates");
  const std::size_t hs = cv.size();
  if (zv.size() != 4 * hs) {
    throw ShapeError("lstm_gates: pre-activations " + zv.shape_string() + " for cell of size " +
                     std::to_string(hs));
  }
  Tensor out({2 * hs});
  auto ov = out.values();
  nn::lstm_gates(zv.values(), cv.values(), ov.subspan(0, hs), ov.subspan(hs, hs));
  return t.record(std::move(out), {z, c_prev}, [z, c_prev, hs](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    const Tensor& zv = tp.value_at(z.index);
    const Tensor& cp = tp.value_at(c_prev.index);
    const Tensor& out = tp.value_at(self);
    const bool need_z = tp.requires_grad_at(z.index);
    const bool need_c = tp.requires_grad_at(c_prev.index);
    Tensor* gz = need_z ? &tp.grad_buffer(z.index) : nullptr;
    Tensor* gc = need_c ? &tp.grad_buffer(c_prev.index) : nullptr;
    for (std::size_t k = 0; k < hs; ++k) {
      const double ig = nn::sigmoid(zv[k]);
      const double fg = nn::sigmoid(zv[hs + k]);
      const double og = nn::sigmoid(zv[2 * hs + k]);
      const double gg = std::tanh(zv[3 * hs + k]);
      const double c = out[hs + k];
      const double tc = std::tanh(c);
      const double dh = g[k];
      const double dc = g[hs + k] + dh * og * (1.0 - tc * tc);
      if (gz) {
        (*gz)[k] += dc * gg * ig * (1.0 - ig);
        (*gz)[hs + k] += dc * cp[k] * fg * (1.0 - fg);
        (*gz)[2 * hs + k] += dh * tc * og * (1.0 - og);
        (*gz)[3 * hs + k] += dc * ig * (1.0 - gg * gg);
      }
      if (gc) (*gc)[k] += dc * fg;
    }
  });
}

Var additive_scores(Tape& t, Var query, Var keys, Var v) {
  const Tensor& qv = t.value(query);
  const Tensor& kv = t.value(keys);
  const Tensor& vv = t.value(v);
  require_vector(qv, "additive_scores");
  require_vector(vv, "additive_scores");
  const std::size_t a = qv.size();
  if (kv.rank() != 2 || kv.cols() != a || vv.size() != a) {
    throw ShapeError("additive_scores: query " + qv.shape_string() + ", keys " + kv.shape_string() +
                     ", scoring vector " + vv.shape_string());
  }
  const std::size_t n = kv.rows();
  Tensor out({n});
  for (std::size_t i = 0; i < n; ++i) {
    const double* kr = kv.data() + i * a;
    double e = 0.0;
    for (std::size_t j = 0; j < a; ++j) e += vv[j] * std::tanh(qv[j] + kr[j]);
    out[i] = e;
  }
  return t.record(std::move(out), {query, keys, v}, [query, keys, v](Tape& tp, std::uint32_t self) {
    const Tensor& g = tp.grad_buffer(self);
    const Tensor& qv = tp.value_at(query.index);
    const Tensor& kv = tp.value_at(keys.index);
    const Tensor& vv = tp.value_at(v.index);
    const std::size_t a = qv.size();
    const std::size_t n = kv.rows();
    Tensor* gq = tp.requires_grad_at(query.index) ? &tp.grad_buffer(query.index) : nullptr;
    Tensor* gk = tp.requires_grad_at(keys.index) ? &tp.grad_buffer(keys.index) : nullptr;
    Tensor* gv = tp.requires_grad_at(v.index) ? &tp.grad_buffer(v.index) : nullptr;
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = g[i];
      const double* kr = kv.data() + i * a;
      for (std::size_t j = 0; j < a; ++j) {
        const double th = std::tanh(qv[j] + kr[j]);
        if (gv) (*gv)[j] += gi * th;
        const double d = gi * vv[j] * (1.0 - th * th);
        if (gq) (*gq)[j] += d;
        if (gk) gk->data()[i * a + j] += d;
      }
    }
  });
}

Var softmax_cross_entropy(Tape& t, Var logits, std::size_t target) {
  const Tensor& lv = t.value(logits);
  require_vector(lv, "softmax_cross_entropy");
  if (target >= lv.size()) {
    throw ShapeError("softmax_cross_entropy: target " + std::to_string(target) +
                     " outside " + std::to_string(lv.size()) + " classes");
  }
  Tensor logp = nn::log_softmax(lv);
  const double floor = std::log(kMinProbability);
  const bool clamped = logp[target] < floor;
  const double loss = clamped ? -floor : -logp[target];
  return t.record(scalar(loss), {logits},
                  [logits, target, clamped, logp = std::move(logp)](Tape& tp, std::uint32_t self) {
                    if (clamped) return;
                    const double g = tp.grad_buffer(self)[0];
                    Tensor& gl = tp.grad_buffer(logits.index);
                    for (std::size_t i = 0; i < gl.size(); ++i) {
                      gl[i] += g * (std::exp(logp[i]) - (i == target ? 1.0 : 0.0));
                    }
                  });
}

Var sigmoid_binary_cross_entropy(Tape& t, Var logits, const Tensor& targets) {
  const Tensor& lv = t.value(logits);
  require_same(lv, targets, "sigmoid_binary_cross_entropy");
  double loss = 0.0;
  for (std::size_t i = 0; i < lv.size(); ++i) {
    const double z = lv[i];
    const double softplus = std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z)));
    loss += softplus - targets[i] * z;
  }
  return t.record(scalar(loss), {logits}, [logits, targets](Tape& tp, std::uint32_t self) {
    const double g = tp.grad_buffer(self)[0];
    const Tensor& lv = tp.value_at(logits.index);
    Tensor& gl = tp.grad_buffer(logits.index);
    for (std::size_t i = 0; i < gl.size(); ++i) gl[i] += g * (nn::sigmoid(lv[i]) - targets[i]);
  });
}

Var sum(Tape& t, Var a) {
  double s = 0.0;
  for (double v : t.value(a).values()) s += v;
  return t.record(scalar(s), {a}, [a](Tape& tp, std::uint32_t self) {
    const double g = tp.grad_buffer(self)[0];
    Tensor& ga = tp.grad_buffer(a.index);
    for (double& v : ga.values()) v += g;
  });
}

Var add_scalars(Tape& t, std::span<const Var> scalars) {
  if (scalars.empty()) return t.constant(scalar(0.0));
  double s = 0.0;
  for (Var v : scalars) {
    const Tensor& sv = t.value(v);
    if (sv.size() != 1) throw ShapeError("add_scalars: non-scalar input " + sv.shape_string());
    s += sv[0];
  }
  std::vector<Var> inputs(scalars.begin(), scalars.end());
  return t.record(scalar(s), scalars, [inputs](Tape& tp, std::uint32_t self) {
    const double g = tp.grad_buffer(self)[0];
    for (Var v : inputs) {
      if (tp.requires_grad_at(v.index)) tp.grad_buffer(v.index)[0] += g;
    }
  });
}

Var dot(Tape& t, Var a, Var b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require_same(av, bv, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  return t.record(scalar(s), {a, b}, [a, b](Tape& tp, std::uint32_t self) {
    const double g = tp.grad_buffer(self)[0];
    const Tensor& av = tp.value_at(a.index);
    const Tensor& bv = tp.value_at(b.index);
    if (tp.requires_grad_at(a.index)) {
      Tensor& ga = tp.grad_buffer(a.index);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g * bv[i];
    }
    if (tp.requires_grad_at(b.index)) {
      Tensor& gb = tp.grad_buffer(b.index);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g * av[i];
    }
  });
}

}  // namespace ops

}  // namespace seqnlg::nn
