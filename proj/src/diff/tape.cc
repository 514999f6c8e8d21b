#include "heroes/diff/tape.h"

#include <algorithm>
#include <cmath>
#include <string>

namespace heroes::diff {

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double scaled_softplus(double x, double gamma) {
  if (!(gamma > 0.0)) {
    throw ConfigError("softplus scale gamma must be positive, got " + std::to_string(gamma));
  }
  const double u = x / gamma;
  return gamma * (std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))));
}

const char* op_name(Op op) {
  switch (op) {
    case Op::kConstant: return "constant";
    case Op::kParameter: return "parameter";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "mul";
    case Op::kMatVec: return "matvec";
    case Op::kConcat: return "concat";
    case Op::kSlice: return "slice";
    case Op::kSigmoid: return "sigmoid";
    case Op::kTanh: return "tanh";
    case Op::kExp: return "exp";
    case Op::kLog: return "log";
    case Op::kNeg: return "neg";
    case Op::kAffine: return "affine";
    case Op::kSum: return "sum";
    case Op::kSoftplus: return "softplus";
    case Op::kClamp: return "clamp";
  }
  return "unknown";
}

std::size_t Var::size() const { return tape_->value(*this).size(); }
double Var::value(std::size_t i) const { return tape_->value(*this)[i]; }
std::span<const double> Var::values() const { return tape_->value(*this); }

void Tape::clear() {
  nodes_.clear();
  values_.clear();
  adjoints_.clear();
  ext_.clear();
  links_.clear();
  param_nodes_.clear();
}

std::int32_t Tape::push(Node n) {
  if (extended_) extend(n);
  nodes_.push_back(n);
  return static_cast<std::int32_t>(nodes_.size() - 1);
}

Tape::Node& Tape::node(Var v) { return nodes_[static_cast<std::size_t>(v.id_)]; }

void Tape::check(Var v, const char* what) const {
  if (v.tape_ != this || v.id_ < 0 || static_cast<std::size_t>(v.id_) >= nodes_.size()) {
    throw std::invalid_argument(std::string(what) + ": operand does not belong to this tape");
  }
}

const double* Tape::val(std::int32_t id) const {
  const Node& n = node(id);
  return n.param ? n.param->value.data() : values_.data() + n.offset;
}

double* Tape::adj(std::int32_t id) {
  const Node& n = node(id);
  return n.param ? n.param->grad.data() : adjoints_.data() + n.offset;
}

std::span<const double> Tape::value(Var v) const {
  check(v, "value");
  return {val(v.id_), node(v.id_).size()};
}

std::vector<std::size_t> Tape::shape(Var v) const {
  check(v, "shape");
  const Node& n = node(v.id_);
  if (n.rank == 2) return {n.rows, n.cols};
  return {n.rows};
}

std::span<const double> Tape::adjoint(Var v) const {
  check(v, "adjoint");
  const Node& n = node(v.id_);
  if (n.param) return n.param->grad.values();
  if (adjoints_.size() < n.offset + n.size()) {
    throw std::logic_error("adjoint requested before backward()");
  }
  return {adjoints_.data() + n.offset, n.size()};
}

Var Tape::constant(std::span<const double> values) {
  Node n;
  n.op = Op::kConstant;
  n.rows = static_cast<std::uint32_t>(values.size());
  n.offset = values_.size();
  values_.insert(values_.end(), values.begin(), values.end());
  return {this, push(n)};
}

Var Tape::constant(std::initializer_list<double> values) {
  return constant(std::span<const double>(values.begin(), values.size()));
}

Var Tape::constant(const Tensor& t) {
  Var v = constant(t.values());
  if (t.rank() == 2) {
    Node& n = node(v);
    n.rank = 2;
    n.rows = static_cast<std::uint32_t>(t.rows());
    n.cols = static_cast<std::uint32_t>(t.cols());
  }
  return v;
}

Var Tape::scalar(double v) { return constant({v}); }

Var Tape::zeros(std::size_t count) {
  Node n;
  n.op = Op::kConstant;
  n.rows = static_cast<std::uint32_t>(count);
  n.offset = values_.size();
  values_.resize(values_.size() + count, 0.0);
  return {this, push(n)};
}

Var Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) {
    return {this, it->second};
  }
  if (!p.grad.same_shape(p.value)) {
    p.grad = Tensor(p.value.shape(), 0.0);
  }
  Node n;
  n.op = Op::kParameter;
  n.needs_grad = true;
  n.param = &p;
  n.rank = static_cast<std::uint8_t>(p.value.rank());
  n.rows = static_cast<std::uint32_t>(p.value.rows());
  n.cols = static_cast<std::uint32_t>(p.value.rank() == 2 ? p.value.cols() : 1);
  const std::int32_t id = push(n);
  param_nodes_.emplace(&p, id);
  return {this, id};
}

Var Tape::frozen(const Parameter& p) {
  Node n;
  n.op = Op::kParameter;
  n.needs_grad = false;
  // Only read through val(); backward skips nodes that do not need gradients.
  n.param = const_cast<Parameter*>(&p);
  n.rank = static_cast<std::uint8_t>(p.value.rank());
  n.rows = static_cast<std::uint32_t>(p.value.rows());
  n.cols = static_cast<std::uint32_t>(p.value.rank() == 2 ? p.value.cols() : 1);
  return {this, push(n)};
}

Var Tape::detach(Var x) {
  check(x, "detach");
  const Node src = node(x);
  const std::size_t count = src.size();
  Node n;
  n.op = Op::kConstant;
  n.rank = src.rank;
  n.rows = src.rows;
  n.cols = src.cols;
  n.offset = values_.size();
  values_.resize(values_.size() + count);
  std::copy_n(val(x.id_), count, values_.data() + n.offset);
  return {this, push(n)};
}

Var Tape::unary(Op op, Var x, double s0, double s1) {
  check(x, op_name(op));
  const Node src = node(x);
  if (src.rank != 1) {
    throw ShapeError(std::string(op_name(op)) + ": expected a vector, got " +
                     shape_string(std::vector<std::size_t>{src.rows, src.cols}));
  }
  const std::size_t count = src.size();
  Node n;
  n.op = op;
  n.a = x.id_;
  n.needs_grad = src.needs_grad;
  n.rows = static_cast<std::uint32_t>(count);
  n.s0 = s0;
  n.s1 = s1;
  n.offset = values_.size();
  values_.resize(values_.size() + count);
  const double* in = val(x.id_);
  double* out = values_.data() + n.offset;
  switch (op) {
    case Op::kSigmoid:
      for (std::size_t i = 0; i < count; ++i) out[i] = stable_sigmoid(in[i]);
      break;
    case Op::kTanh:
      for (std::size_t i = 0; i < count; ++i) out[i] = std::tanh(in[i]);
      break;
    case Op::kExp:
      for (std::size_t i = 0; i < count; ++i) out[i] = std::exp(in[i]);
      break;
    case Op::kLog:
      for (std::size_t i = 0; i < count; ++i) {
        if (!(in[i] > 0.0)) {
          values_.resize(n.offset);
          throw DomainError("log: operand must be strictly positive, got " +
                            std::to_string(in[i]) + " at index " + std::to_string(i));
        }
        out[i] = std::log(in[i]);
      }
      break;
    case Op::kNeg:
      for (std::size_t i = 0; i < count; ++i) out[i] = -in[i];
      break;
    case Op::kAffine:
      for (std::size_t i = 0; i < count; ++i) out[i] = s0 * in[i] + s1;
      break;
    case Op::kSoftplus:
      for (std::size_t i = 0; i < count; ++i) out[i] = scaled_softplus(in[i], s0);
      break;
    case Op::kClamp:
      for (std::size_t i = 0; i < count; ++i) out[i] = std::clamp(in[i], s0, s1);
      break;
    default:
      throw std::logic_error("not a unary op");
  }
  return {this, push(n)};
}

Var Tape::binary(Op op, Var a, Var b) {
  check(a, op_name(op));
  check(b, op_name(op));
  const Node na = node(a);
  const Node nb = node(b);
  if (na.rank != 1 || nb.rank != 1 || na.rows != nb.rows) {
    throw ShapeError(std::string(op_name(op)) + ": shape mismatch " +
                     shape_string(shape(a)) + " vs " + shape_string(shape(b)));
  }
  const std::size_t count = na.size();
  Node n;
  n.op = op;
  n.a = a.id_;
  n.b = b.id_;
  n.needs_grad = na.needs_grad || nb.needs_grad;
  n.rows = static_cast<std::uint32_t>(count);
  n.offset = values_.size();
  values_.resize(values_.size() + count);
  const double* x = val(a.id_);
  const double* y = val(b.id_);
  double* out = values_.data() + n.offset;
  switch (op) {
    case Op::kAdd:
      for (std::size_t i = 0; i < count; ++i) out[i] = x[i] + y[i];
      break;
    case Op::kSub:
      for (std::size_t i = 0; i < count; ++i) out[i] = x[i] - y[i];
      break;
    case Op::kMul:
      for (std::size_t i = 0; i < count; ++i) out[i] = x[i] * y[i];
      break;
    default:
      throw std::logic_error("not a binary op");
  }
  return {this, push(n)};
}

Var Tape::add(Var a, Var b) { return binary(Op::kAdd, a, b); }
Var Tape::sub(Var a, Var b) { return binary(Op::kSub, a, b); }
Var Tape::mul(Var a, Var b) { return binary(Op::kMul, a, b); }

Var Tape::sigmoid(Var x) { return unary(Op::kSigmoid, x); }
Var Tape::tanh(Var x) { return unary(Op::kTanh, x); }
Var Tape::exp(Var x) { return unary(Op::kExp, x); }
Var Tape::log(Var x) { return unary(Op::kLog, x); }
Var Tape::neg(Var x) { return unary(Op::kNeg, x); }
Var Tape::scale(Var x, double c) { return unary(Op::kAffine, x, c, 0.0); }
Var Tape::shift(Var x, double c) { return unary(Op::kAffine, x, 1.0, c); }
Var Tape::affine(Var x, double a, double b) { return unary(Op::kAffine, x, a, b); }

Var Tape::softplus(Var x, double gamma) {
  if (!(gamma > 0.0)) {
    throw ConfigError("softplus scale gamma must be positive, got " + std::to_string(gamma));
  }
  return unary(Op::kSoftplus, x, gamma);
}

Var Tape::clamp(Var x, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lo must not exceed hi");
  return unary(Op::kClamp, x, lo, hi);
}

Var Tape::sum(Var x) {
  check(x, "sum");
  const Node src = node(x);
  Node n;
  n.op = Op::kSum;
  n.a = x.id_;
  n.needs_grad = src.needs_grad;
  n.rows = 1;
  n.offset = values_.size();
  const double* in = val(x.id_);
  double total = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) total += in[i];
  values_.push_back(total);
  return {this, push(n)};
}

Var Tape::matvec(Var w, Var x) {
  check(w, "matvec");
  check(x, "matvec");
  const Node nw = node(w);
  const Node nx = node(x);
  if (nw.rank != 2 || nx.rank != 1 || nw.cols != nx.rows) {
    throw ShapeError("matvec: shape mismatch " + shape_string(shape(w)) + " vs " +
                     shape_string(shape(x)));
  }
  const std::size_t rows = nw.rows;
  const std::size_t cols = nw.cols;
  Node n;
  n.op = Op::kMatVec;
  n.a = w.id_;
  n.b = x.id_;
  n.needs_grad = nw.needs_grad || nx.needs_grad;
  n.rows = static_cast<std::uint32_t>(rows);
  n.offset = values_.size();
  values_.resize(values_.size() + rows, 0.0);
  const double* wm = val(w.id_);
  const double* xv = val(x.id_);
  double* out = values_.data() + n.offset;

  // One-hot position inputs make x mostly zero; skipping zero columns is exact.
  scratch_.clear();
  for (std::size_t c = 0; c < cols; ++c) {
    if (xv[c] != 0.0) scratch_.push_back(c);
  }
  if (scratch_.size() * 2 <= cols) {
    for (std::size_t r = 0; r < rows; ++r) {
      const double* row = wm + r * cols;
      double acc = 0.0;
      for (std::size_t c : scratch_) acc += row[c] * xv[c];
      out[r] = acc;
    }
  } else {
    for (std::size_t r = 0; r < rows; ++r) {
      const double* row = wm + r * cols;
      double acc = 0.0;
      for (std::size_t c = 0; c < cols; ++c) acc += row[c] * xv[c];
      out[r] = acc;
    }
  }
  return {this, push(n)};
}

Var Tape::concat(std::initializer_list<Var> parts) {
  return concat(std::span<const Var>(parts.begin(), parts.size()));
}

Var Tape::concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat: no operands");
  std::size_t total = 0;
  bool needs = false;
  for (const Var& p : parts) {
    check(p, "concat");
    const Node& np = node(p);
    if (np.rank != 1) {
      throw ShapeError("concat: expected vectors, got " + shape_string(shape(p)));
    }
    total += np.size();
    needs = needs || np.needs_grad;
  }
  Node n;
  n.op = Op::kConcat;
  n.needs_grad = needs;
  n.rows = static_cast<std::uint32_t>(total);
  n.offset = values_.size();
  n.aux = links_.size();
  n.aux2 = parts.size();
  values_.resize(values_.size() + total);
  std::size_t at = n.offset;
  for (const Var& p : parts) {
    links_.push_back(p.id_);
    const std::size_t len = node(p.id_).size();
    std::copy_n(val(p.id_), len, values_.data() + at);
    at += len;
  }
  return {this, push(n)};
}

Var Tape::slice(Var x, std::size_t begin, std::size_t length) {
  check(x, "slice");
  const Node src = node(x);
  if (src.rank != 1 || begin + length > src.size()) {
    throw ShapeError("slice: range [" + std::to_string(begin) + ", " +
                     std::to_string(begin + length) + ") out of bounds for " +
                     shape_string(shape(x)));
  }
  Node n;
  n.op = Op::kSlice;
  n.a = x.id_;
  n.needs_grad = src.needs_grad;
  n.rows = static_cast<std::uint32_t>(length);
  n.aux = begin;
  n.offset = values_.size();
  values_.resize(values_.size() + length);
  std::copy_n(val(x.id_) + begin, length, values_.data() + n.offset);
  return {this, push(n)};
}

void Tape::set_extended(bool on) {
  if (on != extended_ && !nodes_.empty()) {
    throw std::logic_error("set_extended: tape must be empty");
  }
  extended_ = on;
}

long double Tape::extended_value(Var v, std::size_t i) const {
  check(v, "extended_value");
  if (!extended_) throw std::logic_error("extended_value: extended evaluation is off");
  const Node& n = node(v.id_);
  if (i >= n.size()) throw std::out_of_range("extended_value: index out of range");
  return ext_[n.xoff + i];
}

namespace {

long double ext_sigmoid(long double x) {
  if (x >= 0.0L) return 1.0L / (1.0L + std::exp(-x));
  const long double e = std::exp(x);
  return e / (1.0L + e);
}

}  // namespace

void Tape::extend(Node& n) {
  const std::size_t count = n.size();
  n.xoff = ext_.size();
  ext_.resize(ext_.size() + count);
  long double* out = ext_.data() + n.xoff;
  auto operand = [&](std::int32_t id) -> const long double* { return ext_.data() + node(id).xoff; };

  switch (n.op) {
    case Op::kConstant:
    case Op::kParameter: {
      const double* v = n.param ? n.param->value.data() : values_.data() + n.offset;
      std::copy_n(v, count, out);
      return;
    }
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul: {
      const long double* x = operand(n.a);
      const long double* y = operand(n.b);
      for (std::size_t i = 0; i < count; ++i) {
        out[i] = n.op == Op::kAdd ? x[i] + y[i] : n.op == Op::kSub ? x[i] - y[i] : x[i] * y[i];
      }
      return;
    }
    case Op::kMatVec: {
      const std::size_t cols = node(n.a).cols;
      const long double* w = operand(n.a);
      const long double* x = operand(n.b);
      for (std::size_t r = 0; r < count; ++r) {
        long double acc = 0.0L;
        for (std::size_t c = 0; c < cols; ++c) acc += w[r * cols + c] * x[c];
        out[r] = acc;
      }
      return;
    }
    case Op::kConcat: {
      std::size_t at = 0;
      for (std::size_t k = 0; k < n.aux2; ++k) {
        const std::int32_t part = links_[n.aux + k];
        const std::size_t len = node(part).size();
        std::copy_n(operand(part), len, out + at);
        at += len;
      }
      return;
    }
    case Op::kSlice:
      std::copy_n(operand(n.a) + n.aux, count, out);
      return;
    case Op::kSum: {
      const long double* x = operand(n.a);
      long double total = 0.0L;
      for (std::size_t i = 0; i < node(n.a).size(); ++i) total += x[i];
      out[0] = total;
      return;
    }
    default:
      break;
  }
  const long double* x = operand(n.a);
  const long double s0 = n.s0, s1 = n.s1;
  for (std::size_t i = 0; i < count; ++i) {
    switch (n.op) {
      case Op::kSigmoid: out[i] = ext_sigmoid(x[i]); break;
      case Op::kTanh: out[i] = std::tanh(x[i]); break;
      case Op::kExp: out[i] = std::exp(x[i]); break;
      case Op::kLog: out[i] = std::log(x[i]); break;
      case Op::kNeg: out[i] = -x[i]; break;
      case Op::kAffine: out[i] = s0 * x[i] + s1; break;
      case Op::kSoftplus: {
        const long double u = x[i] / s0;
        out[i] = s0 * (std::max(u, 0.0L) + std::log1p(std::exp(-std::abs(u))));
        break;
      }
      case Op::kClamp: out[i] = std::clamp(x[i], s0, s1); break;
      default: throw std::logic_error(std::string("extend: unhandled op ") + op_name(n.op));
    }
  }
}

void Tape::backward(Var root) {
  check(root, "backward");
  if (node(root).size() != 1) {
    throw ShapeError("backward: root must be a scalar, got " + shape_string(shape(root)));
  }
  adjoints_.assign(values_.size(), 0.0);
  if (!node(root).needs_grad) return;
  adj(root.id_)[0] += 1.0;

  for (std::int32_t id = root.id_; id >= 0; --id) {
    const Node& n = node(id);
    if (!n.needs_grad || n.op == Op::kParameter || n.op == Op::kConstant) continue;
    const std::size_t count = n.size();
    const double* g = adjoints_.data() + n.offset;
    const double* out = values_.data() + n.offset;

    switch (n.op) {
      case Op::kAdd:
      case Op::kSub:
      case Op::kMul: {
        const Node& na = node(n.a);
        const Node& nb = node(n.b);
        if (na.needs_grad) {
          double* ga = adj(n.a);
          if (n.op == Op::kMul) {
            const double* y = val(n.b);
            for (std::size_t i = 0; i < count; ++i) ga[i] += g[i] * y[i];
          } else {
            for (std::size_t i = 0; i < count; ++i) ga[i] += g[i];
          }
        }
        if (nb.needs_grad) {
          double* gb = adj(n.b);
          if (n.op == Op::kMul) {
            const double* x = val(n.a);
            for (std::size_t i = 0; i < count; ++i) gb[i] += g[i] * x[i];
          } else if (n.op == Op::kSub) {
            for (std::size_t i = 0; i < count; ++i) gb[i] -= g[i];
          } else {
            for (std::size_t i = 0; i < count; ++i) gb[i] += g[i];
          }
        }
        break;
      }
      case Op::kMatVec: {
        const Node& nw = node(n.a);
        const Node& nx = node(n.b);
        const std::size_t rows = nw.rows;
        const std::size_t cols = nw.cols;
        const double* wm = val(n.a);
        const double* xv = val(n.b);
        scratch_.clear();
        for (std::size_t c = 0; c < cols; ++c) {
          if (xv[c] != 0.0) scratch_.push_back(c);
        }
        const bool sparse = scratch_.size() * 2 <= cols;
        if (nw.needs_grad) {
          double* gw = adj(n.a);
          for (std::size_t r = 0; r < rows; ++r) {
            const double gr = g[r];
            if (gr == 0.0) continue;
            double* row = gw + r * cols;
            if (sparse) {
              for (std::size_t c : scratch_) row[c] += gr * xv[c];
            } else {
              for (std::size_t c = 0; c < cols; ++c) row[c] += gr * xv[c];
            }
          }
        }
        if (nx.needs_grad) {
          double* gx = adj(n.b);
          for (std::size_t r = 0; r < rows; ++r) {
            const double gr = g[r];
            if (gr == 0.0) continue;
            const double* row = wm + r * cols;
            for (std::size_t c = 0; c < cols; ++c) gx[c] += row[c] * gr;
          }
        }
        break;
      }
      case Op::kConcat: {
        std::size_t at = 0;
        for (std::size_t k = 0; k < n.aux2; ++k) {
          const std::int32_t part = links_[n.aux + k];
          const std::size_t len = node(part).size();
          if (node(part).needs_grad) {
            double* gp = adj(part);
            for (std::size_t i = 0; i < len; ++i) gp[i] += g[at + i];
          }
          at += len;
        }
        break;
      }
      case Op::kSlice: {
        double* ga = adj(n.a) + n.aux;
        for (std::size_t i = 0; i < count; ++i) ga[i] += g[i];
        break;
      }
      case Op::kSum: {
        const std::size_t len = node(n.a).size();
        double* ga = adj(n.a);
        for (std::size_t i = 0; i < len; ++i) ga[i] += g[0];
        break;
      }
      default: {
        const double* in = val(n.a);
        double* ga = adj(n.a);
        switch (n.op) {
          case Op::kSigmoid:
            for (std::size_t i = 0; i < count; ++i) ga[i] += g[i] * out[i] * (1.0 - out[i]);
            break;
          case Op::kTanh:
            for (std::size_t i = 0; i < count; ++i) ga[i] += g[i] * (1.0 - out[i] * out[i]);
            break;
          case Op::kExp:
            for (std::size_t i = 0; i < count; ++i) ga[i] += g[i] * out[i];
            break;
          case Op::kLog:
            for (std::size_t i = 0; i < count; ++i) ga[i] += g[i] / in[i];
            break;
          case Op::kNeg:
            for (std::size_t i = 0; i < count; ++i) ga[i] -= g[i];
            break;
          case Op::kAffine:
            for (std::size_t i = 0; i < count; ++i) ga[i] += g[i] * n.s0;
            break;
          case Op::kSoftplus:
            for (std::size_t i = 0; i < count; ++i) ga[i] += g[i] * stable_sigmoid(in[i] / n.s0);
            break;
          case Op::kClamp:
            for (std::size_t i = 0; i < count; ++i) {
              if (in[i] > n.s0 && in[i] < n.s1) ga[i] += g[i];
            }
            break;
          default:
            throw std::logic_error(std::string("backward: unhandled op ") + op_name(n.op));
        }
      }
    }
  }
}

}  // namespace heroes::diff
