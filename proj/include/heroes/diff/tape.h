#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <unordered_map>
#include <vector>

#include "heroes/diff/tensor.h"

namespace heroes::diff {

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid until the tape is cleared.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  std::int32_t id() const { return id_; }

  std::size_t size() const;
  double value(std::size_t i = 0) const;
  std::span<const double> values() const;

  friend bool operator==(const Var&, const Var&) = default;

 private:
  friend class Tape;
  Var(Tape* tape, std::int32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::int32_t id_ = -1;
};

enum class Op : std::uint8_t {
  kConstant,
  kParameter,
  kAdd,
  kSub,
  kMul,
  kMatVec,
  kConcat,
  kSlice,
  kSigmoid,
  kTanh,
  kExp,
  kLog,
  kNeg,
  kAffine,
  kSum,
  kSoftplus,
  kClamp,
};

const char* op_name(Op op);

// Reverse-mode tape. Records primitives in execution order; backward() walks
// them in reverse and accumulates adjoints. Parameter adjoints go straight
// into Parameter::grad, so gradients accumulate across tapes until zeroed.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Drops all nodes but keeps allocated storage.
  void clear();
  std::size_t node_count() const { return nodes_.size(); }

  Var constant(std::span<const double> values);
  Var constant(std::initializer_list<double> values);
  Var constant(const Tensor& t);
  Var scalar(double v);
  Var zeros(std::size_t n);
  // Leaf bound to p. The same parameter maps to the same node within one tape.
  Var param(Parameter& p);
  // Read-only leaf bound to p; never receives gradient.
  Var frozen(const Parameter& p);
  // Constant copy of x; no gradient flows back through it.
  Var detach(Var x);

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var matvec(Var w, Var x);
  Var concat(std::span<const Var> parts);
  Var concat(std::initializer_list<Var> parts);
  Var slice(Var x, std::size_t begin, std::size_t length);
  Var sigmoid(Var x);
  Var tanh(Var x);
  Var exp(Var x);
  Var log(Var x);
  Var neg(Var x);
  Var scale(Var x, double c);
  Var shift(Var x, double c);
  // a * x + b elementwise.
  Var affine(Var x, double a, double b);
  Var sum(Var x);
  // gamma * log(1 + exp(x / gamma)), evaluated without overflow.
  Var softplus(Var x, double gamma);
  Var clamp(Var x, double lo, double hi);

  void backward(Var root);

  // When enabled, every node also carries an 80-bit extended-precision
  // value computed from the same operands. Used by the finite-difference
  // oracle; gradients and the double values are unaffected.
  void set_extended(bool on);
  bool extended() const { return extended_; }
  long double extended_value(Var v, std::size_t i = 0) const;

  std::span<const double> value(Var v) const;
  std::vector<std::size_t> shape(Var v) const;
  // Adjoint of a non-parameter node after backward().
  std::span<const double> adjoint(Var v) const;

 private:
  struct Node {
    Op op = Op::kConstant;
    bool needs_grad = false;
    std::uint8_t rank = 1;
    std::uint32_t rows = 0;
    std::uint32_t cols = 1;
    std::int32_t a = -1;
    std::int32_t b = -1;
    std::size_t offset = 0;
    std::size_t aux = 0;
    std::size_t aux2 = 0;
    std::size_t xoff = 0;
    double s0 = 0.0;
    double s1 = 0.0;
    Parameter* param = nullptr;

    std::size_t size() const { return std::size_t{rows} * cols; }
  };

  std::int32_t push(Node n);
  Node& node(Var v);
  const Node& node(std::int32_t id) const { return nodes_[static_cast<std::size_t>(id)]; }
  void check(Var v, const char* what) const;
  const double* val(std::int32_t id) const;
  void extend(Node& n);
  double* adj(std::int32_t id);
  Var unary(Op op, Var x, double s0 = 0.0, double s1 = 0.0);
  Var binary(Op op, Var a, Var b);

  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<double> adjoints_;
  std::vector<long double> ext_;
  bool extended_ = false;
  std::vector<std::int32_t> links_;
  std::vector<std::size_t> scratch_;
  std::unordered_map<const Parameter*, std::int32_t> param_nodes_;
};

// Free-function spellings of the primitives.
inline Var add(Var a, Var b) { return a.tape()->add(a, b); }
inline Var sub(Var a, Var b) { return a.tape()->sub(a, b); }
inline Var mul(Var a, Var b) { return a.tape()->mul(a, b); }
inline Var matvec(Var w, Var x) { return w.tape()->matvec(w, x); }
inline Var sigmoid(Var x) { return x.tape()->sigmoid(x); }
inline Var tanh(Var x) { return x.tape()->tanh(x); }
inline Var exp(Var x) { return x.tape()->exp(x); }
inline Var log(Var x) { return x.tape()->log(x); }
inline Var neg(Var x) { return x.tape()->neg(x); }
inline Var scale(Var x, double c) { return x.tape()->scale(x, c); }
inline Var sum(Var x) { return x.tape()->sum(x); }
inline Var softplus(Var x, double gamma) { return x.tape()->softplus(x, gamma); }

// Plain-double reference used by both the tape primitive and callers that
// need the value outside a tape.
double scaled_softplus(double x, double gamma);
double stable_sigmoid(double x);

}  // namespace heroes::diff
