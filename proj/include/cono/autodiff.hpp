#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cono/ctensor.hpp"

namespace cono::ad {

/// A trainable tensor.
///
/// Gradients follow the real-composite convention: for a real loss L and a
/// complex entry p = x + iy, grad = dL/dx + i dL/dy. Real-constrained
/// parameters keep a zero imaginary part in both value and grad; frozen
/// parameters always receive a zero gradient.
struct Parameter {
  std::string name;
  ComplexTensor value;
  ComplexTensor grad;
  bool real_constrained = false;
  bool frozen = false;

  Parameter() = default;
  Parameter(std::string name, ComplexTensor value, bool real_constrained = false);

  void zero_grad();
  /// Drop imaginary parts (value and grad) when real-constrained.
  void enforce_constraints();
};

class Tape;

/// Handle to a node on a Tape.
class Var {
 public:
  Var() = default;

  std::size_t id() const noexcept { return id_; }
  Tape& tape() const;
  const ComplexTensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Maps the output adjoint to one adjoint per input. `needed[i]` is false
/// when input i does not lead to any parameter; its slot may be left empty.
using BackwardFn =
    std::function<std::vector<ComplexTensor>(const ComplexTensor& grad_out, std::span<const bool> needed)>;
using ForwardFn = std::function<ComplexTensor(std::span<const ComplexTensor* const> inputs)>;

/// Append-only record of coarse operations for reverse-mode differentiation.
///
/// Node ids are topologically ordered by construction. A Tape is not
/// thread-safe; use one tape per thread.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(ComplexTensor value);
  /// Leaf bound to `p`; the same parameter maps to the same node.
  Var param(Parameter& p);

  Var record(std::string kind, std::vector<Var> inputs, ComplexTensor value, BackwardFn backward);
  Var record(std::string kind, std::vector<Var> inputs, const ForwardFn& forward, BackwardFn backward);

  /// Reverse sweep from a real scalar loss. Re-running resets all adjoints.
  void backward(Var loss);
  /// No-op sweep kept for symmetry with the empty-tape case.
  void backward();

  /// Adjoint of `v` from the last backward(); zeros if `v` was not reached.
  ComplexTensor grad(Var v) const;

  /// Adjoints of every parameter leaf, constraints applied.
  std::vector<std::pair<Parameter*, ComplexTensor>> parameter_grads() const;
  /// Store parameter adjoints into Parameter::grad (overwrite unless `accumulate`).
  void write_parameter_grads(bool accumulate = false) const;

  std::size_t size() const noexcept { return nodes_.size(); }
  const std::string& kind(std::size_t id) const { return nodes_.at(id).kind; }
  const ComplexTensor& value(std::size_t id) const { return nodes_.at(id).value; }

 private:
  struct Node {
    std::string kind;
    std::vector<std::size_t> inputs;
    ComplexTensor value;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  std::size_t check(const Var& v) const;

  // deque keeps value references stable while the tape grows
  std::deque<Node> nodes_;
  std::vector<ComplexTensor> grads_;
  std::unordered_map<const Parameter*, std::size_t> param_ids_;
};

using LossFn = std::function<Var(Tape&)>;

/// Largest component-wise relative error between tape gradients and central
/// finite differences (Re and Im perturbed separately), with denominator
/// max(|analytic|, |numeric|, 1e-8). `max_components` > 0 checks an evenly
/// strided subset of each parameter.
double gradcheck(const LossFn& fn, std::span<Parameter* const> params, double epsilon,
                 std::size_t max_components = 0);

}  // namespace cono::ad
