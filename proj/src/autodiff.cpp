#include "cono/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "cono/errors.hpp"

namespace cono::ad {

Parameter::Parameter(std::string name_, ComplexTensor value_, bool real_constrained_)
    : name(std::move(name_)), value(std::move(value_)), grad(value.shape()),
      real_constrained(real_constrained_) {
  enforce_constraints();
}

void Parameter::zero_grad() {
  if (grad.shape() != value.shape()) grad = ComplexTensor(value.shape());
  grad.fill(cplx{});
}

void Parameter::enforce_constraints() {
  if (!real_constrained) return;
  for (auto& z : value.data()) z = cplx(z.real(), 0.0);
  for (auto& z : grad.data()) z = cplx(z.real(), 0.0);
}

Tape& Var::tape() const {
  if (!tape_) throw std::logic_error("Var is not attached to a tape");
  return *tape_;
}

const ComplexTensor& Var::value() const { return tape().value(id_); }

std::size_t Tape::check(const Var& v) const {
  if (v.tape_ != this) throw std::invalid_argument("Var belongs to a different tape");
  if (v.id_ >= nodes_.size())
    throw std::out_of_range("node id " + std::to_string(v.id_) + " is not on the tape (size " +
                            std::to_string(nodes_.size()) + ")");
  return v.id_;
}

Var Tape::constant(ComplexTensor value) {
  nodes_.push_back(Node{"constant", {}, std::move(value), nullptr, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(Parameter& p) {
  if (auto it = param_ids_.find(&p); it != param_ids_.end()) return Var(this, it->second);
  nodes_.push_back(Node{"param:" + p.name, {}, p.value, nullptr, &p, !p.frozen});
  param_ids_.emplace(&p, nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(std::string kind, std::vector<Var> inputs, ComplexTensor value, BackwardFn backward) {
  Node node;
  node.kind = std::move(kind);
  node.inputs.reserve(inputs.size());
  for (const auto& v : inputs) {
    const std::size_t id = check(v);
    node.inputs.push_back(id);
    node.requires_grad = node.requires_grad || nodes_[id].requires_grad;
  }
  node.value = std::move(value);
  if (node.requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(std::string kind, std::vector<Var> inputs, const ForwardFn& forward,
                 BackwardFn backward) {
  std::vector<const ComplexTensor*> values;
  values.reserve(inputs.size());
  for (const auto& v : inputs) values.push_back(&nodes_[check(v)].value);
  ComplexTensor out = forward(values);
  return record(std::move(kind), std::move(inputs), std::move(out), std::move(backward));
}

void Tape::backward() { grads_.assign(nodes_.size(), ComplexTensor{}); }

void Tape::backward(Var loss) {
  const std::size_t root = check(loss);
  const ComplexTensor& lv = nodes_[root].value;
  if (lv.size() != 1) throw std::invalid_argument("backward: loss must be a scalar, got shape " + shape_str(lv.shape()));
  if (lv[0].imag() != 0.0) throw std::invalid_argument("backward: loss must be real");

  grads_.assign(nodes_.size(), ComplexTensor{});
  grads_[root] = ComplexTensor::full(lv.shape(), cplx(1.0, 0.0));

  for (std::size_t i = root + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (grads_[i].empty() || !node.backward) continue;
    const std::size_t n_in = node.inputs.size();
    const auto needed = std::make_unique<bool[]>(n_in + 1);
    for (std::size_t k = 0; k < n_in; ++k) needed[k] = nodes_[node.inputs[k]].requires_grad;
    std::vector<ComplexTensor> in_grads =
        node.backward(grads_[i], std::span<const bool>(needed.get(), n_in));
    if (in_grads.size() != node.inputs.size())
      throw std::logic_error("backward of '" + node.kind + "' returned " + std::to_string(in_grads.size()) +
                             " adjoints for " + std::to_string(node.inputs.size()) + " inputs");
    for (std::size_t k = 0; k < node.inputs.size(); ++k) {
      if (!needed[k] || in_grads[k].empty()) continue;
      const std::size_t j = node.inputs[k];
      if (in_grads[k].shape() != nodes_[j].value.shape())
        throw std::logic_error("backward of '" + node.kind + "' produced adjoint " +
                               shape_str(in_grads[k].shape()) + " for input " +
                               shape_str(nodes_[j].value.shape()));
      if (grads_[j].empty())
        grads_[j] = std::move(in_grads[k]);
      else
        grads_[j].axpy(1.0, in_grads[k]);
    }
  }
}

ComplexTensor Tape::grad(Var v) const {
  const std::size_t id = check(v);
  if (id < grads_.size() && !grads_[id].empty()) return grads_[id];
  return ComplexTensor(nodes_[id].value.shape());
}

std::vector<std::pair<Parameter*, ComplexTensor>> Tape::parameter_grads() const {
  std::vector<std::pair<Parameter*, ComplexTensor>> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    Parameter* p = nodes_[i].param;
    if (!p) continue;
    ComplexTensor g = (i < grads_.size() && !grads_[i].empty()) ? grads_[i] : ComplexTensor(p->value.shape());
    if (p->frozen) g.fill(cplx{});
    if (p->real_constrained)
      for (auto& z : g.data()) z = cplx(z.real(), 0.0);
    out.emplace_back(p, std::move(g));
  }
  return out;
}

void Tape::write_parameter_grads(bool accumulate) const {
  for (auto& [p, g] : parameter_grads()) {
    if (accumulate && p->grad.shape() == g.shape())
      p->grad.axpy(1.0, g);
    else
      p->grad = std::move(g);
  }
}

double gradcheck(const LossFn& fn, std::span<Parameter* const> params, double epsilon,
                 std::size_t max_components) {
  std::vector<ComplexTensor> analytic;
  {
    Tape tape;
    Var loss = fn(tape);
    tape.backward(loss);
    std::vector<std::pair<Parameter*, ComplexTensor>> grads = tape.parameter_grads();
    for (Parameter* p : params) {
      auto it = std::find_if(grads.begin(), grads.end(), [p](const auto& e) { return e.first == p; });
      analytic.push_back(it != grads.end() ? it->second : ComplexTensor(p->value.shape()));
    }
  }

  auto eval = [&fn]() {
    Tape tape;
    const Var loss = fn(tape);
    return loss.value()[0].real();
  };

  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Parameter& p = *params[pi];
    if (p.frozen) continue;
    const std::size_t n = p.value.size();
    const std::size_t stride = (max_components > 0 && n > max_components) ? n / max_components : 1;
    for (std::size_t i = 0; i < n; i += stride) {
      for (int part = 0; part < (p.real_constrained ? 1 : 2); ++part) {
        const cplx orig = p.value[i];
        const cplx step = part == 0 ? cplx(epsilon, 0.0) : cplx(0.0, epsilon);
        p.value[i] = orig + step;
        const double up = eval();
        p.value[i] = orig - step;
        const double down = eval();
        p.value[i] = orig;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double a = part == 0 ? analytic[pi][i].real() : analytic[pi][i].imag();
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
        worst = std::max(worst, std::abs(a - numeric) / denom);
      }
    }
  }
  return worst;
}

}  // namespace cono::ad
