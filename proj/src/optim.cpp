#include <cmath>

#include "cono/train.hpp"

namespace cono {

Adam::Adam(std::vector<ad::Parameter*> params, AdamOptions opt) : params_(std::move(params)), opt_(opt) {
  for (auto* p : params_) {
    m_.emplace_back(2 * p->value.size(), 0.0);
    v_.emplace_back(2 * p->value.size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(opt_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(opt_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto* p = params_[k];
    if (p->frozen) continue;
    auto& m = m_[k];
    auto& v = v_[k];
    auto* value = reinterpret_cast<double*>(p->value.raw());
    const auto* grad = reinterpret_cast<const double*>(p->grad.raw());
    const std::size_t n = m.size();
    const std::size_t stride = p->real_constrained ? 2 : 1;
    for (std::size_t i = 0; i < n; i += stride) {
      const double g = p->grad.empty() ? 0.0 : grad[i];
      m[i] = opt_.beta1 * m[i] + (1.0 - opt_.beta1) * g;
      v[i] = opt_.beta2 * v[i] + (1.0 - opt_.beta2) * g * g;
      const double update = (m[i] / c1) / (std::sqrt(v[i] / c2) + opt_.eps);
      value[i] -= opt_.lr * (update + opt_.weight_decay * value[i]);
    }
  }
}

}  // namespace cono
