#include "progfill/adam.hpp"

#include <cmath>

namespace progfill {

void Adam::step(ParamStore<float>& params) {
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  for (const auto& [name, var] : params.entries()) {
    if (!var->requires_grad || var->grad.empty()) continue;
    auto& slot = slots_[name];
    if (slot.m.empty()) {
      slot.m = Tensor<float>(var->value.shape());
      slot.v = Tensor<float>(var->value.shape());
    }
    ++slot.t;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(slot.t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(slot.t));
    const float step = static_cast<float>(config_.learning_rate * std::sqrt(c2) / c1);
    const float eps = static_cast<float>(config_.eps * std::sqrt(c2));
    float* w = var->value.data();
    const float* g = var->grad.data();
    float* m = slot.m.data();
    float* v = slot.v.data();
    const float fb1 = static_cast<float>(b1);
    const float fb2 = static_cast<float>(b2);
    for (std::size_t i = 0; i < var->value.size(); ++i) {
      m[i] = fb1 * m[i] + (1.0f - fb1) * g[i];
      v[i] = fb2 * v[i] + (1.0f - fb2) * g[i] * g[i];
      w[i] -= step * m[i] / (std::sqrt(v[i]) + eps);
    }
  }
}

std::int64_t Adam::steps_of(const std::string& name) const {
  auto it = slots_.find(name);
  return it == slots_.end() ? 0 : it->second.t;
}

nlohmann::json Adam::export_state(const std::string& prefix, std::vector<NamedArray>& arrays) const {
  nlohmann::json counts = nlohmann::json::object();
  for (const auto& [name, slot] : slots_) {
    arrays.push_back({prefix + name + ".m", slot.m});
    arrays.push_back({prefix + name + ".v", slot.v});
    counts[name] = slot.t;
  }
  return counts;
}

void Adam::import_state(const std::string& prefix, const Container& c, const nlohmann::json& counts) {
  slots_.clear();
  for (const auto& [name, t] : counts.items()) {
    const NamedArray* m = c.find(prefix + name + ".m");
    const NamedArray* v = c.find(prefix + name + ".v");
    if (!m || !v) throw CheckpointError("optimizer moments missing for " + name);
    if (!(m->value.shape() == v->value.shape())) throw CheckpointError("optimizer moment shapes differ for " + name);
    slots_[name] = Slot{m->value, v->value, t.get<std::int64_t>()};
  }
}

}  // namespace progfill
