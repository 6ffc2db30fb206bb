#include "progfill/losses.hpp"

#include <cmath>

#include "progfill/ops.hpp"

namespace progfill {
namespace {

template <typename T>
T clamp_probability(T p, bool& clamped) {
  const T eps = static_cast<T>(kProbabilityEpsilon);
  clamped = p < eps || p > T(1) - eps;
  return std::min(std::max(p, eps), T(1) - eps);
}

template <typename T>
T sign(T v) {
  return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0));
}

template <typename T>
void check_probabilities(const Tensor<T>& p, const char* what) {
  if (p.empty()) throw InvalidInput(std::string(what) + ": empty batch");
}

// Mean of -log(q) over the batch where q = p (positive) or 1 - p (negative).
template <typename T>
LossGrad<T> neg_log_mean(const Tensor<T>& p, bool positive) {
  LossGrad<T> out;
  out.grad = Tensor<T>(p.shape());
  const T count = static_cast<T>(p.size());
  T total = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    bool clamped = false;
    const T pc = clamp_probability(p[i], clamped);
    const T q = positive ? pc : T(1) - pc;
    total -= std::log(q);
    if (!clamped) out.grad[i] = (positive ? T(-1) / pc : T(1) / (T(1) - pc)) / count;
  }
  out.value = total / count;
  return out;
}

}  // namespace

void LossWeights::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidInput("alpha must be in [0, 1]");
  if (lambda_attr < 0 || lambda_rec < 0 || lambda_feat < 0 || lambda_bdy < 0)
    throw InvalidInput("loss weights must be nonnegative");
}

template <typename T>
PairLossGrad<T> adversarial_d_loss(const Tensor<T>& p_real, const Tensor<T>& p_fake) {
  check_probabilities(p_real, "adversarial_d_loss");
  check_probabilities(p_fake, "adversarial_d_loss");
  auto real = neg_log_mean(p_real, true);
  auto fake = neg_log_mean(p_fake, false);
  return {real.value + fake.value, std::move(real.grad), std::move(fake.grad)};
}

template <typename T>
LossGrad<T> adversarial_g_loss(const Tensor<T>& p_fake) {
  check_probabilities(p_fake, "adversarial_g_loss");
  return neg_log_mean(p_fake, true);
}

template <typename T>
LossGrad<T> attribute_bce(const Tensor<T>& predicted, const Tensor<T>& target) {
  require_same_shape(predicted, target, "attribute_bce");
  LossGrad<T> out;
  out.grad = Tensor<T>(predicted.shape());
  if (predicted.empty()) return out;
  const T batch = static_cast<T>(predicted.n());
  T total = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    bool clamped = false;
    const T p = clamp_probability(predicted[i], clamped);
    const T a = target[i];
    total -= a * std::log(p) + (T(1) - a) * std::log(T(1) - p);
    if (!clamped) out.grad[i] = (p - a) / (p * (T(1) - p)) / batch;
  }
  out.value = total / batch;
  return out;
}

template <typename T>
PairLossGrad<T> attribute_loss(const Tensor<T>& a_hat_real, const Tensor<T>& a_real, const Tensor<T>& a_hat_syn,
                               const Tensor<T>& a_obs) {
  auto real = attribute_bce(a_hat_real, a_real);
  auto syn = attribute_bce(a_hat_syn, a_obs);
  return {real.value + syn.value, std::move(real.grad), std::move(syn.grad)};
}

template <typename T>
LossGrad<T> reconstruction_loss(const Tensor<T>& real, const Tensor<T>& syn, const Tensor<T>& masks, double alpha) {
  require_same_shape(real, syn, "reconstruction_loss");
  if (masks.n() != real.n() || masks.c() != 1 || masks.h() != real.h() || masks.w() != real.w())
    throw InvalidInput("reconstruction_loss: mask batch " + masks.shape().str() + " vs images " + real.shape().str());
  LossGrad<T> out;
  out.grad = Tensor<T>(real.shape());
  const T a = static_cast<T>(alpha);
  const T count = static_cast<T>(real.size());
  const std::size_t plane = real.plane_size();
  T target_sum = 0;
  T context_sum = 0;
  for (int n = 0; n < real.n(); ++n)
    for (int c = 0; c < real.c(); ++c) {
      const T* r = real.plane(n, c);
      const T* s = syn.plane(n, c);
      const T* m = masks.plane(n, 0);
      T* g = out.grad.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        const T d = r[i] - s[i];
        target_sum += std::abs(m[i] * d);
        context_sum += std::abs((T(1) - m[i]) * d);
        const T weight = a * std::abs(m[i]) + (T(1) - a) * std::abs(T(1) - m[i]);
        g[i] = -weight * sign(d) / count;
      }
    }
  out.value = a * target_sum / count + (T(1) - a) * context_sum / count;
  return out;
}

template <typename T>
LossGrad<T> feature_loss(const FeatureExtractor<T>& phi, const Tensor<T>& real, const Tensor<T>& syn) {
  require_same_shape(real, syn, "feature_loss");
  Tensor<T> real_features;
  {
    NoGradGuard no_grad;
    real_features = phi.forward(constant(real))->value;
  }
  auto syn_var = leaf(syn, true);
  auto syn_features = phi.forward(syn_var);
  const T count = static_cast<T>(real_features.size());
  LossGrad<T> out;
  Tensor<T> seed(syn_features->value.shape());
  T total = 0;
  for (std::size_t i = 0; i < seed.size(); ++i) {
    const T d = syn_features->value[i] - real_features[i];
    total += d * d;
    seed[i] = T(2) * d / count;
  }
  out.value = total / count;
  backward(syn_features, seed);
  out.grad = syn_var->grad.empty() ? Tensor<T>(syn.shape()) : std::move(syn_var->grad);
  return out;
}

template <typename T>
LossGrad<T> boundary_loss(const Tensor<T>& real, const Tensor<T>& syn, const Tensor<T>& weights) {
  require_same_shape(real, syn, "boundary_loss");
  if (weights.n() != real.n() || weights.c() != 1 || weights.h() != real.h() || weights.w() != real.w())
    throw InvalidInput("boundary_loss: weight batch " + weights.shape().str() + " vs images " + real.shape().str());
  LossGrad<T> out;
  out.grad = Tensor<T>(real.shape());
  const T count = static_cast<T>(real.size());
  const std::size_t plane = real.plane_size();
  T total = 0;
  for (int n = 0; n < real.n(); ++n)
    for (int c = 0; c < real.c(); ++c) {
      const T* r = real.plane(n, c);
      const T* s = syn.plane(n, c);
      const T* w = weights.plane(n, 0);
      T* g = out.grad.plane(n, c);
      for (std::size_t i = 0; i < plane; ++i) {
        const T d = r[i] - s[i];
        total += std::abs(w[i] * d);
        g[i] = -std::abs(w[i]) * sign(d) / count;
      }
    }
  out.value = total / count;
  return out;
}

double total_g_loss(const GeneratorLossTerms& terms, const LossWeights& weights) {
  const std::pair<const char*, double> named[] = {{"adversarial", terms.adversarial},
                                                  {"attribute", terms.attribute},
                                                  {"reconstruction", terms.reconstruction},
                                                  {"feature", terms.feature},
                                                  {"boundary", terms.boundary}};
  for (const auto& [name, v] : named)
    if (!std::isfinite(v)) throw NonFiniteLoss(name);
  return terms.adversarial + weights.lambda_attr * terms.attribute + weights.lambda_rec * terms.reconstruction +
         weights.lambda_feat * terms.feature + weights.lambda_bdy * terms.boundary;
}

#define PROGFILL_INSTANTIATE_LOSSES(T)                                                                        \
  template PairLossGrad<T> adversarial_d_loss<T>(const Tensor<T>&, const Tensor<T>&);                         \
  template LossGrad<T> adversarial_g_loss<T>(const Tensor<T>&);                                               \
  template LossGrad<T> attribute_bce<T>(const Tensor<T>&, const Tensor<T>&);                                  \
  template PairLossGrad<T> attribute_loss<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,            \
                                             const Tensor<T>&);                                               \
  template LossGrad<T> reconstruction_loss<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, double);  \
  template LossGrad<T> feature_loss<T>(const FeatureExtractor<T>&, const Tensor<T>&, const Tensor<T>&);       \
  template LossGrad<T> boundary_loss<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);

PROGFILL_INSTANTIATE_LOSSES(float)
PROGFILL_INSTANTIATE_LOSSES(double)

#undef PROGFILL_INSTANTIATE_LOSSES

}  // namespace progfill
