#pragma once

// Loss terms of the completion objective. Each returns its value together
// with the analytic gradient with respect to the network outputs it scores,
// so the trainer can seed reverse accumulation directly. Image-space norms
// are means over every element (batch x channel x pixel).

#include <string>

#include "progfill/feature_extractor.hpp"
#include "progfill/tensor.hpp"

namespace progfill {

inline constexpr double kProbabilityEpsilon = 1e-7;

struct LossWeights {
  double alpha = 0.7;
  double lambda_attr = 2.0;
  double lambda_rec = 500.0;
  double lambda_feat = 10.0;
  double lambda_bdy = 5000.0;

  void validate() const;
};

template <typename T>
struct LossGrad {
  T value = 0;
  Tensor<T> grad;
};

template <typename T>
struct PairLossGrad {
  T value = 0;
  Tensor<T> grad_first;
  Tensor<T> grad_second;
};

// mean(-log p_real) + mean(-log(1 - p_fake)); minimized by the discriminator.
template <typename T>
PairLossGrad<T> adversarial_d_loss(const Tensor<T>& p_real, const Tensor<T>& p_fake);

// mean(-log p_fake); the non-saturating generator objective.
template <typename T>
LossGrad<T> adversarial_g_loss(const Tensor<T>& p_fake);

// Binary cross-entropy summed over attributes, averaged over the batch.
// predicted and target are B x N x 1 x 1.
template <typename T>
LossGrad<T> attribute_bce(const Tensor<T>& predicted, const Tensor<T>& target);

// Real-image term plus synthesized-image term; grad_first is with respect to
// a_hat_real, grad_second with respect to a_hat_syn.
template <typename T>
PairLossGrad<T> attribute_loss(const Tensor<T>& a_hat_real, const Tensor<T>& a_real, const Tensor<T>& a_hat_syn,
                               const Tensor<T>& a_obs);

// alpha * mean|M (real - syn)| + (1 - alpha) * mean|(1 - M)(real - syn)|.
// masks are B x 1 x H x W and broadcast over channels. Gradient is with
// respect to syn.
template <typename T>
LossGrad<T> reconstruction_loss(const Tensor<T>& real, const Tensor<T>& syn, const Tensor<T>& masks, double alpha);

// mean((phi(real) - phi(syn))^2); gradient with respect to syn.
template <typename T>
LossGrad<T> feature_loss(const FeatureExtractor<T>& phi, const Tensor<T>& real, const Tensor<T>& syn);

// mean|w (real - syn)| with w B x 1 x H x W; gradient with respect to syn.
template <typename T>
LossGrad<T> boundary_loss(const Tensor<T>& real, const Tensor<T>& syn, const Tensor<T>& weights);

struct GeneratorLossTerms {
  double adversarial = 0.0;
  double attribute = 0.0;
  double reconstruction = 0.0;
  double feature = 0.0;
  double boundary = 0.0;
};

// adv + l_attr * attr + l_rec * rec + l_feat * feat + l_bdy * bdy. Throws
// NonFiniteLoss naming the first non-finite term.
double total_g_loss(const GeneratorLossTerms& terms, const LossWeights& weights);

}  // namespace progfill
