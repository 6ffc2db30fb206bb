#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "progfill/adam.hpp"
#include "progfill/checkpoint.hpp"
#include "progfill/data.hpp"
#include "progfill/discriminator.hpp"
#include "progfill/feature_extractor.hpp"
#include "progfill/generator.hpp"
#include "progfill/history_buffer.hpp"
#include "progfill/losses.hpp"
#include "progfill/masking.hpp"

namespace progfill {

// min(1, step_in_stage / steps_fade); 1 when steps_fade is 0.
double fade_alpha(std::int64_t step_in_stage, std::int64_t steps_fade);

struct TrainConfig {
  std::vector<int> stages{4, 8, 16, 32};
  std::int64_t steps_fade = 4000;
  std::int64_t steps_stable = 4000;
  // Per stage; the last entry repeats for later stages.
  std::vector<int> batch_sizes{8};
  double learning_rate = 1e-4;
  double adam_beta1 = 0.0;
  double adam_beta2 = 0.99;
  double adam_eps = 1e-8;
  LossWeights weights;
  bool unconditional = false;
  std::uint64_t seed = 1;
  std::int64_t checkpoint_every = 0;  // 0: stage boundaries only
  double center_mask_rate = 0.2;
  MaskSpec mask_spec;
  bool augment = false;
  std::size_t history_capacity = 50;
  GeneratorConfig net;

  void validate() const;
  int batch_size(std::size_t stage_index) const;
  std::int64_t stage_length() const { return steps_fade + steps_stable; }
  std::int64_t total_steps() const { return stage_length() * static_cast<std::int64_t>(stages.size()); }
};

nlohmann::json to_json(const GeneratorConfig& c);
GeneratorConfig generator_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

template <typename T>
using Seeds = std::vector<std::pair<Var<T>, Tensor<T>>>;

// Generator objective for one batch: adversarial (non-saturating) plus the
// weighted attribute, reconstruction, feature and boundary terms. `syn` is
// the generator output node; `a_obs` is B x N x 1 x 1 (N may be 0).
// Backward from the returned seeds yields d total / d syn.
template <typename T>
struct GeneratorObjective {
  GeneratorLossTerms terms;
  double total = 0.0;
  Seeds<T> seeds;
};

template <typename T>
GeneratorObjective<T> generator_objective(const Discriminator<T>& disc, const FeatureExtractor<T>& phi,
                                          const Tensor<T>& real, const Var<T>& syn, const Tensor<T>& masks,
                                          const Tensor<T>& boundary, const Tensor<T>& a_obs, const LossWeights& weights);

// Discriminator objective: adversarial on reals and fakes plus the weighted
// attribute term on reals.
template <typename T>
struct DiscriminatorObjective {
  double adversarial = 0.0;
  double attribute = 0.0;
  double total = 0.0;
  Seeds<T> seeds;
};

template <typename T>
DiscriminatorObjective<T> discriminator_objective(const Discriminator<T>& disc, const Tensor<T>& real,
                                                  const Tensor<T>& fake, const Tensor<T>& a_real,
                                                  const LossWeights& weights);

// B x 1 x S x S boundary weights of a mask batch.
Tensor<float> boundary_weight_batch(std::span<const MaskImage> masks);

struct StepMetrics {
  std::int64_t step = 0;
  int stage = 0;
  double fade_alpha = 1.0;
  double d_adversarial = 0.0;
  double d_attribute = 0.0;
  double d_total = 0.0;
  GeneratorLossTerms g;
  double g_total = 0.0;

  nlohmann::json to_json() const;
};

// Owns both networks, their optimizers, the history buffer and the schedule
// position. Everything random flows from one seeded source, so two runs with
// the same config and data produce identical metrics.
class Trainer {
 public:
  Trainer(TrainConfig config, Dataset data, FeatureExtractor<float> phi = FeatureExtractor<float>::random_default());

  // Continues from a checkpoint written by save().
  static Trainer resume(const std::filesystem::path& checkpoint, Dataset data,
                        FeatureExtractor<float> phi = FeatureExtractor<float>::random_default());

  const TrainConfig& config() const { return config_; }
  const Dataset& data() const { return data_; }
  const Generator<float>& generator() const { return gen_; }
  const Discriminator<float>& discriminator() const { return disc_; }
  Generator<float>& generator() { return gen_; }
  Discriminator<float>& discriminator() { return disc_; }
  const HistoryBuffer& buffer() const { return buffer_; }
  const FeatureExtractor<float>& phi() const { return phi_; }

  int stage() const { return gen_.stage(); }
  std::size_t stage_index() const { return stage_index_; }
  std::int64_t step_in_stage() const { return step_in_stage_; }
  std::int64_t global_step() const { return global_step_; }
  int growth_events() const { return growth_events_; }
  bool finished() const;

  // One update of D followed by one of G on an explicit batch at the
  // current stage. real: B x 3 x S x S. Masks and A_obs are drawn here.
  StepMetrics training_step(const Tensor<float>& real, std::span<const AttributeVector> attrs);

  // Grows both networks if the previous stage is complete, draws a batch,
  // runs training_step at the scheduled fade alpha and advances the
  // schedule.
  StepMetrics step();

  struct RunOptions {
    std::filesystem::path out_dir;       // checkpoints; empty disables
    std::filesystem::path metrics_path;  // JSON lines; empty disables
    std::int64_t max_steps = -1;         // stop early after this many steps
    std::function<void(const StepMetrics&)> on_step;
  };
  void train(const RunOptions& options);

  Container checkpoint() const;
  void save(const std::filesystem::path& path) const;

  static std::string checkpoint_name(std::int64_t step);

 private:
  void schedule_alpha();
  void grow();
  void maybe_checkpoint(const std::filesystem::path& out_dir, bool boundary) const;

  TrainConfig config_;
  Dataset data_;
  FeatureExtractor<float> phi_;
  Rng rng_;
  Generator<float> gen_;
  Discriminator<float> disc_;
  Adam adam_g_;
  Adam adam_d_;
  HistoryBuffer buffer_;
  std::size_t stage_index_ = 0;
  std::int64_t step_in_stage_ = 0;
  std::int64_t global_step_ = 0;
  int growth_events_ = 0;
};

// Writes every parameter of `params` (names carry their own prefixes) and
// reads them back, checking that the stored set matches the expected shapes.
void export_params(const ParamStore<float>& params, std::vector<NamedArray>& arrays);
void import_params(ParamStore<float>& params, const Container& c, const std::string& prefix);

}  // namespace progfill
