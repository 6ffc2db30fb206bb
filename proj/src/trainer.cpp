#include "progfill/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "progfill/ops.hpp"

namespace progfill {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

TrainConfig prepare(TrainConfig config, const Dataset& data) {
  if (data.empty()) throw InvalidInput("training dataset is empty");
  if (config.unconditional) {
    config.net.n_attributes = 0;
  } else {
    if (data.attribute_names.empty())
      throw InvalidInput("conditional training needs an attribute manifest (or set unconditional)");
    config.net.n_attributes = static_cast<int>(data.attribute_names.size());
  }
  config.validate();
  const int top = config.stages.back();
  if (data.resolution < top || data.resolution % top != 0)
    throw InvalidInput("dataset resolution " + std::to_string(data.resolution) + " cannot feed stage " +
                       std::to_string(top));
  return config;
}

template <typename T>
void scale(Tensor<T>& t, double k) {
  for (auto& v : t.storage()) v = static_cast<T>(v * k);
}

template <typename T>
void add_into(Tensor<T>& dst, const Tensor<T>& src, double k) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += static_cast<T>(k * src[i]);
}

}  // namespace

Tensor<float> boundary_weight_batch(std::span<const MaskImage> masks) {
  if (masks.empty()) throw InvalidInput("boundary_weight_batch: empty batch");
  const int s = masks.front().height();
  Tensor<float> out(static_cast<int>(masks.size()), 1, s, s);
  for (std::size_t n = 0; n < masks.size(); ++n) {
    const auto w = boundary_weights(masks[n]);
    float* dst = out.plane(static_cast<int>(n), 0);
    for (std::size_t i = 0; i < w.data().size(); ++i) dst[i] = static_cast<float>(w.data()[i]);
  }
  return out;
}

template <typename T>
GeneratorObjective<T> generator_objective(const Discriminator<T>& disc, const FeatureExtractor<T>& phi,
                                          const Tensor<T>& real, const Var<T>& syn, const Tensor<T>& masks,
                                          const Tensor<T>& boundary, const Tensor<T>& a_obs, const LossWeights& lw) {
  GeneratorObjective<T> obj;
  auto out = disc.forward(syn);
  auto adv = adversarial_g_loss(out.p_real->value);
  obj.terms.adversarial = adv.value;
  obj.seeds.emplace_back(out.p_real, std::move(adv.grad));
  if (disc.has_attribute_head()) {
    auto attr = attribute_bce(out.a_hat->value, a_obs);
    obj.terms.attribute = attr.value;
    scale(attr.grad, lw.lambda_attr);
    obj.seeds.emplace_back(out.a_hat, std::move(attr.grad));
  }
  Tensor<T> direct(syn->value.shape());
  auto rec = reconstruction_loss(real, syn->value, masks, lw.alpha);
  obj.terms.reconstruction = rec.value;
  add_into(direct, rec.grad, lw.lambda_rec);
  auto feat = feature_loss(phi, real, syn->value);
  obj.terms.feature = feat.value;
  add_into(direct, feat.grad, lw.lambda_feat);
  auto bdy = boundary_loss(real, syn->value, boundary);
  obj.terms.boundary = bdy.value;
  add_into(direct, bdy.grad, lw.lambda_bdy);
  obj.total = total_g_loss(obj.terms, lw);
  obj.seeds.emplace_back(syn, std::move(direct));
  return obj;
}

template <typename T>
DiscriminatorObjective<T> discriminator_objective(const Discriminator<T>& disc, const Tensor<T>& real,
                                                  const Tensor<T>& fake, const Tensor<T>& a_real,
                                                  const LossWeights& lw) {
  DiscriminatorObjective<T> obj;
  auto real_out = disc.forward(constant(real));
  auto fake_out = disc.forward(constant(fake));
  auto adv = adversarial_d_loss(real_out.p_real->value, fake_out.p_real->value);
  obj.adversarial = adv.value;
  obj.seeds.emplace_back(real_out.p_real, std::move(adv.grad_first));
  obj.seeds.emplace_back(fake_out.p_real, std::move(adv.grad_second));
  if (disc.has_attribute_head()) {
    auto attr = attribute_bce(real_out.a_hat->value, a_real);
    obj.attribute = attr.value;
    scale(attr.grad, lw.lambda_attr);
    obj.seeds.emplace_back(real_out.a_hat, std::move(attr.grad));
  }
  if (!std::isfinite(obj.adversarial)) throw NonFiniteLoss("d_adversarial");
  if (!std::isfinite(obj.attribute)) throw NonFiniteLoss("d_attribute");
  obj.total = obj.adversarial + lw.lambda_attr * obj.attribute;
  return obj;
}

template GeneratorObjective<float> generator_objective<float>(const Discriminator<float>&, const FeatureExtractor<float>&,
                                                              const Tensor<float>&, const Var<float>&, const Tensor<float>&,
                                                              const Tensor<float>&, const Tensor<float>&, const LossWeights&);
template GeneratorObjective<double> generator_objective<double>(const Discriminator<double>&,
                                                                const FeatureExtractor<double>&, const Tensor<double>&,
                                                                const Var<double>&, const Tensor<double>&,
                                                                const Tensor<double>&, const Tensor<double>&,
                                                                const LossWeights&);
template DiscriminatorObjective<float> discriminator_objective<float>(const Discriminator<float>&, const Tensor<float>&,
                                                                      const Tensor<float>&, const Tensor<float>&,
                                                                      const LossWeights&);
template DiscriminatorObjective<double> discriminator_objective<double>(const Discriminator<double>&,
                                                                        const Tensor<double>&, const Tensor<double>&,
                                                                        const Tensor<double>&, const LossWeights&);

double fade_alpha(std::int64_t step_in_stage, std::int64_t steps_fade) {
  if (step_in_stage < 0 || steps_fade < 0) throw InvalidInput("fade_alpha: negative count");
  if (steps_fade == 0) return 1.0;
  return std::min(1.0, static_cast<double>(step_in_stage) / static_cast<double>(steps_fade));
}

void TrainConfig::validate() const {
  if (stages.empty() || stages.front() != 4) throw InvalidInput("stages must start at 4");
  for (std::size_t i = 1; i < stages.size(); ++i)
    if (stages[i] != 2 * stages[i - 1]) throw InvalidInput("stages must double from one to the next");
  net.validate();
  if (stages.back() > net.max_resolution)
    throw InvalidInput("last stage " + std::to_string(stages.back()) + " exceeds max_resolution " +
                       std::to_string(net.max_resolution));
  if (steps_fade < 0 || steps_stable < 0 || stage_length() <= 0) throw InvalidInput("stage step counts must be positive");
  if (batch_sizes.empty()) throw InvalidInput("batch_sizes is empty");
  for (int b : batch_sizes)
    if (b < 1) throw InvalidInput("batch sizes must be at least 1");
  if (!(learning_rate > 0)) throw InvalidInput("learning rate must be positive");
  if (!(adam_beta1 >= 0 && adam_beta1 < 1 && adam_beta2 >= 0 && adam_beta2 < 1)) throw InvalidInput("Adam betas must be in [0, 1)");
  if (checkpoint_every < 0) throw InvalidInput("checkpoint_every must be nonnegative");
  if (!(center_mask_rate >= 0 && center_mask_rate <= 1)) throw InvalidInput("center_mask_rate must be in [0, 1]");
  if (history_capacity == 0) throw InvalidInput("history capacity must be positive");
  weights.validate();
  mask_spec.validate();
}

int TrainConfig::batch_size(std::size_t stage_index) const {
  return batch_sizes[std::min(stage_index, batch_sizes.size() - 1)];
}

json to_json(const GeneratorConfig& c) {
  return {{"max_resolution", c.max_resolution}, {"base_channels", c.base_channels},
          {"max_channels", c.max_channels},     {"n_attributes", c.n_attributes},
          {"skip_variant", to_string(c.skip_variant)}, {"leaky_slope", c.leaky_slope}};
}

GeneratorConfig generator_config_from_json(const json& j) {
  GeneratorConfig c;
  c.max_resolution = j.at("max_resolution").get<int>();
  c.base_channels = j.at("base_channels").get<int>();
  c.max_channels = j.at("max_channels").get<int>();
  c.n_attributes = j.at("n_attributes").get<int>();
  c.skip_variant = skip_variant_from_string(j.at("skip_variant").get<std::string>());
  c.leaky_slope = j.at("leaky_slope").get<double>();
  c.validate();
  return c;
}

json to_json(const TrainConfig& c) {
  return {{"stages", c.stages},
          {"steps_fade", c.steps_fade},
          {"steps_stable", c.steps_stable},
          {"batch_sizes", c.batch_sizes},
          {"learning_rate", c.learning_rate},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_eps", c.adam_eps},
          {"weights",
           {{"alpha", c.weights.alpha},
            {"lambda_attr", c.weights.lambda_attr},
            {"lambda_rec", c.weights.lambda_rec},
            {"lambda_feat", c.weights.lambda_feat},
            {"lambda_bdy", c.weights.lambda_bdy}}},
          {"unconditional", c.unconditional},
          {"seed", c.seed},
          {"checkpoint_every", c.checkpoint_every},
          {"center_mask_rate", c.center_mask_rate},
          {"mask_spec",
           {{"min_coverage", c.mask_spec.min_coverage},
            {"max_coverage", c.mask_spec.max_coverage},
            {"noise_res", c.mask_spec.noise_res},
            {"threshold", c.mask_spec.threshold},
            {"max_resamples", c.mask_spec.max_resamples},
            {"min_rect_fraction", c.mask_spec.min_rect_fraction},
            {"max_rect_fraction", c.mask_spec.max_rect_fraction}}},
          {"augment", c.augment},
          {"history_capacity", c.history_capacity},
          {"net", to_json(c.net)}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.stages = j.at("stages").get<std::vector<int>>();
  c.steps_fade = j.at("steps_fade").get<std::int64_t>();
  c.steps_stable = j.at("steps_stable").get<std::int64_t>();
  c.batch_sizes = j.at("batch_sizes").get<std::vector<int>>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.adam_beta1 = j.at("adam_beta1").get<double>();
  c.adam_beta2 = j.at("adam_beta2").get<double>();
  c.adam_eps = j.at("adam_eps").get<double>();
  const auto& w = j.at("weights");
  c.weights.alpha = w.at("alpha").get<double>();
  c.weights.lambda_attr = w.at("lambda_attr").get<double>();
  c.weights.lambda_rec = w.at("lambda_rec").get<double>();
  c.weights.lambda_feat = w.at("lambda_feat").get<double>();
  c.weights.lambda_bdy = w.at("lambda_bdy").get<double>();
  c.unconditional = j.at("unconditional").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.checkpoint_every = j.at("checkpoint_every").get<std::int64_t>();
  c.center_mask_rate = j.at("center_mask_rate").get<double>();
  const auto& m = j.at("mask_spec");
  c.mask_spec.min_coverage = m.at("min_coverage").get<double>();
  c.mask_spec.max_coverage = m.at("max_coverage").get<double>();
  c.mask_spec.noise_res = m.at("noise_res").get<int>();
  c.mask_spec.threshold = m.at("threshold").get<double>();
  c.mask_spec.max_resamples = m.at("max_resamples").get<int>();
  c.mask_spec.min_rect_fraction = m.at("min_rect_fraction").get<double>();
  c.mask_spec.max_rect_fraction = m.at("max_rect_fraction").get<double>();
  c.augment = j.at("augment").get<bool>();
  c.history_capacity = j.at("history_capacity").get<std::size_t>();
  c.net = generator_config_from_json(j.at("net"));
  return c;
}

json StepMetrics::to_json() const {
  return {{"step", step},
          {"stage", stage},
          {"fade_alpha", fade_alpha},
          {"d_adversarial", d_adversarial},
          {"d_attribute", d_attribute},
          {"d_total", d_total},
          {"g_adversarial", g.adversarial},
          {"g_attribute", g.attribute},
          {"reconstruction", g.reconstruction},
          {"feature", g.feature},
          {"boundary", g.boundary},
          {"g_total", g_total}};
}

void export_params(const ParamStore<float>& params, std::vector<NamedArray>& arrays) {
  for (const auto& [name, var] : params.entries()) arrays.push_back({name, var->value});
}

void import_params(ParamStore<float>& params, const Container& c, const std::string& prefix) {
  std::size_t stored = 0;
  for (const auto& a : c.arrays)
    if (a.name.rfind(prefix, 0) == 0) ++stored;
  if (stored != params.size())
    throw CheckpointError("checkpoint holds " + std::to_string(stored) + " '" + prefix + "' arrays, expected " +
                          std::to_string(params.size()));
  for (const auto& [name, var] : params.entries()) {
    const NamedArray* a = c.find(name);
    if (!a) throw CheckpointError("checkpoint is missing parameter " + name);
    if (!(a->value.shape() == var->value.shape()))
      throw CheckpointError("parameter " + name + " has shape " + a->value.shape().str() + ", expected " +
                            var->value.shape().str());
    var->value = a->value;
  }
}

Trainer::Trainer(TrainConfig config, Dataset data, FeatureExtractor<float> phi)
    : config_(prepare(std::move(config), data)),
      data_(std::move(data)),
      phi_(std::move(phi)),
      rng_(config_.seed),
      gen_(config_.net, 4, rng_),
      disc_(config_.net, 4, rng_),
      adam_g_({config_.learning_rate, config_.adam_beta1, config_.adam_beta2, config_.adam_eps}),
      adam_d_({config_.learning_rate, config_.adam_beta1, config_.adam_beta2, config_.adam_eps}),
      buffer_(config_.history_capacity) {
  for (int s : config_.stages) phi_.check_resolution(s);
  schedule_alpha();
}

bool Trainer::finished() const {
  return stage_index_ + 1 >= config_.stages.size() && step_in_stage_ >= config_.stage_length();
}

void Trainer::schedule_alpha() {
  const double a = stage_index_ == 0 ? 1.0 : fade_alpha(step_in_stage_, config_.steps_fade);
  gen_.set_fade_alpha(a);
  disc_.set_fade_alpha(a);
}

void Trainer::grow() {
  gen_.grow(rng_);
  disc_.grow(rng_);
  // Stored samples are at the old resolution.
  buffer_.clear();
  ++stage_index_;
  step_in_stage_ = 0;
  ++growth_events_;
  schedule_alpha();
}

StepMetrics Trainer::training_step(const Tensor<float>& real, std::span<const AttributeVector> attrs) {
  const int s = gen_.stage();
  const int batch = real.n();
  if (real.c() != 3 || real.h() != s || real.w() != s)
    throw InvalidInput("training batch " + real.shape().str() + " does not match stage " + std::to_string(s));
  if (static_cast<int>(attrs.size()) != batch) throw InvalidInput("attribute batch size differs from image batch");
  const bool conditional = config_.net.n_attributes > 0;
  const LossWeights& lw = config_.weights;

  // (1) masks and observed attributes
  std::vector<MaskImage> masks;
  std::vector<AttributeVector> a_obs;
  for (int n = 0; n < batch; ++n) {
    MaskSpec spec = config_.mask_spec;
    if (rng_.bernoulli(config_.center_mask_rate)) spec.kind = MaskKind::center;
    const int native = data_.resolution;
    masks.push_back(downsample_mask(sample_mask(rng_, native, native, spec), s));
    a_obs.push_back(conditional ? sample_fake_attributes(rng_, attrs[static_cast<std::size_t>(n)]) : AttributeVector());
  }
  const Tensor<float> mask_t = stack_masks(masks);
  const Tensor<float> a_real_t = attribute_targets<float>(attrs);
  const Tensor<float> a_obs_t = attribute_targets<float>(a_obs);

  // (2) observed images, (3) completion
  const Tensor<float> observed = apply_mask(real, mask_t);
  gen_.params().set_requires_grad(true);
  Var<float> syn = gen_.forward(constant(generator_input(observed, mask_t)), a_obs_t);

  StepMetrics m;
  m.step = global_step_;
  m.stage = s;
  m.fade_alpha = gen_.fade_alpha();

  // (4) discriminator update on reals and buffer-mixed fakes
  {
    disc_.params().zero_grad();
    disc_.params().set_requires_grad(true);
    MixResult mixed = buffer_mix(buffer_, syn->value, rng_);
    auto obj = discriminator_objective(disc_, real, mixed.batch, a_real_t, lw);
    m.d_adversarial = obj.adversarial;
    m.d_attribute = obj.attribute;
    m.d_total = obj.total;
    backward(obj.seeds);
    adam_d_.step(disc_.params());
    disc_.params().zero_grad();
  }

  // (5) generator update through the frozen discriminator
  {
    gen_.params().zero_grad();
    disc_.params().set_requires_grad(false);
    auto obj = generator_objective(disc_, phi_, real, syn, mask_t, boundary_weight_batch(masks), a_obs_t, lw);
    m.g = obj.terms;
    m.g_total = obj.total;
    backward(obj.seeds);
    adam_g_.step(gen_.params());
    gen_.params().zero_grad();
    disc_.params().set_requires_grad(true);
  }
  return m;
}

StepMetrics Trainer::step() {
  if (finished()) throw InvalidInput("training schedule already complete");
  if (step_in_stage_ >= config_.stage_length()) grow();
  schedule_alpha();
  const int s = gen_.stage();
  const int batch = config_.batch_size(stage_index_);
  std::vector<Image> images;
  std::vector<AttributeVector> attrs;
  for (int n = 0; n < batch; ++n) {
    const auto& rec = data_.records[rng_.index(data_.size())];
    Image img = rec.image;
    if (config_.augment) {
      MaskImage unused(img.height(), img.width());
      img = augment(rng_, img, unused).first;
    }
    images.push_back(img.height() == s ? std::move(img) : downsample_image(img, s));
    attrs.push_back(config_.unconditional ? AttributeVector() : rec.attributes);
  }
  StepMetrics m = training_step(stack_images(images), attrs);
  ++step_in_stage_;
  ++global_step_;
  return m;
}

std::string Trainer::checkpoint_name(std::int64_t step) {
  std::ostringstream os;
  os << "step_" << std::setw(8) << std::setfill('0') << step << ".ckpt";
  return os.str();
}

void Trainer::maybe_checkpoint(const fs::path& out_dir, bool boundary) const {
  if (out_dir.empty()) return;
  const bool periodic = config_.checkpoint_every > 0 && global_step_ % config_.checkpoint_every == 0;
  if (!periodic && !boundary) return;
  const Container c = checkpoint();
  write_container(out_dir / checkpoint_name(global_step_), c);
  write_container(out_dir / "latest.ckpt", c);
}

void Trainer::train(const RunOptions& options) {
  if (!options.out_dir.empty()) fs::create_directories(options.out_dir);
  std::ofstream metrics;
  if (!options.metrics_path.empty()) {
    metrics.open(options.metrics_path, std::ios::app);
    if (!metrics) throw InvalidInput("cannot open metrics log " + options.metrics_path.string());
  }
  std::int64_t done = 0;
  while (!finished() && (options.max_steps < 0 || done < options.max_steps)) {
    const StepMetrics m = step();
    ++done;
    if (metrics) metrics << m.to_json().dump() << '\n' << std::flush;
    if (options.on_step) options.on_step(m);
    maybe_checkpoint(options.out_dir, step_in_stage_ >= config_.stage_length());
  }
}

Container Trainer::checkpoint() const {
  Container c;
  export_params(gen_.params(), c.arrays);
  export_params(disc_.params(), c.arrays);
  json adam_g = adam_g_.export_state("opt.g/", c.arrays);
  json adam_d = adam_d_.export_state("opt.d/", c.arrays);
  for (std::size_t i = 0; i < buffer_.size(); ++i) c.arrays.push_back({"buffer/" + std::to_string(i), buffer_.items()[i]});
  c.meta = {{"kind", "progfill-checkpoint"},
            {"stage", gen_.stage()},
            {"fade_alpha", gen_.fade_alpha()},
            {"step", global_step_},
            {"stage_index", stage_index_},
            {"step_in_stage", step_in_stage_},
            {"growth_events", growth_events_},
            {"attributes", config_.unconditional ? std::vector<std::string>{} : data_.attribute_names},
            {"generator", to_json(config_.net)},
            {"train", to_json(config_)},
            {"rng", rng_.serialize()},
            {"adam_g", adam_g},
            {"adam_d", adam_d},
            {"buffer_size", buffer_.size()},
            {"feature_extractor", phi_.layer_tag()}};
  return c;
}

void Trainer::save(const fs::path& path) const { write_container(path, checkpoint()); }

Trainer Trainer::resume(const fs::path& path, Dataset data, FeatureExtractor<float> phi) {
  const Container c = read_container(path);
  try {
    if (c.meta.value("kind", "") != "progfill-checkpoint") throw CheckpointError(path.string() + ": not a training checkpoint");
    TrainConfig cfg = train_config_from_json(c.meta.at("train"));
    if (!cfg.unconditional && c.meta.at("attributes").get<std::vector<std::string>>() != data.attribute_names)
      throw CheckpointError(path.string() + ": dataset attribute order differs from the checkpoint");
    Trainer t(cfg, std::move(data), std::move(phi));
    const int stage = c.meta.at("stage").get<int>();
    const double alpha = c.meta.at("fade_alpha").get<double>();
    t.gen_ = Generator<float>::zeros(t.config_.net, stage);
    t.disc_ = Discriminator<float>::zeros(t.config_.net, stage);
    import_params(t.gen_.params(), c, "g.");
    import_params(t.disc_.params(), c, "d.");
    t.gen_.set_fade_alpha(alpha);
    t.disc_.set_fade_alpha(alpha);
    t.adam_g_.import_state("opt.g/", c, c.meta.at("adam_g"));
    t.adam_d_.import_state("opt.d/", c, c.meta.at("adam_d"));
    try {
      t.rng_.deserialize(c.meta.at("rng").get<std::string>());
    } catch (const std::runtime_error& e) {
      throw CheckpointError(path.string() + ": " + e.what());
    }
    t.stage_index_ = c.meta.at("stage_index").get<std::size_t>();
    t.step_in_stage_ = c.meta.at("step_in_stage").get<std::int64_t>();
    t.global_step_ = c.meta.at("step").get<std::int64_t>();
    t.growth_events_ = c.meta.at("growth_events").get<int>();
    if (t.stage_index_ >= t.config_.stages.size() || t.config_.stages[t.stage_index_] != stage)
      throw CheckpointError(path.string() + ": stage index inconsistent with stage");
    const auto n_buffer = c.meta.at("buffer_size").get<std::size_t>();
    for (std::size_t i = 0; i < n_buffer; ++i) {
      const NamedArray* a = c.find("buffer/" + std::to_string(i));
      if (!a) throw CheckpointError(path.string() + ": history buffer entry missing");
      t.buffer_.push(a->value);
    }
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path.string() + ": bad checkpoint metadata: " + e.what());
  } catch (const InvalidInput& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

}  // namespace progfill
