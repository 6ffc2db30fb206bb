#include "progfill/inference.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>

#include "progfill/checkpoint.hpp"
#include "progfill/data.hpp"
#include "progfill/masking.hpp"
#include "progfill/ops.hpp"
#include "progfill/png_io.hpp"
#include "progfill/trainer.hpp"

namespace progfill {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::pair<double, double> mean_stddev(const std::vector<double>& v) {
  double mean = 0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
  return {mean, sd};
}

MaskImage upsample_mask(const MaskImage& mask, int size) {
  const Tensor<float> up = ops::bilinear(mask.to_tensor(), size, size);
  MaskImage out(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) out.set(y, x, up.at(0, 0, y, x) >= 0.5f);
  return out;
}

}  // namespace

Model load_model(const std::filesystem::path& path) {
  const Container c = read_container(path);
  try {
    if (c.meta.value("kind", "") != "progfill-checkpoint")
      throw CheckpointError(path.string() + ": not a model checkpoint");
    const GeneratorConfig cfg = generator_config_from_json(c.meta.at("generator"));
    const int stage = c.meta.at("stage").get<int>();
    cfg.check_stage(stage);
    Model m{Generator<float>::zeros(cfg, stage), c.meta.at("attributes").get<std::vector<std::string>>(),
            c.meta.value("step", std::int64_t{0})};
    if (static_cast<int>(m.attribute_names.size()) != cfg.n_attributes)
      throw CheckpointError(path.string() + ": attribute list does not match the generator");
    import_params(m.generator.params(), c, "g.");
    m.generator.set_fade_alpha(c.meta.at("fade_alpha").get<double>());
    m.generator.params().set_requires_grad(false);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path.string() + ": bad checkpoint metadata: " + e.what());
  } catch (const InvalidInput& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
}

AttributeVector CompletionEngine::resolve_attributes(const std::map<std::string, int>& attributes) const {
  return attributes_from_map(model_.attribute_names, attributes, true);
}

Completion CompletionEngine::complete(const CompletionRequest& req) const {
  const int stage = model_.stage();
  const Image& img = req.observed;
  if (img.empty() || img.channels() != 3) throw InvalidInput("observed image must have 3 channels");
  if (img.height() != img.width()) throw InvalidInput("observed image must be square");
  if (req.mask.height() != img.height() || req.mask.width() != img.width())
    throw InvalidInput("mask is " + std::to_string(req.mask.width()) + "x" + std::to_string(req.mask.height()) +
                       " but the image is " + std::to_string(img.width()) + "x" + std::to_string(img.height()));
  const int side = img.height();
  if (side > stage)
    throw OversizedInput("input side " + std::to_string(side) + " exceeds model stage " + std::to_string(stage));
  if (!is_power_of_two(side) || side < 4) throw InvalidInput("input side must be a power of two of at least 4");
  const int out_res = req.output_resolution == 0 ? side : req.output_resolution;
  if (out_res > stage)
    throw OversizedInput("output resolution " + std::to_string(out_res) + " exceeds model stage " + std::to_string(stage));
  if (out_res < 1 || stage % out_res != 0) throw InvalidInput("output resolution must divide the model stage");

  Completion out;
  out.attributes = resolve_attributes(req.attributes);

  Image observed = img;
  MaskImage mask = req.mask;
  if (side < stage) {
    observed = Image::from_tensor(ops::bilinear(img.to_tensor(), stage, stage));
    mask = upsample_mask(req.mask, stage);
  }
  observed = apply_mask(observed, mask);
  Image result = generator_forward(model_.generator, observed, mask, out.attributes);
  forwards_.fetch_add(1);
  out.image = out_res == stage ? std::move(result) : downsample_image(result, out_res);
  return out;
}

std::string LatencyReport::format() const {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "The mean completion time of one image is %.6f seconds with a standard deviation of %.6f seconds "
                "(%d completions at %dx%d, network compute only).\n"
                "PNG codec time per request: mean %.6f seconds, standard deviation %.6f seconds.",
                compute_mean, compute_stddev, runs, resolution, resolution, codec_mean, codec_stddev);
  return buf;
}

nlohmann::json LatencyReport::to_json() const {
  return {{"runs", runs},
          {"resolution", resolution},
          {"compute_mean_s", compute_mean},
          {"compute_stddev_s", compute_stddev},
          {"codec_mean_s", codec_mean},
          {"codec_stddev_s", codec_stddev}};
}

LatencyReport measure_latency(const CompletionEngine& engine, int runs, std::uint64_t seed) {
  if (runs < 1) throw InvalidInput("latency: runs must be positive");
  const int s = engine.model().stage();
  Rng rng(seed);
  std::vector<double> compute;
  std::vector<double> codec;
  std::map<std::string, int> attrs;
  for (const auto& name : engine.model().attribute_names) attrs[name] = rng.integer(0, 1);
  for (int i = 0; i < runs; ++i) {
    Image img(3, s, s);
    for (auto& v : img.data()) v = static_cast<float>(rng.uniform(-1.0, 1.0));
    const auto image_png = png::encode_image(img);
    const auto mask_png = png::encode_mask(sample_mask(rng, s, s));

    auto t0 = Clock::now();
    CompletionRequest req{png::decode_image(image_png), png::decode_mask(mask_png), attrs, 0};
    double c = seconds_since(t0);
    t0 = Clock::now();
    const Completion done = engine.complete(req);
    compute.push_back(seconds_since(t0));
    t0 = Clock::now();
    const auto encoded = png::encode_image(done.image);
    c += seconds_since(t0);
    codec.push_back(c);
    if (encoded.empty()) throw ImageIoError("latency: empty PNG");
  }
  LatencyReport r;
  r.runs = runs;
  r.resolution = s;
  std::tie(r.compute_mean, r.compute_stddev) = mean_stddev(compute);
  std::tie(r.codec_mean, r.codec_stddev) = mean_stddev(codec);
  return r;
}

}  // namespace progfill
