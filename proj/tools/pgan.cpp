// pgan: command-line front end for mask generation, training, completion,
// serving and latency measurement.

#include <csignal>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "progfill/data.hpp"
#include "progfill/inference.hpp"
#include "progfill/masking.hpp"
#include "progfill/png_io.hpp"
#include "progfill/service.hpp"
#include "progfill/simd/kernels.hpp"
#include "progfill/trainer.hpp"

namespace fs = std::filesystem;
using namespace progfill;

namespace {

std::map<std::string, int> parse_attrs(const std::string& text) {
  std::map<std::string, int> out;
  if (text.empty()) return out;
  const auto j = nlohmann::json::parse(text);
  if (!j.is_object()) throw InvalidInput("--attrs must be a JSON object");
  for (const auto& [k, v] : j.items()) out[k] = v.get<int>();
  return out;
}

CompletionService* g_service = nullptr;
void on_signal(int) {
  if (g_service) g_service->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Progressive attribute-controlled image completion"};
  app.require_subcommand(1);

  // maskgen
  auto* maskgen = app.add_subcommand("maskgen", "Write a random or center training mask as PNG");
  std::string mask_kind = "random";
  int mask_res = 64;
  std::uint64_t mask_seed = 0;
  std::string mask_out;
  maskgen->add_option("--kind", mask_kind, "random or center")->check(CLI::IsMember({"random", "center"}));
  maskgen->add_option("--res", mask_res, "Side length in pixels");
  maskgen->add_option("--seed", mask_seed);
  maskgen->add_option("--out", mask_out)->required();

  // train
  auto* train = app.add_subcommand("train", "Progressive training from a PNG directory");
  std::string data_dir, manifest, out_dir, metrics_path, resume_path, phi_path;
  int max_res = 32, base_channels = 16, max_channels = 128, batch = 8;
  std::int64_t steps_fade = 4000, steps_stable = 4000, checkpoint_every = 0;
  std::uint64_t seed = 1;
  bool unconditional = false, augment_on = false;
  std::string skip = "residual";
  double test_fraction = 0.1;
  train->add_option("--data", data_dir)->required();
  train->add_option("--attrs", manifest, "JSON-lines attribute manifest");
  train->add_option("--max-res", max_res)->required();
  train->add_option("--out", out_dir, "Checkpoint directory")->required();
  train->add_flag("--unconditional", unconditional);
  train->add_option("--seed", seed);
  train->add_option("--steps-fade", steps_fade);
  train->add_option("--steps-stable", steps_stable);
  train->add_option("--batch", batch);
  train->add_option("--base-channels", base_channels);
  train->add_option("--max-channels", max_channels);
  train->add_option("--skip", skip)->check(CLI::IsMember({"residual", "concat"}));
  train->add_option("--checkpoint-every", checkpoint_every);
  train->add_option("--metrics", metrics_path, "Defaults to OUT/metrics.jsonl");
  train->add_option("--resume", resume_path, "Continue from a checkpoint");
  train->add_option("--phi", phi_path, "Feature extractor weights");
  train->add_option("--test-fraction", test_fraction);
  train->add_flag("--augment", augment_on);

  // complete
  auto* complete = app.add_subcommand("complete", "Complete one masked image");
  std::string model_path, image_path, mask_path, attrs_text, out_path;
  int output_res = 0;
  complete->add_option("--model", model_path)->required();
  complete->add_option("--image", image_path)->required();
  complete->add_option("--mask", mask_path)->required();
  complete->add_option("--attrs", attrs_text, "JSON object, e.g. '{\"Male\":1}'");
  complete->add_option("--out", out_path)->required();
  complete->add_option("--output-res", output_res);

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP completion service");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--model", model_path)->required();
  serve->add_option("--host", host);
  serve->add_option("--port", port);

  // bench
  auto* bench = app.add_subcommand("bench", "Completion latency report");
  int runs = 100;
  bench->add_option("--model", model_path)->required();
  bench->add_option("--runs", runs);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*maskgen) {
      Rng rng(mask_seed);
      MaskSpec spec;
      spec.kind = mask_kind == "center" ? MaskKind::center : MaskKind::random;
      const MaskImage m = sample_mask(rng, mask_res, mask_res, spec);
      png::write_mask(mask_out, m);
      std::cout << "coverage " << m.coverage() << "\n";
    } else if (*train) {
      LoadOptions lo;
      lo.split_seed = seed;
      lo.test_fraction = test_fraction;
      DatasetSplit split = load_dataset(data_dir, unconditional ? fs::path() : fs::path(manifest), lo);
      if (!unconditional && manifest.empty()) throw InvalidInput("--attrs is required unless --unconditional");
      TrainConfig cfg;
      cfg.stages.clear();
      for (int r = 4; r <= max_res; r *= 2) cfg.stages.push_back(r);
      cfg.steps_fade = steps_fade;
      cfg.steps_stable = steps_stable;
      cfg.batch_sizes = {batch};
      cfg.unconditional = unconditional;
      cfg.seed = seed;
      cfg.checkpoint_every = checkpoint_every;
      cfg.augment = augment_on;
      cfg.net.max_resolution = max_res;
      cfg.net.base_channels = base_channels;
      cfg.net.max_channels = max_channels;
      cfg.net.skip_variant = skip_variant_from_string(skip);
      auto phi = phi_path.empty() ? FeatureExtractor<float>::random_default() : FeatureExtractor<float>::load(phi_path);
      Trainer trainer = resume_path.empty() ? Trainer(cfg, std::move(split.train), std::move(phi))
                                            : Trainer::resume(resume_path, std::move(split.train), std::move(phi));
      Trainer::RunOptions ro;
      ro.out_dir = out_dir;
      ro.metrics_path = metrics_path.empty() ? fs::path(out_dir) / "metrics.jsonl" : fs::path(metrics_path);
      fs::create_directories(out_dir);
      ro.on_step = [&](const StepMetrics& m) {
        if (m.step % 100 == 0)
          std::cout << "step " << m.step << " stage " << m.stage << " alpha " << m.fade_alpha << " g " << m.g_total
                    << " d " << m.d_total << std::endl;
      };
      trainer.train(ro);
      std::cout << "finished at step " << trainer.global_step() << ", checkpoint " << (fs::path(out_dir) / "latest.ckpt")
                << "\n";
    } else if (*complete) {
      const Model model = load_model(model_path);
      CompletionEngine engine(model);
      CompletionRequest req{png::read_image(image_path), png::read_mask(mask_path), parse_attrs(attrs_text), output_res};
      const Completion done = engine.complete(req);
      png::write_image(out_path, done.image);
    } else if (*serve) {
      const Model model = load_model(model_path);
      CompletionService service(model);
      g_service = &service;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "serving stage " << model.stage() << " on " << host << ":" << port << std::endl;
      service.run(host, port);
      g_service = nullptr;
    } else if (*bench) {
      const Model model = load_model(model_path);
      CompletionEngine engine(model);
      std::cout << "kernels: " << simd::isa_name(simd::active_isa()) << "\n";
      std::cout << measure_latency(engine, runs).format() << "\n";
    }
  } catch (const IngestionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& o : e.offenders()) std::cerr << "  " << o << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
