#include <gtest/gtest.h>

#include <httplib.h>

#include <filesystem>
#include <fstream>
#include <thread>

#include "progfill/inference.hpp"
#include "progfill/png_io.hpp"
#include "progfill/service.hpp"
#include "progfill/trainer.hpp"
#include "support/synthetic.hpp"

using namespace progfill;
using namespace progfill::testing;
namespace fs = std::filesystem;

namespace {

// A short conditional run at stages 4 -> 8 saved once; shared by the tests.
struct Fixture {
  fs::path dir;
  fs::path checkpoint;
  Image probe_image;
  MaskImage probe_mask;
  Image trainer_output;

  Fixture() {
    dir = fs::temp_directory_path() / ("progfill_infer_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    TrainConfig cfg;
    cfg.stages = {4, 8};
    cfg.steps_fade = 2;
    cfg.steps_stable = 2;
    cfg.batch_sizes = {2};
    cfg.net.max_resolution = 8;
    cfg.net.base_channels = 4;
    cfg.net.max_channels = 8;
    Trainer t(cfg, attribute_dataset(4, 8));
    t.train({});
    checkpoint = dir / "model.ckpt";
    t.save(checkpoint);
    probe_image = t.data().records[1].image;
    probe_mask = center_mask(8, 8);
    trainer_output = generator_forward(t.generator(), apply_mask(probe_image, probe_mask), probe_mask,
                                       AttributeVector({1, 0}));
  }
  ~Fixture() { fs::remove_all(dir); }
};

const Fixture& fixture() {
  static Fixture f;
  return f;
}

std::string as_string(const std::vector<std::uint8_t>& b) { return {b.begin(), b.end()}; }

httplib::MultipartFormDataItems completion_form(const Image& image, const MaskImage& mask, const std::string& attrs) {
  httplib::MultipartFormDataItems items{
      {"image", as_string(png::encode_image(image)), "image.png", "image/png"},
      {"mask", as_string(png::encode_mask(mask)), "mask.png", "image/png"},
  };
  if (!attrs.empty()) items.push_back({"attributes", attrs, "", "application/json"});
  return items;
}

std::string error_code(const httplib::Result& r) { return nlohmann::json::parse(r->body).at("code").get<std::string>(); }

}  // namespace

TEST(Model, LoadRoundTripIsBitExact) {
  const auto& f = fixture();
  Model m = load_model(f.checkpoint);
  EXPECT_EQ(m.stage(), 8);
  EXPECT_EQ(m.attribute_names, (std::vector<std::string>{"Bright", "Rightward"}));
  EXPECT_EQ(m.step, 8);
  auto out = generator_forward(m.generator, apply_mask(f.probe_image, f.probe_mask), f.probe_mask, AttributeVector({1, 0}));
  EXPECT_TRUE(std::ranges::equal(out.data(), f.trainer_output.data()));
}

TEST(Model, TruncatedFileIsRejected) {
  const auto& f = fixture();
  std::ifstream in(f.checkpoint, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), {});
  const auto cut = f.dir / "cut.ckpt";
  std::ofstream(cut, std::ios::binary) << bytes.substr(0, bytes.size() / 2);
  EXPECT_THROW(load_model(cut), CheckpointError);
  EXPECT_THROW(load_model(f.dir / "absent.ckpt"), CheckpointError);
}

TEST(Engine, CompletionContract) {
  const auto& f = fixture();
  Model m = load_model(f.checkpoint);
  CompletionEngine engine(m);
  CompletionRequest req{apply_mask(f.probe_image, f.probe_mask), f.probe_mask, {{"Bright", 1}}, 0};
  auto a = engine.complete(req);
  auto b = engine.complete(req);
  EXPECT_EQ(engine.forward_count(), 2u);
  EXPECT_TRUE(std::ranges::equal(a.image.data(), b.image.data()));
  EXPECT_TRUE(std::ranges::equal(a.image.data(), f.trainer_output.data()));
  EXPECT_EQ(a.attributes, AttributeVector({1, 0}));
  for (float v : a.image.data()) EXPECT_TRUE(v >= -1.0f && v <= 1.0f);

  // All-zero mask: the output is still the network's, not a copy of the input.
  CompletionRequest open{f.probe_image, MaskImage(8, 8), {}, 0};
  auto o = engine.complete(open);
  EXPECT_FALSE(std::ranges::equal(o.image.data(), f.probe_image.data()));

  // Smaller input is upsampled, output follows the input size by default.
  CompletionRequest small{downsample_image(f.probe_image, 4), center_mask(4, 4), {}, 0};
  EXPECT_EQ(engine.complete(small).image.height(), 4);
  req.output_resolution = 2;
  EXPECT_EQ(engine.complete(req).image.height(), 2);
  EXPECT_EQ(engine.forward_count(), 5u);

  CompletionRequest big{Image(3, 16, 16), MaskImage(16, 16), {}, 0};
  EXPECT_THROW(engine.complete(big), OversizedInput);
  req.output_resolution = 3;
  EXPECT_THROW(engine.complete(req), InvalidInput);
  req.output_resolution = 16;
  EXPECT_THROW(engine.complete(req), InvalidInput);
  req.output_resolution = 0;
  req.attributes = {{"Hat", 1}};
  EXPECT_THROW(engine.complete(req), InvalidInput);
  req.attributes = {{"Bright", 2}};
  EXPECT_THROW(engine.complete(req), InvalidInput);
  CompletionRequest mismatch{f.probe_image, MaskImage(4, 4), {}, 0};
  EXPECT_THROW(engine.complete(mismatch), InvalidInput);
  EXPECT_EQ(engine.forward_count(), 5u);
}

TEST(Engine, LatencyReportFormat) {
  const auto& f = fixture();
  Model m = load_model(f.checkpoint);
  CompletionEngine engine(m);
  auto r = measure_latency(engine, 5);
  EXPECT_EQ(r.runs, 5);
  EXPECT_EQ(r.resolution, 8);
  EXPECT_EQ(engine.forward_count(), 5u);
  EXPECT_GT(r.compute_mean, 0.0);
  EXPECT_GE(r.compute_stddev, 0.0);
  const auto text = r.format();
  EXPECT_NE(text.find("The mean completion time of one image is"), std::string::npos);
  EXPECT_NE(text.find("seconds with a standard deviation of"), std::string::npos);
}

TEST(Service, EndpointsAndErrors) {
  const auto& f = fixture();
  Model m = load_model(f.checkpoint);
  ServiceOptions opt;
  opt.max_payload_bytes = 64 * 1024;
  CompletionService svc(m, opt);
  const int port = svc.start("127.0.0.1", 0);
  httplib::Client cli("127.0.0.1", port);

  auto model = cli.Get("/model");
  ASSERT_TRUE(model);
  EXPECT_EQ(model->status, 200);
  auto mj = nlohmann::json::parse(model->body);
  EXPECT_EQ(mj.at("stage"), 8);
  EXPECT_EQ(mj.at("attributes"), nlohmann::json({"Bright", "Rightward"}));

  auto ok = cli.Post("/complete", completion_form(apply_mask(f.probe_image, f.probe_mask), f.probe_mask,
                                                  R"({"Bright": 1})"));
  ASSERT_TRUE(ok);
  ASSERT_EQ(ok->status, 200) << ok->body;
  EXPECT_EQ(ok->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(nlohmann::json::parse(ok->get_header_value("X-Attributes")), nlohmann::json({{"Bright", 1}, {"Rightward", 0}}));
  EXPECT_EQ(ok->get_header_value("X-Model-Stage"), "8");
  // Same answer as the engine on the PNG-quantized inputs.
  CompletionEngine direct(m);
  const Image sent = png::decode_image(png::encode_image(apply_mask(f.probe_image, f.probe_mask)));
  EXPECT_EQ(ok->body, as_string(png::encode_image(direct.complete({sent, f.probe_mask, {{"Bright", 1}}, 0}).image)));

  auto unknown = cli.Post("/complete", completion_form(f.probe_image, f.probe_mask, R"({"Hat": 1})"));
  EXPECT_EQ(unknown->status, 400);
  EXPECT_EQ(error_code(unknown), "bad_attributes");
  auto bad_json = cli.Post("/complete", completion_form(f.probe_image, f.probe_mask, "{nope"));
  EXPECT_EQ(bad_json->status, 400);
  auto not_multipart = cli.Post("/complete", "hello", "text/plain");
  EXPECT_EQ(not_multipart->status, 400);
  EXPECT_EQ(error_code(not_multipart), "malformed_multipart");
  httplib::MultipartFormDataItems no_mask{{"image", as_string(png::encode_image(f.probe_image)), "i.png", "image/png"}};
  auto missing = cli.Post("/complete", no_mask);
  EXPECT_EQ(missing->status, 400);
  EXPECT_EQ(error_code(missing), "missing_mask");
  httplib::MultipartFormDataItems garbage{{"image", "not a png", "i.png", "image/png"},
                                          {"mask", as_string(png::encode_mask(f.probe_mask)), "m.png", "image/png"}};
  auto bad_png = cli.Post("/complete", garbage);
  EXPECT_EQ(bad_png->status, 400);
  EXPECT_EQ(error_code(bad_png), "bad_image");

  auto too_big = cli.Post("/complete", completion_form(Image(3, 16, 16), MaskImage(16, 16), ""));
  EXPECT_EQ(too_big->status, 413);
  EXPECT_EQ(error_code(too_big), "input_too_large");
  Rng rng(1);
  Image noise(3, 256, 256);
  for (auto& v : noise.data()) v = static_cast<float>(rng.uniform(-1, 1));
  auto payload = cli.Post("/complete", completion_form(noise, MaskImage(256, 256), ""));
  ASSERT_TRUE(payload);
  EXPECT_EQ(payload->status, 413);
  EXPECT_EQ(error_code(payload), "payload_too_large");

  auto missing_route = cli.Get("/nowhere");
  EXPECT_EQ(missing_route->status, 404);
  EXPECT_NO_THROW(nlohmann::json::parse(missing_route->body).at("code"));

  auto health = nlohmann::json::parse(cli.Get("/health")->body);
  EXPECT_EQ(health.at("status"), "ok");
  EXPECT_EQ(health.at("forwards"), 1);
  svc.stop();
}

TEST(Service, ConcurrentIdenticalRequestsArePure) {
  const auto& f = fixture();
  Model m = load_model(f.checkpoint);
  const auto before = m.generator.params().checksum();
  CompletionService svc(m);
  const int port = svc.start("127.0.0.1", 0);
  const auto form = completion_form(apply_mask(f.probe_image, f.probe_mask), f.probe_mask, R"({"Rightward": 1})");
  constexpr int kClients = 16;
  std::vector<std::string> bodies(kClients);
  std::vector<int> status(kClients);
  std::vector<std::string> errors(kClients);
  std::vector<std::thread> threads;
  for (int i = 0; i < kClients; ++i)
    threads.emplace_back([&, i] {
      httplib::Client cli("127.0.0.1", port);
      auto r = cli.Post("/complete", form);
      status[i] = r ? r->status : -1;
      if (r) bodies[i] = r->body;
      else errors[i] = httplib::to_string(r.error());
    });
  for (auto& t : threads) t.join();
  for (int i = 0; i < kClients; ++i) {
    EXPECT_EQ(status[i], 200) << errors[i];
    EXPECT_EQ(bodies[i], bodies[0]);
  }
  EXPECT_EQ(svc.requests(), static_cast<std::uint64_t>(kClients));
  EXPECT_EQ(svc.engine().forward_count(), static_cast<std::uint64_t>(kClients));
  EXPECT_EQ(m.generator.params().checksum(), before);
  svc.stop();
}
