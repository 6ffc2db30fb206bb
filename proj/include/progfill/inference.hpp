#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "progfill/generator.hpp"

namespace progfill {

// Image side larger than the model can serve.
class OversizedInput : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

// Frozen generator plus the metadata needed to interpret requests.
struct Model {
  Generator<float> generator;
  std::vector<std::string> attribute_names;
  std::int64_t step = 0;

  int stage() const { return generator.stage(); }
};

// Reads the generator half of a training checkpoint. Discriminator and
// optimizer arrays are ignored. Throws CheckpointError.
Model load_model(const std::filesystem::path& path);

struct CompletionRequest {
  Image observed;
  MaskImage mask;
  std::map<std::string, int> attributes;  // names absent here are 0
  int output_resolution = 0;              // 0: the input's resolution
};

struct Completion {
  Image image;
  AttributeVector attributes;  // the vector fed to the generator
};

// Runs completions against one frozen model. complete() is safe to call
// from many threads at once.
class CompletionEngine {
 public:
  explicit CompletionEngine(const Model& model) : model_(model) {}

  const Model& model() const { return model_; }

  // Checks the request, resamples to the model stage (bilinear up for
  // smaller inputs; larger inputs raise OversizedInput), runs exactly one
  // generator forward and block-averages to the requested output size. The
  // context region is the network's own output.
  Completion complete(const CompletionRequest& request) const;

  AttributeVector resolve_attributes(const std::map<std::string, int>& attributes) const;

  std::uint64_t forward_count() const { return forwards_.load(); }

 private:
  const Model& model_;
  mutable std::atomic<std::uint64_t> forwards_{0};
};

struct LatencyReport {
  int runs = 0;
  int resolution = 0;
  double compute_mean = 0.0;
  double compute_stddev = 0.0;
  double codec_mean = 0.0;
  double codec_stddev = 0.0;

  // "The mean completion time of one image is X seconds with a standard
  // deviation of Y seconds", followed by a codec line.
  std::string format() const;
  nlohmann::json to_json() const;
};

// Times `runs` completions of random masked inputs. Compute covers the
// engine call alone; codec covers PNG decode of the inputs and encode of the
// result.
LatencyReport measure_latency(const CompletionEngine& engine, int runs = 100, std::uint64_t seed = 1);

}  // namespace progfill
