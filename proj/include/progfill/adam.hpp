#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "progfill/checkpoint.hpp"
#include "progfill/params.hpp"

namespace progfill {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.0;
  double beta2 = 0.99;
  double eps = 1e-8;
};

// Adam with per-parameter moments and step counts, so parameters added by
// growth start their bias correction from step one.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  const AdamConfig& config() const { return config_; }

  // Updates every parameter that currently holds a gradient.
  void step(ParamStore<float>& params);

  std::int64_t steps_of(const std::string& name) const;

  // Moments go to arrays "<prefix><name>.m" / ".v"; step counts are
  // returned as a name -> count JSON object.
  nlohmann::json export_state(const std::string& prefix, std::vector<NamedArray>& arrays) const;
  void import_state(const std::string& prefix, const Container& c, const nlohmann::json& counts);

 private:
  struct Slot {
    Tensor<float> m;
    Tensor<float> v;
    std::int64_t t = 0;
  };
  AdamConfig config_;
  std::map<std::string, Slot> slots_;
};

}  // namespace progfill
