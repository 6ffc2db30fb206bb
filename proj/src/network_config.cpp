#include "progfill/network_config.hpp"

#include <algorithm>

#include "progfill/errors.hpp"

namespace progfill {

std::string to_string(SkipVariant v) { return v == SkipVariant::concat ? "concat" : "residual"; }

SkipVariant skip_variant_from_string(const std::string& s) {
  if (s == "concat") return SkipVariant::concat;
  if (s == "residual") return SkipVariant::residual;
  throw InvalidInput("unknown skip variant: " + s);
}

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

void GeneratorConfig::validate() const {
  if (!is_power_of_two(max_resolution) || max_resolution < 8)
    throw InvalidInput("max_resolution must be a power of two >= 8");
  if (base_channels < 4) throw InvalidInput("base_channels must be >= 4");
  if (max_channels < base_channels) throw InvalidInput("max_channels must be >= base_channels");
  if (n_attributes < 0) throw InvalidInput("n_attributes must be >= 0");
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) throw InvalidInput("leaky_slope must be in [0, 1)");
}

int GeneratorConfig::channels_at(int resolution) const {
  return std::min(max_channels, base_channels * (max_resolution / resolution));
}

void GeneratorConfig::check_stage(int stage) const {
  if (!is_power_of_two(stage) || stage < 4 || stage > max_resolution)
    throw InvalidInput("invalid stage " + std::to_string(stage) + " (must be a power of two in [4, " +
                       std::to_string(max_resolution) + "])");
}

std::vector<int> GeneratorConfig::levels(int stage) const {
  check_stage(stage);
  std::vector<int> out;
  for (int r = 4; r <= stage; r *= 2) out.push_back(r);
  return out;
}

}  // namespace progfill
