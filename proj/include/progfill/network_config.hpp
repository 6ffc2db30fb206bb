#pragma once

#include <string>
#include <vector>

namespace progfill {

enum class SkipVariant { concat, residual };

std::string to_string(SkipVariant v);
SkipVariant skip_variant_from_string(const std::string& s);

// Shared by the generator and the discriminator so both grow in lockstep.
struct GeneratorConfig {
  int max_resolution = 64;
  int base_channels = 16;
  int max_channels = 128;
  int n_attributes = 0;
  SkipVariant skip_variant = SkipVariant::residual;
  double leaky_slope = 0.2;

  void validate() const;

  // Feature channels of the level operating at `resolution`. Defined against
  // max_resolution so a level keeps its width when the network grows.
  int channels_at(int resolution) const;

  // Resolutions 4, 8, ..., stage. Throws on an invalid stage.
  std::vector<int> levels(int stage) const;

  void check_stage(int stage) const;
};

bool is_power_of_two(int v);

}  // namespace progfill
