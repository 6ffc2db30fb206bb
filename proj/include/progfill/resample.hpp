#pragma once

#include <vector>

namespace progfill {

// One output coordinate of a 1-D linear resampling: out = (1 - weight) *
// in[lo] + weight * in[hi]. Pixel centres sit at half-integers and reads
// past the edge clamp to the border sample.
struct LinearTap {
  int lo = 0;
  int hi = 0;
  double weight = 0.0;
};

std::vector<LinearTap> linear_taps(int in_size, int out_size);

}  // namespace progfill
