#pragma once

#include <string_view>

#include "kflow/flowcore.hpp"
#include "kflow/pgm.hpp"

namespace kflow {

/// n points drawn uniformly over the pixels with value < 128, jittered uniformly inside
/// each pixel cell and mapped to [-1, 1]^2 with the aspect ratio preserved (the longer
/// side spans [-1, 1]). Row 0 maps to the top (y = +1).
ParticleSet shape_sample(const GrayscaleMask& m, long n, Prng& rng);

/// Built-in size x size masks: "disk", "heart", "spiral". Shape pixels are 0, the rest 255.
GrayscaleMask builtin_mask(std::string_view name, int size = 128);

}  // namespace kflow
