#pragma once
// Lossy 8-bit debug dumps (PPM/PGM). Not part of any round-trip contract.

#include <string>

#include "b3seg/render.hpp"

namespace b3seg {

void write_ppm(const RenderOutput& out, const std::string& path);

// Logit image mapped through the logistic function to an 8-bit grayscale PGM.
void write_logit_pgm(const LogitImage& img, const std::string& path);

void write_mask_pgm(const Mask& mask, const std::string& path);

}  // namespace b3seg
