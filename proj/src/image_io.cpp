#include "b3seg/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace b3seg {

namespace {

uint8_t to_byte(double v) {
    return uint8_t(std::clamp(v, 0.0, 1.0) * 255.0 + 0.5);
}

std::ofstream open_binary(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    return out;
}

}  // namespace

void write_ppm(const RenderOutput& img, const std::string& path) {
    auto out = open_binary(path);
    out << "P6\n" << img.width << " " << img.height << "\n255\n";
    for (std::size_t i = 0; i < img.rgb.size(); ++i) out.put(char(to_byte(img.rgb[i])));
    if (!out) throw IoError("write failed: " + path);
}

void write_logit_pgm(const LogitImage& img, const std::string& path) {
    auto out = open_binary(path);
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    for (double v : img.values) out.put(char(to_byte(1.0 / (1.0 + std::exp(-v)))));
    if (!out) throw IoError("write failed: " + path);
}

void write_mask_pgm(const Mask& mask, const std::string& path) {
    auto out = open_binary(path);
    out << "P5\n" << mask.width << " " << mask.height << "\n255\n";
    const double denom = std::max(1u, mask.num_classes - 1);
    for (uint32_t v : mask.labels) out.put(char(to_byte(double(v) / denom)));
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace b3seg
