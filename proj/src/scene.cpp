#include "b3seg/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "b3seg/rng.hpp"

namespace b3seg {

namespace {

bool finite3(const std::array<float, 3>& v) {
    return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

[[noreturn]] void field_error(const char* field, std::size_t index, const std::string& what) {
    std::ostringstream os;
    os << "gaussian " << index << ": field '" << field << "' " << what;
    throw ValidationError(os.str());
}

}  // namespace

void validate_gaussian(const Gaussian& g, std::size_t index) {
    if (!finite3(g.mean)) field_error("mean", index, "is not finite");
    if (!finite3(g.scale)) field_error("scale", index, "is not finite");
    for (float s : g.scale)
        if (!(s > 0.f)) field_error("scale", index, "must be > 0");
    for (float q : g.rot)
        if (!std::isfinite(q)) field_error("rot", index, "is not finite");
    const double qn = std::sqrt(double(g.rot[0]) * g.rot[0] + double(g.rot[1]) * g.rot[1] +
                                double(g.rot[2]) * g.rot[2] + double(g.rot[3]) * g.rot[3]);
    if (std::abs(qn - 1.0) > 1e-6) field_error("rot", index, "is not a unit quaternion");
    if (!std::isfinite(g.opacity) || g.opacity < 0.f || g.opacity > 1.f)
        field_error("opacity", index, "out of range [0,1]");
    if (!finite3(g.color)) field_error("color", index, "is not finite");
    for (float c : g.color)
        if (c < 0.f || c > 1.f) field_error("color", index, "out of range [0,1]");
}

BoundingSphere scene_bounding_sphere(const Scene& scene) {
    BoundingSphere bs;
    if (scene.gaussians.empty()) return bs;
    Vec3 sum;
    for (const auto& g : scene.gaussians) sum += g.mean_v();
    bs.center = sum / double(scene.gaussians.size());
    double r = 0.0;
    for (const auto& g : scene.gaussians) r = std::max(r, (g.mean_v() - bs.center).norm());
    bs.radius = std::max(r, 1e-6);
    return bs;
}

// ---------------------------------------------------------------------------
// binary_splat: little-endian
//   header: magic "B3SP", version u32 = 1, count u32, flags u32 (bit0: labels)
//   record: mean f32x3, scale f32x3, rot f32x4 (w,x,y,z), opacity f32,
//           color f32x3, label u32 if flagged
// ---------------------------------------------------------------------------

namespace {

constexpr uint32_t kBinaryVersion = 1;
constexpr std::size_t kHeaderSize = 16;
constexpr std::size_t kBaseRecordSize = 14 * 4;

void put_u32(std::string& buf, uint32_t v) {
    buf.push_back(char(v & 0xff));
    buf.push_back(char((v >> 8) & 0xff));
    buf.push_back(char((v >> 16) & 0xff));
    buf.push_back(char((v >> 24) & 0xff));
}

void put_f32(std::string& buf, float f) {
    uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(buf, v);
}

uint32_t get_u32(const std::string& buf, std::size_t off) {
    return uint32_t(uint8_t(buf[off])) | uint32_t(uint8_t(buf[off + 1])) << 8 |
           uint32_t(uint8_t(buf[off + 2])) << 16 | uint32_t(uint8_t(buf[off + 3])) << 24;
}

float get_f32(const std::string& buf, std::size_t off) {
    const uint32_t v = get_u32(buf, off);
    float f;
    std::memcpy(&f, &v, 4);
    return f;
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t offset, const std::string& what) {
    std::ostringstream os;
    os << path << ": parse error at byte " << offset << ": " << what;
    throw ParseError(os.str());
}

Scene load_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string buf = ss.str();

    if (buf.size() < kHeaderSize) parse_fail(path, buf.size(), "truncated header");
    if (buf.compare(0, 4, "B3SP") != 0) parse_fail(path, 0, "bad magic");
    const uint32_t version = get_u32(buf, 4);
    if (version != kBinaryVersion) parse_fail(path, 4, "unsupported version " + std::to_string(version));
    const uint32_t count = get_u32(buf, 8);
    const uint32_t flags = get_u32(buf, 12);
    if (flags & ~1u) parse_fail(path, 12, "unknown flag bits");
    const bool labels = flags & 1u;
    const std::size_t record = kBaseRecordSize + (labels ? 4 : 0);
    const std::size_t expected = kHeaderSize + std::size_t(count) * record;
    if (buf.size() != expected) {
        parse_fail(path, std::min(buf.size(), expected),
                   "file size " + std::to_string(buf.size()) + ", expected " +
                       std::to_string(expected));
    }

    Scene scene;
    scene.id = path;
    scene.gaussians.resize(count);
    std::size_t off = kHeaderSize;
    for (uint32_t i = 0; i < count; ++i) {
        Gaussian& g = scene.gaussians[i];
        for (int k = 0; k < 3; ++k, off += 4) g.mean[k] = get_f32(buf, off);
        for (int k = 0; k < 3; ++k, off += 4) g.scale[k] = get_f32(buf, off);
        for (int k = 0; k < 4; ++k, off += 4) g.rot[k] = get_f32(buf, off);
        g.opacity = get_f32(buf, off);
        off += 4;
        for (int k = 0; k < 3; ++k, off += 4) g.color[k] = get_f32(buf, off);
        if (labels) {
            g.gt_label = get_u32(buf, off);
            off += 4;
        }
        validate_gaussian(g, i);
    }
    if (scene.gaussians.empty()) throw ValidationError(path + ": scene is empty");
    return scene;
}

void save_binary(const Scene& scene, const std::string& path) {
    const bool labels = scene.has_labels();
    std::string buf;
    buf.reserve(kHeaderSize + scene.size() * (kBaseRecordSize + (labels ? 4 : 0)));
    buf += "B3SP";
    put_u32(buf, kBinaryVersion);
    put_u32(buf, uint32_t(scene.size()));
    put_u32(buf, labels ? 1u : 0u);
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const Gaussian& g = scene.gaussians[i];
        if (g.gt_label.has_value() != labels)
            throw ValidationError("gaussian " + std::to_string(i) +
                                  ": mixed labeled/unlabeled records");
        for (float v : g.mean) put_f32(buf, v);
        for (float v : g.scale) put_f32(buf, v);
        for (float v : g.rot) put_f32(buf, v);
        put_f32(buf, g.opacity);
        for (float v : g.color) put_f32(buf, v);
        if (labels) put_u32(buf, *g.gt_label);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(buf.data(), std::streamsize(buf.size()));
    if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// json_splat
// ---------------------------------------------------------------------------

Scene load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        parse_fail(path, e.byte, e.what());
    }
    try {
        if (!j.is_object() || j.value("version", 0) != 1)
            throw ParseError(path + ": missing or unsupported \"version\"");
        Scene scene;
        scene.id = path;
        const auto& arr = j.at("gaussians");
        scene.gaussians.reserve(arr.size());
        std::size_t i = 0;
        for (const auto& e : arr) {
            Gaussian g;
            for (int k = 0; k < 3; ++k) g.mean[k] = e.at("mean").at(k).get<float>();
            for (int k = 0; k < 3; ++k) g.scale[k] = e.at("scale").at(k).get<float>();
            for (int k = 0; k < 4; ++k) g.rot[k] = e.at("rot").at(k).get<float>();
            g.opacity = e.at("opacity").get<float>();
            for (int k = 0; k < 3; ++k) g.color[k] = e.at("color").at(k).get<float>();
            if (e.contains("label")) g.gt_label = e.at("label").get<uint32_t>();
            validate_gaussian(g, i);
            scene.gaussians.push_back(g);
            ++i;
        }
        if (scene.gaussians.empty()) throw ValidationError(path + ": scene is empty");
        return scene;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

void save_json(const Scene& scene, const std::string& path) {
    const bool labels = scene.has_labels();
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t i = 0; i < scene.size(); ++i) {
        const Gaussian& g = scene.gaussians[i];
        if (g.gt_label.has_value() != labels)
            throw ValidationError("gaussian " + std::to_string(i) +
                                  ": mixed labeled/unlabeled records");
        nlohmann::json e{{"mean", g.mean}, {"scale", g.scale}, {"rot", g.rot},
                         {"opacity", g.opacity}, {"color", g.color}};
        if (labels) e["label"] = *g.gt_label;
        arr.push_back(std::move(e));
    }
    nlohmann::json j{{"version", 1}, {"gaussians", std::move(arr)}};
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << j.dump(1) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace

Scene load_scene(const std::string& path, SplatFormat format) {
    return format == SplatFormat::binary_splat ? load_binary(path) : load_json(path);
}

void save_scene(const Scene& scene, const std::string& path, SplatFormat format) {
    if (scene.gaussians.empty()) throw ValidationError("refusing to save an empty scene");
    if (format == SplatFormat::binary_splat)
        save_binary(scene, path);
    else
        save_json(scene, path);
}

// ---------------------------------------------------------------------------
// Synthetic generator
// ---------------------------------------------------------------------------

namespace {

void store_rot(Gaussian& g, const double q[4]) {
    const double n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    for (int k = 0; k < 4; ++k) g.rot[k] = float(q[k] / n);
    // f32 rounding can leave the norm just outside tolerance; renormalize in f32
    const double fn = std::sqrt(double(g.rot[0]) * g.rot[0] + double(g.rot[1]) * g.rot[1] +
                                double(g.rot[2]) * g.rot[2] + double(g.rot[3]) * g.rot[3]);
    for (int k = 0; k < 4; ++k) g.rot[k] = float(g.rot[k] / fn);
}

void finish_splat(Gaussian& g, Rng& rng, const Vec3& pos, double opacity_lo,
                  double opacity_hi, uint32_t label) {
    g.mean = {float(pos.x), float(pos.y), float(pos.z)};
    g.opacity = float(rng.uniform(opacity_lo, opacity_hi));
    for (int k = 0; k < 3; ++k) g.color[k] = float(rng.uniform());
    g.gt_label = label;
}

Gaussian random_splat(Rng& rng, const Vec3& pos, double base_scale, double opacity_lo,
                      double opacity_hi, uint32_t label) {
    Gaussian g;
    for (int k = 0; k < 3; ++k)
        g.scale[k] = float(base_scale * rng.uniform(0.5, 1.5));
    double q[4];
    double n;
    do {
        for (double& v : q) v = rng.normal();
        n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
    } while (n < 1e-9);
    store_rot(g, q);
    finish_splat(g, rng, pos, opacity_lo, opacity_hi, label);
    return g;
}

// Flat disk splat with its thin axis along `normal`, the shape surface
// reconstruction produces; tangential tails stay on the surface instead of
// ballooning past the silhouette.
Gaussian surface_splat(Rng& rng, const Vec3& pos, const Vec3& normal, double tangent_scale,
                       double normal_scale, double opacity_lo, double opacity_hi,
                       uint32_t label) {
    Gaussian g;
    g.scale[0] = float(tangent_scale * rng.uniform(0.8, 1.2));
    g.scale[1] = float(tangent_scale * rng.uniform(0.8, 1.2));
    g.scale[2] = float(normal_scale * rng.uniform(0.8, 1.2));

    // rotate local +z onto the normal, then a random spin about it
    const Vec3 d = normal.normalized();
    double align[4];
    if (d.z < -1.0 + 1e-12) {
        align[0] = 0.0;
        align[1] = 1.0;
        align[2] = 0.0;
        align[3] = 0.0;
    } else {
        // half-angle form of the z-to-d rotation
        const double s = std::sqrt(2.0 * (1.0 + d.z));
        align[0] = 0.5 * s;
        align[1] = -d.y / s;
        align[2] = d.x / s;
        align[3] = 0.0;
    }
    const double phi = rng.uniform(0.0, 2.0 * M_PI);
    const double spin[4] = {std::cos(0.5 * phi), 0.0, 0.0, std::sin(0.5 * phi)};
    const double q[4] = {
        align[0] * spin[0] - align[3] * spin[3],
        align[1] * spin[0] + align[2] * spin[3],
        align[2] * spin[0] - align[1] * spin[3],
        align[0] * spin[3] + align[3] * spin[0],
    };
    store_rot(g, q);
    finish_splat(g, rng, pos, opacity_lo, opacity_hi, label);
    return g;
}

}  // namespace

Scene generate_synthetic(const SceneSpec& spec) {
    if (spec.n_objects < 1 || spec.gaussians_per_object < 1 || spec.background_count < 1)
        throw ValidationError("scene spec counts must be >= 1");
    if (!(spec.workspace_extent > 0.0))
        throw ValidationError("workspace extent must be > 0");

    Rng rng(derive_seed(spec.seed, /*purpose=*/0x5ce9e));
    const double extent = spec.workspace_extent;
    // Objects are splat shells, the shape of reconstructed assets: surface
    // points with mild radial jitter carrying flat disk splats oriented along
    // the outward normal. The shell radius also makes the mean-deviation
    // object-radius estimate track the visual radius.
    const double shell_radius = extent * 0.1;
    const double tangent_scale = shell_radius * 0.2;
    const double normal_scale = shell_radius * 0.045;
    const double bg_splat_scale = extent * 0.008;

    Scene scene;
    scene.id = "synthetic-seed" + std::to_string(spec.seed);
    scene.gaussians.reserve(std::size_t(spec.n_objects) * spec.gaussians_per_object +
                            spec.background_count);

    struct Cluster {
        Vec3 center;
        double rms;
        std::vector<Vec3> points;
    };
    std::vector<Cluster> clusters;
    constexpr int kMaxTries = 200;

    for (int obj = 0; obj < spec.n_objects; ++obj) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxTries && !placed; ++attempt) {
            Cluster c;
            // keep object centers in the inner region so orbit views see them
            for (double* v : {&c.center.x, &c.center.y, &c.center.z})
                *v = rng.uniform(-extent * 0.22, extent * 0.22);
            c.points.reserve(spec.gaussians_per_object);
            double sq = 0.0;
            for (int i = 0; i < spec.gaussians_per_object; ++i) {
                const Vec3 p =
                    c.center + rng.unit_vector() *
                                   (shell_radius * (1.0 + 0.08 * rng.normal()));
                sq += (p - c.center).dot(p - c.center);
                c.points.push_back(p);
            }
            c.rms = std::sqrt(sq / spec.gaussians_per_object);
            bool ok = true;
            for (const Cluster& other : clusters) {
                if ((c.center - other.center).norm() < 2.0 * (c.rms + other.rms)) {
                    ok = false;
                    break;
                }
            }
            if (ok) {
                clusters.push_back(std::move(c));
                placed = true;
            }
        }
        if (!placed)
            throw GenerationError(
                "could not place object " + std::to_string(obj + 1) +
                " with the required separation; increase workspace_extent");
    }

    // Opaque, overlapping members give objects a solid shell; thin translucent
    // objects leak evidence through.
    for (std::size_t obj = 0; obj < clusters.size(); ++obj)
        for (const Vec3& p : clusters[obj].points)
            scene.gaussians.push_back(surface_splat(rng, p, p - clusters[obj].center,
                                                    tangent_scale, normal_scale, 0.95, 0.995,
                                                    uint32_t(obj + 1)));

    // Background clutter fills a ball (tight bounding sphere for overview
    // cameras) but stays clear of the object hulls: objects are solid and
    // clutter does not intersect them.
    for (int i = 0; i < spec.background_count; ++i) {
        Vec3 p;
        bool clear = false;
        for (int attempt = 0; attempt < kMaxTries && !clear; ++attempt) {
            p = rng.unit_vector() * (0.35 * extent * std::cbrt(rng.uniform()));
            clear = true;
            for (const Cluster& c : clusters)
                if ((p - c.center).norm() < 2.2 * c.rms) clear = false;
        }
        if (!clear)
            throw GenerationError(
                "could not place background clutter outside the object hulls; "
                "increase workspace_extent");
        scene.gaussians.push_back(random_splat(rng, p, bg_splat_scale, 0.9, 0.99, 0));
    }

    for (std::size_t i = 0; i < scene.size(); ++i) validate_gaussian(scene.gaussians[i], i);
    return scene;
}

}  // namespace b3seg
