// Writes a small deterministic source/reference pair with two labelled
// regions, plus matching configs, into the given directory.
//
//   make_synthetic_pair OUT_DIR [--size N] [--seed S]

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "dran/config.hpp"
#include "dran/image_io.hpp"
#include "dran/random.hpp"

namespace {

struct Palette {
    double skin[3];
    double eye[3];
    double lip[3];
};

// Label 1: two ellipses in the upper half. Label 2: one wide ellipse below.
dran::SegMask face_mask(int size, double shift) {
    dran::SegMask mask(size, size);
    const double s = size;
    auto inside = [](double y, double x, double cy, double cx, double ry, double rx) {
        const double dy = (y - cy) / ry;
        const double dx = (x - cx) / rx;
        return dy * dy + dx * dx <= 1.0;
    };
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double py = y + 0.5;
            const double px = x + 0.5;
            if (inside(py, px, 0.34 * s + shift, 0.30 * s, 0.07 * s, 0.12 * s) ||
                inside(py, px, 0.34 * s + shift, 0.70 * s, 0.07 * s, 0.12 * s)) {
                mask.at(y, x) = 1;
            } else if (inside(py, px, 0.72 * s - shift, 0.50 * s, 0.08 * s, 0.20 * s)) {
                mask.at(y, x) = 2;
            }
        }
    }
    return mask;
}

dran::FeatureMap paint(const dran::SegMask& mask, const Palette& palette, dran::Rng& rng, double stripes) {
    const int size = mask.height();
    dran::FeatureMap image(3, size, size);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const double* base = mask.at(y, x) == 1   ? palette.eye
                                 : mask.at(y, x) == 2 ? palette.lip
                                                      : palette.skin;
            const double wave = 0.06 * std::sin(stripes * (x + 0.5 * y) / size * 6.283185307179586);
            for (int c = 0; c < 3; ++c) {
                const double v = base[c] + wave + rng.uniform(-0.04, 0.04);
                image.at(c, y, x) = std::clamp(v, 0.0, 1.0);
            }
        }
    }
    return image;
}

void write_config(const std::filesystem::path& path, const dran::DranConfig& cfg) {
    std::ofstream out(path);
    out << cfg.to_json().dump(2) << '\n';
    if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generate a synthetic two-region image pair"};
    std::string out_dir;
    int size = 64;
    std::uint64_t seed = 7;
    app.add_option("out_dir", out_dir, "Output directory")->required();
    app.add_option("--size", size, "Image side length")->check(CLI::Range(16, 1024));
    app.add_option("--seed", seed, "Noise seed");
    CLI11_PARSE(app, argc, argv);

    try {
        const std::filesystem::path dir(out_dir);
        std::filesystem::create_directories(dir);
        dran::Rng rng(seed);

        const Palette pale{{0.86, 0.72, 0.62}, {0.35, 0.30, 0.28}, {0.78, 0.50, 0.48}};
        const Palette made_up{{0.80, 0.62, 0.52}, {0.20, 0.12, 0.30}, {0.72, 0.10, 0.18}};
        const dran::SegMask source_mask = face_mask(size, 0.0);
        const dran::SegMask reference_mask = face_mask(size, 0.03 * size);
        const dran::FeatureMap source = paint(source_mask, pale, rng, 2.0);
        const dran::FeatureMap reference = paint(reference_mask, made_up, rng, 5.0);

        dran::io::write_rgb_png((dir / "source.png").string(), source);
        dran::io::write_rgb_png((dir / "reference.png").string(), reference);
        dran::io::write_mask_png((dir / "source_mask.png").string(), source_mask);
        dran::io::write_mask_png((dir / "reference_mask.png").string(), reference_mask);

        dran::DranConfig detail;
        detail.regions[1] = {"eyes", dran::detail_region_levels()};
        detail.regions[2] = {"lips", dran::coarse_region_levels()};
        write_config(dir / "config_pyramid.json", detail);

        dran::DranConfig single;
        single.regions[1] = {"eyes", {dran::PyramidLevel::fixed(1)}};
        single.regions[2] = {"lips", {dran::PyramidLevel::fixed(1)}};
        write_config(dir / "config_k1.json", single);
    } catch (const std::exception& e) {
        std::cerr << "make_synthetic_pair: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
