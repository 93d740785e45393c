#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "annofuse/masking.hpp"
#include "annofuse/rng.hpp"

using namespace annofuse;

namespace {

FusedAnnotation fused_at(double u, double v) {
    FusedAnnotation f;
    f.image_id = "im0";
    f.u = u;
    f.v = v;
    f.chosen_source = "S";
    f.contributing_sources = {"S"};
    f.consensus_degree = 1;
    return f;
}

ImageBuffer noise_image(Rng& rng, int w, int h) {
    ImageBuffer img = ImageBuffer::make(w, h, 3);
    for (auto& px : img.pixels) px = static_cast<std::uint8_t>(rng.uniform_int(1, 255));
    return img;
}

}  // namespace

TEST_CASE("make_patches: centered square arithmetic") {
    const auto patches = make_patches({fused_at(640, 360)}, 1280, 720, {});
    REQUIRE(patches.size() == 1);
    CHECK(patches[0].left == 515);
    CHECK(patches[0].top == 235);
    CHECK(patches[0].right == 765);
    CHECK(patches[0].bottom == 485);
}

TEST_CASE("make_patches: clipping at the origin") {
    const auto patches = make_patches({fused_at(10, 10)}, 1280, 720, {});
    REQUIRE(patches.size() == 1);
    CHECK(patches[0].left == 0);
    CHECK(patches[0].top == 0);
    CHECK(patches[0].right == 135);
    CHECK(patches[0].bottom == 135);
}

TEST_CASE("make_patches: one patch per ambiguous annotation") {
    const auto patches =
        make_patches({fused_at(100, 100), fused_at(500, 300), fused_at(1200, 700)}, 1280, 720, {});
    CHECK(patches.size() == 3);
    for (const auto& p : patches) {
        // the annotation lies inside its rectangle
        CHECK(p.u >= p.left);
        CHECK(p.u < p.right);
        CHECK(p.v >= p.top);
        CHECK(p.v < p.bottom);
    }
}

TEST_CASE("make_patches: out-of-bounds annotation is an error") {
    CHECK_THROWS_AS(make_patches({fused_at(1280, 10)}, 1280, 720, {}), InputError);
    CHECK_THROWS_AS(make_patches({fused_at(-1, 10)}, 1280, 720, {}), InputError);
}

TEST_CASE("apply_patches: identity without patches, saturation with a full patch") {
    Rng rng(21);
    const ImageBuffer original = noise_image(rng, 64, 48);

    ImageBuffer img = original;
    apply_patches(img, {});
    CHECK(img == original);

    PatchSpec full;
    full.image_id = "im0";
    full.left = 0;
    full.top = 0;
    full.right = 64;
    full.bottom = 48;
    apply_patches(img, {full});
    CHECK(std::all_of(img.pixels.begin(), img.pixels.end(),
                      [](std::uint8_t px) { return px == 0; }));
}

TEST_CASE("apply_patches: overlapping patches, idempotence, untouched complement") {
    Rng rng(22);
    const ImageBuffer original = noise_image(rng, 64, 48);
    const ExportConfig cfg{250.0, 16.0, 0};
    const auto patches = make_patches({fused_at(20, 20), fused_at(26, 24)}, 64, 48, cfg);

    ImageBuffer once = original;
    apply_patches(once, patches);

    // union region black, complement bit-identical
    for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 64; ++x) {
            const bool inside = std::any_of(patches.begin(), patches.end(), [&](const auto& p) {
                return x >= p.left && x < p.right && y >= p.top && y < p.bottom;
            });
            for (int c = 0; c < 3; ++c) {
                if (inside)
                    CHECK(once.at(x, y, c) == 0);
                else
                    CHECK(once.at(x, y, c) == original.at(x, y, c));
            }
        }

    ImageBuffer twice = once;
    apply_patches(twice, patches);
    CHECK(twice == once);  // idempotent

    // order independent
    ImageBuffer reversed = original;
    auto rev = patches;
    std::reverse(rev.begin(), rev.end());
    apply_patches(reversed, rev);
    CHECK(reversed == once);
}

TEST_CASE("apply_patches: dimension mismatch is an error") {
    ImageBuffer img = ImageBuffer::make(32, 32, 3);
    PatchSpec p;
    p.left = 0;
    p.top = 0;
    p.right = 33;
    p.bottom = 10;
    CHECK_THROWS_AS(apply_patches(img, {p}), InputError);
}

TEST_CASE("export_labels: spec fixtures") {
    const ExportConfig cfg;
    CHECK(export_labels({fused_at(640, 360)}, 1280, 720, cfg) ==
          "0 0.500000 0.500000 0.195312 0.347222\n");
    CHECK(export_labels({fused_at(0, 360)}, 1280, 720, cfg) ==
          "0 0.048828 0.500000 0.097656 0.347222\n");
    CHECK(export_labels({}, 1280, 720, cfg).empty());
}

TEST_CASE("export_labels: line order, class id, normalized range") {
    ExportConfig cfg;
    cfg.class_id = 7;
    const auto text = export_labels({fused_at(100, 100), fused_at(640, 360)}, 1280, 720, cfg);
    std::istringstream lines(text);
    std::string line;
    int n = 0;
    while (std::getline(lines, line)) {
        std::istringstream fields(line);
        int cls;
        double cx, cy, w, h;
        fields >> cls >> cx >> cy >> w >> h;
        CHECK(cls == 7);
        for (double v : {cx, cy, w, h}) {
            CHECK(v > 0.0);
            CHECK(v <= 1.0);
        }
        ++n;
    }
    CHECK(n == 2);
}

TEST_CASE("export_labels: reparsing recovers the clipped box") {
    Rng rng(23);
    const int width = 1280, height = 720;
    const ExportConfig cfg;
    for (int trial = 0; trial < 200; ++trial) {
        const double u = rng.uniform(0.0, width);
        const double v = rng.uniform(0.0, height);
        const auto text = export_labels({fused_at(u, v)}, width, height, cfg);
        std::istringstream fields(text);
        int cls;
        double cx, cy, w, h;
        fields >> cls >> cx >> cy >> w >> h;

        const double left = std::max(0.0, u - cfg.box_side / 2);
        const double right = std::min<double>(width, u + cfg.box_side / 2);
        const double top = std::max(0.0, v - cfg.box_side / 2);
        const double bottom = std::min<double>(height, v + cfg.box_side / 2);
        // 6-decimal quantization: 1e-4 of the image dimension per coordinate
        CHECK(std::abs((cx - w / 2) * width - left) <= 1e-4 * width);
        CHECK(std::abs((cx + w / 2) * width - right) <= 1e-4 * width);
        CHECK(std::abs((cy - h / 2) * height - top) <= 1e-4 * height);
        CHECK(std::abs((cy + h / 2) * height - bottom) <= 1e-4 * height);
    }
}
