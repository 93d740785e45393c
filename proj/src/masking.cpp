#include "annofuse/masking.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "annofuse/eval.hpp"

namespace annofuse {

std::vector<PatchSpec> make_patches(const std::vector<FusedAnnotation>& ambiguous,
                                    int width, int height, const ExportConfig& cfg) {
    if (width <= 0 || height <= 0) throw InputError("image dimensions must be positive");
    if (!(cfg.patch_side > 0.0)) throw InputError("patch side must be positive");

    std::vector<PatchSpec> patches;
    patches.reserve(ambiguous.size());
    for (const auto& a : ambiguous) {
        if (!(a.u >= 0.0 && a.u < width && a.v >= 0.0 && a.v < height))
            throw InputError("image \"" + a.image_id + "\": ambiguous annotation (" +
                             std::to_string(a.u) + ", " + std::to_string(a.v) +
                             ") out of image bounds");
        PatchSpec p;
        p.image_id = a.image_id;
        p.u = a.u;
        p.v = a.v;
        p.side = cfg.patch_side;
        p.left = std::max(0, static_cast<int>(std::floor(a.u - cfg.patch_side / 2.0)));
        p.top = std::max(0, static_cast<int>(std::floor(a.v - cfg.patch_side / 2.0)));
        p.right = std::min(width, static_cast<int>(std::ceil(a.u + cfg.patch_side / 2.0)));
        p.bottom = std::min(height, static_cast<int>(std::ceil(a.v + cfg.patch_side / 2.0)));
        if (p.left >= p.right || p.top >= p.bottom)
            throw InputError("image \"" + a.image_id + "\": patch entirely outside the image");
        patches.push_back(p);
    }
    return patches;
}

void apply_patches(ImageBuffer& raster, const std::vector<PatchSpec>& patches) {
    for (const auto& p : patches) {
        if (p.left < 0 || p.top < 0 || p.right > raster.width || p.bottom > raster.height)
            throw InputError("image \"" + p.image_id + "\": patch rectangle exceeds raster " +
                             std::to_string(raster.width) + "x" + std::to_string(raster.height));
        for (int y = p.top; y < p.bottom; ++y) {
            auto* row = raster.pixels.data() +
                        (static_cast<std::size_t>(y) * raster.width + p.left) * raster.channels;
            std::fill(row, row + static_cast<std::size_t>(p.right - p.left) * raster.channels,
                      std::uint8_t{0});
        }
    }
}

std::string export_labels(const std::vector<FusedAnnotation>& confident,
                          int width, int height, const ExportConfig& cfg) {
    if (width <= 0 || height <= 0) throw InputError("image dimensions must be positive");
    std::string out;
    char line[160];
    for (const auto& a : confident) {
        const BBoxLabel box = box_from_point(a.u, a.v, cfg.box_side, width, height, cfg.class_id);
        std::snprintf(line, sizeof(line), "%d %.6f %.6f %.6f %.6f\n", box.class_id,
                      box.cx / width, box.cy / height, box.w / width, box.h / height);
        out += line;
    }
    return out;
}

}  // namespace annofuse
