#pragma once

#include <string>
#include <vector>

#include "annofuse/fusion.hpp"
#include "annofuse/image.hpp"
#include "annofuse/types.hpp"

namespace annofuse {

/// A black square to paint over one ambiguous annotation. The rectangle is
/// the square of `side` centered at (u, v) intersected with the image,
/// half-open: [left, right) x [top, bottom) in integer pixels.
struct PatchSpec {
    std::string image_id;
    double u = 0.0;
    double v = 0.0;
    double side = 0.0;
    int left = 0;
    int top = 0;
    int right = 0;
    int bottom = 0;
};

struct ExportConfig {
    double box_side = 250.0;    // label box side, pixels
    double patch_side = 250.0;  // mask patch side, pixels
    int class_id = 0;
};

/// One patch per ambiguous annotation, clipped to the image. Annotations
/// outside the image are an error.
std::vector<PatchSpec> make_patches(const std::vector<FusedAnnotation>& ambiguous,
                                    int width, int height, const ExportConfig& cfg);

/// Paints every patch rectangle pure black (all channels 0) in place; pixels
/// outside all rectangles are untouched. Idempotent and order-independent.
void apply_patches(ImageBuffer& raster, const std::vector<PatchSpec>& patches);

/// Detector-training label text: one line per confident annotation,
/// `<class_id> <cx/width> <cy/height> <w/width> <h/height>`, boxes clipped to
/// the image before normalization, six decimal places, input order.
std::string export_labels(const std::vector<FusedAnnotation>& confident,
                          int width, int height, const ExportConfig& cfg);

}  // namespace annofuse
