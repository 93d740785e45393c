#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace annofuse {

/// Malformed user input: files, schemas, CLI arguments. The CLI maps this
/// to exit code 2; any other exception is an internal error (exit 1).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Short annotation-source identifier ("M", "S", "L", ...). Sources are
/// ordered by their declaration in the dataset and that order is stable.
using SourceId = std::string;

/// One pole-base hypothesis: a single pixel point in one image, produced by
/// one source. Coordinates are continuous pixels, origin at the top-left
/// corner, u rightward, v downward.
struct PointAnnotation {
    std::string image_id;
    SourceId source;                    // empty for reference points
    double u = 0.0;
    double v = 0.0;
    std::optional<double> confidence;   // in [0,1]; required on detections only

    friend bool operator==(const PointAnnotation&, const PointAnnotation&) = default;
};

/// All annotations of one source for one image.
struct AnnotationSet {
    std::string image_id;
    SourceId source;
    std::vector<PointAnnotation> annotations;

    friend bool operator==(const AnnotationSet&, const AnnotationSet&) = default;
};

struct ImageRecord {
    std::string id;
    int width = 0;
    int height = 0;
    std::optional<std::string> raster;            // path, relative to the dataset file
    std::vector<AnnotationSet> annotations;       // aligned with Dataset::sources
    std::optional<std::vector<PointAnnotation>> reference;  // manual ground truth

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

/// In-memory form of one annotation dataset file.
struct Dataset {
    std::vector<SourceId> sources;   // declared order, K entries
    std::vector<ImageRecord> images;
    nlohmann::json metadata;         // free-form block, null when absent

    std::optional<std::size_t> source_index(const SourceId& s) const {
        for (std::size_t i = 0; i < sources.size(); ++i)
            if (sources[i] == s) return i;
        return std::nullopt;
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Axis-aligned box in center format, pixel units.
struct BBoxLabel {
    int class_id = 0;
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;

    friend bool operator==(const BBoxLabel&, const BBoxLabel&) = default;
};

inline double point_distance(const PointAnnotation& a, const PointAnnotation& b) {
    const double du = a.u - b.u;
    const double dv = a.v - b.v;
    return std::sqrt(du * du + dv * dv);
}

}  // namespace annofuse
