#pragma once

// Shared builders for unit and acceptance tests.

#include <string>
#include <vector>

#include "annofuse/rng.hpp"
#include "annofuse/types.hpp"

namespace testutil {

using annofuse::AnnotationSet;
using annofuse::Dataset;
using annofuse::ImageRecord;
using annofuse::PointAnnotation;

inline PointAnnotation pt(double u, double v, const std::string& source = "",
                          const std::string& image = "im0") {
    PointAnnotation p;
    p.image_id = image;
    p.source = source;
    p.u = u;
    p.v = v;
    return p;
}

inline AnnotationSet make_set(const std::string& source,
                              const std::vector<std::pair<double, double>>& uv,
                              const std::string& image = "im0") {
    AnnotationSet set{image, source, {}};
    for (const auto& [u, v] : uv) set.annotations.push_back(pt(u, v, source, image));
    return set;
}

/// Random dataset with distinct in-bounds coordinates per set.
inline Dataset random_dataset(annofuse::Rng& rng, int n_sources, int n_images,
                              int max_per_set, int width = 640, int height = 480) {
    Dataset d;
    for (int k = 0; k < n_sources; ++k) d.sources.push_back(std::string(1, char('A' + k)));
    for (int i = 0; i < n_images; ++i) {
        ImageRecord img;
        img.id = "im" + std::to_string(i);
        img.width = width;
        img.height = height;
        for (const auto& s : d.sources) {
            AnnotationSet set{img.id, s, {}};
            const auto n = rng.uniform_int(0, max_per_set);
            for (std::int64_t a = 0; a < n; ++a) {
                PointAnnotation p = pt(rng.uniform(0.0, width), rng.uniform(0.0, height), s, img.id);
                if (rng.uniform() < 0.3) p.confidence = rng.uniform();
                set.annotations.push_back(std::move(p));
            }
            img.annotations.push_back(std::move(set));
        }
        if (rng.uniform() < 0.7) {
            std::vector<PointAnnotation> ref;
            const auto n = rng.uniform_int(0, max_per_set);
            for (std::int64_t a = 0; a < n; ++a)
                ref.push_back(pt(rng.uniform(0.0, width), rng.uniform(0.0, height), "", img.id));
            img.reference = std::move(ref);
        }
        d.images.push_back(std::move(img));
    }
    return d;
}

}  // namespace testutil
