#pragma once

#include <cstdint>
#include <vector>

#include "annofuse/types.hpp"

namespace annofuse {

/// Error behavior of one synthetic annotation source.
struct SourceProfile {
    SourceId name;
    double recall = 1.0;        // per-pole detection probability
    double fp_per_image = 0.0;  // Poisson mean of false annotations per image
    double noise_sigma = 0.0;   // px, isotropic Gaussian noise on true detections
};

struct SceneConfig {
    int n_images = 1;
    int poles_min = 0;           // poles per image drawn uniformly from
    int poles_max = 0;           // [poles_min, poles_max]
    int width = 1280;
    int height = 720;
    double min_separation = 40.0;  // px, between reference poles of one image
    std::uint64_t seed = 0;
};

/// Random pole-base reference points per image, pairwise separated by at
/// least min_separation (rejection sampling, 1000 attempts per point).
/// Deterministic for a fixed seed. The returned dataset declares no sources.
Dataset gen_scene(const SceneConfig& cfg);

/// Simulates one source on one image: each reference pole is emitted with
/// probability `recall`, displaced by Gaussian noise and clamped to the
/// image; Poisson(fp_per_image) false annotations follow, uniform in the
/// image. Deterministic per (seed, source name, image index).
AnnotationSet simulate_source(const std::vector<PointAnnotation>& reference, int width,
                              int height, const SourceProfile& profile, std::uint64_t seed,
                              std::size_t image_index, const std::string& image_id);

/// Scene plus all sources; the metadata block records the generator name,
/// the scene configuration, and every profile.
Dataset simulate_dataset(const SceneConfig& cfg, const std::vector<SourceProfile>& profiles);

}  // namespace annofuse
