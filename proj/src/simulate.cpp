#include "annofuse/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "annofuse/dataset_io.hpp"
#include "annofuse/rng.hpp"

namespace annofuse {

namespace {

constexpr int kMaxPlacementAttempts = 1000;

void validate_scene(const SceneConfig& cfg) {
    if (cfg.n_images < 0) throw InputError("n_images must be non-negative");
    if (cfg.poles_min < 0 || cfg.poles_max < cfg.poles_min)
        throw InputError("poles range must satisfy 0 <= min <= max");
    if (cfg.width <= 0 || cfg.height <= 0) throw InputError("image dimensions must be positive");
    if (!(cfg.min_separation > 0.0)) throw InputError("min_separation must be positive");
}

void validate_profile(const SourceProfile& p) {
    if (p.name.empty()) throw InputError("source profile name must be non-empty");
    if (!(p.recall >= 0.0 && p.recall <= 1.0))
        throw InputError("profile \"" + p.name + "\": recall out of [0,1]");
    if (!(p.fp_per_image >= 0.0))
        throw InputError("profile \"" + p.name + "\": fp_per_image must be non-negative");
    if (!(p.noise_sigma >= 0.0))
        throw InputError("profile \"" + p.name + "\": noise_sigma must be non-negative");
}

std::string image_name(int index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "im%06d", index);
    return buf;
}

double clamp_coord(double x, int extent) {
    // Just inside [0, extent).
    return std::clamp(x, 0.0, extent - 1e-6);
}

}  // namespace

Dataset gen_scene(const SceneConfig& cfg) {
    validate_scene(cfg);
    Dataset d;
    for (int i = 0; i < cfg.n_images; ++i) {
        Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(i)));
        ImageRecord img;
        img.id = image_name(i);
        img.width = cfg.width;
        img.height = cfg.height;

        const auto n_poles = rng.uniform_int(cfg.poles_min, cfg.poles_max);
        std::vector<PointAnnotation> ref;
        for (std::int64_t p = 0; p < n_poles; ++p) {
            bool placed = false;
            for (int attempt = 0; attempt < kMaxPlacementAttempts && !placed; ++attempt) {
                PointAnnotation cand;
                cand.image_id = img.id;
                cand.u = rng.uniform(0.0, cfg.width);
                cand.v = rng.uniform(0.0, cfg.height);
                placed = std::all_of(ref.begin(), ref.end(), [&](const PointAnnotation& q) {
                    return point_distance(cand, q) >= cfg.min_separation;
                });
                if (placed) ref.push_back(cand);
            }
            if (!placed)
                throw InputError("image " + img.id + ": min separation " +
                                 std::to_string(cfg.min_separation) +
                                 " infeasible for the requested pole density");
        }
        img.reference = std::move(ref);
        d.images.push_back(std::move(img));
    }
    return d;
}

AnnotationSet simulate_source(const std::vector<PointAnnotation>& reference, int width,
                              int height, const SourceProfile& profile, std::uint64_t seed,
                              std::size_t image_index, const std::string& image_id) {
    validate_profile(profile);
    Rng rng(mix_seed(mix_seed(seed, fnv1a64(profile.name)), image_index));

    AnnotationSet set{image_id, profile.name, {}};
    auto push_unique = [&set](PointAnnotation p) {
        for (const auto& q : set.annotations)
            if (q.u == p.u && q.v == p.v) return;
        set.annotations.push_back(std::move(p));
    };

    for (const auto& pole : reference) {
        if (rng.uniform() >= profile.recall) continue;
        PointAnnotation p;
        p.image_id = image_id;
        p.source = profile.name;
        p.u = clamp_coord(pole.u + rng.gaussian(profile.noise_sigma), width);
        p.v = clamp_coord(pole.v + rng.gaussian(profile.noise_sigma), height);
        push_unique(std::move(p));
    }
    const int n_fp = rng.poisson(profile.fp_per_image);
    for (int k = 0; k < n_fp; ++k) {
        PointAnnotation p;
        p.image_id = image_id;
        p.source = profile.name;
        p.u = rng.uniform(0.0, width);
        p.v = rng.uniform(0.0, height);
        push_unique(std::move(p));
    }
    return set;
}

Dataset simulate_dataset(const SceneConfig& cfg, const std::vector<SourceProfile>& profiles) {
    for (const auto& p : profiles) validate_profile(p);
    for (std::size_t i = 0; i < profiles.size(); ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (profiles[i].name == profiles[j].name)
                throw InputError("duplicate profile name \"" + profiles[i].name + "\"");

    Dataset d = gen_scene(cfg);
    for (const auto& p : profiles) d.sources.push_back(p.name);

    for (std::size_t i = 0; i < d.images.size(); ++i) {
        auto& img = d.images[i];
        for (const auto& p : profiles)
            img.annotations.push_back(simulate_source(*img.reference, img.width, img.height, p,
                                                      cfg.seed, i, img.id));
    }

    nlohmann::json meta;
    meta["generator"] = std::string(Rng::kName);
    meta["seed"] = cfg.seed;
    meta["scene"] = {{"n_images", cfg.n_images},
                     {"poles_min", cfg.poles_min},
                     {"poles_max", cfg.poles_max},
                     {"width", cfg.width},
                     {"height", cfg.height},
                     {"min_separation", cfg.min_separation}};
    nlohmann::json jprofiles = nlohmann::json::array();
    for (const auto& p : profiles)
        jprofiles.push_back({{"name", p.name},
                             {"recall", p.recall},
                             {"fp_per_image", p.fp_per_image},
                             {"noise_sigma", p.noise_sigma}});
    meta["profiles"] = std::move(jprofiles);
    d.metadata = std::move(meta);

    validate_dataset(d);
    return d;
}

}  // namespace annofuse
