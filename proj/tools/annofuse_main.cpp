// annofuse: fuses pointwise image annotations from multiple automatic
// sources into training labels, masks ambiguous ones with black patches,
// and evaluates annotations/detections against a manual reference.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "annofuse/annotators.hpp"
#include "annofuse/assoc.hpp"
#include "annofuse/dataset_io.hpp"
#include "annofuse/eval.hpp"
#include "annofuse/fusion.hpp"
#include "annofuse/masking.hpp"
#include "annofuse/simulate.hpp"
#include "annofuse/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace annofuse;

namespace {

// ---------------------------------------------------------------------------
// Configuration: built-in defaults < config file (--config or ANNOFUSE_CONFIG)
// < explicit flags.
// ---------------------------------------------------------------------------

struct RunConfig {
    double assoc_threshold = 20.0;  // px, association T
    double eval_threshold = 20.0;   // px, evaluation T_eval
    std::vector<std::string> preference;  // empty: dataset declaration order
    std::string policy;                   // empty: must be given on the CLI
    double box_side = 250.0;
    double patch_side = 250.0;
    int class_id = 0;
    double iou_min = 0.5;
    int jobs = 1;
    AnnotatorParams annotator;
};

json load_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw InputError(path.string() + ": " + e.what());
    }
    return j;
}

template <typename T>
void maybe_get(const json& j, const char* key, T& out, const fs::path& path) {
    if (auto it = j.find(key); it != j.end()) {
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw InputError(path.string() + ": bad value for \"" + key + "\"");
        }
    }
}

RunConfig load_config(const fs::path& path) {
    const json j = load_json_file(path);
    if (!j.is_object()) throw InputError(path.string() + ": config must be a JSON object");
    static const std::set<std::string> known = {
        "assoc_threshold", "eval_threshold", "preference", "policy",  "box_side",
        "patch_side",      "class_id",       "iou_min",    "annotator", "jobs"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.count(it.key()))
            throw InputError(path.string() + ": unknown config key \"" + it.key() + "\"");

    RunConfig cfg;
    maybe_get(j, "assoc_threshold", cfg.assoc_threshold, path);
    maybe_get(j, "eval_threshold", cfg.eval_threshold, path);
    maybe_get(j, "preference", cfg.preference, path);
    maybe_get(j, "policy", cfg.policy, path);
    maybe_get(j, "box_side", cfg.box_side, path);
    maybe_get(j, "patch_side", cfg.patch_side, path);
    maybe_get(j, "class_id", cfg.class_id, path);
    maybe_get(j, "iou_min", cfg.iou_min, path);
    maybe_get(j, "jobs", cfg.jobs, path);
    if (auto it = j.find("annotator"); it != j.end()) {
        const json& a = *it;
        static const std::set<std::string> known_ann = {
            "ground_radius",  "min_ground_points", "max_range",
            "occlusion_margin", "cluster_eps",     "cluster_min_pts",
            "ground_adjacency", "min_component_px", "small_cluster_px"};
        for (auto ait = a.begin(); ait != a.end(); ++ait)
            if (!known_ann.count(ait.key()))
                throw InputError(path.string() + ": unknown annotator key \"" + ait.key() + "\"");
        maybe_get(a, "ground_radius", cfg.annotator.ground_radius, path);
        maybe_get(a, "min_ground_points", cfg.annotator.min_ground_points, path);
        maybe_get(a, "max_range", cfg.annotator.max_range, path);
        maybe_get(a, "occlusion_margin", cfg.annotator.occlusion_margin, path);
        maybe_get(a, "cluster_eps", cfg.annotator.cluster_eps, path);
        maybe_get(a, "cluster_min_pts", cfg.annotator.cluster_min_pts, path);
        maybe_get(a, "ground_adjacency", cfg.annotator.ground_adjacency, path);
        maybe_get(a, "min_component_px", cfg.annotator.min_component_px, path);
        maybe_get(a, "small_cluster_px", cfg.annotator.small_cluster_px, path);
    }
    return cfg;
}

// ---------------------------------------------------------------------------
// Small I/O helpers
// ---------------------------------------------------------------------------

void write_text(const std::string& bytes, const std::string& out) {
    if (out == "-") {
        std::fwrite(bytes.data(), 1, bytes.size(), stdout);
        return;
    }
    std::ofstream f(out, std::ios::binary);
    if (!f) throw InputError("cannot open output file: " + out);
    f << bytes;
    if (!f) throw InputError("write failed: " + out);
}

std::string sanitize_filename(std::string id) {
    for (char& c : id)
        if (c == '/' || c == '\\') c = '_';
    return id;
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == ',') {
            if (i > start) out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

std::set<int> parse_class_set(const std::string& s, const char* what) {
    std::set<int> out;
    for (const auto& tok : split_csv(s)) {
        try {
            std::size_t used = 0;
            const int v = std::stoi(tok, &used);
            if (used != tok.size()) throw std::invalid_argument("trailing");
            out.insert(v);
        } catch (const std::exception&) {
            throw InputError(std::string(what) + ": bad class id \"" + tok + "\"");
        }
    }
    if (out.empty()) throw InputError(std::string(what) + ": empty class set");
    return out;
}

// ---------------------------------------------------------------------------
// LabelSplit interchange (output of `fuse`, input of `mask`/`export-labels`)
// ---------------------------------------------------------------------------

struct SplitImage {
    std::string id;
    int width = 0;
    int height = 0;
    std::optional<std::string> raster;
    std::vector<FusedAnnotation> confident;
    std::vector<FusedAnnotation> ambiguous;
};

struct SplitFile {
    std::string policy;
    std::vector<std::string> preference;
    double threshold = 0.0;
    std::vector<SplitImage> images;
};

json fused_to_json(const FusedAnnotation& a) {
    json j;
    j["u"] = a.u;
    j["v"] = a.v;
    j["chosen_source"] = a.chosen_source;
    j["sources"] = a.contributing_sources;
    j["degree"] = a.consensus_degree;
    return j;
}

FusedAnnotation fused_from_json(const json& j, const std::string& image_id) {
    if (!j.is_object() || !j.contains("u") || !j.contains("v") || !j.contains("chosen_source") ||
        !j.contains("sources") || !j.contains("degree"))
        throw InputError("split file: malformed fused annotation in image \"" + image_id + "\"");
    FusedAnnotation a;
    a.image_id = image_id;
    a.u = j["u"].get<double>();
    a.v = j["v"].get<double>();
    a.chosen_source = j["chosen_source"].get<std::string>();
    a.contributing_sources = j["sources"].get<std::vector<std::string>>();
    a.consensus_degree = j["degree"].get<int>();
    return a;
}

std::string split_to_string(const SplitFile& split) {
    json j;
    j["policy"] = split.policy;
    j["preference"] = split.preference;
    j["threshold"] = split.threshold;
    json images = json::array();
    for (const auto& img : split.images) {
        json ji;
        ji["id"] = img.id;
        ji["width"] = img.width;
        ji["height"] = img.height;
        if (img.raster) ji["raster"] = *img.raster;
        json conf = json::array(), ambi = json::array();
        for (const auto& a : img.confident) conf.push_back(fused_to_json(a));
        for (const auto& a : img.ambiguous) ambi.push_back(fused_to_json(a));
        ji["confident"] = std::move(conf);
        ji["ambiguous"] = std::move(ambi);
        images.push_back(std::move(ji));
    }
    j["images"] = std::move(images);
    return j.dump(2) + "\n";
}

SplitFile load_split(const fs::path& path) {
    const json j = load_json_file(path);
    if (!j.is_object() || !j.contains("images"))
        throw InputError(path.string() + ": not a label-split file");
    SplitFile split;
    if (j.contains("policy")) split.policy = j["policy"].get<std::string>();
    if (j.contains("preference"))
        split.preference = j["preference"].get<std::vector<std::string>>();
    if (j.contains("threshold")) split.threshold = j["threshold"].get<double>();
    for (const auto& ji : j["images"]) {
        SplitImage img;
        if (!ji.is_object() || !ji.contains("id") || !ji.contains("width") ||
            !ji.contains("height"))
            throw InputError(path.string() + ": malformed image entry");
        img.id = ji["id"].get<std::string>();
        img.width = ji["width"].get<int>();
        img.height = ji["height"].get<int>();
        if (ji.contains("raster") && !ji["raster"].is_null())
            img.raster = ji["raster"].get<std::string>();
        if (ji.contains("confident"))
            for (const auto& ja : ji["confident"]) img.confident.push_back(fused_from_json(ja, img.id));
        if (ji.contains("ambiguous"))
            for (const auto& ja : ji["ambiguous"]) img.ambiguous.push_back(fused_from_json(ja, img.id));
        split.images.push_back(std::move(img));
    }
    return split;
}

// ---------------------------------------------------------------------------
// Detections file: JSON array of {image_id, cx, cy, w, h (px), confidence}
// ---------------------------------------------------------------------------

std::vector<Detection> load_detections(const fs::path& path) {
    const json j = load_json_file(path);
    if (!j.is_array()) throw InputError(path.string() + ": detections must be a JSON array");
    std::vector<Detection> dets;
    std::size_t n = 0;
    for (const auto& jd : j) {
        const std::string where = path.string() + ": detection " + std::to_string(n++);
        if (!jd.is_object()) throw InputError(where + ": must be an object");
        for (const char* key : {"image_id", "cx", "cy", "w", "h"})
            if (!jd.contains(key)) throw InputError(where + ": missing \"" + key + "\"");
        if (!jd.contains("confidence") || jd["confidence"].is_null())
            throw InputError(where + ": missing confidence (required for PR evaluation)");
        Detection d;
        d.image_id = jd["image_id"].get<std::string>();
        d.box.cx = jd["cx"].get<double>();
        d.box.cy = jd["cy"].get<double>();
        d.box.w = jd["w"].get<double>();
        d.box.h = jd["h"].get<double>();
        d.confidence = jd["confidence"].get<double>();
        if (!(d.confidence >= 0.0 && d.confidence <= 1.0))
            throw InputError(where + ": confidence out of [0,1]");
        if (!(d.box.w > 0.0) || !(d.box.h > 0.0))
            throw InputError(where + ": box sides must be positive");
        dets.push_back(std::move(d));
    }
    return dets;
}

// ---------------------------------------------------------------------------
// Subcommand state
// ---------------------------------------------------------------------------

struct CliState {
    RunConfig cfg;
    bool lenient = false;

    // annotate
    std::string ann_kind;
    std::string map_path, pose_path, camera_path, cloud_path, mask_path;
    std::string pole_classes, ground_classes;
    std::string image_id, raster, source_override;

    // fuse
    std::string dataset_path, policy_text, order_csv;
    double threshold = 0.0;

    // mask / export-labels
    std::string split_path, root_dir, out_dir;

    // eval / pr-curve
    std::string eval_mode;
    std::string candidates_source, reference_path, detections_path;
    double t_eval = 0.0, iou_min = 0.0;
    std::string pr_csv_path, svg_path;

    // simulate
    int n_images = 100;
    std::string poles_range = "2:6";
    int width = 1280, height = 720;
    double min_sep = 40.0;
    std::uint64_t seed = 0;
    std::vector<std::string> profile_specs;

    std::string out = "-";
};

AnnotatorParams add_annotator_flags(CLI::App* sub, CliState& st) {
    auto& p = st.cfg.annotator;
    sub->add_option("--ground-radius", p.ground_radius,
                    "Ground-point search radius around a map pole, m")
        ->capture_default_str();
    sub->add_option("--min-ground-points", p.min_ground_points,
                    "Ground points required within the radius")
        ->capture_default_str();
    sub->add_option("--max-range", p.max_range, "Horizontal range cutoff for map poles, m")
        ->capture_default_str();
    sub->add_option("--occlusion-margin", p.occlusion_margin,
                    "Depth margin of the occlusion check, m")
        ->capture_default_str();
    sub->add_option("--cluster-eps", p.cluster_eps, "Lidar cluster connectivity radius, m")
        ->capture_default_str();
    sub->add_option("--cluster-min-pts", p.cluster_min_pts, "Minimum lidar cluster size")
        ->capture_default_str();
    sub->add_option("--ground-adjacency", p.ground_adjacency,
                    "Vertical pixel distance to ground pixels")
        ->capture_default_str();
    sub->add_option("--min-component-px", p.min_component_px,
                    "Large pole-component pixel threshold")
        ->capture_default_str();
    sub->add_option("--small-cluster-px", p.small_cluster_px,
                    "Small ground-touching component pixel threshold")
        ->capture_default_str();
    return p;
}

// ---------------------------------------------------------------------------
// annotate
// ---------------------------------------------------------------------------

int cmd_annotate(const CliState& st) {
    AnnotationSet set;
    int width = 0, height = 0;
    std::string default_id, default_source;

    if (st.ann_kind == "map" || st.ann_kind == "lidar") {
        const CameraModel cam = load_camera(st.camera_path);
        const Pose pose = load_pose(st.pose_path);
        const LabeledCloud cloud = load_cloud(st.cloud_path);
        default_id = fs::path(st.cloud_path).stem().string();
        width = cam.width;
        height = cam.height;
        const std::string id = st.image_id.empty() ? default_id : st.image_id;
        if (st.ann_kind == "map") {
            default_source = "M";
            const SourceId src = st.source_override.empty() ? default_source : st.source_override;
            set = map_annotate(load_map(st.map_path), pose, cam, cloud, st.cfg.annotator, id, src);
        } else {
            default_source = "L";
            const SourceId src = st.source_override.empty() ? default_source : st.source_override;
            set = lidar_annotate(cloud, pose, cam, st.cfg.annotator, id, src);
        }
    } else {  // seg
        const SemanticMask mask =
            load_mask(st.mask_path, parse_class_set(st.pole_classes, "--pole-classes"),
                      parse_class_set(st.ground_classes, "--ground-classes"));
        width = mask.raster.width;
        height = mask.raster.height;
        default_id = fs::path(st.mask_path).stem().string();
        const std::string id = st.image_id.empty() ? default_id : st.image_id;
        const SourceId src = st.source_override.empty() ? "S" : st.source_override;
        set = seg_annotate(mask, st.cfg.annotator, id, src);
    }

    Dataset d;
    d.sources = {set.source};
    ImageRecord img;
    img.id = set.image_id;
    img.width = width;
    img.height = height;
    if (!st.raster.empty()) img.raster = st.raster;
    img.annotations = {set};
    d.images.push_back(std::move(img));
    validate_dataset(d);
    write_text(dataset_to_string(d), st.out);
    return 0;
}

// ---------------------------------------------------------------------------
// fuse
// ---------------------------------------------------------------------------

PreferenceOrder resolve_order(const CliState& st, const Dataset& d) {
    PreferenceOrder order;
    if (!st.order_csv.empty())
        order = split_csv(st.order_csv);
    else if (!st.cfg.preference.empty())
        order = st.cfg.preference;
    else
        order = d.sources;  // declaration order
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (!d.source_index(order[i]))
            throw InputError("preference order names unknown source \"" + order[i] + "\"");
        for (std::size_t j = 0; j < i; ++j)
            if (order[j] == order[i])
                throw InputError("preference order repeats source \"" + order[i] + "\"");
    }
    return order;
}

int cmd_fuse(const CliState& st) {
    const std::string policy_text = st.policy_text.empty() ? st.cfg.policy : st.policy_text;
    if (policy_text.empty())
        throw InputError("no consensus policy: pass --policy or set it in the config file");
    const Dataset d = load_dataset(st.dataset_path, !st.lenient);
    const ConsensusPolicy policy = parse_policy(policy_text);
    bind_policy(policy, d.sources);
    const PreferenceOrder order = resolve_order(st, d);
    const AssocConfig assoc_cfg{st.threshold};

    std::vector<LabelSplit> splits(d.images.size());
    parallel_for(d.images.size(), st.cfg.jobs, [&](std::size_t i) {
        const auto clusters = build_clusters(d.images[i].annotations, assoc_cfg);
        splits[i] = split_labels(clusters, policy, order);
    });

    SplitFile out;
    out.policy = policy_text;
    out.preference = order;
    out.threshold = st.threshold;
    std::map<int, std::size_t> degree_histogram;
    std::size_t n_confident = 0, n_ambiguous = 0;
    for (std::size_t i = 0; i < d.images.size(); ++i) {
        SplitImage img;
        img.id = d.images[i].id;
        img.width = d.images[i].width;
        img.height = d.images[i].height;
        img.raster = d.images[i].raster;
        img.confident = splits[i].confident;
        img.ambiguous = splits[i].ambiguous;
        for (const auto& a : img.confident) ++degree_histogram[a.consensus_degree];
        for (const auto& a : img.ambiguous) ++degree_histogram[a.consensus_degree];
        n_confident += img.confident.size();
        n_ambiguous += img.ambiguous.size();
        out.images.push_back(std::move(img));
    }

    write_text(split_to_string(out), st.out);

    std::ostream& summary = (st.out == "-") ? std::cerr : std::cout;
    summary << "consensus-degree histogram\n";
    summary << "degree  clusters\n";
    for (const auto& [degree, count] : degree_histogram) {
        char line[64];
        std::snprintf(line, sizeof(line), "%6d  %8zu\n", degree, count);
        summary << line;
    }
    summary << "A* (confident): " << n_confident << "   ambiguous: " << n_ambiguous
            << "   (policy: " << policy_text << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// mask / export-labels
// ---------------------------------------------------------------------------

fs::path masked_name(const fs::path& raster) {
    fs::path out = raster;
    out.replace_filename(raster.stem().string() + "_masked" + raster.extension().string());
    return out;
}

int cmd_mask(const CliState& st) {
    const SplitFile split = load_split(st.split_path);
    const fs::path root =
        st.root_dir.empty() ? fs::path(st.split_path).parent_path() : fs::path(st.root_dir);
    ExportConfig cfg;
    cfg.patch_side = st.cfg.patch_side;

    std::vector<std::string> written(split.images.size());
    parallel_for(split.images.size(), st.cfg.jobs, [&](std::size_t i) {
        const auto& img = split.images[i];
        if (!img.raster) {
            if (!img.ambiguous.empty())
                throw InputError("image \"" + img.id +
                                 "\" has ambiguous annotations but no raster to mask");
            return;
        }
        const fs::path raster_path = root / *img.raster;
        ImageBuffer raster = read_image(raster_path);
        if (raster.width != img.width || raster.height != img.height)
            throw InputError("image \"" + img.id + "\": raster is " +
                             std::to_string(raster.width) + "x" + std::to_string(raster.height) +
                             " but the split declares " + std::to_string(img.width) + "x" +
                             std::to_string(img.height));
        const auto patches = make_patches(img.ambiguous, img.width, img.height, cfg);
        apply_patches(raster, patches);
        const fs::path out_path = masked_name(raster_path);
        write_image(raster, out_path);
        written[i] = out_path.string();
    });

    for (const auto& w : written)
        if (!w.empty()) std::cout << w << "\n";
    return 0;
}

int cmd_export_labels(const CliState& st) {
    const SplitFile split = load_split(st.split_path);
    ExportConfig cfg;
    cfg.box_side = st.cfg.box_side;
    cfg.class_id = st.cfg.class_id;
    fs::create_directories(st.out_dir);

    parallel_for(split.images.size(), st.cfg.jobs, [&](std::size_t i) {
        const auto& img = split.images[i];
        const std::string text = export_labels(img.confident, img.width, img.height, cfg);
        const fs::path out_path = fs::path(st.out_dir) / (sanitize_filename(img.id) + ".txt");
        std::ofstream f(out_path, std::ios::binary);
        if (!f) throw InputError("cannot open output file: " + out_path.string());
        f << text;
    });
    std::cout << "wrote " << split.images.size() << " label file(s) to " << st.out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval / pr-curve
// ---------------------------------------------------------------------------

std::map<std::string, std::vector<PointAnnotation>> reference_by_image(const Dataset& d,
                                                                       const std::string& path) {
    bool any = false;
    for (const auto& img : d.images) any = any || img.reference.has_value();
    if (!any)
        throw InputError(path + ": dataset carries no reference annotations to evaluate against");
    std::map<std::string, std::vector<PointAnnotation>> ref;
    for (const auto& img : d.images)
        ref[img.id] = img.reference ? *img.reference : std::vector<PointAnnotation>{};
    return ref;
}

int cmd_eval_points(const CliState& st) {
    // Candidates: one dataset source, or the confident set of a label split.
    std::map<std::string, std::vector<PointAnnotation>> candidates;
    std::string method_label;
    if (!st.split_path.empty()) {
        const SplitFile split = load_split(st.split_path);
        for (const auto& img : split.images) {
            auto& pts = candidates[img.id];
            for (const auto& a : img.confident) {
                PointAnnotation p;
                p.image_id = img.id;
                p.u = a.u;
                p.v = a.v;
                pts.push_back(std::move(p));
            }
        }
        method_label = split.policy.empty() ? "fused" : split.policy;
    } else {
        if (st.candidates_source.empty())
            throw InputError("eval points needs --split, or --dataset with --source");
        const Dataset d = load_dataset(st.dataset_path, !st.lenient);
        const auto idx = d.source_index(st.candidates_source);
        if (!idx) throw InputError("unknown source \"" + st.candidates_source + "\"");
        for (const auto& img : d.images) candidates[img.id] = img.annotations[*idx].annotations;
        method_label = st.candidates_source;
    }

    const std::string ref_path = st.reference_path.empty() ? st.dataset_path : st.reference_path;
    if (ref_path.empty()) throw InputError("eval points needs a reference (--reference)");
    const Dataset ref_dataset = load_dataset(ref_path, !st.lenient);
    const auto reference = reference_by_image(ref_dataset, ref_path);
    for (const auto& [id, pts] : candidates)
        if (!reference.count(id))
            throw InputError("candidate image \"" + id + "\" is absent from the reference");

    std::vector<MatchOutcome> outcomes(ref_dataset.images.size());
    parallel_for(ref_dataset.images.size(), st.cfg.jobs, [&](std::size_t i) {
        const auto& img = ref_dataset.images[i];
        static const std::vector<PointAnnotation> kEmpty;
        auto cit = candidates.find(img.id);
        const auto& cand = cit == candidates.end() ? kEmpty : cit->second;
        outcomes[i] = match_points(cand, reference.at(img.id), st.t_eval);
    });

    const MetricsReport report = point_metrics(outcomes);
    std::cout << metrics_table(method_label, report);
    if (st.out != "-") write_text(metrics_to_json(report).dump(2) + "\n", st.out);
    return 0;
}

struct DetectionEval {
    PRCurve curve;
    MetricsReport report;
};

DetectionEval eval_detections(const CliState& st) {
    const std::vector<Detection> detections = load_detections(st.detections_path);
    if (st.reference_path.empty()) throw InputError("detections mode needs --reference");
    const Dataset ref_dataset = load_dataset(st.reference_path, !st.lenient);
    const auto reference = reference_by_image(ref_dataset, st.reference_path);

    std::map<std::string, std::vector<BBoxLabel>> ref_boxes;
    for (const auto& img : ref_dataset.images) {
        auto& boxes = ref_boxes[img.id];
        for (const auto& p : reference.at(img.id))
            boxes.push_back(box_from_point(p.u, p.v, st.cfg.box_side, img.width, img.height,
                                           st.cfg.class_id));
    }

    DetectionEval out;
    out.curve = pr_curve(detections, ref_boxes, st.iou_min);
    std::size_t total_refs = 0;
    for (const auto& [id, boxes] : ref_boxes) total_refs += boxes.size();
    std::size_t tp = 0;
    if (!out.curve.samples.empty()) {
        const auto& last = out.curve.samples.back();
        tp = static_cast<std::size_t>(std::llround(last.recall * static_cast<double>(total_refs)));
    }
    out.report = metrics_from_counts(tp, detections.size() - tp, total_refs - tp);
    return out;
}

int cmd_eval_detections(const CliState& st) {
    const DetectionEval ev = eval_detections(st);
    char line[160];
    std::snprintf(line, sizeof(line),
                  "detections: %zu  TP: %zu  FP: %zu  FN: %zu  Prec. %.1f  Rec. %.1f\n",
                  ev.report.number, ev.report.tp, ev.report.fp, ev.report.fn,
                  100.0 * ev.report.precision, 100.0 * ev.report.recall);
    std::cout << line;
    if (st.out != "-") write_text(metrics_to_json(ev.report).dump(2) + "\n", st.out);
    if (!st.pr_csv_path.empty()) write_text(pr_curve_csv(ev.curve), st.pr_csv_path);
    return 0;
}

int cmd_pr_curve(const CliState& st) {
    const DetectionEval ev = eval_detections(st);
    write_text(pr_curve_csv(ev.curve), st.pr_csv_path.empty() ? st.out : st.pr_csv_path);
    if (!st.svg_path.empty()) write_text(pr_curve_svg(ev.curve), st.svg_path);
    return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

SourceProfile parse_profile(const std::string& spec) {
    const auto colon = spec.find(':');
    if (colon == std::string::npos || colon == 0)
        throw InputError("profile \"" + spec + "\": expected NAME:recall,fp_per_image,sigma");
    SourceProfile p;
    p.name = spec.substr(0, colon);
    const auto fields = split_csv(spec.substr(colon + 1));
    if (fields.size() != 3)
        throw InputError("profile \"" + spec + "\": expected NAME:recall,fp_per_image,sigma");
    try {
        p.recall = std::stod(fields[0]);
        p.fp_per_image = std::stod(fields[1]);
        p.noise_sigma = std::stod(fields[2]);
    } catch (const std::exception&) {
        throw InputError("profile \"" + spec + "\": bad number");
    }
    return p;
}

int cmd_simulate(const CliState& st) {
    SceneConfig scene;
    scene.n_images = st.n_images;
    const auto colon = st.poles_range.find(':');
    try {
        if (colon == std::string::npos) {
            scene.poles_min = scene.poles_max = std::stoi(st.poles_range);
        } else {
            scene.poles_min = std::stoi(st.poles_range.substr(0, colon));
            scene.poles_max = std::stoi(st.poles_range.substr(colon + 1));
        }
    } catch (const std::exception&) {
        throw InputError("--poles expects MIN:MAX or a single count");
    }
    scene.width = st.width;
    scene.height = st.height;
    scene.min_separation = st.min_sep;
    scene.seed = st.seed;

    std::vector<SourceProfile> profiles;
    for (const auto& spec : st.profile_specs) profiles.push_back(parse_profile(spec));
    if (profiles.empty()) throw InputError("simulate needs at least one --profile");

    const Dataset d = simulate_dataset(scene, profiles);
    write_text(dataset_to_string(d), st.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CliState st;

    // The config file must be known before option defaults are registered.
    std::string config_path;
    for (int i = 1; i + 1 < argc; ++i)
        if (std::string(argv[i]) == "--config") config_path = argv[i + 1];
    if (config_path.empty())
        if (const char* env = std::getenv("ANNOFUSE_CONFIG")) config_path = env;

    try {
        if (!config_path.empty()) st.cfg = load_config(config_path);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    st.threshold = st.cfg.assoc_threshold;
    st.t_eval = st.cfg.eval_threshold;
    st.iou_min = st.cfg.iou_min;

    CLI::App app{"annofuse: multi-source pole-base annotation fusion toolkit"};
    app.require_subcommand(1);
    app.add_option("--config", config_path,
                   "JSON config file with defaults (env: ANNOFUSE_CONFIG)");
    app.add_flag("--lenient", st.lenient, "Accept unknown keys in dataset files");
    app.add_option("--jobs", st.cfg.jobs, "Per-image worker threads")->capture_default_str();

    // annotate
    auto* annotate = app.add_subcommand("annotate", "Run one automatic annotation backend");
    annotate->require_subcommand(1);
    for (const char* kind : {"map", "seg", "lidar"}) {
        auto* sub = annotate->add_subcommand(
            kind, std::string("Annotate pole bases (source ") +
                      (kind[0] == 'm' ? "M" : kind[0] == 's' ? "S" : "L") + ")");
        sub->add_option("--image-id", st.image_id, "Image id (default: input file stem)");
        sub->add_option("--raster", st.raster, "Raster path stored in the dataset");
        sub->add_option("--source", st.source_override, "Source name override");
        sub->add_option("--out", st.out, "Output dataset JSON ('-' for stdout)")
            ->capture_default_str();
        if (std::string(kind) == "seg") {
            sub->add_option("--mask", st.mask_path, "Semantic mask (PNG single channel or PGM)")
                ->required();
            sub->add_option("--pole-classes", st.pole_classes, "Comma-separated pole class ids")
                ->required();
            sub->add_option("--ground-classes", st.ground_classes,
                            "Comma-separated ground class ids")
                ->required();
        } else {
            sub->add_option("--pose", st.pose_path, "Pose JSON (world to camera)")->required();
            sub->add_option("--camera", st.camera_path, "Camera JSON")->required();
            sub->add_option("--cloud", st.cloud_path, "Labeled cloud (CSV or PLY)")->required();
            if (std::string(kind) == "map")
                sub->add_option("--map", st.map_path, "Map JSON: array of [E, N]")->required();
        }
        add_annotator_flags(sub, st);
        sub->callback([&st, kind] { st.ann_kind = kind; });
    }

    // fuse
    auto* fuse = app.add_subcommand("fuse", "Associate and fuse a multi-source dataset");
    fuse->add_option("--dataset", st.dataset_path, "Dataset JSON")->required();
    fuse->add_option("--policy", st.policy_text,
                     "Consensus policy, e.g. \"M&S\", \"M|S|L\", \"atleast(3)\"");
    fuse->add_option("--order", st.order_csv,
                     "Preference order, highest first (default: dataset order)");
    fuse->add_option("--threshold,-T", st.threshold, "Association threshold T, px")
        ->capture_default_str();
    fuse->add_option("--out", st.out, "Output split JSON ('-' for stdout)")
        ->capture_default_str();

    // mask
    auto* mask = app.add_subcommand("mask", "Black-patch ambiguous annotations on the rasters");
    mask->add_option("--split", st.split_path, "Label-split JSON from `fuse`")->required();
    mask->add_option("--root", st.root_dir, "Raster root (default: split file directory)");
    mask->add_option("--patch-side", st.cfg.patch_side, "Patch side, px")->capture_default_str();

    // export-labels
    auto* exportl = app.add_subcommand("export-labels",
                                       "Write detector-training label files (one .txt per image)");
    exportl->add_option("--split", st.split_path, "Label-split JSON from `fuse`")->required();
    exportl->add_option("--out-dir", st.out_dir, "Output directory")->required();
    exportl->add_option("--box-side", st.cfg.box_side, "Label box side, px")
        ->capture_default_str();
    exportl->add_option("--class-id", st.cfg.class_id, "Class id")->capture_default_str();

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate annotations or detections");
    eval->require_subcommand(1);
    auto* evalp = eval->add_subcommand("points", "Point matching: precision/recall/MAE-x");
    evalp->add_option("--dataset", st.dataset_path, "Dataset JSON (candidates and reference)");
    evalp->add_option("--source", st.candidates_source, "Candidate source name");
    evalp->add_option("--split", st.split_path, "Use a split's confident set as candidates");
    evalp->add_option("--reference", st.reference_path,
                      "Reference dataset (default: --dataset)");
    evalp->add_option("--t-eval", st.t_eval, "Evaluation matching threshold, px")
        ->capture_default_str();
    evalp->add_option("--out", st.out, "Metrics JSON output ('-' to skip)")
        ->capture_default_str();
    auto* evald = eval->add_subcommand("detections", "Box IoU detection evaluation");
    evald->add_option("--detections", st.detections_path, "Detections JSON")->required();
    evald->add_option("--reference", st.reference_path, "Reference dataset JSON")->required();
    evald->add_option("--iou-min", st.iou_min, "IoU threshold for a TP")->capture_default_str();
    evald->add_option("--box-side", st.cfg.box_side, "Reference box side, px")
        ->capture_default_str();
    evald->add_option("--out", st.out, "Metrics JSON output ('-' to skip)")
        ->capture_default_str();
    evald->add_option("--pr-csv", st.pr_csv_path, "Also write the PR curve CSV");

    // pr-curve
    auto* prc = app.add_subcommand("pr-curve", "Precision-recall curve for detections");
    prc->add_option("--detections", st.detections_path, "Detections JSON")->required();
    prc->add_option("--reference", st.reference_path, "Reference dataset JSON")->required();
    prc->add_option("--iou-min", st.iou_min, "IoU threshold for a TP")->capture_default_str();
    prc->add_option("--box-side", st.cfg.box_side, "Reference box side, px")
        ->capture_default_str();
    prc->add_option("--csv", st.pr_csv_path, "Output CSV path ('-' for stdout)");
    prc->add_option("--svg", st.svg_path, "Optional SVG plot path");

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate a synthetic multi-source dataset");
    sim->add_option("--images", st.n_images, "Number of images")->capture_default_str();
    sim->add_option("--poles", st.poles_range, "Poles per image, MIN:MAX or a single count")
        ->capture_default_str();
    sim->add_option("--width", st.width, "Image width, px")->capture_default_str();
    sim->add_option("--height", st.height, "Image height, px")->capture_default_str();
    sim->add_option("--min-sep", st.min_sep, "Minimum pole separation, px")
        ->capture_default_str();
    sim->add_option("--seed", st.seed, "Generator seed")->capture_default_str();
    sim->add_option("--profile", st.profile_specs,
                    "Source profile NAME:recall,fp_per_image,sigma (repeatable)");
    sim->add_option("--out", st.out, "Output dataset JSON ('-' for stdout)")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (annotate->parsed()) return cmd_annotate(st);
        if (fuse->parsed()) return cmd_fuse(st);
        if (mask->parsed()) return cmd_mask(st);
        if (exportl->parsed()) return cmd_export_labels(st);
        if (eval->parsed()) return evalp->parsed() ? cmd_eval_points(st) : cmd_eval_detections(st);
        if (prc->parsed()) return cmd_pr_curve(st);
        if (sim->parsed()) return cmd_simulate(st);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        // json type/parse errors only arise from user-supplied files here
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
