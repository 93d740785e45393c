#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "annofuse/types.hpp"

namespace annofuse {

/// Result of matching one image's candidates against its reference points.
struct MatchOutcome {
    std::vector<std::pair<PointAnnotation, PointAnnotation>> tp;  // (candidate, reference)
    std::vector<PointAnnotation> fp;  // unmatched candidates
    std::vector<PointAnnotation> fn;  // unmatched references
};

/// Aggregated counts and derived metrics (Number, FP, TP, FN, Prec., Rec., MAE-x).
struct MetricsReport {
    std::size_t number = 0;  // candidate count == tp + fp
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0.0;          // tp / (tp + fp), 0 when undefined
    double recall = 0.0;             // tp / (tp + fn), 0 when undefined
    std::optional<double> mae_x;     // median |u_cand - u_ref| over TP pairs
};

struct Detection {
    std::string image_id;
    BBoxLabel box;
    double confidence = 0.0;  // required, in [0,1]
};

struct PRSample {
    double threshold = 0.0;  // confidence of the detection that produced the sample
    double recall = 0.0;
    double precision = 0.0;
};

/// Samples ordered by descending confidence threshold; recall non-decreasing.
struct PRCurve {
    std::vector<PRSample> samples;
};

/// Greedy unique matching in ascending Euclidean distance among all
/// candidate-reference pairs with distance strictly below t_eval. Ties break
/// by (candidate index, reference index). Each candidate and each reference
/// is used at most once.
MatchOutcome match_points(const std::vector<PointAnnotation>& candidates,
                          const std::vector<PointAnnotation>& reference, double t_eval);

/// Sums counts over images; the MAE-x median pools TP pairs of all images
/// (even count: mean of the two central values).
MetricsReport point_metrics(const std::vector<MatchOutcome>& outcomes);

/// Metrics derived from bare counts, for fixture tables.
MetricsReport metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

/// Square box of side `side` centered on (u, v), clipped to the image before
/// anything else: clipping moves only the affected edge, and center/size are
/// recomputed from the clipped rectangle. (u, v) must lie inside the image.
BBoxLabel box_from_point(double u, double v, double side, int width, int height,
                         int class_id = 0);

/// Intersection over union of two center-format boxes; 0 when disjoint.
double iou(const BBoxLabel& a, const BBoxLabel& b);

/// Standard cumulative PR scan: detections sorted by descending confidence
/// (ties by image id, then input order); a detection is a TP if its
/// best-IoU unmatched reference in its image reaches iou_min, else an FP.
/// One (recall, precision) sample is emitted per detection; recall uses the
/// total reference count.
PRCurve pr_curve(const std::vector<Detection>& detections,
                 const std::map<std::string, std::vector<BBoxLabel>>& reference_boxes,
                 double iou_min);

/// Aligned-column text table mirroring the usual annotation-evaluation
/// layout; `method` labels the row. Percentages with one decimal, MAE-x with
/// two.
std::string metrics_table(const std::string& method, const MetricsReport& r);

nlohmann::json metrics_to_json(const MetricsReport& r);

/// CSV rendering: header `threshold,recall,precision` plus one row per sample.
std::string pr_curve_csv(const PRCurve& curve);

/// Minimal standalone SVG plot of the curve.
std::string pr_curve_svg(const PRCurve& curve);

}  // namespace annofuse
