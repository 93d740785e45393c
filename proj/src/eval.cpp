#include "annofuse/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "annofuse/util.hpp"

namespace annofuse {

MatchOutcome match_points(const std::vector<PointAnnotation>& candidates,
                          const std::vector<PointAnnotation>& reference, double t_eval) {
    struct Edge {
        double distance;
        std::size_t cand, ref;
    };
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        for (std::size_t j = 0; j < reference.size(); ++j) {
            const double d = point_distance(candidates[i], reference[j]);
            if (d < t_eval) edges.push_back({d, i, j});
        }
    }
    std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        if (a.cand != b.cand) return a.cand < b.cand;
        return a.ref < b.ref;
    });

    std::vector<bool> cand_used(candidates.size(), false), ref_used(reference.size(), false);
    MatchOutcome out;
    for (const auto& e : edges) {
        if (cand_used[e.cand] || ref_used[e.ref]) continue;
        cand_used[e.cand] = true;
        ref_used[e.ref] = true;
        out.tp.emplace_back(candidates[e.cand], reference[e.ref]);
    }
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (!cand_used[i]) out.fp.push_back(candidates[i]);
    for (std::size_t j = 0; j < reference.size(); ++j)
        if (!ref_used[j]) out.fn.push_back(reference[j]);
    return out;
}

MetricsReport point_metrics(const std::vector<MatchOutcome>& outcomes) {
    std::size_t tp = 0, fp = 0, fn = 0;
    std::vector<double> abs_du;
    for (const auto& o : outcomes) {
        tp += o.tp.size();
        fp += o.fp.size();
        fn += o.fn.size();
        for (const auto& [cand, ref] : o.tp) abs_du.push_back(std::abs(cand.u - ref.u));
    }
    MetricsReport r = metrics_from_counts(tp, fp, fn);
    if (!abs_du.empty()) r.mae_x = median(std::move(abs_du));
    return r;
}

MetricsReport metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    MetricsReport r;
    r.tp = tp;
    r.fp = fp;
    r.fn = fn;
    r.number = tp + fp;
    if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return r;
}

BBoxLabel box_from_point(double u, double v, double side, int width, int height, int class_id) {
    if (!(side > 0.0)) throw InputError("box side must be positive");
    if (width <= 0 || height <= 0) throw InputError("image dimensions must be positive");
    if (!(u >= 0.0 && u < width && v >= 0.0 && v < height))
        throw InputError("annotation (" + std::to_string(u) + ", " + std::to_string(v) +
                         ") out of image bounds");
    const double left = std::max(0.0, u - side / 2.0);
    const double right = std::min(static_cast<double>(width), u + side / 2.0);
    const double top = std::max(0.0, v - side / 2.0);
    const double bottom = std::min(static_cast<double>(height), v + side / 2.0);
    BBoxLabel box;
    box.class_id = class_id;
    box.cx = 0.5 * (left + right);
    box.cy = 0.5 * (top + bottom);
    box.w = right - left;
    box.h = bottom - top;
    return box;
}

double iou(const BBoxLabel& a, const BBoxLabel& b) {
    const double ax0 = a.cx - a.w / 2.0, ax1 = a.cx + a.w / 2.0;
    const double ay0 = a.cy - a.h / 2.0, ay1 = a.cy + a.h / 2.0;
    const double bx0 = b.cx - b.w / 2.0, bx1 = b.cx + b.w / 2.0;
    const double by0 = b.cy - b.h / 2.0, by1 = b.cy + b.h / 2.0;
    const double iw = std::min(ax1, bx1) - std::max(ax0, bx0);
    const double ih = std::min(ay1, by1) - std::max(ay0, by0);
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = a.w * a.h + b.w * b.h - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

PRCurve pr_curve(const std::vector<Detection>& detections,
                 const std::map<std::string, std::vector<BBoxLabel>>& reference_boxes,
                 double iou_min) {
    std::size_t total_refs = 0;
    for (const auto& [id, boxes] : reference_boxes) total_refs += boxes.size();

    std::vector<std::size_t> order(detections.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (detections[a].confidence != detections[b].confidence)
            return detections[a].confidence > detections[b].confidence;
        if (detections[a].image_id != detections[b].image_id)
            return detections[a].image_id < detections[b].image_id;
        return a < b;
    });

    std::map<std::string, std::vector<bool>> matched;
    for (const auto& [id, boxes] : reference_boxes) matched[id].assign(boxes.size(), false);

    PRCurve curve;
    std::size_t tp = 0, fp = 0;
    for (const std::size_t idx : order) {
        const Detection& det = detections[idx];
        auto it = reference_boxes.find(det.image_id);
        if (it == reference_boxes.end())
            throw InputError("detection references unknown image id \"" + det.image_id + "\"");
        const auto& boxes = it->second;
        auto& used = matched[det.image_id];

        double best_iou = 0.0;
        std::size_t best_ref = boxes.size();
        for (std::size_t j = 0; j < boxes.size(); ++j) {
            if (used[j]) continue;
            const double v = iou(det.box, boxes[j]);
            if (v > best_iou) {
                best_iou = v;
                best_ref = j;
            }
        }
        if (best_ref < boxes.size() && best_iou >= iou_min) {
            used[best_ref] = true;
            ++tp;
        } else {
            ++fp;
        }
        PRSample s;
        s.threshold = det.confidence;
        s.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        s.recall = total_refs > 0 ? static_cast<double>(tp) / static_cast<double>(total_refs) : 0.0;
        curve.samples.push_back(s);
    }
    return curve;
}

std::string metrics_table(const std::string& method, const MetricsReport& r) {
    char line[256];
    std::string out = "Method    Number      FP      TP      FN   Prec.    Rec.   MAE-x\n";
    if (r.mae_x) {
        std::snprintf(line, sizeof(line), "%-8s %7zu %7zu %7zu %7zu %7.1f %7.1f %7.2f\n",
                      method.c_str(), r.number, r.fp, r.tp, r.fn, 100.0 * r.precision,
                      100.0 * r.recall, *r.mae_x);
    } else {
        std::snprintf(line, sizeof(line), "%-8s %7zu %7zu %7zu %7zu %7.1f %7.1f %7s\n",
                      method.c_str(), r.number, r.fp, r.tp, r.fn, 100.0 * r.precision,
                      100.0 * r.recall, "-");
    }
    out += line;
    return out;
}

nlohmann::json metrics_to_json(const MetricsReport& r) {
    nlohmann::json j;
    j["number"] = r.number;
    j["tp"] = r.tp;
    j["fp"] = r.fp;
    j["fn"] = r.fn;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["mae_x"] = r.mae_x ? nlohmann::json(*r.mae_x) : nlohmann::json(nullptr);
    return j;
}

std::string pr_curve_csv(const PRCurve& curve) {
    std::string out = "threshold,recall,precision\n";
    char line[128];
    for (const auto& s : curve.samples) {
        std::snprintf(line, sizeof(line), "%.6f,%.6f,%.6f\n", s.threshold, s.recall, s.precision);
        out += line;
    }
    return out;
}

std::string pr_curve_svg(const PRCurve& curve) {
    const int w = 560, h = 460, margin = 50;
    const double plot_w = w - 2 * margin, plot_h = h - 2 * margin;
    auto px = [&](double recall) { return margin + recall * plot_w; };
    auto py = [&](double precision) { return h - margin - precision * plot_h; };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    svg << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "  <rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << plot_w
        << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double t = i / 4.0;
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "  <text x=\"%.1f\" y=\"%d\" font-size=\"12\" text-anchor=\"middle\">"
                      "%.2f</text>\n",
                      px(t), h - margin + 18, t);
        svg << buf;
        std::snprintf(buf, sizeof(buf),
                      "  <text x=\"%d\" y=\"%.1f\" font-size=\"12\" text-anchor=\"end\">"
                      "%.2f</text>\n",
                      margin - 6, py(t) + 4, t);
        svg << buf;
    }
    svg << "  <text x=\"" << (w / 2) << "\" y=\"" << (h - 10)
        << "\" font-size=\"13\" text-anchor=\"middle\">recall</text>\n";
    svg << "  <text x=\"14\" y=\"" << (h / 2)
        << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << (h / 2)
        << ")\">precision</text>\n";
    if (!curve.samples.empty()) {
        svg << "  <polyline fill=\"none\" stroke=\"#c62828\" stroke-width=\"1.5\" points=\"";
        char buf[64];
        for (const auto& s : curve.samples) {
            std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", px(s.recall), py(s.precision));
            svg << buf;
        }
        svg << "\"/>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace annofuse
