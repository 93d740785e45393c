#include "annofuse/annotators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "annofuse/util.hpp"

namespace annofuse {

namespace {

constexpr double kOcclusionPixelRadius = 5.0;  // px around a projected pole base

// Appends unless an annotation with identical coordinates is already present
// (exact duplicates would violate the set invariant downstream).
void emit(AnnotationSet& set, double u, double v) {
    for (const auto& p : set.annotations)
        if (p.u == u && p.v == v) return;
    PointAnnotation a;
    a.image_id = set.image_id;
    a.source = set.source;
    a.u = u;
    a.v = v;
    set.annotations.push_back(std::move(a));
}

void validate_params(const AnnotatorParams& p) {
    const bool ok = p.ground_radius > 0 && p.min_ground_points > 0 && p.max_range > 0 &&
                    p.occlusion_margin > 0 && p.cluster_eps > 0 && p.cluster_min_pts > 0 &&
                    p.ground_adjacency > 0 && p.min_component_px > 0 && p.small_cluster_px > 0;
    if (!ok) throw InputError("annotator parameters must all be positive");
}

void validate_cloud(const LabeledCloud& cloud) {
    if (cloud.points.size() != cloud.labels.size())
        throw InputError("labeled cloud: points/labels size mismatch");
    for (const auto& p : cloud.points)
        if (!p.allFinite()) throw InputError("labeled cloud: non-finite coordinates");
}

// Single-link connectivity (distance < eps) via a uniform grid of cell size
// eps; neighbors can only live in the 27 surrounding cells.
std::vector<std::vector<std::size_t>> euclidean_clusters(const std::vector<Eigen::Vector3d>& pts,
                                                         double eps) {
    struct CellHash {
        std::size_t operator()(const std::array<std::int64_t, 3>& c) const {
            std::size_t h = 1469598103934665603ULL;
            for (auto v : c) {
                h ^= static_cast<std::size_t>(v);
                h *= 1099511628211ULL;
            }
            return h;
        }
    };
    std::unordered_map<std::array<std::int64_t, 3>, std::vector<std::size_t>, CellHash> grid;
    auto cell_of = [eps](const Eigen::Vector3d& p) {
        return std::array<std::int64_t, 3>{static_cast<std::int64_t>(std::floor(p.x() / eps)),
                                           static_cast<std::int64_t>(std::floor(p.y() / eps)),
                                           static_cast<std::int64_t>(std::floor(p.z() / eps))};
    };
    for (std::size_t i = 0; i < pts.size(); ++i) grid[cell_of(pts[i])].push_back(i);

    std::vector<std::size_t> parent(pts.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };

    const double eps_sq = eps * eps;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const auto c = cell_of(pts[i]);
        for (std::int64_t dx = -1; dx <= 1; ++dx)
            for (std::int64_t dy = -1; dy <= 1; ++dy)
                for (std::int64_t dz = -1; dz <= 1; ++dz) {
                    auto it = grid.find({c[0] + dx, c[1] + dy, c[2] + dz});
                    if (it == grid.end()) continue;
                    for (std::size_t j : it->second) {
                        if (j <= i) continue;
                        if ((pts[i] - pts[j]).squaredNorm() < eps_sq) parent[find(i)] = find(j);
                    }
                }
    }

    std::vector<std::vector<std::size_t>> clusters;
    std::unordered_map<std::size_t, std::size_t> slot;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const std::size_t root = find(i);
        auto [it, inserted] = slot.try_emplace(root, clusters.size());
        if (inserted) clusters.emplace_back();
        clusters[it->second].push_back(i);
    }
    return clusters;
}

}  // namespace

AnnotationSet map_annotate(const MapPoles& map_poles, const Pose& pose, const CameraModel& cam,
                           const LabeledCloud& cloud, const AnnotatorParams& params,
                           const std::string& image_id, const SourceId& source) {
    validate_pose(pose);
    validate_camera(cam);
    validate_params(params);
    validate_cloud(cloud);

    AnnotationSet set{image_id, source, {}};
    const Eigen::Vector3d cam_pos = pose.camera_position();
    const double radius_sq = params.ground_radius * params.ground_radius;

    // Project the whole cloud once for the occlusion check.
    std::vector<Eigen::Vector3d> cloud_cam(cloud.points.size());
    for (std::size_t i = 0; i < cloud.points.size(); ++i)
        cloud_cam[i] = pose.to_camera(cloud.points[i]);

    for (const auto& pole : map_poles) {
        if (!pole.allFinite()) throw InputError("map pole coordinates must be finite");

        // Distant poles are not annotated.
        const double horiz = std::hypot(pole.x() - cam_pos.x(), pole.y() - cam_pos.y());
        if (horiz > params.max_range) continue;

        // Ground height from the median of nearby ground-labeled points.
        std::vector<double> ground_z;
        for (std::size_t i = 0; i < cloud.points.size(); ++i) {
            if (cloud.labels[i] != PointLabel::Ground) continue;
            const double du = cloud.points[i].x() - pole.x();
            const double dv = cloud.points[i].y() - pole.y();
            if (du * du + dv * dv <= radius_sq) ground_z.push_back(cloud.points[i].z());
        }
        if (ground_z.size() < static_cast<std::size_t>(params.min_ground_points)) continue;
        const double z_ground = median(std::move(ground_z));

        const Eigen::Vector3d base_cam =
            pose.to_camera(Eigen::Vector3d(pole.x(), pole.y(), z_ground));
        const auto uv = project_camera_point(cam, base_cam);
        if (!uv || !in_image(cam, *uv)) continue;

        // Occlusion: a cloud point projecting near the base and clearly in
        // front of it hides the pole base.
        bool occluded = false;
        for (const auto& pc : cloud_cam) {
            if (!(pc.z() > 0.0) || pc.z() >= base_cam.z() - params.occlusion_margin) continue;
            const auto puv = project_camera_point(cam, pc);
            if (puv && (*puv - *uv).norm() < kOcclusionPixelRadius) {
                occluded = true;
                break;
            }
        }
        if (occluded) continue;

        emit(set, uv->x(), uv->y());
    }
    return set;
}

AnnotationSet seg_annotate(const SemanticMask& mask, const AnnotatorParams& params,
                           const std::string& image_id, const SourceId& source) {
    validate_params(params);
    if (mask.raster.channels != 1) throw InputError("semantic mask must be single channel");
    if (mask.pole_classes.empty() || mask.ground_classes.empty())
        throw InputError("pole and ground class sets must be non-empty");
    for (int c : mask.pole_classes)
        if (mask.ground_classes.count(c))
            throw InputError("class id " + std::to_string(c) +
                             " appears in both pole and ground sets");

    const int w = mask.raster.width, h = mask.raster.height;
    auto is_pole = [&](int x, int y) {
        return mask.pole_classes.count(mask.raster.at(x, y, 0)) != 0;
    };
    auto is_ground = [&](int x, int y) {
        return mask.ground_classes.count(mask.raster.at(x, y, 0)) != 0;
    };

    AnnotationSet set{image_id, source, {}};

    // 8-connected components over pole pixels, discovered in row-major order.
    std::vector<bool> visited(static_cast<std::size_t>(w) * h, false);
    std::vector<std::pair<int, int>> stack, component;  // (y, x)
    for (int y0 = 0; y0 < h; ++y0) {
        for (int x0 = 0; x0 < w; ++x0) {
            if (visited[static_cast<std::size_t>(y0) * w + x0] || !is_pole(x0, y0)) continue;
            component.clear();
            stack.assign(1, {y0, x0});
            visited[static_cast<std::size_t>(y0) * w + x0] = true;
            while (!stack.empty()) {
                const auto [y, x] = stack.back();
                stack.pop_back();
                component.emplace_back(y, x);
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int ny = y + dy, nx = x + dx;
                        if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                        const std::size_t flat = static_cast<std::size_t>(ny) * w + nx;
                        if (visited[flat] || !is_pole(nx, ny)) continue;
                        visited[flat] = true;
                        stack.emplace_back(ny, nx);
                    }
            }

            const int size = static_cast<int>(component.size());
            const bool large = size >= params.min_component_px;
            const bool small_on_ground =
                size >= params.small_cluster_px && size < params.min_component_px;
            if (!large && !small_on_ground) continue;

            int bottom_row = 0;
            for (const auto& [y, x] : component) bottom_row = std::max(bottom_row, y);

            // Ground adjacency: a bottom-row pixel with a ground pixel within
            // `ground_adjacency` rows in the same column.
            bool adjacent = false;
            for (const auto& [y, x] : component) {
                if (y != bottom_row) continue;
                for (int dy = -params.ground_adjacency; dy <= params.ground_adjacency && !adjacent;
                     ++dy) {
                    const int ny = y + dy;
                    if (ny >= 0 && ny < h && is_ground(x, ny)) adjacent = true;
                }
                if (adjacent) break;
            }
            if (!adjacent) continue;

            // Base point: median column over the bottom three rows, v at the
            // bottom row.
            std::vector<double> cols;
            for (const auto& [y, x] : component)
                if (y >= bottom_row - 2) cols.push_back(static_cast<double>(x));
            emit(set, median(std::move(cols)), static_cast<double>(bottom_row));
        }
    }
    return set;
}

AnnotationSet lidar_annotate(const LabeledCloud& cloud, const Pose& pose, const CameraModel& cam,
                             const AnnotatorParams& params, const std::string& image_id,
                             const SourceId& source) {
    validate_pose(pose);
    validate_camera(cam);
    validate_params(params);
    validate_cloud(cloud);

    std::vector<Eigen::Vector3d> pole_pts;
    for (std::size_t i = 0; i < cloud.points.size(); ++i)
        if (cloud.labels[i] == PointLabel::Pole) pole_pts.push_back(cloud.points[i]);

    AnnotationSet set{image_id, source, {}};
    for (const auto& cluster : euclidean_clusters(pole_pts, params.cluster_eps)) {
        if (cluster.size() < static_cast<std::size_t>(params.cluster_min_pts)) continue;

        Eigen::Vector3d lo = pole_pts[cluster.front()], hi = lo;
        for (std::size_t idx : cluster) {
            lo = lo.cwiseMin(pole_pts[idx]);
            hi = hi.cwiseMax(pole_pts[idx]);
        }
        // Center of the bottom face of the axis-aligned box, world z-up.
        const Eigen::Vector3d base(0.5 * (lo.x() + hi.x()), 0.5 * (lo.y() + hi.y()), lo.z());

        const auto uv = project_camera_point(cam, pose.to_camera(base));
        if (!uv || !in_image(cam, *uv)) continue;
        emit(set, uv->x(), uv->y());
    }
    return set;
}

}  // namespace annofuse
