#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "annofuse/geometry.hpp"
#include "annofuse/image.hpp"
#include "annofuse/types.hpp"

namespace annofuse {

enum class PointLabel : std::uint8_t { Other = 0, Ground = 1, Pole = 2 };

/// Point cloud in the world frame with one semantic label per point.
struct LabeledCloud {
    std::vector<Eigen::Vector3d> points;
    std::vector<PointLabel> labels;

    std::size_t size() const { return points.size(); }
};

/// Georeferenced pole-base positions (E, N) in the world frame, meters.
using MapPoles = std::vector<Eigen::Vector2d>;

/// Per-pixel class-id raster plus the class sets that define poles and ground.
struct SemanticMask {
    ImageBuffer raster;  // single channel
    std::set<int> pole_classes;
    std::set<int> ground_classes;
};

struct AnnotatorParams {
    double ground_radius = 1.0;     // m, ground-point search radius around a map pole
    int min_ground_points = 5;      // required ground points within the radius
    double max_range = 30.0;        // m, horizontal range cutoff for map poles
    double occlusion_margin = 0.5;  // m, depth margin for the occlusion check
    double cluster_eps = 0.5;       // m, connectivity radius for lidar clustering
    int cluster_min_pts = 10;       // minimum lidar cluster size
    int ground_adjacency = 3;       // px, vertical distance to ground pixels
    int min_component_px = 50;      // large pole-component threshold
    int small_cluster_px = 10;      // small ground-touching component threshold
};

/// Map-based annotation (source M): each map pole is placed at the local
/// ground height estimated from nearby ground-labeled lidar points, projected
/// into the image, and dropped when out of range, lacking ground support,
/// behind the camera, outside the image, or occluded by closer cloud points.
AnnotationSet map_annotate(const MapPoles& map_poles, const Pose& pose, const CameraModel& cam,
                           const LabeledCloud& cloud, const AnnotatorParams& params,
                           const std::string& image_id, const SourceId& source = "M");

/// Segmentation-based annotation (source S): pole-class pixels are grouped
/// into 8-connected components; components that touch ground pixels (within
/// `ground_adjacency` vertically) and are large enough — or small clusters
/// lying on the ground — yield one annotation at the bottom-center of the
/// component.
AnnotationSet seg_annotate(const SemanticMask& mask, const AnnotatorParams& params,
                           const std::string& image_id, const SourceId& source = "S");

/// Lidar-based annotation (source L): pole-labeled points are grouped by
/// single-link Euclidean clustering (distance < cluster_eps); each cluster of
/// at least cluster_min_pts points gets an axis-aligned box whose bottom-face
/// center is projected into the image.
AnnotationSet lidar_annotate(const LabeledCloud& cloud, const Pose& pose, const CameraModel& cam,
                             const AnnotatorParams& params, const std::string& image_id,
                             const SourceId& source = "L");

// Input file loaders (formats documented in the README):
//   cloud: CSV `x,y,z,label` with label in {ground, pole, other}, or PLY
//          (ascii / binary_little_endian) with an integer `label` property
//          (0 = other, 1 = ground, 2 = pole)
//   map:   JSON array of [E, N] pairs
//   pose:  JSON {"rotation": [9 row-major values], "translation": [x, y, z]}
//   camera: JSON {"fx", "fy", "cx", "cy", "width", "height"}
//   mask:  PNG 8-bit single channel or PGM

LabeledCloud load_cloud(const std::filesystem::path& path);
MapPoles load_map(const std::filesystem::path& path);
Pose load_pose(const std::filesystem::path& path);
CameraModel load_camera(const std::filesystem::path& path);
SemanticMask load_mask(const std::filesystem::path& path, std::set<int> pole_classes,
                       std::set<int> ground_classes);

}  // namespace annofuse
