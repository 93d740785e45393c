#pragma once

#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "annofuse/types.hpp"

namespace annofuse {

/// Pinhole camera, no distortion.
struct CameraModel {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;
};

/// Rigid transform mapping world coordinates to camera coordinates.
/// Camera frame: x right, y down, z forward. World frame: z up.
struct Pose {
    Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
    Eigen::Vector3d translation = Eigen::Vector3d::Zero();

    Eigen::Vector3d to_camera(const Eigen::Vector3d& world) const {
        return rotation * world + translation;
    }
    /// Camera center expressed in world coordinates.
    Eigen::Vector3d camera_position() const {
        return -rotation.transpose() * translation;
    }
};

/// RᵀR = I within 1e-9 per entry and det R = +1. Throws InputError.
void validate_pose(const Pose& pose);

/// fx, fy > 0; principal point inside the image. Throws InputError.
void validate_camera(const CameraModel& cam);

/// Pinhole projection of a camera-frame point; nullopt when at or behind the
/// image plane (z <= 0).
inline std::optional<Eigen::Vector2d> project_camera_point(const CameraModel& cam,
                                                           const Eigen::Vector3d& p_cam) {
    if (!(p_cam.z() > 0.0)) return std::nullopt;
    return Eigen::Vector2d(cam.fx * p_cam.x() / p_cam.z() + cam.cx,
                           cam.fy * p_cam.y() / p_cam.z() + cam.cy);
}

inline bool in_image(const CameraModel& cam, const Eigen::Vector2d& uv) {
    return uv.x() >= 0.0 && uv.x() < cam.width && uv.y() >= 0.0 && uv.y() < cam.height;
}

}  // namespace annofuse
