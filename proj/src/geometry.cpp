#include "annofuse/geometry.hpp"

#include <cmath>

namespace annofuse {

void validate_pose(const Pose& pose) {
    const Eigen::Matrix3d gram = pose.rotation.transpose() * pose.rotation;
    const double dev = (gram - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    if (!(dev <= 1e-9))
        throw InputError("pose rotation is not orthonormal (max deviation " +
                         std::to_string(dev) + ")");
    const double det = pose.rotation.determinant();
    if (!(std::abs(det - 1.0) <= 1e-6))
        throw InputError("pose rotation must have determinant +1 (got " + std::to_string(det) +
                         ")");
    if (!pose.translation.allFinite()) throw InputError("pose translation must be finite");
}

void validate_camera(const CameraModel& cam) {
    if (!(cam.fx > 0.0) || !(cam.fy > 0.0))
        throw InputError("camera focal lengths must be positive");
    if (cam.width <= 0 || cam.height <= 0)
        throw InputError("camera image dimensions must be positive");
    if (!(cam.cx >= 0.0 && cam.cx < cam.width && cam.cy >= 0.0 && cam.cy < cam.height))
        throw InputError("camera principal point must lie inside the image");
}

}  // namespace annofuse
