#pragma once

#include <Eigen/Core>

#include "stg/math.hpp"

namespace stg {

/// Pinhole camera. Camera space is x right, y down, z forward; pixel (i, j)
/// samples the image plane at coordinates (i, j).
struct Camera {
  int width = 0;
  int height = 0;
  double fx = 1, fy = 1, cx = 0, cy = 0;
  Eigen::Matrix4d world_to_camera = Eigen::Matrix4d::Identity();

  Eigen::Matrix3d rotation() const { return world_to_camera.topLeftCorner<3, 3>(); }
  Eigen::Vector3d translation() const { return world_to_camera.topRightCorner<3, 1>(); }
  /// Camera center in world coordinates.
  Eigen::Vector3d center() const { return -rotation().transpose() * translation(); }

  /// Throws UsageError when an invariant (positive focal, principal point in
  /// image, orthonormal right-handed rotation) is violated.
  void validate() const;
};

/// Camera at `eye` looking at `target`; `up` is the approximate world up (the
/// image y axis points against it).
Camera look_at(int width, int height, double fx, double fy, const Eigen::Vector3d& eye,
               const Eigen::Vector3d& target, const Eigen::Vector3d& up);

/// Tunables for projection and culling.
struct ProjectionOptions {
  double low_pass = 0.3;  // px², added to the 2D covariance diagonal
  double near_plane = 0.01;
  double min_temporal_opacity = 1.0 / 255.0;
  double alpha_min = 1.0 / 255.0;  // footprint radius is where alpha falls below this
};

template <class S>
struct Splat2D {
  Vec2<S> center;
  Mat2<S> cov2d;
  S depth;
};

template <class S>
Vec3<S> world_to_camera_point(const Camera& cam, const Vec3<S>& x);

/// Pixel coordinates of a camera-space point; BehindCameraError if z <= 0.
template <class S>
Vec2<S> project_center(const Camera& cam, const Vec3<S>& p_cam);

/// 2×3 Jacobian of the pinhole map at p_cam.
template <class S>
Mat23<S> projection_jacobian(const Camera& cam, const Vec3<S>& p_cam);

/// J·R_W·Σ·R_Wᵀ·Jᵀ + low_pass·I.
template <class S>
Mat2<S> project_covariance(const Camera& cam, const Vec3<S>& p_cam, const Mat3<S>& cov_world,
                           S low_pass = S(0.3));

template <class S>
S max_eigenvalue(const Mat2<S>& m);

/// Screen-space radius beyond which a splat with peak opacity `opacity`
/// contributes alpha < alpha_min. Zero when it can never reach alpha_min.
template <class S>
S footprint_radius(const Mat2<S>& cov2d, S opacity, S alpha_min);

/// True when the splat should be discarded: behind the near plane, below the
/// temporal opacity threshold, or footprint entirely outside the image.
template <class S>
bool cull(const Camera& cam, const Vec2<S>& center_2d, const Mat2<S>& cov2d, S depth,
          S temporal_opacity, const ProjectionOptions& opts = {});

}  // namespace stg
