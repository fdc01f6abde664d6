#include "stg/camera.hpp"

#include <cmath>

#include "stg/errors.hpp"

namespace stg {

void Camera::validate() const {
  if (width <= 0 || height <= 0) throw UsageError("camera resolution must be positive");
  if (!(fx > 0) || !(fy > 0)) throw UsageError("camera focal lengths must be positive");
  if (!(cx >= 0 && cx < width && cy >= 0 && cy < height))
    throw UsageError("camera principal point outside the image");
  const Eigen::Matrix3d r = rotation();
  if (!(r * r.transpose()).isApprox(Eigen::Matrix3d::Identity(), 1e-6) ||
      std::abs(r.determinant() - 1.0) > 1e-6)
    throw UsageError("camera rotation is not a proper rotation");
  if (!world_to_camera.allFinite()) throw UsageError("camera pose is not finite");
}

Camera look_at(int width, int height, double fx, double fy, const Eigen::Vector3d& eye,
               const Eigen::Vector3d& target, const Eigen::Vector3d& up) {
  const Eigen::Vector3d z = (target - eye).normalized();
  Eigen::Vector3d x = (-up).cross(z);
  if (x.norm() < 1e-12) throw UsageError("look_at: view direction parallel to up");
  x.normalize();
  const Eigen::Vector3d y = z.cross(x);
  Camera cam;
  cam.width = width;
  cam.height = height;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = 0.5 * (width - 1);
  cam.cy = 0.5 * (height - 1);
  Eigen::Matrix3d r;
  r.row(0) = x;
  r.row(1) = y;
  r.row(2) = z;
  cam.world_to_camera.setIdentity();
  cam.world_to_camera.topLeftCorner<3, 3>() = r;
  cam.world_to_camera.topRightCorner<3, 1>() = -r * eye;
  return cam;
}

template <class S>
Vec3<S> world_to_camera_point(const Camera& cam, const Vec3<S>& x) {
  return cam.rotation().cast<S>() * x + cam.translation().cast<S>();
}

template <class S>
Vec2<S> project_center(const Camera& cam, const Vec3<S>& p) {
  if (!(p.z() > S(0))) throw BehindCameraError("point is behind the camera");
  return {S(cam.fx) * p.x() / p.z() + S(cam.cx), S(cam.fy) * p.y() / p.z() + S(cam.cy)};
}

template <class S>
Mat23<S> projection_jacobian(const Camera& cam, const Vec3<S>& p) {
  if (!(p.z() > S(0))) throw BehindCameraError("point is behind the camera");
  const S iz = S(1) / p.z();
  const S fx = S(cam.fx), fy = S(cam.fy);
  Mat23<S> j;
  j << fx * iz, S(0), -fx * p.x() * iz * iz,
       S(0), fy * iz, -fy * p.y() * iz * iz;
  return j;
}

template <class S>
Mat2<S> project_covariance(const Camera& cam, const Vec3<S>& p, const Mat3<S>& cov, S low_pass) {
  const Mat23<S> j = projection_jacobian(cam, p);
  const Mat3<S> r = cam.rotation().cast<S>();
  const Mat23<S> t = j * r;
  Mat2<S> out = t * cov * t.transpose();
  // Exact symmetry regardless of rounding in the triple product.
  out(0, 1) = out(1, 0) = S(0.5) * (out(0, 1) + out(1, 0));
  out(0, 0) += low_pass;
  out(1, 1) += low_pass;
  return out;
}

template <class S>
S max_eigenvalue(const Mat2<S>& m) {
  const S mid = S(0.5) * (m(0, 0) + m(1, 1));
  const S half = S(0.5) * (m(0, 0) - m(1, 1));
  return mid + std::sqrt(half * half + m(0, 1) * m(0, 1));
}

template <class S>
S footprint_radius(const Mat2<S>& cov2d, S opacity, S alpha_min) {
  if (!(opacity > alpha_min)) return S(0);
  // alpha = opacity·exp(-q/2) >= alpha_min requires q <= 2·ln(opacity/alpha_min),
  // and q >= |d|²/λmax.
  const S k = std::sqrt(S(2) * std::log(opacity / alpha_min));
  return S(1.01) * k * std::sqrt(max_eigenvalue(cov2d));
}

template <class S>
bool cull(const Camera& cam, const Vec2<S>& c, const Mat2<S>& cov2d, S depth, S opacity,
          const ProjectionOptions& opts) {
  if (!(depth > S(opts.near_plane))) return true;
  if (!(opacity >= S(opts.min_temporal_opacity))) return true;
  const S r = std::max(footprint_radius(cov2d, opacity, S(opts.alpha_min)), S(0));
  if (c.x() + r < S(0) || c.x() - r > S(cam.width - 1)) return true;
  if (c.y() + r < S(0) || c.y() - r > S(cam.height - 1)) return true;
  return false;
}

#define STG_INSTANTIATE(S)                                                                     \
  template Vec3<S> world_to_camera_point<S>(const Camera&, const Vec3<S>&);                    \
  template Vec2<S> project_center<S>(const Camera&, const Vec3<S>&);                           \
  template Mat23<S> projection_jacobian<S>(const Camera&, const Vec3<S>&);                     \
  template Mat2<S> project_covariance<S>(const Camera&, const Vec3<S>&, const Mat3<S>&, S);    \
  template S max_eigenvalue<S>(const Mat2<S>&);                                                \
  template S footprint_radius<S>(const Mat2<S>&, S, S);                                        \
  template bool cull<S>(const Camera&, const Vec2<S>&, const Mat2<S>&, S, S,                   \
                        const ProjectionOptions&);

STG_INSTANTIATE(float)
STG_INSTANTIATE(double)
#undef STG_INSTANTIATE

}  // namespace stg
