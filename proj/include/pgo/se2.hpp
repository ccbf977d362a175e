#pragma once

#include <Eigen/Core>
#include <cmath>

namespace pgo {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/**
 * @brief Normalize an angle to the interval (-pi, pi].
 *
 * Inputs already inside the interval are returned unchanged, bit for bit;
 * downstream identities ("a zero update leaves the cost bit-identical")
 * depend on this fast path.
 */
inline double wrap_angle(double theta) {
  if (theta > -kPi && theta <= kPi) return theta;
  // remainder() maps to [-pi, pi); fold the open lower endpoint up.
  double r = std::remainder(theta, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

/// Planar rotation stored as a wrapped angle.
class Rotation2 {
 public:
  Rotation2() = default;
  explicit Rotation2(double theta) : theta_(wrap_angle(theta)) {}

  double angle() const { return theta_; }

  Eigen::Matrix2d matrix() const {
    const double c = std::cos(theta_), s = std::sin(theta_);
    Eigen::Matrix2d m;
    m << c, -s, s, c;
    return m;
  }

  Rotation2 inverse() const { return Rotation2(-theta_); }

  Rotation2 operator*(const Rotation2& other) const {
    return Rotation2(theta_ + other.theta_);
  }

  Eigen::Vector2d operator*(const Eigen::Vector2d& v) const {
    const double c = std::cos(theta_), s = std::sin(theta_);
    return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
  }

 private:
  double theta_ = 0.0;
};

/// so(2) exponential: tangent scalar to rotation.
inline Rotation2 so2_exp(double omega) { return Rotation2(omega); }

/// so(2) logarithm: rotation to tangent scalar in (-pi, pi].
inline double so2_log(const Rotation2& r) { return r.angle(); }

/**
 * @brief Chordal distance between two planar rotations.
 *
 * Frobenius norm of the difference of the rotation matrices, which for
 * SO(2) reduces to 2*sqrt(2)*|sin(dtheta/2)|. Smooth in the angle gap and
 * bounded by 2*sqrt(2), unlike the geodesic distance which kinks at pi.
 */
inline double chordal_distance(double theta_a, double theta_b) {
  const double half = 0.5 * (theta_b - theta_a);
  return 2.0 * std::sqrt(2.0) * std::abs(std::sin(half));
}

inline double chordal_distance(const Rotation2& a, const Rotation2& b) {
  return chordal_distance(a.angle(), b.angle());
}

/// Rigid planar transform: rotation plus translation.
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;  // always kept wrapped to (-pi, pi]

  Pose2() = default;
  Pose2(double x_, double y_, double theta_)
      : x(x_), y(y_), theta(wrap_angle(theta_)) {}

  Eigen::Vector2d translation() const { return {x, y}; }
  Rotation2 rotation() const { return Rotation2(theta); }

  /// Group composition: this * other.
  Pose2 compose(const Pose2& other) const {
    const Eigen::Vector2d t =
        translation() + rotation() * other.translation();
    return Pose2(t.x(), t.y(), theta + other.theta);
  }

  Pose2 inverse() const {
    const Rotation2 rinv = rotation().inverse();
    const Eigen::Vector2d t = rinv * (-translation());
    return Pose2(t.x(), t.y(), -theta);
  }

  /// Relative transform: this^{-1} * other.
  Pose2 between(const Pose2& other) const { return inverse().compose(other); }
};

/**
 * @brief Retraction: apply an additive tangent update.
 *
 * Translation updates add in the world frame; the heading update passes
 * through wrap_angle. A zero tangent returns the pose bit-identically.
 */
inline Pose2 retract(const Pose2& p, const Eigen::Vector3d& xi) {
  Pose2 out;
  out.x = p.x + xi(0);
  out.y = p.y + xi(1);
  out.theta = wrap_angle(p.theta + xi(2));
  return out;
}

/// Heading-only retraction used by the per-edge refinement actions.
inline double retract_angle(double theta, double delta) {
  return wrap_angle(theta + delta);
}

/**
 * @brief Relative-pose measurement residual.
 *
 * e_t = R_i^T (t_j - t_i) - t_meas, e_theta = wrap(theta_j - theta_i -
 * theta_meas). Zero exactly when the pair (i, j) reproduces the
 * measurement.
 */
inline Eigen::Vector3d edge_residual(const Pose2& pi, const Pose2& pj,
                                     const Pose2& meas) {
  const Eigen::Vector2d dt = pj.translation() - pi.translation();
  const Eigen::Vector2d local = pi.rotation().inverse() * dt;
  Eigen::Vector3d e;
  e(0) = local.x() - meas.x;
  e(1) = local.y() - meas.y;
  e(2) = wrap_angle(pj.theta - pi.theta - meas.theta);
  return e;
}

/// Heading component of the residual only (cheap; used by the environment).
inline double edge_angular_residual(double theta_i, double theta_j,
                                    double theta_meas) {
  return wrap_angle(theta_j - theta_i - theta_meas);
}

}  // namespace pgo
