#pragma once

// Probe geometry and the desired marker pose for a contact point.
//
// Tip frame T: origin at the probe tip, z along the probe axis pointing into
// the tissue, x along the lateral imaging axis, y toward the marker face.

#include <cmath>

#include "tscan/errors.hpp"
#include "tscan/se3.hpp"

namespace tscan {

struct ProbeGeometry {
  // Marker 40 mm up the shaft, 8 mm out on the face side, face normal = +y_T.
  RigidTransform tip_T_marker{Rotation3::from_matrix((Mat3() << 1, 0, 0, 0, 0, 1, 0, -1, 0).finished()),
                              Vec3(0.0, 8.0, -40.0)};
  // Tip seen from the end-effector (instrument wrist).
  RigidTransform ee_T_tip{Rotation3(), Vec3(0.0, 0.0, 25.0)};
  // Commanded depth of the tip below the surface along -n.
  double contact_offset_mm = 1.0;

  RigidTransform ee_T_marker() const { return ee_T_tip * tip_T_marker; }
  /// Outward face normal of the marker in the tip frame.
  Vec3 face_normal_in_tip() const { return tip_T_marker.rotation().matrix().col(2); }
};

/// Tip pose pressing along -normal at `contact`, rolled about the probe axis
/// so that the marker face points as much as possible toward `camera_position`.
/// All inputs and the result share one frame.
inline RigidTransform desired_tip_pose(const Vec3& contact, const Vec3& normal, const Vec3& camera_position,
                                       const ProbeGeometry& probe = {}) {
  const double len = normal.norm();
  if (!(std::abs(len - 1.0) < 1e-6)) throw std::invalid_argument("normal must be unit length");
  const Vec3 axis = -normal;
  const Vec3 to_camera = camera_position - contact;
  const double dist = to_camera.norm();
  const Vec3 lateral = to_camera - to_camera.dot(axis) * axis;
  if (!(dist > 0.0) || lateral.norm() < std::sin(deg2rad(1.0)) * dist)
    throw DegenerateGeometry("normal is parallel to the camera direction");

  // Solve for the tip-frame roll that puts the marker face normal along `lateral`.
  const Vec3 face_t = probe.face_normal_in_tip();
  const Vec3 f = lateral.normalized();
  const Vec3 g = axis.cross(f);
  // In the tip frame, the face normal lies in the x-y plane at angle phi.
  const double phi = std::atan2(face_t.y(), face_t.x());
  // x_T and y_T such that cos(phi) x_T + sin(phi) y_T = f.
  const Vec3 x = std::cos(phi) * f - std::sin(phi) * g;
  const Vec3 y = axis.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = axis;
  return {Rotation3::nearest(r), contact + probe.contact_offset_mm * axis};
}

/// Marker pose matching desired_tip_pose.
inline RigidTransform desired_marker_pose(const Vec3& contact, const Vec3& normal, const Vec3& camera_position,
                                          const ProbeGeometry& probe = {}) {
  return desired_tip_pose(contact, normal, camera_position, probe) * probe.tip_T_marker;
}

}  // namespace tscan
