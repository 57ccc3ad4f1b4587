#pragma once

// Frames: B robot base, C camera, E end-effector, M marker, P contact point
// on the tissue, P* the re-anchored contact point, M*/E* desired marker and
// end-effector poses. a_T_b maps b coordinates into a.

#include <optional>
#include <string>

#include "tscan/errors.hpp"
#include "tscan/se3.hpp"

namespace tscan {

struct StampedTransform {
  RigidTransform value;
  double stamp_s = 0.0;
};

struct FrameGraph {
  // Fixed calibration.
  RigidTransform base_T_camera;
  RigidTransform ee_T_marker;  // hand-eye calibration

  // Live factors.
  std::optional<StampedTransform> base_T_ee;        // robot encoders
  std::optional<StampedTransform> camera_T_marker;  // marker observation
  std::optional<StampedTransform> camera_T_contact; // reconstruction of the reference contact point
  std::optional<StampedTransform> contact_T_moved;  // tissue tracking
};

namespace detail {

inline const RigidTransform& fresh(const std::optional<StampedTransform>& f, const char* name, double now_s,
                                   double timeout_s) {
  if (!f) throw StaleTransform(name);
  if (now_s - f->stamp_s > timeout_s) throw StaleTransform(name);
  return f->value;
}

}  // namespace detail

/// B_T_E* = B_T_E E_T_M M_T_C C_T_P P_T_P* P*_T_M* M*_T_E*, with
/// M_T_C = (C_T_M)^-1 and M*_T_E* = (E_T_M)^-1. Every live factor must be
/// newer than `timeout_s`; the reference contact frame is captured once at
/// scan start and only needs to exist.
inline RigidTransform control_law(const FrameGraph& g, const RigidTransform& moved_T_desired_marker, double now_s,
                                  double timeout_s) {
  const RigidTransform& base_T_ee = detail::fresh(g.base_T_ee, "base_T_ee", now_s, timeout_s);
  const RigidTransform& camera_T_marker = detail::fresh(g.camera_T_marker, "camera_T_marker", now_s, timeout_s);
  if (!g.camera_T_contact) throw StaleTransform("camera_T_contact");
  const RigidTransform& contact_T_moved = detail::fresh(g.contact_T_moved, "contact_T_moved", now_s, timeout_s);
  return base_T_ee * g.ee_T_marker * camera_T_marker.inverse() * g.camera_T_contact->value * contact_T_moved *
         moved_T_desired_marker * g.ee_T_marker.inverse();
}

}  // namespace tscan
