#pragma once

// Reference motion: scripted task clips for a sagittal biped, sampled at
// 30 Hz. Poses are built from task-space targets (root path, foot plants,
// hand reaches) through exact two-link IK, so scripted contact labels agree
// with the geometry by construction. Velocities are central differences on
// the frame grid.

#include <cmath>
#include <string>
#include <vector>

#include "tracksim/charscene.hpp"
#include "tracksim/errors.hpp"
#include "tracksim/math.hpp"
#include "tracksim/rng.hpp"

namespace tracksim {

inline constexpr double kFrameRate = 30.0;
inline constexpr double kFrameDt = 1.0 / 30.0;

struct ReferenceFrame {
  Vec2 root_pos{};
  double root_angle = 0.0;
  Vec2 root_vel{};
  double root_angvel = 0.0;
  std::vector<double> q;
  std::vector<double> dq;
  std::vector<int> contact_labels;
  std::vector<Pose> object_poses;
};

struct ReferenceClip {
  double dt = kFrameDt;
  std::string task;
  double height_param = 0.0;  // object height for tasks that take one
  std::vector<std::string> joint_names;
  std::vector<SceneObjectSpec> scene;
  std::vector<ReferenceFrame> frames;
  double duration() const { return frames.empty() ? 0.0 : (frames.size() - 1) * dt; }
};

struct TaskSpec {
  std::string name;
  double duration = 10.0;
  double height = 0.45;
};

inline std::vector<Pose> forward_kinematics(const CharacterSpec& c, Vec2 root_pos,
                                            double root_angle, std::span<const double> q) {
  return link_poses(c, root_pos, root_angle, q);
}

// What the tracking hardware reports: headset pose and hand position.
struct SensorFrame {
  Vec2 head_pos{};
  double head_cos = 1.0;
  double head_sin = 0.0;
  Vec2 hand_pos{};
};

inline SensorFrame sensors_from_poses(const CharacterSpec& c, const std::vector<Pose>& poses) {
  SensorFrame s;
  const Pose& head = poses[c.link_index("head")];
  s.head_pos = head.position;
  s.head_cos = std::cos(head.angle);
  s.head_sin = std::sin(head.angle);
  const Pose& fa = poses[c.link_index("forearm")];
  s.hand_pos = fa.position + Rot2(fa.angle).apply(kHandTipOffset);
  return s;
}

inline SensorFrame extract_sensors(const CharacterSpec& c, const ReferenceFrame& f) {
  return sensors_from_poses(c, link_poses(c, f.root_pos, f.root_angle, f.q));
}

inline SensorFrame extract_sensors_world(const CharacterSpec& c, const WorldState& w) {
  std::vector<Pose> poses(c.links.size());
  for (size_t i = 0; i < c.links.size(); ++i)
    poses[i] = {w.bodies[i].position, w.bodies[i].angle};
  return sensors_from_poses(c, poses);
}

// Interpolates between the two neighbouring frames; labels snap to the
// nearer one, angles take the shortest arc.
inline ReferenceFrame sample_frame(const ReferenceClip& clip, double t) {
  if (clip.frames.empty()) throw OutOfRangeError("sample_frame: empty clip");
  const double d = clip.duration();
  if (t < -1e-9 || t > d + 1e-9)
    throw OutOfRangeError("sample_frame: t=" + std::to_string(t) + " outside [0, " +
                          std::to_string(d) + "]");
  t = clamp(t, 0.0, d);
  if (clip.frames.size() == 1) return clip.frames[0];
  size_t k = std::min(size_t(t / clip.dt), clip.frames.size() - 2);
  double a = (t - k * clip.dt) / clip.dt;
  const ReferenceFrame& f0 = clip.frames[k];
  const ReferenceFrame& f1 = clip.frames[k + 1];

  ReferenceFrame out;
  out.root_pos = f0.root_pos + (f1.root_pos - f0.root_pos) * a;
  out.root_angle = f0.root_angle + angle_diff(f1.root_angle, f0.root_angle) * a;
  out.root_vel = f0.root_vel + (f1.root_vel - f0.root_vel) * a;
  out.root_angvel = f0.root_angvel + (f1.root_angvel - f0.root_angvel) * a;
  size_t nq = f0.q.size();
  out.q.resize(nq);
  out.dq.resize(nq);
  for (size_t i = 0; i < nq; ++i) {
    out.q[i] = f0.q[i] + angle_diff(f1.q[i], f0.q[i]) * a;
    out.dq[i] = f0.dq[i] + (f1.dq[i] - f0.dq[i]) * a;
  }
  out.contact_labels = a <= 0.5 ? f0.contact_labels : f1.contact_labels;
  out.object_poses.resize(f0.object_poses.size());
  for (size_t i = 0; i < f0.object_poses.size(); ++i) {
    out.object_poses[i].position =
        f0.object_poses[i].position + (f1.object_poses[i].position - f0.object_poses[i].position) * a;
    out.object_poses[i].angle =
        f0.object_poses[i].angle +
        angle_diff(f1.object_poses[i].angle, f0.object_poses[i].angle) * a;
  }
  return out;
}

// ---- two-link IK ------------------------------------------------------ //

namespace detail {

// Absolute angle of a link whose local +y axis maps it so that (0,-1)
// points along dir: theta = atan2(dir.x, -dir.y); zero means straight down.
inline double down_dir_angle(const Vec2& dir) { return std::atan2(dir.x, -dir.y); }

struct TwoLinkSolution {
  double theta1 = 0.0;  // absolute angle of the upper link
  double theta2 = 0.0;  // absolute angle of the lower link
};

// Places the middle joint on the +x side of base->target for bend_sign=+1
// (knees), on the -x side for bend_sign=-1 (elbow flexion).
inline TwoLinkSolution two_link_ik(Vec2 base, Vec2 target, double l1, double l2,
                                   double bend_sign) {
  Vec2 d = target - base;
  double L = clamp(d.length(), std::abs(l1 - l2) + 1e-6, l1 + l2 - 1e-6);
  Vec2 u = d.length() > 1e-12 ? d / d.length() : Vec2{0.0, -1.0};
  double cos_beta = (l1 * l1 + L * L - l2 * l2) / (2.0 * l1 * L);
  double beta = std::acos(clamp(cos_beta, -1.0, 1.0));
  Rot2 r(bend_sign * beta);
  Vec2 u1 = r.apply(u);
  Vec2 mid = base + u1 * l1;
  Vec2 u2 = base + u * L - mid;  // lower link closes onto the clamped target
  // renormalise against clamping artefacts
  double n2 = u2.length();
  u2 = n2 > 1e-12 ? u2 / n2 : u1;
  TwoLinkSolution s;
  s.theta1 = down_dir_angle(u1);
  s.theta2 = down_dir_angle(u2);
  return s;
}

}  // namespace detail

// ---- clip generation --------------------------------------------------- //

namespace detail {

// Per-frame task-space targets produced by the task scripts.
struct PoseTargets {
  Vec2 root{0.0, kBipedStandRootHeight};
  double root_angle = 0.0;
  Vec2 ankle_l{-0.05, 0.06};
  Vec2 ankle_r{0.11, 0.06};
  double foot_angle_l = 0.0;
  double foot_angle_r = 0.0;
  bool hand_target_active = false;
  Vec2 hand_tip{};
  double shoulder_q = 0.0;  // used when no hand target
  double elbow_q = 0.1;
  double waist_q = 0.0;
  double neck_q = 0.0;
  int labels[5] = {0, 0, 1, 1, 0};  // pelvis, spine, foot_l, foot_r, hand
};

struct BipedDims {
  double thigh = 0.42;
  double shank = 0.45;
  double upper_arm = 0.28;
  double forearm = 0.36;
  Vec2 waist_anchor{0.0, 0.07};
  double spine_to_shoulder = 0.40;  // along the spine from the waist anchor
  Vec2 hip_anchor{0.0, 0.0};
};

// Joint values are clamped into the CharacterSpec limits. When a clamp
// bites on an upper link, the links below re-aim at the original target, so
// the distortion stays local. Scripts are designed so clamps never bite on
// weight-bearing (planted) limbs.
inline void solve_targets(const CharacterSpec& c, const BipedDims& dims,
                          const PoseTargets& tg, Vec2& root_pos, double& root_angle,
                          std::vector<double>& q) {
  root_pos = tg.root;
  root_angle = tg.root_angle;
  q.assign(c.joints.size(), 0.0);
  double theta_pelvis = tg.root_angle;

  auto set = [&](const char* name, double value) {
    size_t i = c.joint_index(name);
    q[i] = clamp(value, c.joints[i].limit_low, c.joints[i].limit_high);
    return q[i];
  };

  set("waist", tg.waist_q);
  set("neck", tg.neck_q);
  double theta_spine = theta_pelvis + q[c.joint_index("waist")];

  auto solve_chain = [&](Vec2 base, double theta_base, Vec2 target, double l1, double l2,
                         double bend_sign, const char* j1, const char* j2) {
    auto sol = two_link_ik(base, target, l1, l2, bend_sign);
    double theta1 = theta_base + set(j1, wrap_angle(sol.theta1 - theta_base));
    Vec2 mid = base + Rot2(theta1).apply({0.0, -l1});
    Vec2 d = target - mid;
    double theta2_aim = d.length() > 1e-9 ? down_dir_angle(d / d.length()) : sol.theta2;
    return theta1 + set(j2, wrap_angle(theta2_aim - theta1));
  };

  Vec2 hip = tg.root + Rot2(theta_pelvis).apply(dims.hip_anchor);
  double shank_l = solve_chain(hip, theta_pelvis, tg.ankle_l, dims.thigh, dims.shank, +1.0,
                               "hip_l", "knee_l");
  set("ankle_l", wrap_angle(tg.foot_angle_l - shank_l));
  double shank_r = solve_chain(hip, theta_pelvis, tg.ankle_r, dims.thigh, dims.shank, +1.0,
                               "hip_r", "knee_r");
  set("ankle_r", wrap_angle(tg.foot_angle_r - shank_r));

  if (tg.hand_target_active) {
    Vec2 waist = tg.root + Rot2(theta_pelvis).apply(dims.waist_anchor);
    Vec2 shoulder = waist + Rot2(theta_spine).apply({0.0, dims.spine_to_shoulder});
    solve_chain(shoulder, theta_spine, tg.hand_tip, dims.upper_arm, dims.forearm, -1.0,
                "shoulder", "elbow");
  } else {
    set("shoulder", tg.shoulder_q);
    set("elbow", tg.elbow_q);
  }
}

// Interpolation helper: pos(t) smoothly moving from a to b over [t0, t0+T].
inline double ease(double t, double t0, double T, double a, double b) {
  return a + (b - a) * smoothstep01((t - t0) / T);
}
inline Vec2 ease(double t, double t0, double T, Vec2 a, Vec2 b) {
  double s = smoothstep01((t - t0) / T);
  return a + (b - a) * s;
}

}  // namespace detail

ReferenceClip generate_clip(const CharacterSpec& c, const TaskSpec& task, Rng& rng);

// ---- validation -------------------------------------------------------- //

// Scripted labels must be geometrically honest: every label-1 link surface
// within gap_tol of some scene surface, every frame's q inside joint limits.
inline void validate_clip(const CharacterSpec& c, const ReferenceClip& clip,
                          double gap_tol = 0.01) {
  for (size_t fi = 0; fi < clip.frames.size(); ++fi) {
    const ReferenceFrame& f = clip.frames[fi];
    for (size_t j = 0; j < c.joints.size(); ++j) {
      if (f.q[j] < c.joints[j].limit_low - 1e-9 || f.q[j] > c.joints[j].limit_high + 1e-9)
        throw InvalidTaskError("frame " + std::to_string(fi) + ": joint '" +
                               c.joints[j].name + "' angle " + std::to_string(f.q[j]) +
                               " violates limits");
    }
    std::vector<SceneObjectSpec> scene = clip.scene;
    for (size_t oi = 0; oi < scene.size(); ++oi) {
      scene[oi].position = f.object_poses[oi].position;
      scene[oi].angle = f.object_poses[oi].angle;
    }
    BuiltWorld bw = build_world(c, scene, f.root_pos, f.root_angle, f.q);
    bw.world.contact_tolerance = gap_tol + 1e-4;
    auto contacts = detect_contacts(bw.world);
    for (size_t li = 0; li < c.contact_label_links.size(); ++li) {
      if (!f.contact_labels[li]) continue;
      int body = c.contact_label_links[li];
      bool near = false;
      for (const Contact& ct : contacts) {
        bool involves = ct.body_a == body || ct.body_b == body;
        bool other_scene = (ct.body_a >= bw.char_body_count) || (ct.body_b >= bw.char_body_count);
        if (involves && other_scene) near = true;
      }
      if (!near)
        throw InvalidTaskError("frame " + std::to_string(fi) + ": label '" +
                               c.contact_label_names[li] + "' set but no nearby surface");
    }
  }
}

}  // namespace tracksim

#include "tracksim/motion_tasks.hpp"
