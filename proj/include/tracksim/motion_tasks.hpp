#pragma once

// Task scripts behind generate_clip. Each task builds a static scene plus a
// time-parameterized PoseTargets function; assemble() renders both into a
// ReferenceClip and fills velocities by finite differences. Scripts keep
// weight-bearing limbs inside joint limits and within leg reach at all
// times; swing limbs may graze the IK clamps, which is harmless because
// unlabeled links carry no geometric obligation.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tracksim/motion.hpp"

namespace tracksim {
namespace detail {

// Ankle height at which the lowest corner of the foot box rests on y = 0
// for a given foot pitch. Corners are in the foot frame about the ankle.
inline double foot_rest_height(double foot_angle) {
  static constexpr Vec2 kCorners[4] = {
      {0.16, 0.0}, {0.16, -0.06}, {-0.08, 0.0}, {-0.08, -0.06}};
  Rot2 r(foot_angle);
  double lowest = 0.0;
  for (const Vec2& corner : kCorners) lowest = std::min(lowest, r.apply(corner).y);
  return -lowest;
}

// Eases 0 -> 1 through [d0, d0+dw] and back 1 -> 0 through [r0, r0+rw].
inline double updown(double t, double d0, double dw, double r0, double rw) {
  return smoothstep01((t - d0) / dw) - smoothstep01((t - r0) / rw);
}

// Hand tip position of the hanging arm, matching solve_targets' chain.
inline Vec2 hang_hand_tip(const BipedDims& d, Vec2 root, double waist_q, double shoulder_q,
                          double elbow_q) {
  Vec2 shoulder =
      root + d.waist_anchor + Rot2(waist_q).apply({0.0, d.spine_to_shoulder});
  double t1 = waist_q + shoulder_q;
  Vec2 elbow = shoulder + Rot2(t1).apply({0.0, -d.upper_arm});
  return elbow + Rot2(t1 + elbow_q).apply({0.0, -d.forearm});
}

struct Script {
  std::vector<SceneObjectSpec> scene;
  std::function<PoseTargets(double)> targets;
};

// Quiet stance with a slow sway. Feet planted throughout.
inline Script stand_idle_script(double x0, const double* u) {
  Script sc;
  sc.scene = {make_floor()};
  const double amp = 0.010 + 0.005 * u[0];
  const double freq = 0.20 + 0.12 * u[1];
  const double ph = 2.0 * kPi * u[2];
  const double ph2 = 2.0 * kPi * u[3];
  sc.targets = [=](double t) {
    PoseTargets tg;
    tg.ankle_l = {-0.06 + x0, 0.06};
    tg.ankle_r = {0.10 + x0, 0.06};
    const double w = 2.0 * kPi * freq;
    tg.root = {0.02 + x0 + amp * std::sin(w * t + ph),
               0.92 + 0.004 * std::sin(2.0 * kPi * 0.37 * t + ph2)};
    tg.waist_q = -0.02 + 0.03 * std::sin(w * t + ph + 1.3);
    tg.neck_q = -0.3 * tg.waist_q;
    tg.shoulder_q = 0.04 + 0.05 * std::sin(w * t + ph + 0.7);
    tg.elbow_q = 0.12 + 0.03 * std::sin(w * t + ph + 1.1);
    return tg;
  };
  return sc;
}

// Repeated deep knee bends, arms raised forward for balance on the way down.
inline Script squat_script(double x0, const double* u, double duration) {
  Script sc;
  sc.scene = {make_floor()};
  const double t0 = std::min(1.0, 0.25 * duration);
  const double cycle = 3.6 + 0.8 * u[0];
  const double depth = 0.66 + 0.03 * u[1];
  sc.targets = [=](double t) {
    PoseTargets tg;
    tg.ankle_l = {0.045 + x0, 0.06};
    tg.ankle_r = {0.075 + x0, 0.06};
    double prog = 0.0;
    if (t >= t0) {
      double s = std::fmod(t - t0, cycle) / cycle;
      if (s < 0.30)
        prog = smoothstep01(s / 0.30);
      else if (s < 0.48)
        prog = 1.0;
      else if (s < 0.78)
        prog = 1.0 - smoothstep01((s - 0.48) / 0.30);
    }
    tg.root = {0.06 + x0 - 0.035 * prog, 0.92 + (depth - 0.92) * prog};
    tg.waist_q = -0.28 * prog;
    tg.neck_q = -0.3 * tg.waist_q;
    tg.shoulder_q = 0.05 + 0.85 * prog;
    tg.elbow_q = 0.12 + 0.13 * prog;
    return tg;
  };
  return sc;
}

// Sit down on a box of the given height, hold, stand back up. The leg
// posture branches on height: feet dangle off a tall seat, tuck under a
// chair-height one, and stretch forward heels-down near the floor.
inline Script sit_script(double x0, const double* u, double duration, double h) {
  Script sc;
  SceneObjectSpec stool;
  stool.name = "stool";
  stool.parts.push_back({Shape::box(0.18, h / 2.0), {0.0, 0.0}, 0.0, 400.0});
  stool.position = {0.45 + x0, h / 2.0};
  stool.mobility = Mobility::kFixed;
  sc.scene = {make_floor(), stool};

  const double seat_y = h + 0.075;  // pelvis underside exactly on the top
  const double knee_y = h + 0.063;
  const double stagger = 0.015;
  const bool dangle = h > 0.455;
  const bool extended = h < 0.31;

  double ankle_x = 0.0, seat_ankle_y = 0.06, seat_foot_angle = 0.0;
  if (dangle) {
    ankle_x = 0.87;
    seat_ankle_y = knee_y - 0.45;
  } else if (extended) {
    seat_foot_angle = clamp(0.5 * (0.32 - h) / 0.22, 0.0, 0.5);
    seat_ankle_y = foot_rest_height(seat_foot_angle);
    double dy = seat_y - seat_ankle_y;
    ankle_x = 0.45 + std::sqrt(std::max(0.84 * 0.84 - dy * dy, 0.09));
  } else {
    double drop = clamp((h + 0.003) / 0.45, 0.0, 1.0);
    ankle_x = 0.87 + 0.45 * std::sqrt(1.0 - drop * drop);
  }
  const double stand_x = ankle_x - 0.02;

  const double hold_min = 0.3;
  const double natural = (1.0 + 0.2 * u[0]) + 1.6 + 1.6 + 1.0;
  const double k = std::min(1.0, (duration - hold_min) / natural);
  const double t1 = (1.0 + 0.2 * u[0]) * k;      // descent start
  const double td = 1.6 * k;                     // descent length
  const double t3 = duration - (1.6 + 1.0) * k;  // rise start

  sc.targets = [=](double t) {
    PoseTargets tg;
    // per-channel seat progress; x leads y on the way down, trails on the
    // way up (butt-back, then straight up)
    double px = updown(t, t1, 0.85 * td, t3 + 0.15 * td, 0.85 * td);
    double py = updown(t, t1 + 0.10 * td, 0.85 * td, t3 + 0.05 * td, 0.85 * td);
    double pf = updown(t, t1 + 0.30 * td, 0.70 * td, t3, 0.70 * td);
    double pa = updown(t, t1, 0.70 * td, t3 + 0.30 * td, 0.70 * td);

    tg.root = {stand_x + x0 + (0.45 - stand_x) * px, 0.92 + (seat_y - 0.92) * py};
    double fa = seat_foot_angle * pf;
    double ay = extended ? foot_rest_height(fa) : 0.06 + (seat_ankle_y - 0.06) * pf;
    tg.ankle_l = {ankle_x - stagger + x0, ay};
    tg.ankle_r = {ankle_x + stagger + x0, ay};
    tg.foot_angle_l = fa;
    tg.foot_angle_r = fa;

    tg.waist_q = -0.35 * updown(t, t1, 0.60 * td, t3 + 0.40 * td, 0.60 * td) +
                 0.23 * updown(t, t1 + 0.60 * td, 0.40 * td, t3, 0.40 * td);
    tg.neck_q = -0.3 * tg.waist_q;
    tg.shoulder_q = 0.05 + 0.50 * pa;
    tg.elbow_q = 0.12 + 0.16 * pa;

    tg.labels[0] = tg.root.y <= seat_y + 0.008 ? 1 : 0;
    int feet = ay <= foot_rest_height(fa) + 0.008 ? 1 : 0;
    tg.labels[2] = feet;
    tg.labels[3] = feet;
    return tg;
  };
  return sc;
}

// Step over a box: lead foot crosses and hovers, weight transfers while it
// plants, trailing foot follows high enough that its toes-down droop still
// clears the top.
inline Script step_script(double x0, const double* u, double duration, double h) {
  Script sc;
  SceneObjectSpec box;
  box.name = "box";
  box.parts.push_back({Shape::box(0.10, h / 2.0), {0.0, 0.0}, 0.0, 400.0});
  box.position = {0.55 + x0, h / 2.0};
  box.mobility = Mobility::kFixed;
  sc.scene = {make_floor(), box};

  const double k = std::min(1.0, (duration - 0.4) / 5.6);
  const double t1 = 0.8 * k, t2 = t1 + 0.6 * k, t3 = t2 + 1.2 * k;
  const double t4 = t3 + 1.0 * k, t5 = t4 + 1.2 * k, t6 = t5 + 0.8 * k;
  const double lead_amp = h + 0.06;   // flat lead foot: sole clears by 6 cm
  const double trail_amp = h + 0.17;  // extra room for the toes-down droop
  const double lx = -0.04 + x0;       // foot plants, in order of travel
  const double rx0 = 0.10 + x0, rx1 = 0.86 + x0, lx1 = 1.00 + x0;

  // root height bound keeping the planted left leg inside its reach while
  // the root runs ahead of it
  auto stance_y = [=](double root_x) {
    double dx = root_x - lx;
    return std::min(0.90, 0.06 + std::sqrt(std::max(0.87 * 0.87 - dx * dx, 0.0)) - 0.015);
  };

  sc.targets = [=](double t) {
    PoseTargets tg;
    Vec2 l{lx, 0.06}, r{rx0, 0.06};
    double root_x, root_y;
    (void)u;
    if (t < t1) {
      root_x = 0.03 + x0;
      root_y = 0.92;
    } else if (t < t2) {
      root_x = ease(t, t1, t2 - t1, 0.03, 0.05) + x0;
      root_y = ease(t, t1, t2 - t1, 0.92, 0.90);
    } else if (t < t3) {  // right swing, root creeping forward over the left
      double s = (t - t2) / (t3 - t2);
      root_x = 0.05 + x0 + 0.28 * smoothstep01(s / 0.8);
      root_y = stance_y(root_x);
      r.x = rx0 + (rx1 - rx0) * smoothstep01(s / 0.9);
      double rise = smoothstep01(s / 0.22);
      // descend only to a hover the still-trailing root can reach; the rest
      // of the descent happens during the transfer
      double fall = 1.0 - (1.0 - 0.10 / lead_amp) * smoothstep01((s - 0.66) / 0.34);
      r.y = 0.06 + lead_amp * rise * fall;
    } else if (t < t4) {  // transfer: right plants, left peels
      double s = (t - t3) / (t4 - t3);
      root_x = 0.33 + x0 + 0.29 * smoothstep01(s / 0.9);
      double xb = 0.33 + x0 + 0.29 * smoothstep01(0.55 / 0.9);
      root_y = s < 0.55 ? stance_y(root_x)
                        : ease(s, 0.55, 0.45, stance_y(xb), 0.80);
      r.x = rx1;
      r.y = 0.16 - 0.10 * smoothstep01((s - 0.05) / 0.45);
      double peel = smoothstep01((s - 0.35) / 0.65);
      l.x = lx + 0.14 * peel;
      l.y = 0.06 + 0.104 * trail_amp * peel;
    } else if (t < t5) {  // trailing swing over the box
      double s = (t - t4) / (t5 - t4);
      root_x = 0.62 + x0 + 0.20 * smoothstep01(s / 0.6);
      root_y = ease(s, 0.0, 0.5, 0.80, 0.92);
      r = {rx1, 0.06};
      l.x = lx + 0.14 + (lx1 - lx - 0.14) * smoothstep01(s / 0.85);
      double rise = smoothstep01((s + 0.06) / 0.30);
      double fall = 1.0 - smoothstep01((s - 0.62) / 0.36);
      l.y = 0.06 + trail_amp * rise * fall;
    } else {
      root_x = ease(t, t5, t6 - t5, 0.82, 0.90) + x0;
      root_y = 0.92;
      r = {rx1, 0.06};
      l = {lx1, 0.06};
    }
    tg.root = {root_x, root_y};
    tg.ankle_l = l;
    tg.ankle_r = r;
    tg.labels[2] = l.y <= 0.068 ? 1 : 0;
    tg.labels[3] = r.y <= 0.068 ? 1 : 0;
    tg.waist_q = -0.08;
    tg.neck_q = 0.024;
    tg.shoulder_q = 0.15;
    tg.elbow_q = 0.25;
    return tg;
  };
  return sc;
}

// Reach out and rest the hand on a table top, hold the lean, release.
inline Script lean_script(double x0, const double* u, double duration) {
  Script sc;
  SceneObjectSpec table;
  table.name = "table";
  table.parts.push_back({Shape::box(0.25, 0.02), {0.0, 0.0}, 0.0, 400.0});
  table.parts.push_back({Shape::box(0.04, 0.43), {0.0, -0.45}, 0.0, 400.0});
  table.position = {0.55 + x0, 0.88};
  table.mobility = Mobility::kFixed;
  sc.scene = {make_floor(), table};

  const double k = std::min(1.0, (duration - 0.6) / 4.4);
  const double t1 = 1.0 * k, t2 = t1 + 1.2 * k;
  const double t4 = duration - 1.0 * k, t3 = t4 - 1.2 * k;
  (void)u;

  BipedDims dims;
  // where the passively hanging hand sits when the reach starts
  const Vec2 hang =
      hang_hand_tip(dims, {0.02 + x0, 0.92}, 0.0, 0.05, 0.12);
  // forearm tip cap (radius 0.035) touching the top surface y = 0.90
  const Vec2 rest{0.38 + x0, 0.935};

  sc.targets = [=](double t) {
    PoseTargets tg;
    tg.ankle_l = {-0.06 + x0, 0.06};
    tg.ankle_r = {0.10 + x0, 0.06};
    double p = updown(t, t1, t2 - t1, t3, t4 - t3);
    tg.root = {0.02 + x0 + 0.08 * p, 0.92 - 0.02 * p};
    tg.waist_q = -0.35 * p;
    tg.neck_q = -0.3 * tg.waist_q;
    if (t >= t1 && t <= t4) {
      tg.hand_target_active = true;
      Vec2 on_path = hang + (rest - hang) * p;
      tg.hand_tip = {on_path.x, on_path.y + 0.10 * std::sin(kPi * p)};
    } else {
      tg.shoulder_q = 0.05;
      tg.elbow_q = 0.12;
    }
    tg.labels[4] = (t >= t2 && t <= t3) ? 1 : 0;
    return tg;
  };
  return sc;
}

// From sitting on the floor: rock forward over the feet, then stand.
inline Script getup_script(double x0, const double* u, double duration) {
  Script sc;
  sc.scene = {make_floor()};
  const double k = std::min(1.0, (duration - 0.5) / 3.7);
  const double t1 = 1.2 * k, t2 = t1 + 1.2 * k, t3 = t2 + 1.3 * k;
  (void)u;

  sc.targets = [=](double t) {
    PoseTargets tg;
    double s1 = clamp((t - t1) / (t2 - t1), 0.0, 1.0);  // rock progress
    double s2 = clamp((t - t2) / (t3 - t2), 0.0, 1.0);  // rise progress

    // feet roll from toes-up to flat, only as fast as the shanks verticalise;
    // flat feet under still-horizontal legs would fold the ankles past -0.9
    double flatten = smoothstep01((s1 - 0.25) / 0.55);
    double fa = 0.6 * (1.0 - flatten);
    double ay = foot_rest_height(fa) + 0.005 * (1.0 - flatten);
    tg.ankle_l = {0.84 + x0, ay};
    tg.ankle_r = {0.78 + x0, ay};
    tg.foot_angle_l = fa;
    tg.foot_angle_r = fa;

    // the root stays back until the feet are nearly flat; rocking forward
    // any earlier folds the hip past its limit
    double rock_x = 0.46 * smoothstep01((s1 - 0.3) / 0.7);
    double rock_y = 0.075 + (0.42 - 0.075) * smoothstep01((s1 - 0.15) / 0.85);
    tg.root = {x0 + rock_x + (0.80 - 0.46) * smoothstep01(s2 / 0.9),
               rock_y + (0.92 - 0.42) * smoothstep01(s2)};

    tg.waist_q = 0.25 - 0.70 * smoothstep01(s1 / 0.7) + 0.40 * smoothstep01(s2);
    tg.neck_q = -0.3 * tg.waist_q;
    tg.shoulder_q = 0.9 - 0.85 * smoothstep01(s2);
    tg.elbow_q = 0.35 - 0.10 * smoothstep01(s1) - 0.13 * smoothstep01(s2);

    tg.labels[0] = t < t1 + 0.12 * (t2 - t1) ? 1 : 0;
    int feet = s1 >= 0.5 ? 1 : 0;
    tg.labels[2] = feet;
    tg.labels[3] = feet;
    return tg;
  };
  return sc;
}

inline Script make_script(const TaskSpec& task, double x0, const double* u) {
  const std::string& n = task.name;
  if (n == "sit-on-object" || n == "step-over-box") {
    if (task.height < 0.1 || task.height > 0.6)
      throw InvalidTaskError(n + ": height " + std::to_string(task.height) +
                             " outside [0.1, 0.6]");
  }
  if (n == "stand-idle") return stand_idle_script(x0, u);
  if (n == "squat") return squat_script(x0, u, task.duration);
  if (n == "sit-on-object") return sit_script(x0, u, task.duration, task.height);
  if (n == "step-over-box") {
    // a two-link leg with anatomical joint limits cannot clear hip-high
    // boxes in the sagittal plane; taller requests are rejected rather
    // than generating a clip that intersects the box
    if (task.height > 0.35)
      throw InvalidTaskError("step-over-box: height " + std::to_string(task.height) +
                             " exceeds sagittal step-over reach 0.35");
    return step_script(x0, u, task.duration, task.height);
  }
  if (n == "lean-on-table") return lean_script(x0, u, task.duration);
  if (n == "get-up-from-floor") return getup_script(x0, u, task.duration);
  throw InvalidTaskError("unknown task '" + n + "'");
}

inline ReferenceClip assemble_clip(const CharacterSpec& c, const TaskSpec& task,
                                   Script script) {
  ReferenceClip clip;
  clip.task = task.name;
  clip.height_param = task.height;
  for (const auto& j : c.joints) clip.joint_names.push_back(j.name);
  clip.scene = std::move(script.scene);

  const int n = int(std::lround(task.duration * kFrameRate));
  clip.frames.resize(n);
  BipedDims dims;
  for (int i = 0; i < n; ++i) {
    ReferenceFrame& f = clip.frames[i];
    PoseTargets tg = script.targets(i * kFrameDt);
    solve_targets(c, dims, tg, f.root_pos, f.root_angle, f.q);
    f.contact_labels.assign(tg.labels, tg.labels + 5);
    f.object_poses.resize(clip.scene.size());
    for (size_t o = 0; o < clip.scene.size(); ++o)
      f.object_poses[o] = {clip.scene[o].position, clip.scene[o].angle};
  }

  // central-difference velocities, one-sided at the ends
  auto& fr = clip.frames;
  for (int i = 0; i < n; ++i) {
    int a = std::max(i - 1, 0), b = std::min(i + 1, n - 1);
    double span = (b - a) * kFrameDt;
    ReferenceFrame& f = fr[i];
    f.root_vel = (fr[b].root_pos - fr[a].root_pos) / span;
    f.root_angvel = angle_diff(fr[b].root_angle, fr[a].root_angle) / span;
    f.dq.resize(f.q.size());
    for (size_t j = 0; j < f.q.size(); ++j)
      f.dq[j] = angle_diff(fr[b].q[j], fr[a].q[j]) / span;
  }
  return clip;
}

}  // namespace detail

inline ReferenceClip generate_clip(const CharacterSpec& c, const TaskSpec& task, Rng& rng) {
  if (task.duration < 2.0)
    throw InvalidTaskError("duration " + std::to_string(task.duration) + " below 2 s minimum");
  // fixed draw count so the stream stays aligned across tasks
  double x0 = rng.uniform(-0.02, 0.02);
  double u[4];
  for (double& v : u) v = rng.uniform01();
  detail::Script script = detail::make_script(task, x0, u);
  return detail::assemble_clip(c, task, std::move(script));
}

}  // namespace tracksim
