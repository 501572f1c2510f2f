#pragma once

// Character and scene assembly: an 11-link sagittal biped plus scene objects
// (static, free, or hinged composites of primitive shapes), built into a
// rigid-body world with self-collision disabled and mass from density.

#include <string>
#include <vector>

#include "tracksim/errors.hpp"
#include "tracksim/math.hpp"
#include "tracksim/rigidbody.hpp"
#include "tracksim/rng.hpp"

namespace tracksim {

struct MassProps {
  double mass = 0.0;
  double inertia = 0.0;  // about the centroid, perpendicular axis
};

inline MassProps mass_properties(const Shape& shape, double density) {
  MassProps mp;
  switch (shape.kind) {
    case ShapeKind::kBox: {
      double hx = shape.half_extents.x, hy = shape.half_extents.y;
      mp.mass = density * 4.0 * hx * hy;
      mp.inertia = mp.mass * (hx * hx + hy * hy) / 3.0;
      break;
    }
    case ShapeKind::kCircle: {
      double r = shape.radius;
      mp.mass = density * kPi * r * r;
      mp.inertia = 0.5 * mp.mass * r * r;
      break;
    }
    case ShapeKind::kCapsule: {
      double r = shape.radius, L = 2.0 * shape.half_length;
      double m_rect = density * 2.0 * r * L;
      double m_caps = density * kPi * r * r;  // the two end caps together
      double i_rect = m_rect * (L * L + 4.0 * r * r) / 12.0;
      double i_caps = m_caps * (0.5 * r * r + 0.25 * L * L + 4.0 * r * L / (3.0 * kPi));
      mp.mass = m_rect + m_caps;
      mp.inertia = i_rect + i_caps;
      break;
    }
  }
  return mp;
}

// ---- character ------------------------------------------------------- //

struct CharacterSpec {
  struct Link {
    std::string name;
    Shape shape;
    double density = 1000.0;
  };
  // q = angle(child) - angle(parent); limits and the torque cap are exact
  struct Joint {
    std::string name;
    int parent_link = -1;
    int child_link = -1;
    Vec2 parent_anchor{};
    Vec2 child_anchor{};
    double limit_low = -2.0;
    double limit_high = 2.0;
    double max_torque = 100.0;
  };

  std::vector<Link> links;    // links[0] is the root
  std::vector<Joint> joints;  // ordered parent-before-child
  std::vector<int> contact_label_links;
  std::vector<std::string> contact_label_names;
  double friction = 0.8;

  int link_index(const std::string& name) const {
    for (size_t i = 0; i < links.size(); ++i)
      if (links[i].name == name) return int(i);
    throw ConfigError("unknown link '" + name + "'");
  }
  int joint_index(const std::string& name) const {
    for (size_t i = 0; i < joints.size(); ++i)
      if (joints[i].name == name) return int(i);
    throw ConfigError("unknown joint '" + name + "'");
  }

  static CharacterSpec biped();
};

// Default sagittal biped, 1.7 m / 70 kg. Arms are lumped into a single
// sagittal arm (upper arm + forearm-with-hand), legs are separate. All
// joint angles zero = standing upright, feet soles on y = 0. Hip anchors
// sit high enough that the pelvis underside is the lowest surface around
// the hips: a seated pose loads the pelvis, not the thigh caps.
inline CharacterSpec CharacterSpec::biped() {
  CharacterSpec c;
  auto add_link = [&c](const std::string& name, Shape shape, double target_mass) {
    // density chosen so the analytic mass comes out at target_mass
    MassProps unit = mass_properties(shape, 1.0);
    c.links.push_back({name, shape, target_mass / unit.mass});
  };
  add_link("pelvis", Shape::box(0.10, 0.075), 8.0);
  add_link("spine", Shape::capsule(0.44, 0.10), 26.0);
  add_link("head", Shape::circle(0.11), 5.6);
  add_link("upper_arm", Shape::capsule(0.28, 0.04), 4.0);
  add_link("forearm", Shape::capsule(0.36, 0.035), 3.4);
  add_link("thigh_l", Shape::capsule(0.42, 0.065), 7.0);
  add_link("shank_l", Shape::capsule(0.45, 0.045), 3.2);
  add_link("foot_l", Shape::box(0.12, 0.03), 1.3);
  add_link("thigh_r", Shape::capsule(0.42, 0.065), 7.0);
  add_link("shank_r", Shape::capsule(0.45, 0.045), 3.2);
  add_link("foot_r", Shape::box(0.12, 0.03), 1.3);

  auto add_joint = [&c](const std::string& name, const std::string& parent,
                        const std::string& child, Vec2 pa, Vec2 ca, double lo, double hi,
                        double tau) {
    c.joints.push_back({name, c.link_index(parent), c.link_index(child), pa, ca, lo, hi, tau});
  };
  // anchors in link-local frames; capsule axes run along local +y
  add_joint("waist", "pelvis", "spine", {0.0, 0.07}, {0.0, -0.22}, -1.0, 0.6, 200.0);
  add_joint("neck", "spine", "head", {0.0, 0.22}, {0.0, -0.14}, -0.8, 0.8, 50.0);
  add_joint("shoulder", "spine", "upper_arm", {0.0, 0.18}, {0.0, 0.14}, -1.0, 3.0, 100.0);
  add_joint("elbow", "upper_arm", "forearm", {0.0, -0.14}, {0.0, 0.18}, -0.05, 2.6, 60.0);
  add_joint("hip_l", "pelvis", "thigh_l", {0.0, 0.0}, {0.0, 0.21}, -0.5, 2.2, 200.0);
  add_joint("knee_l", "thigh_l", "shank_l", {0.0, -0.21}, {0.0, 0.225}, -2.8, 0.05, 150.0);
  add_joint("ankle_l", "shank_l", "foot_l", {0.0, -0.225}, {-0.04, 0.03}, -0.9, 0.9, 80.0);
  add_joint("hip_r", "pelvis", "thigh_r", {0.0, 0.0}, {0.0, 0.21}, -0.5, 2.2, 200.0);
  add_joint("knee_r", "thigh_r", "shank_r", {0.0, -0.21}, {0.0, 0.225}, -2.8, 0.05, 150.0);
  add_joint("ankle_r", "shank_r", "foot_r", {0.0, -0.225}, {-0.04, 0.03}, -0.9, 0.9, 80.0);

  c.contact_label_names = {"pelvis", "spine", "foot_l", "foot_r", "hand"};
  c.contact_label_links = {c.link_index("pelvis"), c.link_index("spine"),
                           c.link_index("foot_l"), c.link_index("foot_r"),
                           c.link_index("forearm")};
  return c;
}

// Root height that puts the biped's soles exactly on y = 0 at q = 0.
inline constexpr double kBipedStandRootHeight = 0.93;
// Local offset of the hand tip on the forearm link.
inline constexpr Vec2 kHandTipOffset{0.0, -0.18};

struct Pose {
  Vec2 position{};
  double angle = 0.0;
};

struct LinkMotion {
  Vec2 position{};
  double angle = 0.0;
  Vec2 velocity{};
  double angular_velocity = 0.0;
};

inline std::vector<Pose> link_poses(const CharacterSpec& c, Vec2 root_pos, double root_angle,
                                    std::span<const double> q) {
  if (q.size() != c.joints.size())
    throw DimensionMismatchError("link_poses: expected " + std::to_string(c.joints.size()) +
                                 " joint angles, got " + std::to_string(q.size()));
  std::vector<Pose> poses(c.links.size());
  std::vector<bool> placed(c.links.size(), false);
  poses[0] = {root_pos, root_angle};
  placed[0] = true;
  for (size_t j = 0; j < c.joints.size(); ++j) {
    const auto& jt = c.joints[j];
    if (!placed[jt.parent_link])
      throw ConfigError("joint '" + jt.name + "' parent placed after child");
    const Pose& pp = poses[jt.parent_link];
    double child_angle = pp.angle + q[j];
    Vec2 anchor_world = pp.position + Rot2(pp.angle).apply(jt.parent_anchor);
    poses[jt.child_link] = {anchor_world - Rot2(child_angle).apply(jt.child_anchor),
                            child_angle};
    placed[jt.child_link] = true;
  }
  return poses;
}

// Positions and velocities of all links for a moving root and joint rates.
inline std::vector<LinkMotion> link_motions(const CharacterSpec& c, Vec2 root_pos,
                                            double root_angle, Vec2 root_vel,
                                            double root_angvel, std::span<const double> q,
                                            std::span<const double> dq) {
  if (dq.size() != c.joints.size())
    throw DimensionMismatchError("link_motions: joint velocity count mismatch");
  std::vector<Pose> poses = link_poses(c, root_pos, root_angle, q);
  std::vector<LinkMotion> out(c.links.size());
  out[0] = {poses[0].position, poses[0].angle, root_vel, root_angvel};
  for (size_t j = 0; j < c.joints.size(); ++j) {
    const auto& jt = c.joints[j];
    const LinkMotion& pm = out[jt.parent_link];
    const Pose& cp = poses[jt.child_link];
    Vec2 anchor_world = pm.position + Rot2(pm.angle).apply(jt.parent_anchor);
    Vec2 anchor_vel = pm.velocity + cross(pm.angular_velocity, anchor_world - pm.position);
    double child_angvel = pm.angular_velocity + dq[j];
    // center velocity: v_anchor + w x (center - anchor)
    Vec2 v = anchor_vel + cross(child_angvel, cp.position - anchor_world);
    out[jt.child_link] = {cp.position, cp.angle, v, child_angvel};
  }
  return out;
}

// ---- scene ----------------------------------------------------------- //

enum class Mobility { kFixed, kFree, kHinged };

struct SceneObjectSpec {
  struct Part {
    Shape shape;
    Vec2 offset{};  // in the object frame
    double angle = 0.0;
    double density = 500.0;
  };
  std::string name;
  std::vector<Part> parts;
  Vec2 position{};
  double angle = 0.0;
  Mobility mobility = Mobility::kFixed;
  double friction = 0.8;
  // hinged objects: pin joint to the world at this object-frame anchor,
  // swing limits relative to the placed angle, optional return spring
  Vec2 hinge_anchor{};
  double hinge_low = 0.0;
  double hinge_high = 0.0;
  double hinge_stiffness = 0.0;
  double hinge_damping = 0.0;
};

inline SceneObjectSpec make_floor() {
  SceneObjectSpec o;
  o.name = "floor";
  o.parts.push_back({Shape::box(50.0, 0.5), {0.0, 0.0}, 0.0, 1000.0});
  o.position = {0.0, -0.5};
  o.mobility = Mobility::kFixed;
  return o;
}

struct ScenePlacement {
  int first_body = 0;
  int body_count = 0;
};

// A built world plus the bookkeeping needed to address character links and
// scene objects inside it. Character link i is body i.
struct BuiltWorld {
  WorldState world;
  int char_body_count = 0;
  std::vector<ScenePlacement> objects;
  std::vector<std::string> object_names;
};

inline BuiltWorld build_world(const CharacterSpec& c,
                              const std::vector<SceneObjectSpec>& scene, Vec2 root_pos,
                              double root_angle, std::span<const double> joint_angles) {
  BuiltWorld bw;
  WorldState& w = bw.world;

  std::vector<Pose> poses = link_poses(c, root_pos, root_angle, joint_angles);
  for (size_t i = 0; i < c.links.size(); ++i) {
    RigidBody b;
    b.shape = c.links[i].shape;
    b.position = poses[i].position;
    b.angle = poses[i].angle;
    MassProps mp = mass_properties(b.shape, c.links[i].density);
    b.set_mass(mp.mass, mp.inertia);
    b.friction = c.friction;
    w.add_body(b);
  }
  bw.char_body_count = int(c.links.size());
  for (int i = 0; i < bw.char_body_count; ++i)
    for (int j = i + 1; j < bw.char_body_count; ++j) w.exclude_collision(i, j);

  for (size_t j = 0; j < c.joints.size(); ++j) {
    const auto& js = c.joints[j];
    RevoluteJoint rj;
    rj.body_a = js.parent_link;
    rj.body_b = js.child_link;
    rj.anchor_a = js.parent_anchor;
    rj.anchor_b = js.child_anchor;
    rj.limit_low = js.limit_low;
    rj.limit_high = js.limit_high;
    rj.max_torque = js.max_torque;
    w.add_joint(rj);
  }

  int first_static = -1;
  for (const SceneObjectSpec& obj : scene) {
    ScenePlacement placement;
    placement.first_body = int(w.bodies.size());
    Rot2 rot(obj.angle);
    for (const auto& part : obj.parts) {
      RigidBody b;
      b.shape = part.shape;
      b.position = obj.position + rot.apply(part.offset);
      b.angle = obj.angle + part.angle;
      b.friction = obj.friction;
      if (obj.mobility == Mobility::kFixed) {
        b.make_static();
      } else {
        MassProps mp = mass_properties(part.shape, part.density);
        b.set_mass(mp.mass, mp.inertia);
      }
      int idx = w.add_body(b);
      if (obj.mobility == Mobility::kFixed && first_static < 0) first_static = idx;
    }
    placement.body_count = int(w.bodies.size()) - placement.first_body;

    // parts of one object never collide with each other
    for (int i = placement.first_body; i < placement.first_body + placement.body_count; ++i)
      for (int k = i + 1; k < placement.first_body + placement.body_count; ++k)
        w.exclude_collision(i, k);
    // weld trailing parts onto the first
    for (int i = placement.first_body + 1; i < placement.first_body + placement.body_count;
         ++i) {
      RevoluteJoint weld;
      weld.body_a = placement.first_body;
      weld.body_b = i;
      const RigidBody& a = w.bodies[weld.body_a];
      const RigidBody& b = w.bodies[i];
      weld.anchor_a = a.rot().apply_inv(b.position - a.position);
      weld.anchor_b = {0.0, 0.0};
      double q0 = b.angle - a.angle;
      weld.limit_low = q0;
      weld.limit_high = q0;
      weld.max_torque = 1e9;
      w.add_joint(weld);
    }

    bw.objects.push_back(placement);
    bw.object_names.push_back(obj.name);
  }

  // hinges attach to the first static body; resolve after all objects exist
  for (size_t oi = 0; oi < scene.size(); ++oi) {
    const SceneObjectSpec& obj = scene[oi];
    if (obj.mobility != Mobility::kHinged) continue;
    if (first_static < 0)
      throw ConfigError("hinged object '" + obj.name + "' needs a static body to attach to");
    int body = bw.objects[oi].first_body;
    RevoluteJoint h;
    h.body_a = first_static;
    h.body_b = body;
    const RigidBody& a = w.bodies[first_static];
    const RigidBody& b = w.bodies[body];
    Vec2 anchor_world = obj.position + Rot2(obj.angle).apply(obj.hinge_anchor);
    h.anchor_a = a.rot().apply_inv(anchor_world - a.position);
    h.anchor_b = b.rot().apply_inv(anchor_world - b.position);
    double q0 = b.angle - a.angle;
    h.limit_low = q0 + obj.hinge_low;
    h.limit_high = q0 + obj.hinge_high;
    h.rest_angle = q0;
    h.stiffness = obj.hinge_stiffness;
    h.damping = obj.hinge_damping;
    h.max_torque = 1e9;
    w.add_joint(h);
    w.exclude_collision(first_static, body);
  }

  // a freshly placed character may touch the scene but not sink into it
  for (const Contact& ct : detect_contacts(w)) {
    bool a_char = ct.body_a < bw.char_body_count;
    bool b_char = ct.body_b < bw.char_body_count;
    if (a_char == b_char) continue;
    if (ct.penetration <= 0.01) continue;
    int link = a_char ? ct.body_a : ct.body_b;
    int scene_body = a_char ? ct.body_b : ct.body_a;
    std::string obj_name = "?";
    for (size_t oi = 0; oi < bw.objects.size(); ++oi) {
      if (scene_body >= bw.objects[oi].first_body &&
          scene_body < bw.objects[oi].first_body + bw.objects[oi].body_count)
        obj_name = bw.object_names[oi];
    }
    throw InitialPenetrationError(c.links[link].name, obj_name, ct.penetration);
  }

  return bw;
}

// ---- randomization and labels ---------------------------------------- //

struct SceneRandomization {
  double position_range = 0.08;  // +- metres, both axes
  double angle_range = 0.0;      // +- radians
};

// Draws exactly three uniforms per non-floor object so the stream layout
// does not depend on the ranges. The floor defines the world datum and is
// never moved.
inline std::vector<SceneObjectSpec> randomize_scene(const std::vector<SceneObjectSpec>& scene,
                                                    const SceneRandomization& params,
                                                    Rng& rng) {
  std::vector<SceneObjectSpec> out = scene;
  for (SceneObjectSpec& obj : out) {
    if (obj.name == "floor") continue;
    double dx = rng.uniform(-params.position_range, params.position_range);
    double dy = rng.uniform(-params.position_range, params.position_range);
    double da = rng.uniform(-params.angle_range, params.angle_range);
    obj.position += {dx, dy};
    obj.angle += da;
  }
  return out;
}

inline constexpr double kContactForceThreshold = 50.0;  // newtons, upward

// One 0/1 label per tracked link: is it being pushed up by at least the
// threshold force right now.
inline std::vector<int> compute_contact_labels(const WorldState& w, const CharacterSpec& c,
                                               double dt,
                                               double threshold = kContactForceThreshold) {
  std::vector<int> labels(c.contact_label_links.size(), 0);
  for (size_t i = 0; i < c.contact_label_links.size(); ++i) {
    Vec2 f = contact_force_on(w, c.contact_label_links[i], dt);
    labels[i] = f.y > threshold ? 1 : 0;
  }
  return labels;
}

}  // namespace tracksim
