#pragma once

// Planar rigid-body world: circles, capsules, boxes; revolute joints with
// angle limits and torque saturation; sequential-impulse contact solver with
// Coulomb friction and non-penetration projection. Value semantics
// throughout: step() is a pure function of (state, torques, dt).

#include <algorithm>
#include <cstdint>
#include <span>
#include <unordered_set>
#include <vector>

#include "tracksim/errors.hpp"
#include "tracksim/math.hpp"

namespace tracksim {

enum class ShapeKind : uint8_t { kCircle, kCapsule, kBox };

struct Shape {
  ShapeKind kind = ShapeKind::kCircle;
  double radius = 0.0;       // circle, capsule
  double half_length = 0.0;  // capsule: half the core segment, axis = local +y
  Vec2 half_extents{};       // box

  static Shape circle(double r) {
    Shape s;
    s.kind = ShapeKind::kCircle;
    s.radius = r;
    return s;
  }
  static Shape capsule(double full_length, double r) {
    Shape s;
    s.kind = ShapeKind::kCapsule;
    s.half_length = 0.5 * full_length;
    s.radius = r;
    return s;
  }
  static Shape box(double half_x, double half_y) {
    Shape s;
    s.kind = ShapeKind::kBox;
    s.half_extents = {half_x, half_y};
    return s;
  }
};

struct RigidBody {
  Shape shape{};
  Vec2 position{};
  double angle = 0.0;
  Vec2 velocity{};
  double angular_velocity = 0.0;
  double mass = 0.0;
  double inertia = 0.0;
  double inv_mass = 0.0;     // 0 for static bodies
  double inv_inertia = 0.0;  // 0 for static bodies
  double friction = 0.8;
  bool is_static = false;

  void set_mass(double m, double i) {
    mass = m;
    inertia = i;
    inv_mass = is_static || m <= 0.0 ? 0.0 : 1.0 / m;
    inv_inertia = is_static || i <= 0.0 ? 0.0 : 1.0 / i;
  }
  void make_static() {
    is_static = true;
    inv_mass = 0.0;
    inv_inertia = 0.0;
    velocity = {};
    angular_velocity = 0.0;
  }
  Rot2 rot() const { return Rot2(angle); }
  Vec2 to_world(const Vec2& local) const { return position + rot().apply(local); }
};

// Connects parent body_a to child body_b. The commanded torque is saturated
// to [-max_torque, +max_torque] exactly; the passive spring (stiffness about
// rest_angle, used for hinged scene objects) is structural and not subject
// to the actuation clamp. Relative angle q = angle_b - angle_a; limits with
// limit_low == limit_high act as a rigid weld.
struct RevoluteJoint {
  int body_a = -1;
  int body_b = -1;
  Vec2 anchor_a{};  // local to body_a
  Vec2 anchor_b{};  // local to body_b
  double limit_low = -1e9;
  double limit_high = 1e9;
  double max_torque = 0.0;
  double stiffness = 0.0;
  double damping = 0.0;
  double rest_angle = 0.0;
};

struct Contact {
  int body_a = -1;
  int body_b = -1;
  Vec2 point{};
  Vec2 normal{};  // unit, from body_a towards body_b
  double penetration = 0.0;
  double impulse_normal = 0.0;   // accumulated over the step's iterations
  double impulse_tangent = 0.0;  // along perp(normal)
};

inline uint64_t pair_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (uint64_t(uint32_t(a)) << 32) | uint32_t(b);
}

struct WorldState {
  std::vector<RigidBody> bodies;
  std::vector<RevoluteJoint> joints;
  Vec2 gravity{0.0, -9.81};
  std::unordered_set<uint64_t> collision_exclusions;  // pair_key()ed body pairs
  std::vector<Contact> contacts;                      // refreshed by step()

  int velocity_iterations = 10;
  int position_iterations = 3;
  double position_correction = 0.2;  // fraction of penetration removed per pass
  double penetration_slop = 0.001;   // metres tolerated without correction
  double contact_tolerance = 1e-6;   // admit contacts up to this separation

  int add_body(const RigidBody& b) {
    bodies.push_back(b);
    return int(bodies.size()) - 1;
  }
  int add_joint(const RevoluteJoint& j) {
    joints.push_back(j);
    return int(joints.size()) - 1;
  }
  void exclude_collision(int a, int b) { collision_exclusions.insert(pair_key(a, b)); }
  bool excluded(int a, int b) const { return collision_exclusions.count(pair_key(a, b)) > 0; }
};

namespace detail {

struct Aabb {
  Vec2 lo, hi;
  bool overlaps(const Aabb& o) const {
    return lo.x <= o.hi.x && o.lo.x <= hi.x && lo.y <= o.hi.y && o.lo.y <= hi.y;
  }
};

inline void capsule_segment(const RigidBody& b, Vec2& p1, Vec2& p2) {
  Vec2 axis = b.rot().apply({0.0, b.shape.half_length});
  p1 = b.position - axis;
  p2 = b.position + axis;
}

inline Aabb body_aabb(const RigidBody& b, double fat) {
  switch (b.shape.kind) {
    case ShapeKind::kBox: {
      Rot2 r = b.rot();
      double ex = std::abs(r.c) * b.shape.half_extents.x + std::abs(r.s) * b.shape.half_extents.y;
      double ey = std::abs(r.s) * b.shape.half_extents.x + std::abs(r.c) * b.shape.half_extents.y;
      return {{b.position.x - ex - fat, b.position.y - ey - fat},
              {b.position.x + ex + fat, b.position.y + ey + fat}};
    }
    case ShapeKind::kCapsule: {
      Vec2 p1, p2;
      capsule_segment(b, p1, p2);
      double r = b.shape.radius;
      return {{std::min(p1.x, p2.x) - r - fat, std::min(p1.y, p2.y) - r - fat},
              {std::max(p1.x, p2.x) + r + fat, std::max(p1.y, p2.y) + r + fat}};
    }
    case ShapeKind::kCircle:
    default: {
      double r = b.shape.radius;
      return {{b.position.x - r - fat, b.position.y - r - fat},
              {b.position.x + r + fat, b.position.y + r + fat}};
    }
  }
}

inline void box_corners(const RigidBody& b, Vec2 out[4]) {
  Rot2 r = b.rot();
  Vec2 h = b.shape.half_extents;
  out[0] = b.position + r.apply({+h.x, +h.y});
  out[1] = b.position + r.apply({-h.x, +h.y});
  out[2] = b.position + r.apply({-h.x, -h.y});
  out[3] = b.position + r.apply({+h.x, -h.y});
}

// Closest points between segments [p1,q1] and [p2,q2] (Ericson 5.1.9).
inline void closest_segment_segment(const Vec2& p1, const Vec2& q1, const Vec2& p2,
                                    const Vec2& q2, Vec2& c1, Vec2& c2) {
  const double eps = 1e-12;
  Vec2 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  double a = dot(d1, d1), e = dot(d2, d2), f = dot(d2, r);
  double s = 0.0, t = 0.0;
  if (a <= eps && e <= eps) {
    // both degenerate
  } else if (a <= eps) {
    t = clamp(f / e, 0.0, 1.0);
  } else {
    double c = dot(d1, r);
    if (e <= eps) {
      s = clamp(-c / a, 0.0, 1.0);
    } else {
      double b = dot(d1, d2);
      double denom = a * e - b * b;
      if (denom > eps) s = clamp((b * f - c * e) / denom, 0.0, 1.0);
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  c1 = p1 + d1 * s;
  c2 = p2 + d2 * t;
}

struct ContactScratch {
  Contact c[2];
  int n = 0;
  void push(const Contact& ct) {
    if (n < 2) {
      c[n++] = ct;
    } else {
      // keep the two deepest
      int shallow = c[0].penetration < c[1].penetration ? 0 : 1;
      if (ct.penetration > c[shallow].penetration) c[shallow] = ct;
    }
  }
};

// Both shapes reduced to segment+radius. One contact point: parallel capsule
// stacking is not a configuration the scenes produce.
inline void collide_round_round(const RigidBody& a, const RigidBody& b, int ia, int ib,
                                double tol, ContactScratch& out) {
  Vec2 a1, a2, b1, b2;
  if (a.shape.kind == ShapeKind::kCapsule) {
    capsule_segment(a, a1, a2);
  } else {
    a1 = a2 = a.position;
  }
  if (b.shape.kind == ShapeKind::kCapsule) {
    capsule_segment(b, b1, b2);
  } else {
    b1 = b2 = b.position;
  }
  Vec2 ca, cb;
  closest_segment_segment(a1, a2, b1, b2, ca, cb);
  Vec2 d = cb - ca;
  double dist = d.length();
  double pen = a.shape.radius + b.shape.radius - dist;
  if (pen < -tol) return;
  pen = std::max(pen, 0.0);
  Vec2 n = dist > 1e-12 ? d / dist : Vec2{0.0, 1.0};
  Contact ct;
  ct.body_a = ia;
  ct.body_b = ib;
  ct.normal = n;
  ct.penetration = pen;
  Vec2 surf_a = ca + n * a.shape.radius;
  Vec2 surf_b = cb - n * b.shape.radius;
  ct.point = (surf_a + surf_b) * 0.5;
  out.push(ct);
}

// Circle (center e, radius r) against box a. Returns false if separated.
// Normal points from the box towards the circle.
inline bool circle_vs_box(const RigidBody& a, const Vec2& e, double r, double tol, Contact& ct) {
  Rot2 rot = a.rot();
  Vec2 p = rot.apply_inv(e - a.position);
  Vec2 h = a.shape.half_extents;
  bool inside = std::abs(p.x) <= h.x && std::abs(p.y) <= h.y;
  Vec2 n_local;
  double pen;
  Vec2 q;
  if (inside) {
    double dx = h.x - std::abs(p.x);
    double dy = h.y - std::abs(p.y);
    if (dx < dy) {
      n_local = {p.x >= 0.0 ? 1.0 : -1.0, 0.0};
      pen = dx + r;
      q = {n_local.x * h.x, p.y};
    } else {
      n_local = {0.0, p.y >= 0.0 ? 1.0 : -1.0};
      pen = dy + r;
      q = {p.x, n_local.y * h.y};
    }
  } else {
    q = {clamp(p.x, -h.x, h.x), clamp(p.y, -h.y, h.y)};
    Vec2 d = p - q;
    double dist = d.length();
    if (dist > r + tol) return false;
    pen = std::max(r - dist, 0.0);
    n_local = dist > 1e-12 ? d / dist : Vec2{0.0, 1.0};
  }
  ct.normal = rot.apply(n_local);
  ct.penetration = pen;
  Vec2 q_world = a.position + rot.apply(q);
  ct.point = q_world - ct.normal * (0.5 * pen);
  return true;
}

// Box a against circle/capsule b: endpoint circles vs box faces, plus box
// corners vs core segment. Normals a -> b.
inline void collide_box_round(const RigidBody& a, const RigidBody& b, int ia, int ib,
                              double tol, ContactScratch& out) {
  Vec2 b1, b2;
  if (b.shape.kind == ShapeKind::kCapsule) {
    capsule_segment(b, b1, b2);
  } else {
    b1 = b2 = b.position;
  }
  double r = b.shape.radius;

  Contact cand[6];
  int n_cand = 0;
  Contact ct;
  ct.body_a = ia;
  ct.body_b = ib;
  if (circle_vs_box(a, b1, r, tol, ct)) cand[n_cand++] = ct;
  if (b.shape.kind == ShapeKind::kCapsule && circle_vs_box(a, b2, r, tol, ct)) cand[n_cand++] = ct;
  if (b.shape.kind == ShapeKind::kCapsule) {
    Vec2 corners[4];
    box_corners(a, corners);
    for (int k = 0; k < 4; ++k) {
      Vec2 s, cb;
      closest_segment_segment(corners[k], corners[k], b1, b2, s, cb);
      Vec2 d = cb - corners[k];
      double dist = d.length();
      if (dist > 1e-12 && dist <= r + tol) {
        Contact cc;
        cc.body_a = ia;
        cc.body_b = ib;
        cc.normal = d / dist;
        cc.penetration = std::max(r - dist, 0.0);
        cc.point = (corners[k] + cb - cc.normal * r) * 0.5;
        cand[n_cand++] = cc;
      }
    }
  }
  // drop near-duplicates, prefer deeper
  for (int i = 0; i < n_cand; ++i) {
    bool dominated = false;
    for (int j = 0; j < n_cand; ++j) {
      if (i == j) continue;
      if ((cand[i].point - cand[j].point).length() < 5e-3 &&
          (cand[j].penetration > cand[i].penetration ||
           (cand[j].penetration == cand[i].penetration && j < i))) {
        dominated = true;
        break;
      }
    }
    if (!dominated) out.push(cand[i]);
  }
}

// Box-box SAT with reference-face clipping; up to two points, normal a -> b.
inline void collide_box_box(const RigidBody& a, const RigidBody& b, int ia, int ib,
                            double tol, ContactScratch& out) {
  Vec2 ha = a.shape.half_extents, hb = b.shape.half_extents;
  Rot2 ra = a.rot(), rb = b.rot();
  Vec2 dp = b.position - a.position;
  Vec2 da = ra.apply_inv(dp);
  Vec2 db = rb.apply_inv(dp);
  // C = Ra^T Rb and its absolute value
  double c11 = ra.c * rb.c + ra.s * rb.s;
  double c12 = ra.c * -rb.s + ra.s * rb.c;
  double c21 = -ra.s * rb.c + ra.c * rb.s;
  double c22 = ra.s * rb.s + ra.c * rb.c;
  double a11 = std::abs(c11), a12 = std::abs(c12), a21 = std::abs(c21), a22 = std::abs(c22);

  Vec2 face_a = {std::abs(da.x) - ha.x - (a11 * hb.x + a12 * hb.y),
                 std::abs(da.y) - ha.y - (a21 * hb.x + a22 * hb.y)};
  Vec2 face_b = {std::abs(db.x) - hb.x - (a11 * ha.x + a21 * ha.y),
                 std::abs(db.y) - hb.y - (a12 * ha.x + a22 * ha.y)};
  if (face_a.x > tol || face_a.y > tol || face_b.x > tol || face_b.y > tol) return;

  // pick the reference axis with a preference bias for coherence
  const double rel_tol = 0.95, abs_tol = 0.01;
  enum { kFaceAX, kFaceAY, kFaceBX, kFaceBY } axis = kFaceAX;
  double separation = face_a.x;
  Vec2 normal = da.x > 0.0 ? Vec2{ra.c, ra.s} : Vec2{-ra.c, -ra.s};
  if (face_a.y > rel_tol * separation + abs_tol * ha.y) {
    axis = kFaceAY;
    separation = face_a.y;
    normal = da.y > 0.0 ? Vec2{-ra.s, ra.c} : Vec2{ra.s, -ra.c};
  }
  if (face_b.x > rel_tol * separation + abs_tol * hb.x) {
    axis = kFaceBX;
    separation = face_b.x;
    normal = db.x > 0.0 ? Vec2{rb.c, rb.s} : Vec2{-rb.c, -rb.s};
  }
  if (face_b.y > rel_tol * separation + abs_tol * hb.y) {
    axis = kFaceBY;
    separation = face_b.y;
    normal = db.y > 0.0 ? Vec2{-rb.s, rb.c} : Vec2{rb.s, -rb.c};
  }

  Vec2 front_normal, side_normal;
  double front, neg_side, pos_side;
  const RigidBody* inc_body;
  switch (axis) {
    case kFaceAX:
      front_normal = normal;
      front = dot(a.position, front_normal) + ha.x;
      side_normal = {-ra.s, ra.c};
      neg_side = -dot(a.position, side_normal) + ha.y;
      pos_side = dot(a.position, side_normal) + ha.y;
      inc_body = &b;
      break;
    case kFaceAY:
      front_normal = normal;
      front = dot(a.position, front_normal) + ha.y;
      side_normal = {ra.c, ra.s};
      neg_side = -dot(a.position, side_normal) + ha.x;
      pos_side = dot(a.position, side_normal) + ha.x;
      inc_body = &b;
      break;
    case kFaceBX:
      front_normal = -normal;
      front = dot(b.position, front_normal) + hb.x;
      side_normal = {-rb.s, rb.c};
      neg_side = -dot(b.position, side_normal) + hb.y;
      pos_side = dot(b.position, side_normal) + hb.y;
      inc_body = &a;
      break;
    case kFaceBY:
    default:
      front_normal = -normal;
      front = dot(b.position, front_normal) + hb.y;
      side_normal = {rb.c, rb.s};
      neg_side = -dot(b.position, side_normal) + hb.x;
      pos_side = dot(b.position, side_normal) + hb.x;
      inc_body = &a;
      break;
  }

  // incident edge: the face of inc_body most anti-parallel to front_normal
  Rot2 ri = inc_body->rot();
  Vec2 hi = inc_body->shape.half_extents;
  Vec2 n_inc = ri.apply_inv(-1.0 * front_normal);
  Vec2 edge[2];
  if (std::abs(n_inc.x) > std::abs(n_inc.y)) {
    double sx = n_inc.x >= 0.0 ? 1.0 : -1.0;
    edge[0] = inc_body->position + ri.apply({sx * hi.x, -hi.y});
    edge[1] = inc_body->position + ri.apply({sx * hi.x, +hi.y});
  } else {
    double sy = n_inc.y >= 0.0 ? 1.0 : -1.0;
    edge[0] = inc_body->position + ri.apply({-hi.x, sy * hi.y});
    edge[1] = inc_body->position + ri.apply({+hi.x, sy * hi.y});
  }

  // clip to the two side planes of the reference face
  auto clip = [](Vec2 pts[2], const Vec2& n, double offset) -> int {
    Vec2 out_pts[2];
    int n_out = 0;
    double d0 = dot(n, pts[0]) - offset;
    double d1 = dot(n, pts[1]) - offset;
    if (d0 <= 0.0) out_pts[n_out++] = pts[0];
    if (d1 <= 0.0) out_pts[n_out++] = pts[1];
    if (d0 * d1 < 0.0 && n_out < 2) {
      double t = d0 / (d0 - d1);
      out_pts[n_out++] = pts[0] + (pts[1] - pts[0]) * t;
    }
    pts[0] = out_pts[0];
    pts[1] = out_pts[1];
    return n_out;
  };
  if (clip(edge, -1.0 * side_normal, neg_side) < 2) return;
  if (clip(edge, side_normal, pos_side) < 2) return;

  for (int k = 0; k < 2; ++k) {
    double sep = dot(front_normal, edge[k]) - front;
    if (sep <= tol) {
      Contact ct;
      ct.body_a = ia;
      ct.body_b = ib;
      ct.normal = normal;
      ct.penetration = std::max(-sep, 0.0);
      ct.point = edge[k] - front_normal * (0.5 * sep);
      out.push(ct);
    }
  }
}

inline void collide_pair(const RigidBody& a, const RigidBody& b, int ia, int ib,
                         double tol, ContactScratch& out) {
  bool a_box = a.shape.kind == ShapeKind::kBox;
  bool b_box = b.shape.kind == ShapeKind::kBox;
  if (a_box && b_box) {
    collide_box_box(a, b, ia, ib, tol, out);
  } else if (a_box) {
    collide_box_round(a, b, ia, ib, tol, out);
  } else if (b_box) {
    ContactScratch tmp;
    collide_box_round(b, a, ib, ia, tol, tmp);
    for (int k = 0; k < tmp.n; ++k) {
      Contact ct = tmp.c[k];
      std::swap(ct.body_a, ct.body_b);
      ct.normal = -ct.normal;
      out.push(ct);
    }
  } else {
    collide_round_round(a, b, ia, ib, tol, out);
  }
}

}  // namespace detail

// Pure narrowphase over all non-excluded pairs with at least one dynamic body.
inline std::vector<Contact> detect_contacts(const WorldState& w) {
  std::vector<Contact> contacts;
  const int n = int(w.bodies.size());
  const double fat = 2e-6 + w.contact_tolerance;
  std::vector<detail::Aabb> boxes(n);
  for (int i = 0; i < n; ++i) boxes[i] = detail::body_aabb(w.bodies[i], fat);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const RigidBody& a = w.bodies[i];
      const RigidBody& b = w.bodies[j];
      if (a.is_static && b.is_static) continue;
      if (w.excluded(i, j)) continue;
      if (!boxes[i].overlaps(boxes[j])) continue;
      detail::ContactScratch scratch;
      detail::collide_pair(a, b, i, j, w.contact_tolerance, scratch);
      for (int k = 0; k < scratch.n; ++k) contacts.push_back(scratch.c[k]);
    }
  }
  return contacts;
}

// Net contact force currently acting on a body, reconstructed from the
// accumulated impulses of the last step.
inline Vec2 contact_force_on(const WorldState& w, int body, double dt) {
  Vec2 f{};
  for (const Contact& c : w.contacts) {
    Vec2 impulse = c.normal * c.impulse_normal + perp(c.normal) * c.impulse_tangent;
    if (c.body_b == body) f += impulse;
    if (c.body_a == body) f -= impulse;
  }
  return f / dt;
}

namespace detail {

struct ContactConstraint {
  int ia, ib;
  Vec2 ra, rb;  // world offsets from the centers at detection time
  Vec2 normal, tangent;
  double mass_n = 0.0, mass_t = 0.0;
  double friction = 0.0;
  double pen0 = 0.0;
  Vec2 xa0, xb0;  // poses at detection, for the linearized position residual
  double ta0 = 0.0, tb0 = 0.0;
  int contact_index = -1;
};

struct JointConstraint {
  int ia, ib;
  Vec2 ra, rb;
  Mat2 k;
  // limit handling: 0 none, 1 at lower, 2 at upper, 3 equality (weld)
  int limit_state = 0;
  double limit_impulse = 0.0;
  double angular_mass = 0.0;
};

inline Mat2 point_constraint_matrix(const RigidBody& a, const RigidBody& b, const Vec2& ra,
                                    const Vec2& rb) {
  double im = a.inv_mass + b.inv_mass;
  Mat2 k;
  k.a11 = im + a.inv_inertia * ra.y * ra.y + b.inv_inertia * rb.y * rb.y;
  k.a12 = -a.inv_inertia * ra.x * ra.y - b.inv_inertia * rb.x * rb.y;
  k.a21 = k.a12;
  k.a22 = im + a.inv_inertia * ra.x * ra.x + b.inv_inertia * rb.x * rb.x;
  return k;
}

}  // namespace detail

inline void step_inplace(WorldState& w, std::span<const double> joint_torques, double dt) {
  if (joint_torques.size() != w.joints.size())
    throw DimensionMismatchError("step: torque count " + std::to_string(joint_torques.size()) +
                                 " != joint count " + std::to_string(w.joints.size()));
  const int nb = int(w.bodies.size());

  // start-of-step velocities; the position update is trapezoidal in them,
  // which makes constant-acceleration free flight exact
  std::vector<Vec2> v0(nb);
  std::vector<double> w0(nb);
  for (int i = 0; i < nb; ++i) {
    v0[i] = w.bodies[i].velocity;
    w0[i] = w.bodies[i].angular_velocity;
  }

  for (RigidBody& b : w.bodies) {
    if (b.inv_mass > 0.0) b.velocity += w.gravity * dt;
  }

  for (size_t j = 0; j < w.joints.size(); ++j) {
    const RevoluteJoint& jt = w.joints[j];
    RigidBody& pa = w.bodies[jt.body_a];
    RigidBody& pb = w.bodies[jt.body_b];
    double tau = clamp(joint_torques[j], -jt.max_torque, jt.max_torque);
    if (jt.stiffness != 0.0 || jt.damping != 0.0) {
      double q = angle_diff(pb.angle - pa.angle, jt.rest_angle);
      tau += -jt.stiffness * q - jt.damping * (pb.angular_velocity - pa.angular_velocity);
    }
    pb.angular_velocity += dt * pb.inv_inertia * tau;
    pa.angular_velocity -= dt * pa.inv_inertia * tau;
  }

  w.contacts = detect_contacts(w);

  std::vector<detail::ContactConstraint> ccs;
  ccs.reserve(w.contacts.size());
  for (size_t ci = 0; ci < w.contacts.size(); ++ci) {
    const Contact& c = w.contacts[ci];
    const RigidBody& a = w.bodies[c.body_a];
    const RigidBody& b = w.bodies[c.body_b];
    detail::ContactConstraint cc;
    cc.ia = c.body_a;
    cc.ib = c.body_b;
    cc.ra = c.point - a.position;
    cc.rb = c.point - b.position;
    cc.normal = c.normal;
    cc.tangent = perp(c.normal);
    double kn = a.inv_mass + b.inv_mass;
    double crn_a = cross(cc.ra, cc.normal), crn_b = cross(cc.rb, cc.normal);
    double crt_a = cross(cc.ra, cc.tangent), crt_b = cross(cc.rb, cc.tangent);
    double mn = kn + a.inv_inertia * crn_a * crn_a + b.inv_inertia * crn_b * crn_b;
    double mt = kn + a.inv_inertia * crt_a * crt_a + b.inv_inertia * crt_b * crt_b;
    cc.mass_n = mn > 0.0 ? 1.0 / mn : 0.0;
    cc.mass_t = mt > 0.0 ? 1.0 / mt : 0.0;
    cc.friction = std::sqrt(a.friction * b.friction);
    cc.pen0 = c.penetration;
    cc.xa0 = a.position;
    cc.xb0 = b.position;
    cc.ta0 = a.angle;
    cc.tb0 = b.angle;
    cc.contact_index = int(ci);
    ccs.push_back(cc);
  }

  std::vector<detail::JointConstraint> jcs(w.joints.size());
  for (size_t j = 0; j < w.joints.size(); ++j) {
    const RevoluteJoint& jt = w.joints[j];
    const RigidBody& a = w.bodies[jt.body_a];
    const RigidBody& b = w.bodies[jt.body_b];
    detail::JointConstraint& jc = jcs[j];
    jc.ia = jt.body_a;
    jc.ib = jt.body_b;
    jc.ra = a.rot().apply(jt.anchor_a);
    jc.rb = b.rot().apply(jt.anchor_b);
    jc.k = detail::point_constraint_matrix(a, b, jc.ra, jc.rb);
    jc.angular_mass = a.inv_inertia + b.inv_inertia;
    double q = b.angle - a.angle;
    if (jt.limit_high - jt.limit_low < 1e-12) {
      jc.limit_state = 3;
    } else if (q <= jt.limit_low) {
      jc.limit_state = 1;
    } else if (q >= jt.limit_high) {
      jc.limit_state = 2;
    }
  }

  for (int it = 0; it < w.velocity_iterations; ++it) {
    for (detail::JointConstraint& jc : jcs) {
      RigidBody& a = w.bodies[jc.ia];
      RigidBody& b = w.bodies[jc.ib];
      // angle limit first, then the point constraint
      if (jc.limit_state != 0 && jc.angular_mass > 0.0) {
        double cdot = b.angular_velocity - a.angular_velocity;
        double lambda = -cdot / jc.angular_mass;
        double old = jc.limit_impulse;
        if (jc.limit_state == 1) {
          jc.limit_impulse = std::max(old + lambda, 0.0);
        } else if (jc.limit_state == 2) {
          jc.limit_impulse = std::min(old + lambda, 0.0);
        } else {
          jc.limit_impulse = old + lambda;
        }
        double d = jc.limit_impulse - old;
        b.angular_velocity += b.inv_inertia * d;
        a.angular_velocity -= a.inv_inertia * d;
      }
      Vec2 cdot = b.velocity + cross(b.angular_velocity, jc.rb) - a.velocity -
                  cross(a.angular_velocity, jc.ra);
      Vec2 impulse = jc.k.solve(-1.0 * cdot);
      b.velocity += impulse * b.inv_mass;
      b.angular_velocity += b.inv_inertia * cross(jc.rb, impulse);
      a.velocity -= impulse * a.inv_mass;
      a.angular_velocity -= a.inv_inertia * cross(jc.ra, impulse);
    }
    for (detail::ContactConstraint& cc : ccs) {
      RigidBody& a = w.bodies[cc.ia];
      RigidBody& b = w.bodies[cc.ib];
      Contact& c = w.contacts[cc.contact_index];
      Vec2 dv = b.velocity + cross(b.angular_velocity, cc.rb) - a.velocity -
                cross(a.angular_velocity, cc.ra);
      double vn = dot(dv, cc.normal);
      double djn = -vn * cc.mass_n;
      double old_n = c.impulse_normal;
      c.impulse_normal = std::max(old_n + djn, 0.0);
      djn = c.impulse_normal - old_n;
      Vec2 pn = cc.normal * djn;
      b.velocity += pn * b.inv_mass;
      b.angular_velocity += b.inv_inertia * cross(cc.rb, pn);
      a.velocity -= pn * a.inv_mass;
      a.angular_velocity -= a.inv_inertia * cross(cc.ra, pn);

      dv = b.velocity + cross(b.angular_velocity, cc.rb) - a.velocity -
           cross(a.angular_velocity, cc.ra);
      double vt = dot(dv, cc.tangent);
      double djt = -vt * cc.mass_t;
      double max_t = cc.friction * c.impulse_normal;
      double old_t = c.impulse_tangent;
      c.impulse_tangent = clamp(old_t + djt, -max_t, max_t);
      djt = c.impulse_tangent - old_t;
      Vec2 pt = cc.tangent * djt;
      b.velocity += pt * b.inv_mass;
      b.angular_velocity += b.inv_inertia * cross(cc.rb, pt);
      a.velocity -= pt * a.inv_mass;
      a.angular_velocity -= a.inv_inertia * cross(cc.ra, pt);
    }
  }

  for (int i = 0; i < nb; ++i) {
    RigidBody& b = w.bodies[i];
    if (b.inv_mass == 0.0 && b.inv_inertia == 0.0) continue;
    b.position += (v0[i] + b.velocity) * (0.5 * dt);
    b.angle += (w0[i] + b.angular_velocity) * (0.5 * dt);
  }

  // positional projection: joints re-evaluated exactly, contacts through the
  // linearized residual around the detection poses
  auto solve_joint_positions = [&w]() {
    double worst = 0.0;
    for (size_t j = 0; j < w.joints.size(); ++j) {
      const RevoluteJoint& jt = w.joints[j];
      RigidBody& a = w.bodies[jt.body_a];
      RigidBody& b = w.bodies[jt.body_b];
      // limit / weld correction
      double q = b.angle - a.angle;
      double am = a.inv_inertia + b.inv_inertia;
      if (am > 0.0) {
        double corr = 0.0;
        if (jt.limit_high - jt.limit_low < 1e-12) {
          corr = clamp(jt.limit_low - q, -0.2, 0.2);
        } else if (q < jt.limit_low) {
          corr = std::min(jt.limit_low - q, 0.2);
        } else if (q > jt.limit_high) {
          corr = std::max(jt.limit_high - q, -0.2);
        }
        if (corr != 0.0) {
          double d = corr / am;
          b.angle += b.inv_inertia * d;
          a.angle -= a.inv_inertia * d;
        }
      }
      Vec2 ra = a.rot().apply(jt.anchor_a);
      Vec2 rb = b.rot().apply(jt.anchor_b);
      Vec2 cerr = (b.position + rb) - (a.position + ra);
      worst = std::max(worst, cerr.length());
      Mat2 k = detail::point_constraint_matrix(a, b, ra, rb);
      Vec2 impulse = k.solve(-1.0 * cerr);
      b.position += impulse * b.inv_mass;
      b.angle += b.inv_inertia * cross(rb, impulse);
      a.position -= impulse * a.inv_mass;
      a.angle -= a.inv_inertia * cross(ra, impulse);
    }
    return worst;
  };

  for (int it = 0; it < w.position_iterations; ++it) {
    solve_joint_positions();
    for (detail::ContactConstraint& cc : ccs) {
      RigidBody& a = w.bodies[cc.ia];
      RigidBody& b = w.bodies[cc.ib];
      Vec2 da = a.position - cc.xa0 + cross(a.angle - cc.ta0, cc.ra);
      Vec2 db = b.position - cc.xb0 + cross(b.angle - cc.tb0, cc.rb);
      double pen = cc.pen0 - dot(db - da, cc.normal);
      double c_err = clamp(w.position_correction * (pen - w.penetration_slop), 0.0, 0.2);
      if (c_err <= 0.0 || cc.mass_n <= 0.0) continue;
      Vec2 p = cc.normal * (c_err * cc.mass_n);
      b.position += p * b.inv_mass;
      b.angle += b.inv_inertia * cross(cc.rb, p);
      a.position -= p * a.inv_mass;
      a.angle -= a.inv_inertia * cross(cc.ra, p);
    }
  }
  // polish anchors: fast motion regenerates joint error nonlinearly, so give
  // the cheap joints-only solve a few extra rounds
  for (int it = 0; it < 12; ++it) {
    if (solve_joint_positions() < 2.5e-4) break;
  }

  for (const RigidBody& b : w.bodies) {
    if (!finite(b.position) || !std::isfinite(b.angle) || !finite(b.velocity) ||
        !std::isfinite(b.angular_velocity))
      throw NonFiniteStateError("rigid body state became non-finite");
  }
}

inline WorldState step(const WorldState& w, std::span<const double> joint_torques, double dt) {
  WorldState out = w;
  step_inplace(out, joint_torques, dt);
  return out;
}

}  // namespace tracksim
