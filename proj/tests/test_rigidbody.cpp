#include "tracksim/rigidbody.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "tracksim/rng.hpp"

using namespace tracksim;

namespace {

constexpr double kDt = 1.0 / 240.0;

RigidBody make_box(Vec2 pos, double hx, double hy, double mass, bool is_static = false) {
  RigidBody b;
  b.shape = Shape::box(hx, hy);
  b.position = pos;
  if (is_static) {
    b.make_static();
  } else {
    b.set_mass(mass, mass * (hx * hx + hy * hy) / 3.0);
  }
  return b;
}

RigidBody make_circle(Vec2 pos, double r, double mass, bool is_static = false) {
  RigidBody b;
  b.shape = Shape::circle(r);
  b.position = pos;
  if (is_static) {
    b.make_static();
  } else {
    b.set_mass(mass, 0.5 * mass * r * r);
  }
  return b;
}

int add_floor(WorldState& w) {
  // static slab with its top face at y = 0
  return w.add_body(make_box({0.0, -0.5}, 50.0, 0.5, 0.0, true));
}

void run(WorldState& w, int steps) {
  std::vector<double> torques(w.joints.size(), 0.0);
  for (int i = 0; i < steps; ++i) step_inplace(w, torques, kDt);
}

}  // namespace

TEST(RigidBody, ProjectileMatchesClosedForm) {
  WorldState w;
  RigidBody b = make_circle({0.0, 10.0}, 0.05, 1.0);
  b.velocity = {3.0, 4.0};
  b.angular_velocity = 1.5;
  w.add_body(b);

  const Vec2 x0 = b.position, v0 = b.velocity;
  double max_rel = 0.0;
  double t = 0.0;
  std::vector<double> torques;
  for (int i = 0; i < 240; ++i) {
    step_inplace(w, torques, kDt);
    t += kDt;
    Vec2 exact = x0 + v0 * t + w.gravity * (0.5 * t * t);
    Vec2 err = w.bodies[0].position - exact;
    max_rel = std::max(max_rel, err.length() / exact.length());
  }
  EXPECT_LT(max_rel, 1e-3);
  EXPECT_NEAR(w.bodies[0].velocity.y, v0.y + w.gravity.y * t, 1e-9);
}

TEST(RigidBody, PendulumPeriodMatchesTheory) {
  WorldState w;
  int pivot = w.add_body(make_circle({0.0, 0.0}, 0.01, 0.0, true));
  const double L = 1.0, theta0 = 5.0 * kPi / 180.0;
  RigidBody bob = make_circle({L * std::sin(theta0), -L * std::cos(theta0)}, 0.01, 1.0);
  int bi = w.add_body(bob);
  RevoluteJoint j;
  j.body_a = pivot;
  j.body_b = bi;
  j.anchor_a = {0.0, 0.0};
  j.anchor_b = {-L * std::sin(theta0), L * std::cos(theta0)};
  j.max_torque = 0.0;
  w.add_joint(j);
  w.exclude_collision(pivot, bi);

  std::vector<double> crossings;
  double prev_x = w.bodies[bi].position.x;
  std::vector<double> torques(1, 0.0);
  for (int i = 0; i < 240 * 8; ++i) {
    step_inplace(w, torques, kDt);
    double x = w.bodies[bi].position.x;
    if (prev_x > 0.0 && x <= 0.0) {
      double frac = prev_x / (prev_x - x);
      crossings.push_back((i + frac) * kDt);
    }
    prev_x = x;
  }
  ASSERT_GE(crossings.size(), 3u);
  double mean_period = (crossings.back() - crossings.front()) / double(crossings.size() - 1);
  double expected = 2.0 * kPi * std::sqrt(L / 9.81);
  EXPECT_NEAR(mean_period, expected, 0.02 * expected);
}

TEST(RigidBody, RestingBoxStaysPut) {
  WorldState w;
  add_floor(w);
  int bi = w.add_body(make_box({0.0, 0.1}, 0.2, 0.1, 4.0));
  run(w, 480);
  EXPECT_NEAR(w.bodies[bi].position.y, 0.1, 2e-3);
  EXPECT_NEAR(w.bodies[bi].position.x, 0.0, 1e-3);
  EXPECT_LT(w.bodies[bi].velocity.length(), 1e-3);
  for (const Contact& c : w.contacts) EXPECT_LE(c.penetration, 2e-3);
}

TEST(RigidBody, ExactTouchIsHeld) {
  WorldState w;
  add_floor(w);
  int bi = w.add_body(make_box({0.3, 0.05}, 0.1, 0.05, 2.0));
  auto contacts = detect_contacts(w);
  ASSERT_EQ(contacts.size(), 2u);  // two clipped face points at zero depth
  for (const Contact& c : contacts) EXPECT_NEAR(c.penetration, 0.0, 1e-12);
  run(w, 240);
  EXPECT_NEAR(w.bodies[bi].position.y, 0.05, 2e-3);
}

TEST(RigidBody, MomentumExactWithoutForces) {
  WorldState w;
  w.gravity = {0.0, 0.0};
  Rng rng = Rng::stream(11, 99);
  std::vector<Vec2> mv0;
  for (int i = 0; i < 3; ++i) {
    RigidBody b = make_circle({double(i) * 10.0, 0.0}, 0.1, 1.0 + i);
    b.velocity = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
    b.angular_velocity = rng.uniform(-3, 3);
    w.add_body(b);
    mv0.push_back(b.velocity * b.mass);
  }
  run(w, 1000);
  for (int i = 0; i < 3; ++i) {
    Vec2 mv = w.bodies[i].velocity * w.bodies[i].mass;
    EXPECT_EQ(mv.x, mv0[i].x);
    EXPECT_EQ(mv.y, mv0[i].y);
  }
}

TEST(RigidBody, CircleOverFloorContact) {
  WorldState w;
  add_floor(w);
  int bi = w.add_body(make_circle({0.0, 0.05}, 0.1, 1.0));
  (void)bi;
  auto contacts = detect_contacts(w);
  ASSERT_EQ(contacts.size(), 1u);
  EXPECT_NEAR(contacts[0].normal.x, 0.0, 1e-12);
  EXPECT_NEAR(contacts[0].normal.y, 1.0, 1e-12);
  EXPECT_NEAR(contacts[0].penetration, 0.05, 1e-12);
}

TEST(RigidBody, TorqueSaturationIsExact) {
  auto build = [] {
    WorldState w;
    w.gravity = {0.0, 0.0};
    int a = w.add_body(make_circle({0.0, 0.0}, 0.05, 0.0, true));
    RigidBody arm;
    arm.shape = Shape::capsule(0.4, 0.03);
    arm.position = {0.0, -0.2};
    arm.set_mass(1.0, 0.014);
    int b = w.add_body(arm);
    RevoluteJoint j;
    j.body_a = a;
    j.body_b = b;
    j.anchor_b = {0.0, 0.2};
    j.max_torque = 80.0;
    j.limit_low = -3.0;
    j.limit_high = 3.0;
    w.add_joint(j);
    w.exclude_collision(a, b);
    return w;
  };
  WorldState w1 = build(), w2 = build();
  std::vector<double> sat{80.0}, huge{1e9};
  for (int i = 0; i < 100; ++i) {
    step_inplace(w1, sat, kDt);
    step_inplace(w2, huge, kDt);
  }
  EXPECT_EQ(w1.bodies[1].position.x, w2.bodies[1].position.x);
  EXPECT_EQ(w1.bodies[1].angle, w2.bodies[1].angle);
  EXPECT_EQ(w1.bodies[1].angular_velocity, w2.bodies[1].angular_velocity);
}

TEST(RigidBody, FrictionConeHolds) {
  WorldState w;
  add_floor(w);
  RigidBody b = make_box({0.0, 0.1}, 0.2, 0.1, 4.0);
  b.velocity = {2.5, 0.0};
  w.add_body(b);
  std::vector<double> torques;
  for (int i = 0; i < 480; ++i) {
    step_inplace(w, torques, kDt);
    for (const Contact& c : w.contacts) {
      double mu = std::sqrt(w.bodies[c.body_a].friction * w.bodies[c.body_b].friction);
      EXPECT_LE(std::abs(c.impulse_tangent), mu * c.impulse_normal + 1e-12);
    }
  }
  // started above the static-friction budget, must have slid and stopped
  EXPECT_GT(w.bodies[1].position.x, 0.05);
  EXPECT_LT(std::abs(w.bodies[1].velocity.x), 1e-3);
}

TEST(RigidBody, FrictionHoldsAgainstModerateSideLoad) {
  WorldState w;
  w.gravity = {2.0, -9.81};  // tan(theta) ~ 0.2, well inside mu = 0.8
  add_floor(w);
  int bi = w.add_body(make_box({0.0, 0.1}, 0.2, 0.1, 4.0));
  run(w, 480);
  EXPECT_NEAR(w.bodies[bi].position.x, 0.0, 1e-3);
}

TEST(RigidBody, StaticWorldUnchanged) {
  WorldState w;
  add_floor(w);
  w.add_body(make_box({0.2, 0.3}, 0.1, 0.1, 0.0, true));
  WorldState out = step(w, {}, kDt);
  for (size_t i = 0; i < w.bodies.size(); ++i) {
    EXPECT_EQ(out.bodies[i].position.x, w.bodies[i].position.x);
    EXPECT_EQ(out.bodies[i].position.y, w.bodies[i].position.y);
    EXPECT_EQ(out.bodies[i].angle, w.bodies[i].angle);
  }
}

TEST(RigidBody, ExcludedPairsProduceNoContacts) {
  WorldState w;
  int a = w.add_body(make_box({0.0, 0.0}, 0.2, 0.2, 1.0));
  int b = w.add_body(make_box({0.1, 0.1}, 0.2, 0.2, 1.0));
  ASSERT_FALSE(detect_contacts(w).empty());
  w.exclude_collision(a, b);
  EXPECT_TRUE(detect_contacts(w).empty());
}

TEST(RigidBody, DeterministicReplay) {
  auto build = [] {
    WorldState w;
    add_floor(w);
    w.add_body(make_box({0.0, 0.4}, 0.15, 0.1, 3.0));
    RigidBody c = make_circle({-0.05, 0.9}, 0.08, 1.5);
    c.velocity = {0.3, -0.1};
    w.add_body(c);
    RigidBody cap;
    cap.shape = Shape::capsule(0.3, 0.04);
    cap.position = {0.5, 0.6};
    cap.angle = 0.4;
    cap.set_mass(1.2, 0.01);
    w.add_body(cap);
    return w;
  };
  WorldState w1 = build(), w2 = build();
  std::vector<double> torques;
  for (int i = 0; i < 300; ++i) {
    step_inplace(w1, torques, kDt);
    step_inplace(w2, torques, kDt);
  }
  for (size_t i = 0; i < w1.bodies.size(); ++i) {
    EXPECT_EQ(w1.bodies[i].position.x, w2.bodies[i].position.x);
    EXPECT_EQ(w1.bodies[i].position.y, w2.bodies[i].position.y);
    EXPECT_EQ(w1.bodies[i].angle, w2.bodies[i].angle);
    EXPECT_EQ(w1.bodies[i].velocity.x, w2.bodies[i].velocity.x);
    EXPECT_EQ(w1.bodies[i].angular_velocity, w2.bodies[i].angular_velocity);
  }
}

TEST(RigidBody, JointAnchorsStayAligned) {
  WorldState w;
  int base = w.add_body(make_box({0.0, 2.0}, 0.1, 0.1, 0.0, true));
  RigidBody l1;
  l1.shape = Shape::capsule(0.4, 0.03);
  l1.position = {0.0, 1.8};
  l1.set_mass(1.0, 0.016);
  int b1 = w.add_body(l1);
  RigidBody l2 = l1;
  l2.position = {0.0, 1.4};
  int b2 = w.add_body(l2);
  RevoluteJoint j1;
  j1.body_a = base;
  j1.body_b = b1;
  j1.anchor_a = {0.0, 0.0};
  j1.anchor_b = {0.0, 0.2};
  j1.limit_low = -2.5;
  j1.limit_high = 2.5;
  j1.max_torque = 50.0;
  w.add_joint(j1);
  RevoluteJoint j2 = j1;
  j2.body_a = b1;
  j2.body_b = b2;
  j2.anchor_a = {0.0, -0.2};
  j2.anchor_b = {0.0, 0.2};
  w.add_joint(j2);
  w.exclude_collision(base, b1);
  w.exclude_collision(b1, b2);
  w.exclude_collision(base, b2);

  std::vector<double> torques(2);
  double t = 0.0;
  for (int i = 0; i < 2400; ++i) {
    torques[0] = 8.0 * std::sin(2.0 * kPi * 0.7 * t);
    torques[1] = 6.0 * std::sin(2.0 * kPi * 1.1 * t + 1.0);
    step_inplace(w, torques, kDt);
    t += kDt;
    if (i % 10 == 0) {
      for (const RevoluteJoint& j : w.joints) {
        Vec2 pa = w.bodies[j.body_a].to_world(j.anchor_a);
        Vec2 pb = w.bodies[j.body_b].to_world(j.anchor_b);
        ASSERT_LT((pa - pb).length(), 5e-3);
      }
    }
  }
}

TEST(RigidBody, JointLimitsAreRespected) {
  WorldState w;
  w.gravity = {0.0, 0.0};
  int a = w.add_body(make_circle({0.0, 0.0}, 0.05, 0.0, true));
  RigidBody arm;
  arm.shape = Shape::capsule(0.4, 0.03);
  arm.position = {0.0, -0.2};
  arm.set_mass(1.0, 0.014);
  int b = w.add_body(arm);
  RevoluteJoint j;
  j.body_a = a;
  j.body_b = b;
  j.anchor_b = {0.0, 0.2};
  j.max_torque = 100.0;
  j.limit_low = -0.3;
  j.limit_high = 0.5;
  w.add_joint(j);
  w.exclude_collision(a, b);

  std::vector<double> push{100.0};
  for (int i = 0; i < 960; ++i) step_inplace(w, push, kDt);
  double q = w.bodies[b].angle - w.bodies[a].angle;
  EXPECT_LE(q, 0.5 + 0.02);
  std::vector<double> pull{-100.0};
  for (int i = 0; i < 960; ++i) step_inplace(w, pull, kDt);
  q = w.bodies[b].angle - w.bodies[a].angle;
  EXPECT_GE(q, -0.3 - 0.02);
}

TEST(RigidBody, WeldJointHoldsAngle) {
  WorldState w;
  add_floor(w);
  RigidBody base = make_box({0.0, 0.1}, 0.2, 0.1, 5.0);
  int b0 = w.add_body(base);
  RigidBody post = make_box({0.15, 0.45}, 0.05, 0.25, 1.0);
  int b1 = w.add_body(post);
  RevoluteJoint weld;
  weld.body_a = b0;
  weld.body_b = b1;
  weld.anchor_a = {0.15, 0.1};
  weld.anchor_b = {0.0, -0.25};
  weld.limit_low = 0.0;
  weld.limit_high = 0.0;
  weld.max_torque = 1e6;
  w.add_joint(weld);
  w.exclude_collision(b0, b1);

  std::vector<double> torques(1, 0.0);
  for (int i = 0; i < 480; ++i) step_inplace(w, torques, kDt);
  EXPECT_NEAR(w.bodies[b1].angle - w.bodies[b0].angle, 0.0, 5e-3);
  EXPECT_NEAR(w.bodies[b1].position.x, 0.15, 5e-3);
}

TEST(RigidBody, RestingContactForceMatchesWeight) {
  WorldState w;
  add_floor(w);
  int bi = w.add_body(make_box({0.0, 0.1}, 0.2, 0.1, 10.0));
  run(w, 120);  // settle
  Vec2 mean_f{};
  const int n = 30;
  std::vector<double> torques;
  for (int i = 0; i < n; ++i) {
    step_inplace(w, torques, kDt);
    mean_f += contact_force_on(w, bi, kDt);
  }
  mean_f = mean_f / double(n);
  EXPECT_NEAR(mean_f.y, 98.1, 0.05 * 98.1);
  EXPECT_NEAR(mean_f.x, 0.0, 1.0);
}

TEST(RigidBody, StackedBoxesReportStackWeights) {
  WorldState w;
  add_floor(w);
  int lo = w.add_body(make_box({0.0, 0.1}, 0.5, 0.1, 10.0));
  int hi = w.add_body(make_box({0.05, 0.3}, 0.4, 0.1, 5.0));
  run(w, 240);
  Vec2 f_lo{}, f_hi{};
  const int n = 30;
  std::vector<double> torques;
  for (int i = 0; i < n; ++i) {
    step_inplace(w, torques, kDt);
    f_lo += contact_force_on(w, lo, kDt);
    f_hi += contact_force_on(w, hi, kDt);
  }
  f_lo = f_lo / double(n);
  f_hi = f_hi / double(n);
  // net force on each resting body equals its own weight
  EXPECT_NEAR(f_hi.y, 5.0 * 9.81, 0.05 * 5.0 * 9.81);
  EXPECT_NEAR(f_lo.y, 10.0 * 9.81, 0.05 * 10.0 * 9.81);
}

TEST(RigidBody, CapsuleRestsOnFloor) {
  WorldState w;
  add_floor(w);
  RigidBody cap;
  cap.shape = Shape::capsule(0.4, 0.05);
  cap.position = {0.0, 0.06};
  cap.angle = kPi / 2.0;  // lying horizontally
  cap.set_mass(2.0, 0.03);
  int bi = w.add_body(cap);
  run(w, 480);
  EXPECT_NEAR(w.bodies[bi].position.y, 0.05, 2.5e-3);
  EXPECT_LT(std::abs(w.bodies[bi].angle - kPi / 2.0), 0.02);
}

TEST(RigidBody, HingedSpringReturnsToRest) {
  WorldState w;
  w.gravity = {0.0, 0.0};
  int a = w.add_body(make_circle({0.0, 0.0}, 0.05, 0.0, true));
  RigidBody arm;
  arm.shape = Shape::capsule(0.4, 0.03);
  arm.position = {0.0, -0.2};
  arm.set_mass(1.0, 0.014);
  int b = w.add_body(arm);
  RevoluteJoint j;
  j.body_a = a;
  j.body_b = b;
  j.anchor_b = {0.0, 0.2};
  j.max_torque = 1e5;
  j.limit_low = -2.0;
  j.limit_high = 2.0;
  j.stiffness = 20.0;
  j.damping = 2.0;
  j.rest_angle = 0.0;
  w.add_joint(j);
  w.exclude_collision(a, b);

  // push away from rest, release, expect spring to pull it back
  std::vector<double> push{30.0}, none{0.0};
  for (int i = 0; i < 240; ++i) step_inplace(w, push, kDt);
  ASSERT_GT(w.bodies[b].angle, 0.5);
  for (int i = 0; i < 2400; ++i) step_inplace(w, none, kDt);
  EXPECT_NEAR(w.bodies[b].angle, 0.0, 0.05);
}

TEST(RigidBody, NonFiniteStateThrows) {
  WorldState w;
  RigidBody b = make_circle({0.0, 1.0}, 0.1, 1.0);
  b.velocity = {std::numeric_limits<double>::quiet_NaN(), 0.0};
  w.add_body(b);
  EXPECT_THROW(step(w, {}, kDt), NonFiniteStateError);
}

TEST(RigidBody, TorqueCountMismatchThrows) {
  WorldState w;
  w.add_body(make_circle({0.0, 1.0}, 0.1, 1.0));
  std::vector<double> torques(3, 0.0);
  EXPECT_THROW(step(w, torques, kDt), DimensionMismatchError);
}

TEST(RigidBody, BoxBoxManifoldBasics) {
  WorldState w;
  w.add_body(make_box({0.0, 0.0}, 0.5, 0.5, 1.0));
  w.add_body(make_box({0.0, 0.95}, 0.5, 0.5, 1.0));
  auto contacts = detect_contacts(w);
  ASSERT_EQ(contacts.size(), 2u);
  for (const Contact& c : contacts) {
    EXPECT_NEAR(std::abs(c.normal.y), 1.0, 1e-12);
    EXPECT_NEAR(c.penetration, 0.05, 1e-12);
  }
}
