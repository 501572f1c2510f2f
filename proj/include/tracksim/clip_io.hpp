#pragma once

// Text serialization for reference clips: a `QECLIP 1` header, the scene
// description, then one whitespace-separated row per frame. Numbers carry 17
// significant digits, so parsed values compare equal to the originals as
// IEEE-754 doubles.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tracksim/errors.hpp"
#include "tracksim/motion.hpp"

namespace tracksim {
namespace detail {

inline void put_num(std::ostream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

// Whitespace tokenizer with typed accessors; every underrun or type error
// maps to FormatError so truncated files fail loudly.
class ClipTokens {
 public:
  explicit ClipTokens(std::istream& is) {
    std::string t;
    while (is >> t) tokens_.push_back(t);
  }
  bool done() const { return at_ >= tokens_.size(); }
  const std::string& word() {
    if (done()) throw FormatError("clip file truncated");
    return tokens_[at_++];
  }
  void expect(const char* kw) {
    const std::string& w = word();
    if (w != kw)
      throw FormatError("clip file: expected '" + std::string(kw) + "', got '" + w + "'");
  }
  double num() {
    const std::string& w = word();
    char* end = nullptr;
    double v = std::strtod(w.c_str(), &end);
    if (end == w.c_str() || *end != '\0')
      throw FormatError("clip file: bad number '" + w + "'");
    return v;
  }
  long integer() {
    const std::string& w = word();
    char* end = nullptr;
    long v = std::strtol(w.c_str(), &end, 10);
    if (end == w.c_str() || *end != '\0')
      throw FormatError("clip file: bad integer '" + w + "'");
    return v;
  }

 private:
  std::vector<std::string> tokens_;
  size_t at_ = 0;
};

inline const char* mobility_word(Mobility m) {
  switch (m) {
    case Mobility::kFixed: return "fixed";
    case Mobility::kFree: return "free";
    case Mobility::kHinged: return "hinged";
  }
  return "fixed";
}

inline Mobility mobility_from(const std::string& w) {
  if (w == "fixed") return Mobility::kFixed;
  if (w == "free") return Mobility::kFree;
  if (w == "hinged") return Mobility::kHinged;
  throw FormatError("clip file: unknown mobility '" + w + "'");
}

}  // namespace detail

inline void save_clip(const ReferenceClip& clip, const std::string& path) {
  std::ostringstream os;
  auto num = [&os](double v) {
    os << ' ';
    detail::put_num(os, v);
  };

  os << "QECLIP 1\n";
  os << "task " << clip.task << "\nheight";
  num(clip.height_param);
  os << "\ndt";
  num(clip.dt);
  os << "\njoints " << clip.joint_names.size();
  for (const auto& n : clip.joint_names) os << ' ' << n;
  os << "\nobjects " << clip.scene.size() << '\n';
  for (const SceneObjectSpec& o : clip.scene) {
    os << "object " << o.name << ' ' << detail::mobility_word(o.mobility);
    num(o.position.x);
    num(o.position.y);
    num(o.angle);
    num(o.friction);
    if (o.mobility == Mobility::kHinged) {
      num(o.hinge_anchor.x);
      num(o.hinge_anchor.y);
      num(o.hinge_low);
      num(o.hinge_high);
      num(o.hinge_stiffness);
      num(o.hinge_damping);
    }
    os << ' ' << o.parts.size() << '\n';
    for (const auto& p : o.parts) {
      os << "part ";
      switch (p.shape.kind) {
        case ShapeKind::kBox:
          os << "box";
          num(p.shape.half_extents.x);
          num(p.shape.half_extents.y);
          break;
        case ShapeKind::kCircle:
          os << "circle";
          num(p.shape.radius);
          break;
        case ShapeKind::kCapsule:
          os << "capsule";
          num(p.shape.half_length);
          num(p.shape.radius);
          break;
      }
      num(p.offset.x);
      num(p.offset.y);
      num(p.angle);
      num(p.density);
      os << '\n';
    }
  }
  size_t n_labels = clip.frames.empty() ? 0 : clip.frames[0].contact_labels.size();
  os << "frames " << clip.frames.size() << ' ' << n_labels << '\n';
  for (const ReferenceFrame& f : clip.frames) {
    detail::put_num(os, f.root_pos.x);
    num(f.root_pos.y);
    num(f.root_angle);
    num(f.root_vel.x);
    num(f.root_vel.y);
    num(f.root_angvel);
    for (double v : f.q) num(v);
    for (double v : f.dq) num(v);
    for (int l : f.contact_labels) os << ' ' << l;
    for (const Pose& p : f.object_poses) {
      num(p.position.x);
      num(p.position.y);
      num(p.angle);
    }
    os << '\n';
  }

  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << os.str();
  out.flush();
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline ReferenceClip load_clip(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  detail::ClipTokens tk(in);

  const std::string& magic = tk.word();
  if (magic != "QECLIP") throw FormatError("'" + path + "' is not a clip file");
  const std::string version = tk.word();
  if (version != "1") throw FormatError("unsupported clip version " + version);

  ReferenceClip clip;
  tk.expect("task");
  clip.task = tk.word();
  tk.expect("height");
  clip.height_param = tk.num();
  tk.expect("dt");
  clip.dt = tk.num();
  if (!(clip.dt > 0.0)) throw FormatError("clip file: non-positive dt");

  tk.expect("joints");
  long nq = tk.integer();
  if (nq < 0) throw FormatError("clip file: negative joint count");
  for (long i = 0; i < nq; ++i) clip.joint_names.push_back(tk.word());

  tk.expect("objects");
  long nobj = tk.integer();
  if (nobj < 0) throw FormatError("clip file: negative object count");
  for (long i = 0; i < nobj; ++i) {
    tk.expect("object");
    SceneObjectSpec o;
    o.name = tk.word();
    o.mobility = detail::mobility_from(tk.word());
    o.position = {tk.num(), tk.num()};
    o.angle = tk.num();
    o.friction = tk.num();
    if (o.mobility == Mobility::kHinged) {
      o.hinge_anchor = {tk.num(), tk.num()};
      o.hinge_low = tk.num();
      o.hinge_high = tk.num();
      o.hinge_stiffness = tk.num();
      o.hinge_damping = tk.num();
    }
    long nparts = tk.integer();
    for (long pi = 0; pi < nparts; ++pi) {
      tk.expect("part");
      SceneObjectSpec::Part p;
      const std::string& kind = tk.word();
      if (kind == "box") {
        p.shape.kind = ShapeKind::kBox;
        p.shape.half_extents = {tk.num(), tk.num()};
      } else if (kind == "circle") {
        p.shape.kind = ShapeKind::kCircle;
        p.shape.radius = tk.num();
      } else if (kind == "capsule") {
        p.shape.kind = ShapeKind::kCapsule;
        p.shape.half_length = tk.num();
        p.shape.radius = tk.num();
      } else {
        throw FormatError("clip file: unknown shape '" + kind + "'");
      }
      p.offset = {tk.num(), tk.num()};
      p.angle = tk.num();
      p.density = tk.num();
      o.parts.push_back(p);
    }
    clip.scene.push_back(std::move(o));
  }

  tk.expect("frames");
  long nframes = tk.integer();
  long n_labels = tk.integer();
  if (nframes < 0 || n_labels < 0) throw FormatError("clip file: negative frame header");
  clip.frames.resize(nframes);
  for (ReferenceFrame& f : clip.frames) {
    f.root_pos = {tk.num(), tk.num()};
    f.root_angle = tk.num();
    f.root_vel = {tk.num(), tk.num()};
    f.root_angvel = tk.num();
    f.q.resize(nq);
    for (double& v : f.q) v = tk.num();
    f.dq.resize(nq);
    for (double& v : f.dq) v = tk.num();
    f.contact_labels.resize(n_labels);
    for (int& l : f.contact_labels) l = int(tk.integer());
    f.object_poses.resize(nobj);
    for (Pose& p : f.object_poses) {
      p.position = {tk.num(), tk.num()};
      p.angle = tk.num();
    }
  }
  if (!tk.done()) throw FormatError("clip file: trailing data after last frame");
  return clip;
}

}  // namespace tracksim
