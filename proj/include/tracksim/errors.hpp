#pragma once

#include <stdexcept>
#include <string>

namespace tracksim {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Simulation state stopped being finite (diverged solver, bad torques).
struct NonFiniteStateError : Error {
  using Error::Error;
};

// A freshly built world had character/scene overlap beyond tolerance.
struct InitialPenetrationError : Error {
  InitialPenetrationError(const std::string& link, const std::string& object, double depth)
      : Error("initial penetration: link '" + link + "' overlaps object '" + object + "' by " +
              std::to_string(depth) + " m"),
        link_name(link),
        object_name(object),
        depth_m(depth) {}
  std::string link_name;
  std::string object_name;
  double depth_m = 0.0;
};

struct InvalidTaskError : Error {
  using Error::Error;
};

struct OutOfRangeError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct FormatError : Error {
  using Error::Error;
};

struct DimensionMismatchError : Error {
  using Error::Error;
};

struct ConfigMismatchError : Error {
  using Error::Error;
};

struct NonFiniteGradientError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace tracksim
