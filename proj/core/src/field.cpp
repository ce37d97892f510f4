#include "kpzlab/field.hpp"

#include <cmath>

#include "kpzlab/error.hpp"

namespace kpzlab {

const char* to_string(FrameKind kind) {
  switch (kind) {
    case FrameKind::Micro: return "micro";
    case FrameKind::Macro: return "macro";
    case FrameKind::Plane: return "plane";
  }
  return "unknown";
}

FrameKind frame_kind_from_string(const std::string& s) {
  if (s == "micro") return FrameKind::Micro;
  if (s == "macro") return FrameKind::Macro;
  if (s == "plane") return FrameKind::Plane;
  throw LabError(ErrorKind::InvalidArgument, "unknown frame '" + s + "'");
}

Frame Frame::macro(double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw LabError(ErrorKind::InvalidArgument, "macro frame needs 0 < eps <= 1");
  Frame f;
  f.kind = FrameKind::Macro;
  f.epsilon = eps;
  f.length = 1.0;
  f.smooth_scale = eps;
  f.amplitude = std::pow(eps, -1.5);
  f.time_scale = eps * eps;
  f.space_scale = eps;
  f.outer = 1.0 / eps;
  f.inner = std::sqrt(eps);
  return f;
}

Frame Frame::micro(double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw LabError(ErrorKind::InvalidArgument, "micro frame needs 0 < eps <= 1");
  Frame f;
  f.kind = FrameKind::Micro;
  f.epsilon = eps;
  f.length = 1.0 / eps;
  f.outer = std::sqrt(eps);
  f.inner = 1.0;
  return f;
}

Frame Frame::plane(double length) {
  if (!(length > 0.0)) throw LabError(ErrorKind::InvalidArgument, "plane frame needs positive period");
  Frame f;
  f.kind = FrameKind::Plane;
  f.epsilon = 0.0;
  f.length = length;
  return f;
}

}  // namespace kpzlab
