#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace kpzlab {

enum class FrameKind { Micro, Macro, Plane };

const char* to_string(FrameKind kind);
FrameKind frame_kind_from_string(const std::string& s);

// Coordinate frame of a simulation.  A mollifier translate at a point p contributes
// amp * theta((t - p_t) / time_scale, (x - p_x) / space_scale) to the noise, and the
// cloud intensity is 1 / (time_scale * space_scale) per unit area.
struct Frame {
  FrameKind kind = FrameKind::Macro;
  double epsilon = 1.0;
  double length = 1.0;        // spatial period
  double smooth_scale = 1.0;  // s in m(k) = s^-2 Q(2 pi s k / L)
  double amplitude = 1.0;
  double time_scale = 1.0;
  double space_scale = 1.0;
  double outer = 1.0;  // nonlinearity prefactor: outer * F(inner * h_x)
  double inner = 1.0;

  static Frame macro(double eps);
  static Frame micro(double eps);
  static Frame plane(double length);

  double intensity() const { return 1.0 / (time_scale * space_scale); }
  double compensator() const { return amplitude; }
};

struct SpaceTimeField {
  std::vector<double> values;  // row-major, nt rows of nx values
  std::size_t nt = 0;
  std::size_t nx = 0;
  double t0 = 0.0;
  double dt = 0.0;
  Frame frame;

  SpaceTimeField() = default;
  SpaceTimeField(std::size_t nt_, std::size_t nx_, double t0_, double dt_, const Frame& f)
      : values(nt_ * nx_, 0.0), nt(nt_), nx(nx_), t0(t0_), dt(dt_), frame(f) {}

  double& at(std::size_t n, std::size_t j) { return values[n * nx + j]; }
  double at(std::size_t n, std::size_t j) const { return values[n * nx + j]; }
  double* row(std::size_t n) { return values.data() + n * nx; }
  const double* row(std::size_t n) const { return values.data() + n * nx; }

  double period() const { return frame.length; }
  double dx() const { return frame.length / static_cast<double>(nx); }
  double time(std::size_t n) const { return t0 + dt * static_cast<double>(n); }
  double space(std::size_t j) const { return dx() * static_cast<double>(j); }
  double t_end() const { return nt == 0 ? t0 : time(nt - 1); }
  // Periodic index arithmetic.
  std::size_t wrap(long j) const {
    const long n = static_cast<long>(nx);
    return static_cast<std::size_t>(((j % n) + n) % n);
  }
};

// Uniform grid descriptor: nt nodes t0 + n dt, nx nodes j L / nx.
struct GridSpec {
  std::size_t nt = 0;
  std::size_t nx = 0;
  double t0 = 0.0;
  double dt = 0.0;
};

}  // namespace kpzlab
