#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>

namespace lvmark {

/// Continuous pixel coordinate. x is the column (rightward), y the row
/// (downward), origin at the top-left pixel center. Sub-pixel values are
/// allowed everywhere; labels attached to an NxN image stay in [0, N).
struct PixelPoint {
  double x = 0.0;
  double y = 0.0;

  PixelPoint() = default;
  PixelPoint(double px, double py) : x(px), y(py) {}

  [[nodiscard]] bool finite() const noexcept {
    return std::isfinite(x) && std::isfinite(y);
  }
  [[nodiscard]] bool operator==(const PixelPoint& o) const noexcept {
    return x == o.x && y == o.y;
  }
};

/// Canonical landmark order, fixed across the entire system.
enum LandmarkIndex : int {
  kIvsTop = 0,
  kIvsBottom = 1,
  kLvidTop = 2,
  kLvidBottom = 3,
  kLvpwTop = 4,
  kLvpwBottom = 5,
};

inline constexpr int kNumLandmarks = 6;
inline constexpr int kNumMeasurements = 3;

/// The six caliper endpoints of one image in canonical order
/// [IVS-top, IVS-bottom, LVID-top, LVID-bottom, LVPW-top, LVPW-bottom].
struct LandmarkSet {
  std::array<PixelPoint, kNumLandmarks> points{};

  [[nodiscard]] bool finite() const noexcept {
    for (const auto& p : points)
      if (!p.finite()) return false;
    return true;
  }
  [[nodiscard]] bool operator==(const LandmarkSet& o) const noexcept {
    return points == o.points;
  }
};

enum class MeasurementName { IVS, LVID, LVPW };

const char* to_string(MeasurementName name);

/// One caliper measurement: endpoints, Euclidean length and unit direction.
/// A degenerate pair (start == end) has length 0, zero direction and the
/// `degenerate` flag set; it never aborts batch processing.
struct MeasurementVector {
  MeasurementName name = MeasurementName::IVS;
  PixelPoint start;
  PixelPoint end;
  double length = 0.0;
  std::array<double, 2> direction{0.0, 0.0};
  bool degenerate = false;
};

/// The three measurements built from the canonical landmark pairs
/// (0,1), (2,3), (4,5).
struct MeasurementSet {
  MeasurementVector ivs;
  MeasurementVector lvid;
  MeasurementVector lvpw;

  [[nodiscard]] const MeasurementVector& operator[](int m) const {
    return m == 0 ? ivs : (m == 1 ? lvid : lvpw);
  }
};

MeasurementSet measurements_from_landmarks(const LandmarkSet& lm);

/// Cosine of the angle between two measurement directions. Empty when either
/// vector is degenerate (the angle is undefined).
std::optional<double> angle_cosine(const MeasurementVector& a,
                                   const MeasurementVector& b);

/// Pixel-center normalized grid: index i of an axis with `size` pixels maps
/// to (2i+1)/size - 1, so pixel centers cover (-1, 1) symmetrically and the
/// expectation of a one-pixel mass lands exactly on that pixel's center.
[[nodiscard]] inline double normalize_coord(double pixel, int size) {
  return (2.0 * pixel + 1.0) / static_cast<double>(size) - 1.0;
}

[[nodiscard]] inline double denormalize_coord(double unit, int size) {
  return ((unit + 1.0) * static_cast<double>(size) - 1.0) / 2.0;
}

struct NormalizedPoint {
  double x = 0.0;
  double y = 0.0;
};

[[nodiscard]] inline NormalizedPoint normalize_point(const PixelPoint& p, int size) {
  return {normalize_coord(p.x, size), normalize_coord(p.y, size)};
}

[[nodiscard]] inline PixelPoint denormalize_point(const NormalizedPoint& p, int size) {
  return {denormalize_coord(p.x, size), denormalize_coord(p.y, size)};
}

[[nodiscard]] inline double distance(const PixelPoint& a, const PixelPoint& b) {
  return std::hypot(b.x - a.x, b.y - a.y);
}

/// Perpendicular of a unit direction (rotated +90 degrees).
[[nodiscard]] inline std::array<double, 2> perpendicular(const std::array<double, 2>& d) {
  return {-d[1], d[0]};
}

}  // namespace lvmark
