#include "lvmark/geometry.hpp"

namespace lvmark {

const char* to_string(MeasurementName name) {
  switch (name) {
    case MeasurementName::IVS: return "IVS";
    case MeasurementName::LVID: return "LVID";
    case MeasurementName::LVPW: return "LVPW";
  }
  return "?";
}

namespace {

MeasurementVector make_vector(MeasurementName name, const PixelPoint& start,
                              const PixelPoint& end) {
  MeasurementVector v;
  v.name = name;
  v.start = start;
  v.end = end;
  v.length = distance(start, end);
  if (v.length > 0.0) {
    v.direction = {(end.x - start.x) / v.length, (end.y - start.y) / v.length};
    v.degenerate = false;
  } else {
    v.direction = {0.0, 0.0};
    v.degenerate = true;
  }
  return v;
}

}  // namespace

MeasurementSet measurements_from_landmarks(const LandmarkSet& lm) {
  MeasurementSet ms;
  ms.ivs = make_vector(MeasurementName::IVS, lm.points[kIvsTop], lm.points[kIvsBottom]);
  ms.lvid = make_vector(MeasurementName::LVID, lm.points[kLvidTop], lm.points[kLvidBottom]);
  ms.lvpw = make_vector(MeasurementName::LVPW, lm.points[kLvpwTop], lm.points[kLvpwBottom]);
  return ms;
}

std::optional<double> angle_cosine(const MeasurementVector& a,
                                   const MeasurementVector& b) {
  if (a.degenerate || b.degenerate) return std::nullopt;
  return a.direction[0] * b.direction[0] + a.direction[1] * b.direction[1];
}

}  // namespace lvmark
