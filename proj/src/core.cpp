#include "seld/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "seld/errors.hpp"

namespace seld {

namespace {

// sin/cos in degrees, exact at multiples of 90 degrees so that axis-aligned
// directions and ACS rotations produce exact zeros.
double sind(double d) {
  const double r = std::fmod(d, 360.0);
  if (std::fmod(r, 90.0) == 0.0) {
    const int q = static_cast<int>(std::lround(r / 90.0)) & 3;
    static constexpr double kTable[4] = {0.0, 1.0, 0.0, -1.0};
    return kTable[q];
  }
  return std::sin(deg2rad(r));
}

double cosd(double d) {
  const double r = std::fmod(d, 360.0);
  if (std::fmod(r, 90.0) == 0.0) {
    const int q = static_cast<int>(std::lround(r / 90.0)) & 3;
    static constexpr double kTable[4] = {1.0, 0.0, -1.0, 0.0};
    return kTable[q];
  }
  return std::cos(deg2rad(r));
}

}  // namespace

FoaClip FoaClip::zeros(std::size_t n) {
  FoaClip clip;
  for (auto& ch : clip.samples) ch.assign(n, 0.0f);
  return clip;
}

void FoaClip::validate() const {
  if (sample_rate != kSampleRate) {
    throw DomainError("FoaClip: sample rate " + std::to_string(sample_rate) +
                      " != 24000");
  }
  const std::size_t n = samples[0].size();
  for (int c = 0; c < kNumFoaChannels; ++c) {
    if (samples[c].size() != n) throw DomainError("FoaClip: ragged channels");
    for (float v : samples[c]) {
      if (!std::isfinite(v)) throw DomainError("FoaClip: non-finite sample");
    }
  }
}

double DoaVector::norm() const { return std::sqrt(x * x + y * y + z * z); }

DoaVector DoaVector::normalized() const {
  const double n = norm();
  if (!(n > 0.0)) throw DomainError("cannot normalize a zero DOA vector");
  return {x / n, y / n, z / n};
}

void EventAnnotation::validate() const {
  if (frame < 0) throw DomainError("negative frame index");
  if (class_id < 0 || class_id >= kNumClasses) {
    throw DomainError("class id " + std::to_string(class_id) + " out of range");
  }
  if (!(azimuth > -180.0 && azimuth <= 180.0)) {
    throw DomainError("azimuth " + std::to_string(azimuth) + " outside (-180, 180]");
  }
  if (!(elevation >= -90.0 && elevation <= 90.0)) {
    throw DomainError("elevation " + std::to_string(elevation) + " outside [-90, 90]");
  }
  if (!(distance > 0.0) || !std::isfinite(distance)) {
    throw DomainError("distance must be positive");
  }
}

MetadataTable::MetadataTable(std::vector<EventAnnotation> rows) : rows_(std::move(rows)) {
  for (const auto& r : rows_) r.validate();
  auto key = [](const EventAnnotation& e) {
    return std::tuple(e.frame, e.class_id, e.source_id);
  };
  std::stable_sort(rows_.begin(), rows_.end(),
                   [&](const auto& a, const auto& b) { return key(a) < key(b); });
  for (std::size_t i = 1; i < rows_.size(); ++i) {
    if (key(rows_[i - 1]) == key(rows_[i])) {
      throw DataError("duplicate (frame, class, source) = (" +
                      std::to_string(rows_[i].frame) + ", " +
                      std::to_string(rows_[i].class_id) + ", " +
                      std::to_string(rows_[i].source_id) + ")");
    }
  }
}

int MetadataTable::num_frames() const {
  int n = 0;
  for (const auto& r : rows_) n = std::max(n, r.frame + 1);
  return n;
}

double wrap_azimuth(double degrees) {
  double a = std::fmod(degrees, 360.0);
  if (a > 180.0) a -= 360.0;
  if (a <= -180.0) a += 360.0;
  return a;
}

DoaVector sph_to_cart(double azimuth_deg, double elevation_deg) {
  if (!(azimuth_deg > -180.0 && azimuth_deg <= 180.0)) {
    throw DomainError("sph_to_cart: azimuth outside (-180, 180]");
  }
  if (!(elevation_deg >= -90.0 && elevation_deg <= 90.0)) {
    throw DomainError("sph_to_cart: elevation outside [-90, 90]");
  }
  const double ce = cosd(elevation_deg);
  return {ce * cosd(azimuth_deg), ce * sind(azimuth_deg), sind(elevation_deg)};
}

std::pair<double, double> cart_to_sph(const DoaVector& v) {
  const double n = v.norm();
  if (!(n > 0.0)) throw DomainError("cart_to_sph: zero vector");
  const double horiz = std::hypot(v.x, v.y);
  const double elevation = rad2deg(std::atan2(v.z, horiz));
  if (horiz <= 1e-12 * n) return {0.0, elevation};
  double azimuth = rad2deg(std::atan2(v.y, v.x));
  if (azimuth <= -180.0) azimuth += 360.0;
  return {azimuth, elevation};
}

double angular_distance(const DoaVector& u, const DoaVector& v) {
  const double nu = u.norm();
  const double nv = v.norm();
  if (!(nu > 0.0) || !(nv > 0.0)) throw DomainError("angular_distance: zero vector");
  // atan2 form of arccos(u.v / |u||v|); keeps precision near 0 and 180 degrees.
  const double cx = u.y * v.z - u.z * v.y;
  const double cy = u.z * v.x - u.x * v.z;
  const double cz = u.x * v.y - u.y * v.x;
  return rad2deg(std::atan2(std::sqrt(cx * cx + cy * cy + cz * cz), u.dot(v)));
}

}  // namespace seld
