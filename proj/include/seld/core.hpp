#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

namespace seld {

// ---------------------------------------------------------------------------
// Constants
// ---------------------------------------------------------------------------

inline constexpr int kSampleRate = 24000;
inline constexpr int kNumClasses = 13;
inline constexpr int kNumTracks = 3;
inline constexpr int kNumMels = 64;
inline constexpr int kNumFoaChannels = 4;
inline constexpr int kNumLogmelChannels = 4;
inline constexpr int kNumIvChannels = 3;
inline constexpr int kFeatureChannels = kNumLogmelChannels + kNumIvChannels;
inline constexpr int kStftWindow = 1024;
inline constexpr int kStftHop = 480;
inline constexpr int kNumBins = kStftWindow / 2 + 1;
inline constexpr int kLabelFrameSamples = kSampleRate / 10;  // 100 ms
inline constexpr int kFramesPerLabel = kLabelFrameSamples / kStftHop;
inline constexpr int kLabelFramesPerSegment = 10;            // 1 s
inline constexpr int kTrackOutputs = 4;                      // Rx, Ry, Rz, D
inline constexpr int kOutputNeurons = kNumTracks * kNumClasses * kTrackOutputs;
inline constexpr double kHopMs = 1000.0 * kStftHop / kSampleRate;

static_assert(kOutputNeurons == 156, "multi-ACCDOA head must have 156 outputs");
static_assert(kLabelFrameSamples % kStftHop == 0,
              "label frame must be a whole number of STFT hops");
static_assert(kFramesPerLabel == 5);
static_assert(kNumBins == 513);

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Ambisonic channel order. Only ACN (W, Y, Z, X) is supported.
enum class ChannelOrder { kWYZX };

/// Index of each FOA component inside a WYZX clip.
enum FoaChannel : int { kW = 0, kY = 1, kZ = 2, kX = 3 };

/// Four-channel first-order ambisonics audio at 24 kHz.
struct FoaClip {
  std::array<std::vector<float>, kNumFoaChannels> samples;
  int sample_rate = kSampleRate;
  ChannelOrder channel_order = ChannelOrder::kWYZX;

  std::size_t num_samples() const { return samples[0].size(); }

  /// Builds a clip with `n` zero samples per channel.
  static FoaClip zeros(std::size_t n);

  /// Throws DomainError unless the clip satisfies the FoaClip invariants.
  void validate() const;
};

struct DoaVector {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double norm() const;
  DoaVector normalized() const;
  double dot(const DoaVector& o) const { return x * o.x + y * o.y + z * o.z; }

  friend DoaVector operator+(const DoaVector& a, const DoaVector& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
  }
  friend DoaVector operator*(double s, const DoaVector& v) {
    return {s * v.x, s * v.y, s * v.z};
  }
  friend bool operator==(const DoaVector&, const DoaVector&) = default;
};

/// One labeled event frame (label frames are 100 ms).
struct EventAnnotation {
  int frame = 0;
  int class_id = 0;
  int source_id = 0;
  double azimuth = 0.0;    // degrees, (-180, 180]
  double elevation = 0.0;  // degrees, [-90, 90]
  double distance = 1.0;   // meters, > 0

  /// Throws DomainError if any field is out of range.
  void validate() const;

  friend bool operator==(const EventAnnotation&, const EventAnnotation&) = default;
};

/// Ordered annotation rows keyed by (frame, class_id, source_id).
class MetadataTable {
 public:
  MetadataTable() = default;
  /// Sorts the rows; throws DataError on duplicate keys or DomainError on
  /// invalid rows.
  explicit MetadataTable(std::vector<EventAnnotation> rows);

  const std::vector<EventAnnotation>& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  /// Largest frame index + 1, or 0 when empty.
  int num_frames() const;

  friend bool operator==(const MetadataTable&, const MetadataTable&) = default;

 private:
  std::vector<EventAnnotation> rows_;
};

// ---------------------------------------------------------------------------
// Geometry. Azimuth counterclockwise from +x, elevation up from the
// horizontal plane.
// ---------------------------------------------------------------------------

DoaVector sph_to_cart(double azimuth_deg, double elevation_deg);

/// Returns (azimuth, elevation) in degrees. Azimuth lies in (-180, 180] and is
/// 0 for pole vectors.
std::pair<double, double> cart_to_sph(const DoaVector& v);

/// Angle between two non-zero vectors in degrees, in [0, 180].
double angular_distance(const DoaVector& u, const DoaVector& v);

/// Maps any angle in degrees into (-180, 180].
double wrap_azimuth(double degrees);

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double deg2rad(double d) { return d * kPi / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

}  // namespace seld
