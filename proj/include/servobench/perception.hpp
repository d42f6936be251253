#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace servobench {

// ---------------------------------------------------------------------------
// Image enhancement

struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> data;  // interleaved RGB, row-major

  std::array<std::uint8_t, 3> pixel(std::size_t col, std::size_t row) const;
};

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> data;
};

struct EnhancementParams {
  double k = 1.0;  // enhancement factor, > 0
};

/// R + k*max(R - B, 0) - G for one pixel, before range handling.
double enhance_value(double r, double g, double b, double k);

/// Conventional luminance weights, for comparison.
double vanilla_gray(double r, double g, double b);

/// Per-pixel feature map, clamped to [0, 255] and rounded.
GrayImage enhance(const RgbImage& image, const EnhancementParams& params);

/// Binary 8-bit portable pixmap ("P6") / graymap ("P5").
RgbImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RgbImage& image);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

// ---------------------------------------------------------------------------
// Recognition rejection

inline constexpr std::size_t kNumClasses = 9;
inline constexpr double kDefaultRejectionThreshold = 12.0;

struct ScoreVector {
  std::array<double, kNumClasses> scores{};
  double threshold = kDefaultRejectionThreshold;
};

/// Class index of the best score, or nullopt when it is below threshold.
/// Ties go to the lowest index.
std::optional<std::size_t> reject(const ScoreVector& sv);

// ---------------------------------------------------------------------------
// Pose smoothing

struct PlanarEstimate {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

/// Low-pass pose track with a bounded hold for frames without a detection.
class SmoothedTrack {
 public:
  explicit SmoothedTrack(double a = 0.8, std::size_t max_hold = 15);

  /// Applies one frame. A missing observation holds the last pose; after
  /// more than max_hold consecutive misses the track becomes stale.
  /// Throws StaleTrack when called on a stale track.
  const PlanarEstimate& update(const std::optional<PlanarEstimate>& observation);

  bool initialized() const { return initialized_; }
  bool stale() const { return frames_since_seen_ > max_hold_; }
  std::size_t frames_since_seen() const { return frames_since_seen_; }
  const PlanarEstimate& last_pose() const { return last_; }
  double coefficient() const { return a_; }

 private:
  double a_;
  std::size_t max_hold_;
  std::size_t frames_since_seen_ = 0;
  bool initialized_ = false;
  PlanarEstimate last_;
};

/// Free-function form; returns the updated track.
SmoothedTrack smooth_update(SmoothedTrack track, const std::optional<PlanarEstimate>& observation);

// ---------------------------------------------------------------------------
// Precision metrics and synthetic streams

struct EstimateSample {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double theta = 0.0;
  bool detected = true;
};

using EstimateSequence = std::vector<EstimateSample>;

struct PrecisionMetrics {
  double s_pos = 0.0;  // m
  double s_att = 0.0;  // rad
};

/// Sample standard deviations of position (Euclidean) and attitude. The
/// attitude mean is circular and deviations are minimal signed differences.
/// Only detected samples count; throws InsufficientData below two.
PrecisionMetrics precision_metrics(const EstimateSequence& seq);

struct SynthParams {
  PlanarEstimate true_pose;
  double sigma_pos = 0.013;  // m, per axis
  double sigma_att = 0.017;  // rad
  double dropout = 0.0;      // probability a frame is undetected
  std::size_t length = 200;
  double frame_dt = 1.0 / 30.0;
  std::uint64_t seed = 1;
};

/// Noisy observations of a stationary target. Deterministic for a seed.
EstimateSequence synth_stream(const SynthParams& params);

/// Runs the stream through a SmoothedTrack. Frames where the track holds a
/// pose are emitted as detected; frames before the first detection or while
/// the track is stale are emitted as undetected. A detection after a stale
/// period starts a new track.
EstimateSequence filter_stream(const EstimateSequence& raw, double a, std::size_t max_hold = 15);

}  // namespace servobench
