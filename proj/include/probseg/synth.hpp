#pragma once

// Synthetic reference segmentations and probability streams that stand in
// for a trained frame classifier at a chosen (precision, recall) operating
// point.

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

#include "probseg/errors.hpp"
#include "probseg/eval.hpp"
#include "probseg/frame.hpp"

namespace probseg {

/// Portable random source. std::mt19937_64 has a standard-mandated output
/// sequence; the distributions below are implemented here because the
/// standard library ones are not reproducible across implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on (0, 1], 53-bit resolution.
  double uniform() { return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53; }
  /// Standard normal (Box-Muller, one value per call).
  double normal();
  /// Exponential with the given mean (inverse CDF).
  double exponential(double mean) { return -mean * std::log(uniform()); }

 private:
  std::mt19937_64 engine_;
};

/// Per-recording seed: splitmix64 of (seed + index * golden-ratio increment).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

struct CorpusProfile {
  double mean_len = 5.79;      // seconds, arithmetic mean of segment length
  double len_sigma = 0.66;     // log-space standard deviation
  double mean_gap = 0.8;       // seconds
  double total_duration = 7200;  // seconds
  std::uint64_t seed = 1;

  void validate() const;
};

/// Log-normal lengths with the requested mean, exponential gaps (at least one
/// frame), truncated at total_duration.
SegmentList gen_reference(const CorpusProfile& profile, const AudioSpec& spec = {}, std::string recording_id = "synth");

struct NoiseProfile {
  double target_precision = 1.0;
  double target_recall = 1.0;
  double boundary_jitter = 0.02;        // seconds, std of Gaussian boundary offsets
  double per_frame_noise_sigma = 0.1;   // also the logistic temperature; 0 gives hard 0/1 output
  std::uint64_t seed = 1;

  void validate() const;
};

/// Frame-classifier operating points used as calibration targets.
struct OperatingPoint {
  std::string_view name;
  double precision;
  double recall;
};

inline constexpr OperatingPoint kOperatingPoints[] = {
    {"middle", 0.9894, 0.9046},       {"middle+quarter", 0.9879, 0.9194}, {"middle+half", 0.9861, 0.9282},
    {"middle+all", 0.9834, 0.9344},   {"large", 0.9802, 0.8532},          {"large+quarter", 0.9908, 0.9074},
    {"large+half", 0.9896, 0.9166},   {"large+all", 0.9812, 0.9381},
};

/// Throws InvalidArgument for unknown names.
const OperatingPoint& find_operating_point(std::string_view name);

class CalibrationError : public Error {
 public:
  CalibrationError(const std::string& what, double precision, double recall)
      : Error(what), precision_(precision), recall_(recall) {}
  double achieved_precision() const { return precision_; }
  double achieved_recall() const { return recall_; }

 private:
  double precision_;
  double recall_;
};

inline constexpr double kErosionScale = 60.0;  // frames per unit recall knob
inline constexpr double kDilationScale = 10.0;  // frames per unit precision knob
inline constexpr double kMissRate = 0.25;       // isolated-miss probability per unit recall knob
inline constexpr double kMissLevel = 0.1;       // pre-noise signal level of a missed frame

struct Corruption {
  ProbStream stream;
  FramePRF achieved;
  double erosion_knob = 0;   // recall control
  double dilation_knob = 0;  // precision control
};

/// Corrupts the reference into a probability stream whose frame-level
/// precision and recall (threshold 0.5) are within 0.01 of the targets.
///
/// Model, in order:
///  1. every reference boundary is shifted by a rounded Gaussian offset
///     (boundary_jitter);
///  2. each jittered boundary moves inward by floor(e * kErosionScale * Exp(1))
///     frames and outward by floor(d * kDilationScale * Exp(1)) frames, with
///     one pre-drawn Exp(1) per boundary and knob;
///  3. frames inside the resulting segments become isolated misses with
///     probability e * kMissRate;
///  4. the signal is 1 inside, 0 outside and kMissLevel on misses, plus
///     N(0, sigma^2) per frame, squashed by logistic((x - 0.5) / sigma).
/// The recall knob e and the precision knob d are found by alternating
/// bisection. Each knob acts monotonically on the predicted frames, since all
/// random draws are fixed before calibration starts.
Corruption corrupt(const SegmentList& ref, const NoiseProfile& noise, FrameIndex total_frames);

ProbStream corrupt_to_probs(const SegmentList& ref, const NoiseProfile& noise, FrameIndex total_frames);

}  // namespace probseg
