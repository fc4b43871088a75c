#pragma once

// The four decoders mapping a probability stream to segments:
//
//   pdac     recursive divide-and-conquer at the least likely frame until every
//            piece is shorter than max
//   pstrm    streaming, length-triggered: once a segment reaches max frames it
//            is cut at the middle of the longest pause in [min, max]
//   pthr     online threshold scan with a position-dependent closing filter
//   pthr_ma  pthr on a moving-averaged stream
//
// All lengths in SegmenterConfig are frames. Use SegmenterParams (seconds)
// plus resolve() to build one from user-facing values.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "probseg/frame.hpp"

namespace probseg {

enum class Algorithm { pdac, pstrm, pthr, pthr_ma };

std::string_view to_string(Algorithm a);
/// Throws InvalidArgument for unknown names.
Algorithm parse_algorithm(std::string_view name);

struct SegmenterConfig {
  FrameIndex max_len = 0;
  FrameIndex min_len = 0;
  double thr = 0.5;
  FrameIndex n_ma = 0;
  FrameIndex lerp_min = 0;
  FrameIndex lerp_max = 0;
  Algorithm algorithm = Algorithm::pthr;

  /// Requires max_len >= 1, 0 <= min <= lerp_min <= lerp_max <= max,
  /// 0 < thr < 1 and n_ma >= 0.
  void validate() const;
};

/// User-facing configuration in seconds. Unset optionals take the
/// per-algorithm defaults.
struct SegmenterParams {
  Algorithm algorithm = Algorithm::pthr_ma;
  std::optional<double> max_seconds;
  std::optional<double> min_seconds;
  std::optional<double> thr;
  std::optional<double> n_ma_seconds;
  std::optional<double> lerp_min_seconds;
  std::optional<double> lerp_max_seconds;

  /// Defaults: max 28 s, min 0.2 s; thr 0.5 for pdac/pstrm and 0.1 for the
  /// threshold decoders; n_ma 0.1 s for pthr_ma and 0 otherwise;
  /// lerp_min = min + 0.1 (max - min), lerp_max = max - 0.2 (max - min).
  SegmenterConfig resolve(const AudioSpec& spec) const;
};

/// Closing thresholds indexed by offset from the segment start.
struct ThresholdFilter {
  std::vector<double> thrs;
};

ThresholdFilter build_threshold_filter(const SegmenterConfig& cfg);

/// Smallest sub-interval of `sgm` whose first and last frames exceed thr.
std::optional<Segment> trim(Segment sgm, const ProbStream& stream, double thr);

SegmentList pthr(const ProbStream& stream, const SegmenterConfig& cfg);
SegmentList pthr_ma(const ProbStream& stream, const SegmenterConfig& cfg);
SegmentList pdac(const ProbStream& stream, const SegmenterConfig& cfg);
SegmentList pstrm(const ProbStream& stream, const SegmenterConfig& cfg);

/// Dispatches on cfg.algorithm.
SegmentList segment(const ProbStream& stream, const SegmenterConfig& cfg);

}  // namespace probseg
