#pragma once

// Evaluation: frame-level classification scores, segment length statistics,
// segmentation overlap and mWER-style resegmentation of a hypothesis token
// stream onto reference segments.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "probseg/frame.hpp"

namespace probseg {

struct FramePRF {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::int64_t true_positives = 0;
  std::int64_t false_positives = 0;
  std::int64_t false_negatives = 0;
  bool zero_division = false;  // some ratio had a zero denominator and was set to 0
};

/// Binarizes p > threshold and scores the 1s against the labels.
FramePRF frame_prf(const ProbStream& stream, const ReferenceLabels& ref, double threshold = 0.5);

struct HistogramBin {
  double start = 0;  // seconds
  std::int64_t count = 0;
};

struct LengthStats {
  std::int64_t count = 0;
  FrameIndex total_frames = 0;
  double mean = 0;      // seconds
  double median = 0;    // seconds
  double mode_bin = 0;  // start of the most populated bin, seconds
  double bin_width = 1;
  std::vector<HistogramBin> histogram;  // contiguous bins from 0 to the longest segment
};

LengthStats length_stats(const SegmentList& segs, double bin_width = 1.0);

struct OverlapReport {
  double iou = 0;  // covered-frame intersection over union; 1 when both are empty
  std::int64_t intersection_frames = 0;
  std::int64_t union_frames = 0;
  std::int64_t over_segmented = 0;   // references touched by >= 2 hypothesis segments
  std::int64_t under_segmented = 0;  // hypothesis segments touching >= 2 references
};

OverlapReport overlap_metrics(const SegmentList& hyp, const SegmentList& ref);

using Tokens = std::vector<std::string>;

/// Unit-cost word-level Levenshtein distance.
std::int64_t edit_distance(const Tokens& a, const Tokens& b);

struct TokenSpan {
  std::size_t begin = 0;  // hypothesis token index, half-open
  std::size_t end = 0;
  friend bool operator==(const TokenSpan&, const TokenSpan&) = default;
};

struct AlignmentResult {
  std::vector<TokenSpan> spans;  // one per reference segment, partitioning the hypothesis
  std::vector<std::int64_t> distances;
  std::int64_t total_distance = 0;
};

/// Splits the hypothesis into one contiguous span per reference segment so that
/// the summed edit distance is minimal. Among optimal splits the
/// lexicographically earliest boundary vector is returned.
AlignmentResult resegment_align(const Tokens& hyp, const std::vector<Tokens>& refs);

Tokens split_tokens(const std::string& text);

struct EvalReport {
  std::optional<FramePRF> frame;
  OverlapReport overlap;
  LengthStats hyp_lengths;
  LengthStats ref_lengths;
};

/// Key-sorted JSON; identical reports serialize to identical bytes.
nlohmann::json to_json(const EvalReport& report);
std::string summary_csv(const EvalReport& report);
std::string histogram_csv(const LengthStats& stats);

}  // namespace probseg
