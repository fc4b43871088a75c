#pragma once

// Frame/time geometry and the value types shared by every stage of the
// pipeline. All module boundaries exchange frame indices; seconds only appear
// at the edges (CLI flags, manifests) and always go through seconds_to_frames.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace probseg {

using FrameIndex = std::int64_t;

struct AudioSpec {
  int sample_rate = 16000;     // Hz
  int frame_stride = 320;      // samples per frame
  double window_seconds = 20;  // inference chunk length

  double frames_per_second() const { return static_cast<double>(sample_rate) / frame_stride; }
  double frames_to_seconds(FrameIndex frames) const {
    return static_cast<double>(frames) * frame_stride / sample_rate;
  }
  std::int64_t frames_to_samples(FrameIndex frames) const { return frames * frame_stride; }

  /// Throws InvalidArgument unless every field is strictly positive.
  void validate() const;

  friend bool operator==(const AudioSpec&, const AudioSpec&) = default;
};

/// round(t * sample_rate / frame_stride), ties rounded up. t must be >= 0.
FrameIndex seconds_to_frames(double seconds, const AudioSpec& spec = {});

/// Half-open frame interval [start, end).
struct Segment {
  FrameIndex start = 0;
  FrameIndex end = 0;

  FrameIndex length() const { return end - start; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Per-frame probability of lying inside a segment. Values are stored at
/// 32-bit precision, matching the on-disk format.
struct ProbStream {
  std::vector<float> probs;
  AudioSpec spec;
  std::string recording_id;

  std::size_t size() const { return probs.size(); }
  bool empty() const { return probs.empty(); }

  /// Throws InvalidArgument naming the first value outside [0, 1] (or NaN).
  void validate() const;

  friend bool operator==(const ProbStream&, const ProbStream&) = default;
};

/// Sorted, non-overlapping segments over one recording.
struct SegmentList {
  std::vector<Segment> segments;
  AudioSpec spec;
  std::string recording_id;

  std::size_t size() const { return segments.size(); }
  bool empty() const { return segments.empty(); }
  FrameIndex covered_frames() const;

  /// Checks 0 <= start < end, ordering and non-overlap. When total_frames is
  /// non-negative, also checks that every segment ends within it.
  void validate(FrameIndex total_frames = -1) const;

  friend bool operator==(const SegmentList&, const SegmentList&) = default;
};

struct ReferenceLabels {
  std::vector<std::uint8_t> labels;
  AudioSpec spec;

  std::size_t size() const { return labels.size(); }
  friend bool operator==(const ReferenceLabels&, const ReferenceLabels&) = default;
};

/// labels[i] = 1 iff frame i is covered by some segment.
ReferenceLabels segments_to_labels(const SegmentList& segs, FrameIndex total_frames);

/// Maximal runs of 1 as segments. Inverse of segments_to_labels when the
/// segments are separated by at least one uncovered frame.
SegmentList labels_to_segments(const ReferenceLabels& labels, std::string recording_id = {});

/// Joins consecutive fixed-length inference windows into one stream. Every
/// window but the last must be exactly window_seconds long.
ProbStream concat_windows(std::span<const ProbStream> windows);

}  // namespace probseg
