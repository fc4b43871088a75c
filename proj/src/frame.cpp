#include "probseg/frame.hpp"

#include <cmath>

#include <fmt/format.h>

#include "probseg/errors.hpp"

namespace probseg {

void AudioSpec::validate() const {
  if (sample_rate <= 0 || frame_stride <= 0 || !(window_seconds > 0)) {
    throw InvalidArgument(fmt::format("invalid audio spec: sample_rate={} frame_stride={} window_seconds={}",
                                      sample_rate, frame_stride, window_seconds));
  }
}

FrameIndex seconds_to_frames(double seconds, const AudioSpec& spec) {
  if (!(seconds >= 0) || !std::isfinite(seconds)) {
    throw InvalidArgument(fmt::format("seconds_to_frames: expected a finite t >= 0, got {}", seconds));
  }
  spec.validate();
  const double frames = seconds * spec.sample_rate / spec.frame_stride;
  return static_cast<FrameIndex>(std::floor(frames + 0.5));
}

void ProbStream::validate() const {
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const float p = probs[i];
    if (!(p >= 0.0f && p <= 1.0f)) {
      throw InvalidArgument(fmt::format("probability at index {} is {} (must be in [0, 1])", i, p));
    }
  }
}

FrameIndex SegmentList::covered_frames() const {
  FrameIndex total = 0;
  for (const auto& s : segments) total += s.length();
  return total;
}

void SegmentList::validate(FrameIndex total_frames) const {
  FrameIndex prev_end = 0;
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const auto& s = segments[k];
    if (s.start < 0 || s.start >= s.end) {
      throw InvalidArgument(fmt::format("segment {} [{}, {}) is empty or negative", k, s.start, s.end));
    }
    if (s.start < prev_end) {
      throw InvalidArgument(fmt::format("segment {} [{}, {}) overlaps or precedes its predecessor", k,
                                        s.start, s.end));
    }
    if (total_frames >= 0 && s.end > total_frames) {
      throw OutOfRange(fmt::format("segment {} [{}, {}) exceeds {} frames", k, s.start, s.end, total_frames));
    }
    prev_end = s.end;
  }
}

ReferenceLabels segments_to_labels(const SegmentList& segs, FrameIndex total_frames) {
  if (total_frames < 0) throw InvalidArgument("segments_to_labels: negative frame count");
  ReferenceLabels out;
  out.spec = segs.spec;
  out.labels.assign(static_cast<std::size_t>(total_frames), 0);
  for (const auto& s : segs.segments) {
    if (s.start < 0 || s.end > total_frames || s.start > s.end) {
      throw OutOfRange(fmt::format("segment [{}, {}) outside [0, {})", s.start, s.end, total_frames));
    }
    std::fill(out.labels.begin() + s.start, out.labels.begin() + s.end, std::uint8_t{1});
  }
  return out;
}

SegmentList labels_to_segments(const ReferenceLabels& labels, std::string recording_id) {
  SegmentList out;
  out.spec = labels.spec;
  out.recording_id = std::move(recording_id);
  const auto n = static_cast<FrameIndex>(labels.size());
  FrameIndex i = 0;
  while (i < n) {
    if (!labels.labels[i]) {
      ++i;
      continue;
    }
    FrameIndex j = i;
    while (j < n && labels.labels[j]) ++j;
    out.segments.push_back({i, j});
    i = j;
  }
  return out;
}

ProbStream concat_windows(std::span<const ProbStream> windows) {
  ProbStream out;
  if (windows.empty()) return out;
  out.spec = windows.front().spec;
  out.recording_id = windows.front().recording_id;
  out.spec.validate();
  const auto window_frames = static_cast<std::size_t>(seconds_to_frames(out.spec.window_seconds, out.spec));

  std::size_t total = 0;
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const auto& w = windows[k];
    if (!(w.spec == out.spec)) {
      throw InvalidArgument(fmt::format("concat_windows: window {} has a different audio spec", k));
    }
    if (k + 1 < windows.size() && w.size() != window_frames) {
      throw InvalidArgument(fmt::format("concat_windows: interior window {} has {} frames, expected {}", k,
                                        w.size(), window_frames));
    }
    total += w.size();
  }
  out.probs.reserve(total);
  for (const auto& w : windows) out.probs.insert(out.probs.end(), w.probs.begin(), w.probs.end());
  return out;
}

}  // namespace probseg
