#pragma once

// On-disk formats for the frame-level data types.
//
// Probability streams:
//   binary  <name>       little-endian float32 payload, one value per frame
//           <name>.json  sidecar header: format, frames, recording_id,
//                        sample_rate, frame_stride, window_seconds
//   text    <name>.txt   optional "# key=value" header lines followed by one
//                        value per line (for hand-written fixtures)
//
// Segment lists (.seg) and labels (.labels) are line-oriented text with a
// single "#segments ..." / "#labels ..." header line carrying the audio spec.

#include <filesystem>
#include <string_view>

#include "probseg/frame.hpp"

namespace probseg {

ProbStream read_probs(const std::filesystem::path& path);
void write_probs(const ProbStream& stream, const std::filesystem::path& path);

SegmentList read_segments(const std::filesystem::path& path);
void write_segments(const SegmentList& segs, const std::filesystem::path& path);
std::string format_segments(const SegmentList& segs);

ReferenceLabels read_labels(const std::filesystem::path& path);
void write_labels(const ReferenceLabels& labels, const std::string& recording_id,
                  const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);

/// Writes to a temporary sibling and renames over `path`, so readers never
/// observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace probseg
