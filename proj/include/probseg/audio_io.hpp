#pragma once

// 16-bit PCM mono WAV I/O, per-segment slicing, and the TSV segment manifest
// (header "id\tpath\tstart\tduration", seconds with millisecond precision).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "probseg/frame.hpp"

namespace probseg {

struct WavData {
  std::vector<std::int16_t> samples;
  int sample_rate = 16000;
};

/// Throws FormatError for anything other than PCM16 mono, or truncated data.
WavData read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const WavData& wav);

struct ManifestRow {
  std::string recording_id;
  std::string source_path;
  double start = 0;     // seconds
  double duration = 0;  // seconds
  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

struct Manifest {
  std::vector<ManifestRow> rows;
  friend bool operator==(const Manifest&, const Manifest&) = default;
};

/// One row per segment, times converted from frames and rounded to ms.
Manifest manifest_from_segments(const SegmentList& segs, const std::string& source_path);

std::string format_manifest(const Manifest& manifest);
void write_manifest(const Manifest& manifest, const std::filesystem::path& path);
/// FormatError carries the 1-based line number of the first bad row.
Manifest read_manifest(const std::filesystem::path& path);
Manifest parse_manifest(const std::string& text, const std::string& origin = "<manifest>");

/// Writes <out_dir>/<recording_id>_<index>.wav for each segment (frame i maps
/// to sample i * frame_stride) and returns the matching manifest, whose rows
/// point at source_path.
Manifest slice_wav(const WavData& wav, const AudioSpec& spec, const SegmentList& segs,
                   const std::filesystem::path& out_dir, const std::string& source_path);

std::filesystem::path slice_path(const std::filesystem::path& out_dir, const std::string& recording_id,
                                 std::size_t index);

}  // namespace probseg
