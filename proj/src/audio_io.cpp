#include "probseg/audio_io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "probseg/errors.hpp"
#include "probseg/stream_io.hpp"

namespace probseg {
namespace {

namespace fs = std::filesystem;

constexpr std::string_view kManifestHeader = "id\tpath\tstart\tduration";

std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
}
std::uint16_t read_u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffu));
}
void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xffu));
  out.push_back(static_cast<char>(v >> 8));
}

double round_ms(double seconds) { return std::round(seconds * 1000.0) / 1000.0; }

std::string encode_wav(const std::int16_t* samples, std::size_t count, int sample_rate) {
  const auto data_bytes = static_cast<std::uint32_t>(count * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_u32(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_bytes);
  for (std::size_t i = 0; i < count; ++i) put_u16(out, static_cast<std::uint16_t>(samples[i]));
  return out;
}

}  // namespace

WavData read_wav(const fs::path& path) {
  const std::string bytes = read_text_file(path);
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t size = bytes.size();
  const std::string name = path.string();
  if (size < 12 || bytes.compare(0, 4, "RIFF") != 0 || bytes.compare(8, 4, "WAVE") != 0) {
    throw FormatError(fmt::format("{}: not a RIFF/WAVE file", name));
  }

  bool have_fmt = false;
  WavData out;
  std::size_t pos = 12;
  while (pos + 8 <= size) {
    const std::string id = bytes.substr(pos, 4);
    const std::uint32_t chunk = read_u32(p + pos + 4);
    const std::size_t body = pos + 8;
    if (id == "fmt ") {
      if (chunk < 16 || body + chunk > size) throw FormatError(fmt::format("{}: truncated fmt chunk", name));
      const auto format = read_u16(p + body);
      const auto channels = read_u16(p + body + 2);
      const auto bits = read_u16(p + body + 14);
      if (format != 1 || channels != 1 || bits != 16) {
        throw FormatError(fmt::format("{}: unsupported encoding (format {}, {} channels, {} bits); "
                                      "only 16-bit PCM mono is supported",
                                      name, format, channels, bits));
      }
      out.sample_rate = static_cast<int>(read_u32(p + body + 4));
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw FormatError(fmt::format("{}: data chunk before fmt chunk", name));
      if (body + chunk > size || chunk % 2 != 0) {
        throw FormatError(fmt::format("{}: truncated data chunk ({} bytes declared, {} present)", name, chunk,
                                      size - body));
      }
      out.samples.resize(chunk / 2);
      for (std::size_t i = 0; i < out.samples.size(); ++i) {
        out.samples[i] = static_cast<std::int16_t>(read_u16(p + body + 2 * i));
      }
      return out;
    }
    pos = body + chunk + (chunk & 1u);
  }
  throw FormatError(fmt::format("{}: no data chunk", name));
}

void write_wav(const fs::path& path, const WavData& wav) {
  write_file_atomic(path, encode_wav(wav.samples.data(), wav.samples.size(), wav.sample_rate));
}

Manifest manifest_from_segments(const SegmentList& segs, const std::string& source_path) {
  Manifest m;
  for (const auto& s : segs.segments) {
    m.rows.push_back({segs.recording_id, source_path, round_ms(segs.spec.frames_to_seconds(s.start)),
                      round_ms(segs.spec.frames_to_seconds(s.length()))});
  }
  return m;
}

std::string format_manifest(const Manifest& manifest) {
  std::string text(kManifestHeader);
  text += '\n';
  for (const auto& r : manifest.rows) {
    text += fmt::format("{}\t{}\t{:.3f}\t{:.3f}\n", r.recording_id, r.source_path, r.start, r.duration);
  }
  return text;
}

void write_manifest(const Manifest& manifest, const fs::path& path) {
  write_file_atomic(path, format_manifest(manifest));
}

Manifest parse_manifest(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 1;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kManifestHeader) {
    throw FormatError(fmt::format("{}: line 1: expected header '{}'", origin, "id\\tpath\\tstart\\tduration"), 1);
  }

  auto number = [&](std::string_view field, double& out) {
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
    return ec == std::errc() && ptr == field.data() + field.size() && std::isfinite(out);
  };

  Manifest m;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    for (std::size_t tab; (tab = rest.find('\t')) != std::string_view::npos; rest.remove_prefix(tab + 1)) {
      fields.push_back(rest.substr(0, tab));
    }
    fields.push_back(rest);
    ManifestRow row;
    if (fields.size() != 4 || fields[0].empty() || !number(fields[2], row.start) || !number(fields[3], row.duration)) {
      throw FormatError(fmt::format("{}: line {}: expected 4 tab-separated fields id, path, start, duration", origin,
                                    line_no),
                        line_no);
    }
    if (row.start < 0 || row.duration <= 0) {
      throw FormatError(fmt::format("{}: line {}: start must be >= 0 and duration > 0", origin, line_no), line_no);
    }
    row.recording_id = std::string(fields[0]);
    row.source_path = std::string(fields[1]);
    if (!m.rows.empty() && m.rows.back().recording_id == row.recording_id && row.start < m.rows.back().start) {
      throw FormatError(fmt::format("{}: line {}: rows of '{}' are not in temporal order", origin, line_no,
                                    row.recording_id),
                        line_no);
    }
    m.rows.push_back(std::move(row));
  }
  return m;
}

Manifest read_manifest(const fs::path& path) { return parse_manifest(read_text_file(path), path.string()); }

fs::path slice_path(const fs::path& out_dir, const std::string& recording_id, std::size_t index) {
  return out_dir / fmt::format("{}_{}.wav", recording_id, index);
}

Manifest slice_wav(const WavData& wav, const AudioSpec& spec, const SegmentList& segs, const fs::path& out_dir,
                   const std::string& source_path) {
  spec.validate();
  if (wav.sample_rate != spec.sample_rate) {
    throw InvalidArgument(fmt::format("slice_wav: audio is {} Hz but the segments assume {} Hz", wav.sample_rate,
                                      spec.sample_rate));
  }
  const auto total_samples = static_cast<std::int64_t>(wav.samples.size());
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const auto& s = segs.segments[k];
    if (s.start < 0 || s.start >= s.end || spec.frames_to_samples(s.end) > total_samples) {
      throw OutOfRange(fmt::format("slice_wav: segment {} [{}, {}) frames exceeds {} samples", k, s.start, s.end,
                                   total_samples));
    }
  }
  if (segs.empty()) return {};

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) {
    throw IoError(fmt::format("cannot create output directory '{}'", out_dir.string()));
  }
  for (std::size_t k = 0; k < segs.size(); ++k) {
    const auto& s = segs.segments[k];
    const auto first = spec.frames_to_samples(s.start);
    const auto count = spec.frames_to_samples(s.length());
    write_file_atomic(slice_path(out_dir, segs.recording_id, k),
                      encode_wav(wav.samples.data() + first, static_cast<std::size_t>(count), wav.sample_rate));
  }
  SegmentList with_spec = segs;
  with_spec.spec = spec;
  return manifest_from_segments(with_spec, source_path);
}

}  // namespace probseg
