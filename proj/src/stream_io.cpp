#include "probseg/stream_io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "probseg/errors.hpp"

namespace probseg {
namespace {

namespace fs = std::filesystem;

void check_id(const std::string& id) {
  for (char c : id) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      throw InvalidArgument(fmt::format("recording id '{}' contains whitespace", id));
    }
  }
}

std::string spec_fields(const AudioSpec& spec, const std::string& id) {
  check_id(id);
  return fmt::format("recording_id={} sample_rate={} frame_stride={} window_seconds={}", id, spec.sample_rate,
                     spec.frame_stride, spec.window_seconds);
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

// Applies one "key=value" token to spec/id. Returns false on unknown keys or
// unparsable values.
bool apply_field(std::string_view token, AudioSpec& spec, std::string& id) {
  const auto eq = token.find('=');
  if (eq == std::string_view::npos) return false;
  const auto key = token.substr(0, eq);
  const auto value = token.substr(eq + 1);
  if (key == "recording_id") {
    id = std::string(value);
    return true;
  }
  if (key == "sample_rate") return parse_number(value, spec.sample_rate);
  if (key == "frame_stride") return parse_number(value, spec.frame_stride);
  if (key == "window_seconds") return parse_number(value, spec.window_seconds);
  return false;
}

// Parses "#<tag> k=v k=v ..." into spec and id.
void parse_header_line(const std::string& line, std::string_view tag, AudioSpec& spec, std::string& id,
                       const fs::path& path) {
  const std::string prefix = fmt::format("#{}", tag);
  if (line.rfind(prefix, 0) != 0) {
    throw FormatError(fmt::format("{}: line 1: expected '{}' header", path.string(), prefix), 1);
  }
  std::istringstream in(line.substr(prefix.size()));
  std::string token;
  while (in >> token) {
    if (!apply_field(token, spec, id)) {
      throw FormatError(fmt::format("{}: line 1: bad header field '{}'", path.string(), token), 1);
    }
  }
  try {
    spec.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(fmt::format("{}: line 1: {}", path.string(), e.what()), 1);
  }
}

float checked_prob(float p, std::size_t index, const fs::path& path) {
  if (!(p >= 0.0f && p <= 1.0f)) {
    throw FormatError(fmt::format("{}: value at index {} is {} (must be a probability in [0, 1])",
                                  path.string(), index, p),
                      index);
  }
  return p;
}

bool is_text_probs(const fs::path& path) { return path.extension() == ".txt"; }

fs::path sidecar_path(const fs::path& path) { return fs::path(path.string() + ".json"); }

ProbStream read_text_probs(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  ProbStream out;
  std::string line;
  std::size_t line_no = 0;
  bool in_header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (!in_header) {
        throw FormatError(fmt::format("{}: line {}: header after values", path.string(), line_no), line_no);
      }
      std::istringstream fields(line.substr(1));
      std::string token;
      while (fields >> token) {
        if (!apply_field(token, out.spec, out.recording_id)) {
          throw FormatError(fmt::format("{}: line {}: bad header field '{}'", path.string(), line_no, token),
                            line_no);
        }
      }
      continue;
    }
    in_header = false;
    const std::size_t index = out.probs.size();
    float p = 0;
    auto begin = line.find_first_not_of(" \t");
    auto end = line.find_last_not_of(" \t");
    if (begin == std::string::npos || !parse_number(std::string_view(line).substr(begin, end - begin + 1), p)) {
      throw FormatError(fmt::format("{}: value at index {} (line {}) is not a number", path.string(), index, line_no),
                        index);
    }
    out.probs.push_back(checked_prob(p, index, path));
  }
  try {
    out.spec.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return out;
}

ProbStream read_binary_probs(const fs::path& path) {
  const auto header_path = sidecar_path(path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(read_text_file(header_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(fmt::format("{}: malformed header: {}", header_path.string(), e.what()));
  }

  ProbStream out;
  std::size_t frames = 0;
  try {
    if (header.at("format").get<std::string>() != "f32le") {
      throw FormatError(fmt::format("{}: unsupported payload format", header_path.string()));
    }
    frames = header.at("frames").get<std::size_t>();
    out.recording_id = header.at("recording_id").get<std::string>();
    out.spec.sample_rate = header.at("sample_rate").get<int>();
    out.spec.frame_stride = header.at("frame_stride").get<int>();
    out.spec.window_seconds = header.at("window_seconds").get<double>();
    out.spec.validate();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(fmt::format("{}: malformed header: {}", header_path.string(), e.what()));
  } catch (const InvalidArgument& e) {
    throw FormatError(fmt::format("{}: {}", header_path.string(), e.what()));
  }

  const std::string payload = read_text_file(path);
  if (payload.size() != frames * 4) {
    throw FormatError(fmt::format("{}: payload holds {} bytes, header declares {} frames", path.string(),
                                  payload.size(), frames));
  }
  out.probs.resize(frames);
  const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
  for (std::size_t i = 0; i < frames; ++i) {
    const unsigned char* b = bytes + 4 * i;
    const std::uint32_t bits = std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
                               (std::uint32_t{b[3]} << 24);
    out.probs[i] = checked_prob(std::bit_cast<float>(bits), i, path);
  }
  return out;
}

}  // namespace

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  const fs::path tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write '{}'", tmp.string()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(fmt::format("write to '{}' failed", tmp.string()));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError(fmt::format("cannot rename '{}' to '{}': {}", tmp.string(), path.string(), ec.message()));
}

ProbStream read_probs(const fs::path& path) {
  return is_text_probs(path) ? read_text_probs(path) : read_binary_probs(path);
}

void write_probs(const ProbStream& stream, const fs::path& path) {
  stream.spec.validate();
  stream.validate();
  check_id(stream.recording_id);

  if (is_text_probs(path)) {
    std::string text = fmt::format("# {}\n", spec_fields(stream.spec, stream.recording_id));
    for (float p : stream.probs) text += fmt::format("{}\n", p);
    write_file_atomic(path, text);
    return;
  }

  std::string payload(stream.size() * 4, '\0');
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(stream.probs[i]);
    for (int b = 0; b < 4; ++b) payload[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
  nlohmann::json header = {
      {"format", "f32le"},
      {"frames", stream.size()},
      {"recording_id", stream.recording_id},
      {"sample_rate", stream.spec.sample_rate},
      {"frame_stride", stream.spec.frame_stride},
      {"window_seconds", stream.spec.window_seconds},
  };
  write_file_atomic(path, payload);
  write_file_atomic(sidecar_path(path), header.dump(2) + "\n");
}

std::string format_segments(const SegmentList& segs) {
  std::string text = fmt::format("#segments {}\n", spec_fields(segs.spec, segs.recording_id));
  for (const auto& s : segs.segments) text += fmt::format("{}\t{}\n", s.start, s.end);
  return text;
}

void write_segments(const SegmentList& segs, const fs::path& path) {
  segs.validate();
  write_file_atomic(path, format_segments(segs));
}

SegmentList read_segments(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  SegmentList out;
  std::string line;
  if (!std::getline(in, line)) throw FormatError(fmt::format("{}: empty file", path.string()), 1);
  parse_header_line(line, "segments", out.spec, out.recording_id, path);

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    Segment s;
    if (tab == std::string::npos || !parse_number(std::string_view(line).substr(0, tab), s.start) ||
        !parse_number(std::string_view(line).substr(tab + 1), s.end)) {
      throw FormatError(fmt::format("{}: line {}: expected '<start>\\t<end>'", path.string(), line_no), line_no);
    }
    if (s.start < 0 || s.start >= s.end || (!out.segments.empty() && s.start < out.segments.back().end)) {
      throw FormatError(fmt::format("{}: line {}: segment [{}, {}) is empty, negative or out of order",
                                    path.string(), line_no, s.start, s.end),
                        line_no);
    }
    out.segments.push_back(s);
  }
  return out;
}

void write_labels(const ReferenceLabels& labels, const std::string& recording_id, const fs::path& path) {
  std::string text = fmt::format("#labels {}\n", spec_fields(labels.spec, recording_id));
  text.reserve(text.size() + labels.size() + 1);
  for (auto y : labels.labels) {
    if (y > 1) throw InvalidArgument("labels must be 0 or 1");
    text.push_back(y ? '1' : '0');
  }
  text.push_back('\n');
  write_file_atomic(path, text);
}

ReferenceLabels read_labels(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  ReferenceLabels out;
  std::string id;
  std::string line;
  if (!std::getline(in, line)) throw FormatError(fmt::format("{}: empty file", path.string()), 1);
  parse_header_line(line, "labels", out.spec, id, path);
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  out.labels.reserve(line.size());
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] != '0' && line[i] != '1') {
      throw FormatError(fmt::format("{}: label at index {} is '{}' (must be 0 or 1)", path.string(), i, line[i]), i);
    }
    out.labels.push_back(line[i] == '1' ? 1 : 0);
  }
  return out;
}

}  // namespace probseg
