#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "probseg/audio_io.hpp"
#include "probseg/errors.hpp"
#include "probseg/stream_io.hpp"

using namespace probseg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / fs::path("probseg_audio_" + std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

SegmentList segs(std::vector<Segment> s, std::string id = "rec") {
  SegmentList out;
  out.segments = std::move(s);
  out.recording_id = std::move(id);
  return out;
}

WavData tone(std::size_t n) {
  WavData w;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) w.samples[i] = static_cast<std::int16_t>(8000 * std::sin(0.01 * static_cast<double>(i)));
  return w;
}

}  // namespace

TEST_CASE("wav round trip") {
  TempDir tmp;
  WavData silence;
  silence.samples.assign(16000, 0);
  write_wav(tmp.path / "s.wav", silence);
  const auto back = read_wav(tmp.path / "s.wav");
  CHECK(back.samples.size() == 16000);
  CHECK(back.sample_rate == 16000);
  CHECK(std::all_of(back.samples.begin(), back.samples.end(), [](auto v) { return v == 0; }));

  const auto t = tone(12345);
  write_wav(tmp.path / "t.wav", t);
  CHECK(read_wav(tmp.path / "t.wav").samples == t.samples);
}

TEST_CASE("unsupported or broken wav files") {
  TempDir tmp;
  write_wav(tmp.path / "t.wav", tone(1000));
  std::string bytes = read_text_file(tmp.path / "t.wav");

  std::string stereo = bytes;
  stereo[22] = 2;
  write_file_atomic(tmp.path / "stereo.wav", stereo);
  CHECK_THROWS_AS(read_wav(tmp.path / "stereo.wav"), FormatError);

  write_file_atomic(tmp.path / "short.wav", bytes.substr(0, bytes.size() - 100));
  CHECK_THROWS_AS(read_wav(tmp.path / "short.wav"), FormatError);

  write_file_atomic(tmp.path / "junk.wav", "hello world, not audio");
  CHECK_THROWS_AS(read_wav(tmp.path / "junk.wav"), FormatError);

  CHECK_THROWS_AS(read_wav(tmp.path / "missing.wav"), IoError);
}

TEST_CASE("slice_wav") {
  TempDir tmp;
  const AudioSpec spec;
  const auto wav = tone(320 * 200);

  const auto m = slice_wav(wav, spec, segs({{0, 50}}), tmp.path / "one", "rec.wav");
  REQUIRE(m.rows.size() == 1);
  CHECK(read_wav(slice_path(tmp.path / "one", "rec", 0)).samples.size() == 16000);
  CHECK(m.rows[0].duration == 1.0);

  CHECK(slice_wav(wav, spec, segs({}), tmp.path / "none", "rec.wav").rows.empty());
  CHECK_FALSE(fs::exists(tmp.path / "none"));

  slice_wav(wav, spec, segs({{10, 60}, {60, 130}}), tmp.path / "adj", "rec.wav");
  auto joined = read_wav(slice_path(tmp.path / "adj", "rec", 0)).samples;
  const auto second = read_wav(slice_path(tmp.path / "adj", "rec", 1)).samples;
  joined.insert(joined.end(), second.begin(), second.end());
  CHECK(joined == std::vector<std::int16_t>(wav.samples.begin() + 3200, wav.samples.begin() + 130 * 320));

  CHECK_THROWS_AS(slice_wav(wav, spec, segs({{150, 201}}), tmp.path / "bad", "rec.wav"), OutOfRange);
}

TEST_CASE("manifest") {
  const auto m = manifest_from_segments(segs({{0, 1000}, {1010, 1013}}), "audio/rec.wav");
  CHECK(format_manifest(m) ==
        "id\tpath\tstart\tduration\nrec\taudio/rec.wav\t0.000\t20.000\nrec\taudio/rec.wav\t20.200\t0.060\n");
  CHECK(parse_manifest(format_manifest(m)) == m);
  CHECK(parse_manifest("id\tpath\tstart\tduration\n").rows.empty());

  auto line_of = [](const std::string& text) -> std::size_t {
    try {
      parse_manifest(text);
    } catch (const FormatError& e) {
      return e.where();
    }
    return 0;
  };
  CHECK(line_of("id\tpath\tstart\tduration\na\tp\t0.0\t1.0\na\tp\t2.0\t-1.0\n") == 3);
  CHECK(line_of("id\tpath\tstart\tduration\na\tp\t0.0\n") == 2);
  CHECK(line_of("id\tpath\tstart\tduration\na\tp\t5.0\t1.0\na\tp\t2.0\t1.0\n") == 3);
  CHECK(line_of("start\tduration\n") == 1);
}

TEST_CASE("frame, sample and second conversions agree") {
  const AudioSpec spec;
  for (FrameIndex f : {0, 1, 50, 999, 1000, 180000}) {
    CHECK(seconds_to_frames(spec.frames_to_seconds(f), spec) == f);
    CHECK(spec.frames_to_samples(f) == f * 320);
  }
}
