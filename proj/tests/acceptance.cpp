// Acceptance suite. Each check prints one PASS/FAIL line; the exit status is
// non-zero if any check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "oracles.hpp"
#include "probseg/audio_io.hpp"
#include "probseg/batching.hpp"
#include "probseg/cli.hpp"
#include "probseg/eval.hpp"
#include "probseg/segmenters.hpp"
#include "probseg/stream_io.hpp"
#include "probseg/synth.hpp"

using namespace probseg;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double mean_seconds(const SegmentList& segs) {
  return segs.empty() ? 0.0 : segs.spec.frames_to_seconds(segs.covered_frames()) / static_cast<double>(segs.size());
}

SegmenterConfig random_config(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SegmenterConfig c;
  c.max_len = 1 + static_cast<FrameIndex>(rng() % 1500);
  c.min_len = static_cast<FrameIndex>(rng() % (c.max_len / 3 + 1));
  c.lerp_min = c.min_len + static_cast<FrameIndex>(rng() % (c.max_len - c.min_len + 1));
  c.lerp_max = c.lerp_min + static_cast<FrameIndex>(rng() % (c.max_len - c.lerp_min + 1));
  c.thr = 0.01 + 0.98 * u(rng);
  return c;
}

// Shared low-recall corpus for the length, fragility and batching checks.
struct LowRecallCorpus {
  SegmentList ref;
  ProbStream probs;
  FramePRF achieved;
};

const LowRecallCorpus& low_recall_corpus() {
  static const LowRecallCorpus corpus = [] {
    LowRecallCorpus c;
    CorpusProfile profile;  // 2 h, mean length 5.79 s
    profile.seed = 11;
    c.ref = gen_reference(profile, {}, "lowrecall");
    const auto& op = find_operating_point("large");
    NoiseProfile noise;
    noise.target_precision = op.precision;
    noise.target_recall = op.recall;
    noise.seed = 12;
    auto result = corrupt(c.ref, noise, seconds_to_frames(profile.total_duration));
    c.probs = std::move(result.stream);
    c.achieved = result.achieved;
    return c;
  }();
  return corpus;
}

SegmentList run_decoder(Algorithm a, const ProbStream& s, std::optional<double> max_seconds = {}) {
  SegmenterParams p;
  p.algorithm = a;
  p.max_seconds = max_seconds;
  return segment(s, p.resolve(s.spec));
}

Outcome pdac_matches_oracle() {
  std::mt19937_64 rng(1001);
  const auto t0 = Clock::now();
  int mismatches = 0;
  const int cases = 1000;
  for (int k = 0; k < cases; ++k) {
    const auto probs = testing::random_probs(rng, rng() % 5001);
    SegmenterConfig cfg = random_config(rng);
    cfg.algorithm = Algorithm::pdac;
    const auto got = pdac(testing::make_stream(probs), cfg);
    if (got.segments != testing::naive_pdac(probs, cfg.max_len, cfg.min_len, cfg.thr)) ++mismatches;
  }
  const double elapsed = seconds_since(t0);
  return {mismatches == 0 && elapsed < 60.0,
          fmt::format("{} streams, {} mismatches, {:.2f} s", cases, mismatches, elapsed)};
}

Outcome pthr_ma_identity() {
  std::mt19937_64 rng(1002);
  int mismatches = 0;
  const int cases = 1000;
  for (int k = 0; k < cases; ++k) {
    const auto s = testing::make_stream(testing::random_probs(rng, rng() % 5001));
    SegmenterConfig cfg = random_config(rng);
    cfg.n_ma = static_cast<FrameIndex>(k % 2);
    if (pthr_ma(s, cfg) != pthr(s, cfg)) ++mismatches;
  }
  return {mismatches == 0, fmt::format("{} streams, n_ma in {{0,1}}, {} mismatches", cases, mismatches)};
}

Outcome filter_shape() {
  SegmenterConfig ex;
  ex.max_len = 6;
  ex.min_len = 2;
  ex.lerp_min = 2;
  ex.lerp_max = 4;
  ex.thr = 0.5;
  const bool example = build_threshold_filter(ex).thrs == std::vector<double>{0, 0, 0.5, 0.5, 0.75, 1.0};

  std::mt19937_64 rng(1003);
  int violations = 0;
  for (int k = 0; k < 100; ++k) {
    const auto cfg = random_config(rng);
    const auto t = build_threshold_filter(cfg).thrs;
    bool ok = t.size() == static_cast<std::size_t>(cfg.max_len);
    for (FrameIndex i = 0; ok && i < cfg.max_len; ++i) {
      if (i < cfg.min_len && t[i] != 0.0) ok = false;
      if (i >= cfg.lerp_min && i < cfg.lerp_max && t[i] != cfg.thr) ok = false;
      if (t[i] < 0.0 || t[i] > 1.0) ok = false;
      if (i > 0 && t[i] < t[i - 1]) ok = false;
    }
    if (ok && cfg.lerp_max < cfg.max_len && std::abs(t.back() - 1.0) > 1e-12) ok = false;
    if (!ok) ++violations;
  }
  return {example && violations == 0,
          fmt::format("6-index example {}, {} of 100 random configs violate", example ? "matches" : "differs",
                      violations)};
}

Outcome operating_points() {
  CorpusProfile profile;  // 2 h
  profile.seed = 21;
  const auto ref = gen_reference(profile, {}, "oppoints");
  const FrameIndex total = seconds_to_frames(profile.total_duration);
  const auto labels = segments_to_labels(ref, total);
  bool all = true;
  std::string detail;
  for (const auto& op : kOperatingPoints) {
    NoiseProfile noise;
    noise.target_precision = op.precision;
    noise.target_recall = op.recall;
    noise.seed = 22;
    std::string line;
    try {
      const auto prf = frame_prf(corrupt_to_probs(ref, noise, total), labels);
      const bool ok = std::abs(prf.precision - op.precision) <= 0.01 && std::abs(prf.recall - op.recall) <= 0.01;
      all = all && ok;
      line = fmt::format("{} {:.4f}/{:.4f}", op.name, prf.precision, prf.recall);
    } catch (const CalibrationError& e) {
      all = false;
      line = fmt::format("{} calibration failed at {:.4f}/{:.4f}", op.name, e.achieved_precision(),
                         e.achieved_recall());
    }
    detail += (detail.empty() ? "" : ", ") + line;
  }
  return {all, detail};
}

Outcome length_distribution() {
  const auto& c = low_recall_corpus();
  const double ref_mean = mean_seconds(c.ref);
  const double dac = mean_seconds(run_decoder(Algorithm::pdac, c.probs, 26.0));
  const double ma = mean_seconds(run_decoder(Algorithm::pthr_ma, c.probs));
  const bool pass = dac >= 1.3 * ref_mean && std::abs(ma - ref_mean) <= 0.3 * ref_mean;
  return {pass, fmt::format("reference {:.2f} s, pdac {:.2f} s ({:.2f}x), pthr_ma {:.2f} s ({:+.1f}%), stream P/R "
                            "{:.4f}/{:.4f}",
                            ref_mean, dac, dac / ref_mean, ma, 100.0 * (ma - ref_mean) / ref_mean,
                            c.achieved.precision, c.achieved.recall)};
}

Outcome low_recall_fragility() {
  const auto& c = low_recall_corpus();
  const auto ref_count = static_cast<double>(c.ref.size());
  const auto raw = static_cast<double>(run_decoder(Algorithm::pthr, c.probs).size());
  const auto smoothed = static_cast<double>(run_decoder(Algorithm::pthr_ma, c.probs).size());
  const double raw_excess = raw - ref_count;
  const double reduction = raw_excess > 0 ? (raw_excess - (smoothed - ref_count)) / raw_excess : 0.0;
  const bool pass = raw >= 1.5 * ref_count && reduction >= 0.5;
  return {pass, fmt::format("reference {} segments, pthr {} ({:.2f}x), pthr_ma {}, excess reduced by {:.1f}%",
                            c.ref.size(), raw, raw / ref_count, smoothed, 100.0 * reduction)};
}

Outcome aligner() {
  std::mt19937_64 rng(1007);
  const Tokens vocab{"a", "b", "c", "d", "e"};
  auto draw = [&](std::size_t n) {
    Tokens t;
    for (std::size_t i = 0; i < n; ++i) t.push_back(vocab[rng() % vocab.size()]);
    return t;
  };
  int mismatches = 0;
  int identity_failures = 0;
  const int cases = 600;
  for (int k = 0; k < cases; ++k) {
    std::vector<Tokens> refs(1 + rng() % 4);
    for (auto& r : refs) r = draw(rng() % 5);
    const Tokens hyp = draw(rng() % 13);
    const auto got = resegment_align(hyp, refs);
    const auto want = testing::brute_force_align(hyp, refs);
    bool same = got.total_distance == want.total && got.spans.size() == refs.size();
    for (std::size_t i = 0; same && i + 1 < refs.size(); ++i) same = got.spans[i].end == want.boundaries[i];
    if (!same) ++mismatches;

    Tokens joined;
    for (const auto& r : refs) joined.insert(joined.end(), r.begin(), r.end());
    if (joined.size() <= 12 && resegment_align(joined, refs).total_distance != 0) ++identity_failures;
  }
  return {mismatches == 0 && identity_failures == 0,
          fmt::format("{} random cases, {} mismatches, {} identity cases with nonzero distance", cases, mismatches,
                      identity_failures)};
}

Outcome batching() {
  std::mt19937_64 rng(1008);
  int violations = 0;
  for (int k = 0; k < 1000; ++k) {
    SegmentList segs;
    FrameIndex at = 0;
    const std::size_t n = 1 + rng() % 400;
    for (std::size_t i = 0; i < n; ++i) {
      const FrameIndex len = 1 + static_cast<FrameIndex>(rng() % 1400);
      at += static_cast<FrameIndex>(rng() % 50);
      segs.segments.push_back({at, at + len});
      at += len;
    }
    const std::int64_t budget = 1400 + static_cast<std::int64_t>(rng() % 100000);
    const auto plan = simulate_batches(segs, budget);
    std::vector<int> seen(n, 0);
    bool ok = true;
    for (const auto& b : plan.batches) {
      ok = ok && !b.members.empty() && b.padded_frames <= budget &&
           b.padded_frames == b.longest * static_cast<FrameIndex>(b.members.size());
      for (auto m : b.members) {
        if (m >= n) {
          ok = false;
          continue;
        }
        ++seen[m];
        ok = ok && segs.segments[m].length() <= b.longest;
      }
    }
    ok = ok && std::all_of(seen.begin(), seen.end(), [](int v) { return v == 1; });
    if (!ok) ++violations;
  }

  const auto& c = low_recall_corpus();
  const auto ma = simulate_batches(run_decoder(Algorithm::pthr_ma, c.probs));
  const auto dac = simulate_batches(run_decoder(Algorithm::pdac, c.probs, 26.0));
  const bool pass = violations == 0 && ma.simulated_cost < dac.simulated_cost;
  return {pass, fmt::format("{} of 1000 random lists violate, simulated cost pthr_ma {:.0f} vs pdac {:.0f}",
                            violations, ma.simulated_cost, dac.simulated_cost)};
}

Outcome throughput() {
  CorpusProfile profile;
  profile.total_duration = 3600;
  profile.seed = 31;
  const auto ref = gen_reference(profile);
  NoiseProfile noise;
  noise.target_precision = 0.9802;
  noise.target_recall = 0.8532;
  const auto probs = corrupt_to_probs(ref, noise, seconds_to_frames(profile.total_duration));

  std::map<Algorithm, double> times;
  for (auto a : {Algorithm::pthr, Algorithm::pthr_ma, Algorithm::pdac}) {
    SegmenterParams p;
    p.algorithm = a;
    const auto cfg = p.resolve(probs.spec);
    const auto t0 = Clock::now();
    const auto segs = segment(probs, cfg);
    times[a] = seconds_since(t0);
    if (segs.empty()) times[a] = 1e9;
  }
  const bool pass = probs.size() == 180000 && times[Algorithm::pthr] < 1.0 && times[Algorithm::pthr_ma] < 1.0 &&
                    times[Algorithm::pdac] < 10.0;
  return {pass, fmt::format("{} frames: pthr {:.4f} s, pthr_ma {:.4f} s, pdac {:.4f} s", probs.size(),
                            times[Algorithm::pthr], times[Algorithm::pthr_ma], times[Algorithm::pdac])};
}

// Every file below the run directory plus the captured stdout. All runs use
// the same directory, so paths echoed into outputs compare equal too.
using Snapshot = std::map<std::string, std::string>;

Snapshot pipeline_run(const fs::path& root, int jobs) {
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string base = root.string();
  const std::string j = std::to_string(jobs);
  std::ostringstream log;
  auto step = [&](std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    log << "$ " << args.front() << " -> " << code << '\n' << out.str() << err.str();
  };

  step({"synth", "--out", base + "/corpus", "--duration", "240", "--recordings", "3", "--operating-point", "large",
        "--seed", "7", "--jobs", j});
  std::vector<std::string> probs;
  for (int k = 0; k < 3; ++k) probs.push_back(fmt::format("{}/corpus/synth{:03}.probs", base, k));
  for (const char* algo : {"pdac", "pstrm", "pthr", "pthr_ma"}) {
    std::vector<std::string> args{"segment"};
    args.insert(args.end(), probs.begin(), probs.end());
    args.insert(args.end(), {"--out", base + "/" + algo, "--algorithm", algo, "--audio-dir", "audio", "--jobs", j});
    step(args);
  }
  step({"eval", "--hyp", base + "/pthr_ma/synth000.seg", "--ref", base + "/corpus/synth000.ref.seg", "--labels",
        base + "/corpus/synth000.labels", "--probs", base + "/corpus/synth000.probs", "--out", base + "/report",
        "--jobs", j});
  step({"bench", base + "/pdac/synth000.seg", base + "/pthr_ma/synth000.seg", "--csv", base + "/bench.csv", "--jobs",
        j});

  WavData wav;
  wav.samples.resize(static_cast<std::size_t>(240 * 16000));
  for (std::size_t i = 0; i < wav.samples.size(); ++i) wav.samples[i] = static_cast<std::int16_t>((i * 7919) % 20011);
  write_wav(root / "synth000.wav", wav);
  step({"slice", "--wav", base + "/synth000.wav", "--segments", base + "/pthr/synth000.seg", "--out", base + "/slices"});

  write_file_atomic(root / "hyp.txt", "the cat sat on a mat and then it ran away quickly\n");
  write_file_atomic(root / "ref.txt", "the cat sat on the mat\nand then it ran\naway\n");
  step({"align", "--hyp", base + "/hyp.txt", "--ref", base + "/ref.txt", "--out", base + "/aligned.txt"});

  Snapshot snap;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) snap[fs::relative(entry.path(), root).string()] = read_text_file(entry.path());
  }
  snap["<stdout>"] = log.str();
  return snap;
}

std::string first_difference(const Snapshot& a, const Snapshot& b) {
  for (const auto& [name, bytes] : a) {
    const auto it = b.find(name);
    if (it == b.end()) return name + " missing";
    if (it->second != bytes) return name + " differs";
  }
  if (a.size() != b.size()) return "file sets differ";
  return {};
}

Outcome determinism() {
  const fs::path tmp = fs::temp_directory_path() / "probseg_acceptance";
  const auto serial = pipeline_run(tmp, 1);
  const auto again = pipeline_run(tmp, 1);
  const auto parallel = pipeline_run(tmp, 4);
  fs::remove_all(tmp);
  const auto repeat = first_difference(serial, again);
  const auto threads = first_difference(serial, parallel);
  const bool nonempty = serial.size() > 20 && serial.at("<stdout>").find("-> 1") == std::string::npos &&
                        serial.at("<stdout>").find("-> 2") == std::string::npos;
  std::string detail = fmt::format("{} files per run", serial.size() - 1);
  if (!nonempty) detail += ", a pipeline step failed";
  if (!repeat.empty()) detail += ", repeat run: " + repeat;
  if (!threads.empty()) detail += ", jobs 1 vs 4: " + threads;
  return {nonempty && repeat.empty() && threads.empty(), detail};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"pdac equals naive oracle", pdac_matches_oracle},
      {"pthr_ma with n_ma 0/1 equals pthr", pthr_ma_identity},
      {"threshold filter shape", filter_shape},
      {"classifier operating points", operating_points},
      {"segment length distribution at low recall", length_distribution},
      {"pthr fragility at low recall", low_recall_fragility},
      {"resegmentation aligner", aligner},
      {"batching simulator", batching},
      {"throughput on a 1 h stream", throughput},
      {"determinism across runs and jobs", determinism},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::cout << fmt::format("[{}] criterion {:2}: {} ({})", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first,
                             o.detail)
              << std::endl;
  }
  std::cout << fmt::format("{} of {} criteria passed", criteria.size() - failures, criteria.size()) << std::endl;
  return failures == 0 ? 0 : 1;
}
