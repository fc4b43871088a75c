#include "probseg/cli.hpp"

#include <atomic>
#include <charconv>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "probseg/audio_io.hpp"
#include "probseg/batching.hpp"
#include "probseg/eval.hpp"
#include "probseg/stream_io.hpp"
#include "probseg/synth.hpp"

namespace probseg::cli {
namespace {

namespace fs = std::filesystem;

template <typename T>
T parse_value(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw UsageError(fmt::format("config: bad value '{}' for '{}'", value, key));
  }
  return out;
}

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Flag values as parsed by CLI11; unset flags leave the config file's values.
struct SegmenterFlags {
  std::optional<std::string> config_path;
  std::optional<std::string> algorithm;
  std::optional<double> max_s, min_s, thr, n_ma_s, lerp_min_s, lerp_max_s;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<double> bin_width;
  std::optional<std::int64_t> token_budget;
  bool show_config = false;

  void add_to(CLI::App& app, bool segmenter_flags) {
    app.add_option("--config", config_path, "Flat key=value config file");
    app.add_flag("--show-config", show_config, "Print the effective configuration and exit");
    app.add_option("--seed", seed, "Random seed");
    app.add_option("--jobs", jobs, "Worker threads");
    app.add_option("--bin-width", bin_width, "Histogram bin width in seconds");
    app.add_option("--token-budget", token_budget, "Frames per simulated batch");
    if (!segmenter_flags) return;
    app.add_option("--algorithm", algorithm, "pdac | pstrm | pthr | pthr_ma");
    app.add_option("--max", max_s, "Maximum segment length (s)");
    app.add_option("--min", min_s, "Minimum segment length (s)");
    app.add_option("--thr", thr, "Probability threshold");
    app.add_option("--n-ma", n_ma_s, "Moving-average window (s)");
    app.add_option("--lerp-min", lerp_min_s, "End of the rising filter ramp (s)");
    app.add_option("--lerp-max", lerp_max_s, "Start of the closing filter ramp (s)");
  }

  Settings resolve() const {
    Settings s;
    if (config_path) {
      std::string text;
      try {
        text = read_text_file(*config_path);
      } catch (const IoError& e) {
        throw UsageError(e.what());
      }
      apply_config_text(text, s);
    }
    if (algorithm) apply_config_value("algorithm", *algorithm, s);
    if (max_s) s.params.max_seconds = *max_s;
    if (min_s) s.params.min_seconds = *min_s;
    if (thr) s.params.thr = *thr;
    if (n_ma_s) s.params.n_ma_seconds = *n_ma_s;
    if (lerp_min_s) s.params.lerp_min_seconds = *lerp_min_s;
    if (lerp_max_s) s.params.lerp_max_seconds = *lerp_max_s;
    if (seed) s.seed = *seed;
    if (jobs) s.jobs = *jobs;
    if (bin_width) s.bin_width = *bin_width;
    if (token_budget) s.token_budget = *token_budget;
    if (s.jobs < 1) throw UsageError("jobs must be at least 1");
    if (!(s.bin_width > 0)) throw UsageError("bin width must be positive");
    if (s.token_budget <= 0) throw UsageError("token budget must be positive");
    return s;
  }
};

SegmenterConfig resolve_segmenter(const Settings& s, const AudioSpec& spec) {
  try {
    return s.params.resolve(spec);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

std::string stats_line(const std::string& id, const LengthStats& st) {
  return fmt::format("{}\t{} segments\tmean {:.3f} s\tmedian {:.3f} s\tmode bin {} s\n", id, st.count, st.mean,
                     st.median, st.mode_bin);
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError(fmt::format("cannot create directory '{}'", dir.string()));
}

// ---- segment ----------------------------------------------------------------

struct SegmentArgs {
  std::vector<std::string> probs;
  std::string out_dir;
  std::string audio_dir;
};

int cmd_segment(const SegmentArgs& a, const Settings& settings, std::ostream& out) {
  resolve_segmenter(settings, AudioSpec{});
  ensure_dir(a.out_dir);

  std::vector<std::string> lines(a.probs.size());
  std::vector<std::string> ids(a.probs.size());
  parallel_for(a.probs.size(), settings.jobs, [&](std::size_t k) {
    const auto stream = read_probs(a.probs[k]);
    // Lengths are resolved per stream so non-default specs convert correctly.
    const auto local = resolve_segmenter(settings, stream.spec);
    const auto segs = segment(stream, local);
    ids[k] = stream.recording_id;
    const auto source = (fs::path(a.audio_dir) / (stream.recording_id + ".wav")).string();
    lines[k] = stats_line(stream.recording_id, length_stats(segs, settings.bin_width));
    write_segments(segs, fs::path(a.out_dir) / (stream.recording_id + ".seg"));
    write_manifest(manifest_from_segments(segs, source), fs::path(a.out_dir) / (stream.recording_id + ".tsv"));
  });
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) throw InvalidArgument(fmt::format("duplicate recording id '{}' in input", id));
  }
  for (const auto& l : lines) out << l;
  return kOk;
}

// ---- synth ------------------------------------------------------------------

struct SynthArgs {
  std::string out_dir;
  std::optional<std::string> operating_point;
  std::optional<double> precision, recall;
  double duration = 7200;
  double mean_len = 5.79;
  double len_sigma = 0.66;
  double mean_gap = 0.8;
  double jitter = 0.02;
  double noise_sigma = 0.1;
  int recordings = 1;
};

int cmd_synth(const SynthArgs& a, const Settings& settings, std::ostream& out) {
  NoiseProfile noise;
  noise.boundary_jitter = a.jitter;
  noise.per_frame_noise_sigma = a.noise_sigma;
  try {
    if (a.operating_point) {
      const auto& op = find_operating_point(*a.operating_point);
      noise.target_precision = op.precision;
      noise.target_recall = op.recall;
    }
    if (a.precision) noise.target_precision = *a.precision;
    if (a.recall) noise.target_recall = *a.recall;
    noise.validate();
    CorpusProfile probe{a.mean_len, a.len_sigma, a.mean_gap, a.duration, 0};
    probe.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  if (a.recordings < 1) throw UsageError("recordings must be at least 1");
  ensure_dir(a.out_dir);

  const AudioSpec spec;
  std::vector<std::string> lines(static_cast<std::size_t>(a.recordings));
  parallel_for(lines.size(), settings.jobs, [&](std::size_t k) {
    const std::string id = fmt::format("synth{:03}", k);
    CorpusProfile profile{a.mean_len, a.len_sigma, a.mean_gap, a.duration, derive_seed(settings.seed, 2 * k)};
    NoiseProfile rec_noise = noise;
    rec_noise.seed = derive_seed(settings.seed, 2 * k + 1);

    const auto ref = gen_reference(profile, spec, id);
    const FrameIndex total = seconds_to_frames(a.duration, spec);
    const auto result = corrupt(ref, rec_noise, total);
    const fs::path dir(a.out_dir);
    write_segments(ref, dir / (id + ".ref.seg"));
    write_manifest(manifest_from_segments(ref, id + ".wav"), dir / (id + ".ref.tsv"));
    write_labels(segments_to_labels(ref, total), id, dir / (id + ".labels"));
    write_probs(result.stream, dir / (id + ".probs"));
    lines[k] = fmt::format("{}\t{} reference segments\ttarget P={:.4f} R={:.4f}\tachieved P={:.4f} R={:.4f} F1={:.4f}\n",
                           id, ref.size(), noise.target_precision, noise.target_recall, result.achieved.precision,
                           result.achieved.recall, result.achieved.f1);
  });
  for (const auto& l : lines) out << l;
  return kOk;
}

// ---- eval -------------------------------------------------------------------

struct EvalArgs {
  std::string hyp;
  std::optional<std::string> ref;
  std::optional<std::string> labels;
  std::optional<std::string> probs;
  std::string out_dir;
  double threshold = 0.5;
};

int cmd_eval(const EvalArgs& a, const Settings& settings, std::ostream& out) {
  if (!a.ref && !a.labels) throw UsageError("eval needs --ref or --labels");
  const auto hyp = read_segments(a.hyp);
  std::optional<ReferenceLabels> labels;
  if (a.labels) labels = read_labels(*a.labels);
  SegmentList ref = a.ref ? read_segments(*a.ref) : labels_to_segments(*labels, hyp.recording_id);
  if (!(hyp.spec == ref.spec)) throw InvalidArgument("hypothesis and reference audio specs differ");

  EvalReport report;
  if (a.probs) {
    const auto stream = read_probs(*a.probs);
    if (!(stream.spec == ref.spec)) throw InvalidArgument("probability stream and reference audio specs differ");
    if (!labels) labels = segments_to_labels(ref, static_cast<FrameIndex>(stream.size()));
    report.frame = frame_prf(stream, *labels, a.threshold);
  }
  report.overlap = overlap_metrics(hyp, ref);
  report.hyp_lengths = length_stats(hyp, settings.bin_width);
  report.ref_lengths = length_stats(ref, settings.bin_width);

  ensure_dir(a.out_dir);
  const fs::path dir(a.out_dir);
  write_file_atomic(dir / "report.json", to_json(report).dump(2) + "\n");
  write_file_atomic(dir / "summary.csv", summary_csv(report));
  write_file_atomic(dir / "hyp_hist.csv", histogram_csv(report.hyp_lengths));
  write_file_atomic(dir / "ref_hist.csv", histogram_csv(report.ref_lengths));
  out << summary_csv(report);
  return kOk;
}

// ---- align ------------------------------------------------------------------

struct AlignArgs {
  std::string hyp;
  std::string ref;
  std::optional<std::string> out_path;
};

int cmd_align(const AlignArgs& a, std::ostream& out) {
  const Tokens hyp = split_tokens(read_text_file(a.hyp));
  std::vector<Tokens> refs;
  std::istringstream in(read_text_file(a.ref));
  for (std::string line; std::getline(in, line);) refs.push_back(split_tokens(line));

  const auto result = resegment_align(hyp, refs);
  std::string text;
  for (const auto& span : result.spans) {
    for (std::size_t i = span.begin; i < span.end; ++i) {
      if (i > span.begin) text += ' ';
      text += hyp[i];
    }
    text += '\n';
  }
  if (a.out_path) write_file_atomic(*a.out_path, text);
  else out << text;
  out << fmt::format("total_distance={}\treference_tokens=", result.total_distance);
  std::size_t ref_tokens = 0;
  for (const auto& r : refs) ref_tokens += r.size();
  out << ref_tokens << '\n';
  return kOk;
}

// ---- slice ------------------------------------------------------------------

struct SliceArgs {
  std::string wav;
  std::string segments;
  std::string out_dir;
};

int cmd_slice(const SliceArgs& a, std::ostream& out) {
  const auto wav = read_wav(a.wav);
  const auto segs = read_segments(a.segments);
  const auto manifest = slice_wav(wav, segs.spec, segs, a.out_dir, a.wav);
  ensure_dir(a.out_dir);
  write_manifest(manifest, fs::path(a.out_dir) / (segs.recording_id + ".tsv"));
  out << fmt::format("{}\t{} slices written to {}\n", segs.recording_id, manifest.rows.size(), a.out_dir);
  return kOk;
}

// ---- bench ------------------------------------------------------------------

struct BenchArgs {
  std::vector<std::string> segments;
  double alpha = CostModel{}.alpha;
  double beta = CostModel{}.beta;
  std::optional<std::string> out_csv;
};

int cmd_bench(const BenchArgs& a, const Settings& settings, std::ostream& out) {
  std::vector<BatchPlan> plans(a.segments.size());
  std::vector<SegmentList> lists(a.segments.size());
  parallel_for(a.segments.size(), settings.jobs, [&](std::size_t k) {
    lists[k] = read_segments(a.segments[k]);
    plans[k] = simulate_batches(lists[k], settings.token_budget, {a.alpha, a.beta});
  });

  out << "file\tsegments\tmean_seconds\tbatches\tpadded_frames\twaste_ratio\tsimulated_cost\n";
  std::string csv = "file,batch,size,longest,padded_frames,real_frames,cost\n";
  for (std::size_t k = 0; k < plans.size(); ++k) {
    const auto& p = plans[k];
    out << fmt::format("{}\t{}\t{:.3f}\t{}\t{}\t{:.6f}\t{:.3f}\n", a.segments[k], lists[k].size(),
                       length_stats(lists[k]).mean, p.batches.size(), p.padded_frames, p.waste_ratio,
                       p.simulated_cost);
    for (std::size_t b = 0; b < p.batches.size(); ++b) {
      const auto& batch = p.batches[b];
      csv += fmt::format("{},{},{},{},{},{},{}\n", a.segments[k], b, batch.members.size(), batch.longest,
                         batch.padded_frames, batch.real_frames, batch.cost);
    }
  }
  if (a.out_csv) write_file_atomic(*a.out_csv, csv);
  return kOk;
}

}  // namespace

void apply_config_value(const std::string& key, const std::string& value, Settings& s) {
  auto& p = s.params;
  if (key == "algorithm") {
    try {
      p.algorithm = parse_algorithm(value);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
  } else if (key == "max") p.max_seconds = parse_value<double>(key, value);
  else if (key == "min") p.min_seconds = parse_value<double>(key, value);
  else if (key == "thr") p.thr = parse_value<double>(key, value);
  else if (key == "n_ma") p.n_ma_seconds = parse_value<double>(key, value);
  else if (key == "lerp_min") p.lerp_min_seconds = parse_value<double>(key, value);
  else if (key == "lerp_max") p.lerp_max_seconds = parse_value<double>(key, value);
  else if (key == "seed") s.seed = parse_value<std::uint64_t>(key, value);
  else if (key == "jobs") s.jobs = parse_value<int>(key, value);
  else if (key == "bin_width") s.bin_width = parse_value<double>(key, value);
  else if (key == "token_budget") s.token_budget = parse_value<std::int64_t>(key, value);
  else throw UsageError(fmt::format("config: unknown key '{}'", key));
}

void apply_config_text(const std::string& text, Settings& settings) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trimmed(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(fmt::format("config line {}: expected key=value", line_no));
    apply_config_value(trimmed(line.substr(0, eq)), trimmed(line.substr(eq + 1)), settings);
  }
}

std::string show_config(const Settings& s) {
  const auto& p = s.params;
  const bool threshold_decoder = p.algorithm == Algorithm::pthr || p.algorithm == Algorithm::pthr_ma;
  const double max_s = p.max_seconds.value_or(28.0);
  const double min_s = p.min_seconds.value_or(0.2);
  std::string text;
  auto line = [&text](std::string_view key, auto value) { text += fmt::format("{}={}\n", key, value); };
  line("algorithm", to_string(p.algorithm));
  line("max", max_s);
  line("min", min_s);
  line("thr", p.thr.value_or(threshold_decoder ? 0.1 : 0.5));
  line("n_ma", p.n_ma_seconds.value_or(p.algorithm == Algorithm::pthr_ma ? 0.1 : 0.0));
  line("lerp_min", p.lerp_min_seconds.value_or(min_s + 0.1 * (max_s - min_s)));
  line("lerp_max", p.lerp_max_seconds.value_or(max_s - 0.2 * (max_s - min_s)));
  line("seed", s.seed);
  line("jobs", s.jobs);
  line("bin_width", s.bin_width);
  line("token_budget", s.token_budget);
  return text;
}

void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(jobs, 1)));
  std::vector<std::exception_ptr> errors(count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next.fetch_add(1)) < count;) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Segment per-frame speech probability streams and evaluate the result", "probseg"};
  app.require_subcommand(1);

  SegmenterFlags flags;
  SegmentArgs seg_args;
  auto* seg = app.add_subcommand("segment", "Segment probability files");
  flags.add_to(*seg, true);
  seg->add_option("probs", seg_args.probs, "Probability files")->required();
  seg->add_option("--out", seg_args.out_dir, "Output directory")->required();
  seg->add_option("--audio-dir", seg_args.audio_dir, "Directory holding <recording_id>.wav for manifests");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus at a classifier operating point");
  flags.add_to(*synth, false);
  synth->add_option("--out", synth_args.out_dir, "Output directory")->required();
  synth->add_option("--operating-point", synth_args.operating_point, "Named precision/recall target");
  synth->add_option("--precision", synth_args.precision, "Target frame precision");
  synth->add_option("--recall", synth_args.recall, "Target frame recall");
  synth->add_option("--duration", synth_args.duration, "Seconds per recording");
  synth->add_option("--mean-len", synth_args.mean_len, "Mean reference segment length (s)");
  synth->add_option("--len-sigma", synth_args.len_sigma, "Log-space std of segment lengths");
  synth->add_option("--mean-gap", synth_args.mean_gap, "Mean gap between segments (s)");
  synth->add_option("--jitter", synth_args.jitter, "Boundary jitter std (s)");
  synth->add_option("--noise-sigma", synth_args.noise_sigma, "Per-frame noise std");
  synth->add_option("--recordings", synth_args.recordings, "Number of recordings");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "Score a segmentation against a reference");
  flags.add_to(*eval, false);
  eval->add_option("--hyp", eval_args.hyp, "Hypothesis segments file")->required();
  eval->add_option("--ref", eval_args.ref, "Reference segments file");
  eval->add_option("--labels", eval_args.labels, "Reference labels file");
  eval->add_option("--probs", eval_args.probs, "Probability file for frame precision/recall");
  eval->add_option("--threshold", eval_args.threshold, "Binarization threshold for frame scores");
  eval->add_option("--out", eval_args.out_dir, "Report directory")->required();

  AlignArgs align_args;
  auto* align = app.add_subcommand("align", "Resegment a hypothesis token stream onto reference lines");
  align->add_option("--hyp", align_args.hyp, "Hypothesis text")->required();
  align->add_option("--ref", align_args.ref, "Reference text, one segment per line")->required();
  align->add_option("--out", align_args.out_path, "Write aligned segments here instead of stdout");

  SliceArgs slice_args;
  auto* slice = app.add_subcommand("slice", "Cut a WAV file into per-segment files");
  slice->add_option("--wav", slice_args.wav, "16-bit PCM mono WAV")->required();
  slice->add_option("--segments", slice_args.segments, "Segments file")->required();
  slice->add_option("--out", slice_args.out_dir, "Output directory")->required();

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Simulate length-sorted batching of segmentations");
  flags.add_to(*bench, false);
  bench->add_option("segments", bench_args.segments, "Segments files")->required();
  bench->add_option("--alpha", bench_args.alpha, "Linear cost coefficient");
  bench->add_option("--beta", bench_args.beta, "Quadratic cost coefficient");
  bench->add_option("--csv", bench_args.out_csv, "Per-batch CSV output");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  }

  try {
    const Settings settings = flags.resolve();
    if (flags.show_config) {
      out << show_config(settings);
      return kOk;
    }
    if (*seg) return cmd_segment(seg_args, settings, out);
    if (*synth) return cmd_synth(synth_args, settings, out);
    if (*eval) return cmd_eval(eval_args, settings, out);
    if (*align) return cmd_align(align_args, out);
    if (*slice) return cmd_slice(slice_args, out);
    if (*bench) return cmd_bench(bench_args, settings, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsageError;
  } catch (const CalibrationError& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}

}  // namespace probseg::cli
