#include "probseg/synth.hpp"

#include <algorithm>
#include <numbers>

#include <fmt/format.h>

namespace probseg {

double Rng::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

void CorpusProfile::validate() const {
  if (!(mean_len > 0) || !(len_sigma >= 0) || !(mean_gap >= 0) || !(total_duration > 0)) {
    throw InvalidArgument(fmt::format("invalid corpus profile: mean_len={} len_sigma={} mean_gap={} total_duration={}",
                                      mean_len, len_sigma, mean_gap, total_duration));
  }
}

void NoiseProfile::validate() const {
  auto in_unit = [](double x) { return x > 0 && x <= 1; };
  if (!in_unit(target_precision) || !in_unit(target_recall) || !(boundary_jitter >= 0) ||
      !(per_frame_noise_sigma >= 0)) {
    throw InvalidArgument(fmt::format("invalid noise profile: precision={} recall={} jitter={} sigma={}",
                                      target_precision, target_recall, boundary_jitter, per_frame_noise_sigma));
  }
}

const OperatingPoint& find_operating_point(std::string_view name) {
  for (const auto& op : kOperatingPoints) {
    if (op.name == name) return op;
  }
  throw InvalidArgument(fmt::format("unknown operating point '{}'", name));
}

SegmentList gen_reference(const CorpusProfile& profile, const AudioSpec& spec, std::string recording_id) {
  profile.validate();
  spec.validate();
  SegmentList out;
  out.spec = spec;
  out.recording_id = std::move(recording_id);

  Rng rng(profile.seed);
  const FrameIndex total = seconds_to_frames(profile.total_duration, spec);
  const double mu = std::log(profile.mean_len) - 0.5 * profile.len_sigma * profile.len_sigma;
  FrameIndex cursor = 0;
  while (true) {
    const FrameIndex gap = std::max<FrameIndex>(1, seconds_to_frames(rng.exponential(profile.mean_gap), spec));
    const double len_seconds = std::exp(mu + profile.len_sigma * rng.normal());
    const FrameIndex len = std::max<FrameIndex>(1, seconds_to_frames(len_seconds, spec));
    const FrameIndex start = cursor + gap;
    if (start >= total) break;
    const FrameIndex end = std::min(start + len, total);
    out.segments.push_back({start, end});
    cursor = end;
  }
  return out;
}

namespace {

struct BoundaryDraws {
  FrameIndex start = 0;  // after jitter
  FrameIndex end = 0;
  double erode_start = 0;
  double erode_end = 0;
  double dilate_start = 0;
  double dilate_end = 0;
};

// Everything random is drawn once, so predictions are a deterministic,
// monotone function of the two knobs.
class CorruptionModel {
 public:
  CorruptionModel(const SegmentList& ref, const NoiseProfile& noise, FrameIndex total)
      : total_(total), sigma_(noise.per_frame_noise_sigma) {
    Rng rng(noise.seed);
    const double jitter_frames = noise.boundary_jitter * ref.spec.frames_per_second();
    auto offset = [&] { return static_cast<FrameIndex>(std::llround(jitter_frames * rng.normal())); };
    for (const auto& s : ref.segments) {
      BoundaryDraws b;
      b.start = std::clamp<FrameIndex>(s.start + offset(), 0, total);
      b.end = std::clamp<FrameIndex>(s.end + offset(), 0, total);
      b.erode_start = rng.exponential(1.0);
      b.erode_end = rng.exponential(1.0);
      b.dilate_start = rng.exponential(1.0);
      b.dilate_end = rng.exponential(1.0);
      boundaries_.push_back(b);
    }
    miss_draw_.resize(static_cast<std::size_t>(total));
    frame_noise_.resize(static_cast<std::size_t>(total));
    for (FrameIndex i = 0; i < total; ++i) {
      miss_draw_[i] = rng.uniform();
      frame_noise_[i] = sigma_ * rng.normal();
    }
    truth_ = segments_to_labels(ref, total).labels;
  }

  // Pre-noise signal level per frame for the given knobs.
  std::vector<float> levels(double erosion, double dilation) const {
    std::vector<int> cover(static_cast<std::size_t>(total_) + 1, 0);
    for (const auto& b : boundaries_) {
      const auto in_start = static_cast<FrameIndex>(erosion * kErosionScale * b.erode_start);
      const auto in_end = static_cast<FrameIndex>(erosion * kErosionScale * b.erode_end);
      const auto out_start = static_cast<FrameIndex>(dilation * kDilationScale * b.dilate_start);
      const auto out_end = static_cast<FrameIndex>(dilation * kDilationScale * b.dilate_end);
      const FrameIndex s = std::clamp<FrameIndex>(b.start + in_start - out_start, 0, total_);
      const FrameIndex e = std::clamp<FrameIndex>(b.end - in_end + out_end, 0, total_);
      if (s < e) {
        ++cover[s];
        --cover[e];
      }
    }
    const double miss_rate = erosion * kMissRate;
    std::vector<float> level(static_cast<std::size_t>(total_), 0.0f);
    int depth = 0;
    for (FrameIndex i = 0; i < total_; ++i) {
      depth += cover[i];
      if (depth > 0) level[i] = miss_draw_[i] < miss_rate ? static_cast<float>(kMissLevel) : 1.0f;
    }
    return level;
  }

  struct Score {
    double precision = 0;
    double recall = 0;
  };

  Score score(double erosion, double dilation) const {
    const auto level = levels(erosion, dilation);
    std::int64_t tp = 0, fp = 0, fn = 0;
    for (FrameIndex i = 0; i < total_; ++i) {
      const bool predicted = level[i] + frame_noise_[i] > 0.5;
      const bool gold = truth_[i] != 0;
      tp += predicted && gold;
      fp += predicted && !gold;
      fn += !predicted && gold;
    }
    return {tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0,
            tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0};
  }

  std::vector<float> probabilities(double erosion, double dilation) const {
    auto p = levels(erosion, dilation);
    for (FrameIndex i = 0; i < total_; ++i) {
      const double x = p[i] + frame_noise_[i] - 0.5;
      if (sigma_ > 0) {
        p[i] = static_cast<float>(1.0 / (1.0 + std::exp(-x / sigma_)));
      } else {
        p[i] = x > 0 ? 1.0f : 0.0f;
      }
    }
    return p;
  }

 private:
  FrameIndex total_;
  double sigma_;
  std::vector<BoundaryDraws> boundaries_;
  std::vector<double> miss_draw_;
  std::vector<double> frame_noise_;
  std::vector<std::uint8_t> truth_;
};

constexpr double kMaxErosion = 1.0;
constexpr double kMaxDilation = 8.0;
constexpr double kAim = 0.002;
constexpr double kTolerance = 0.01;
constexpr int kBisectSteps = 48;
constexpr int kRounds = 12;

// Returns the knob value in [lo, hi] whose metric lands closest to target,
// for a metric that is non-increasing in the knob.
template <typename Metric>
double bisect_decreasing(Metric metric, double target, double lo, double hi) {
  if (metric(lo) <= target) return lo;
  if (metric(hi) >= target) return hi;
  for (int step = 0; step < kBisectSteps; ++step) {
    const double mid = 0.5 * (lo + hi);
    (metric(mid) >= target ? lo : hi) = mid;
  }
  return std::abs(metric(lo) - target) <= std::abs(metric(hi) - target) ? lo : hi;
}

}  // namespace

Corruption corrupt(const SegmentList& ref, const NoiseProfile& noise, FrameIndex total_frames) {
  noise.validate();
  ref.validate(total_frames);
  const CorruptionModel model(ref, noise, total_frames);

  double erosion = 0;
  double dilation = 0;
  auto close_enough = [&](const CorruptionModel::Score& s) {
    return std::abs(s.precision - noise.target_precision) <= kAim && std::abs(s.recall - noise.target_recall) <= kAim;
  };
  if (!close_enough(model.score(erosion, dilation))) {
    for (int round = 0; round < kRounds; ++round) {
      erosion = bisect_decreasing([&](double e) { return model.score(e, dilation).recall; }, noise.target_recall, 0.0,
                                  kMaxErosion);
      dilation = bisect_decreasing([&](double d) { return model.score(erosion, d).precision; },
                                   noise.target_precision, 0.0, kMaxDilation);
      if (close_enough(model.score(erosion, dilation))) break;
    }
  }

  Corruption out;
  out.erosion_knob = erosion;
  out.dilation_knob = dilation;
  out.stream.spec = ref.spec;
  out.stream.recording_id = ref.recording_id;
  out.stream.probs = model.probabilities(erosion, dilation);
  out.achieved = frame_prf(out.stream, segments_to_labels(ref, total_frames));
  if (std::abs(out.achieved.precision - noise.target_precision) > kTolerance ||
      std::abs(out.achieved.recall - noise.target_recall) > kTolerance) {
    throw CalibrationError(fmt::format("calibration missed targets P={} R={}: achieved P={:.4f} R={:.4f}",
                                       noise.target_precision, noise.target_recall, out.achieved.precision,
                                       out.achieved.recall),
                           out.achieved.precision, out.achieved.recall);
  }
  return out;
}

ProbStream corrupt_to_probs(const SegmentList& ref, const NoiseProfile& noise, FrameIndex total_frames) {
  return corrupt(ref, noise, total_frames).stream;
}

}  // namespace probseg
