#include "probseg/segmenters.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "probseg/errors.hpp"
#include "probseg/smoothing.hpp"

namespace probseg {

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::pdac: return "pdac";
    case Algorithm::pstrm: return "pstrm";
    case Algorithm::pthr: return "pthr";
    case Algorithm::pthr_ma: return "pthr_ma";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view name) {
  for (auto a : {Algorithm::pdac, Algorithm::pstrm, Algorithm::pthr, Algorithm::pthr_ma}) {
    if (name == to_string(a)) return a;
  }
  throw InvalidArgument(fmt::format("unknown algorithm '{}' (expected pdac, pstrm, pthr or pthr_ma)", name));
}

void SegmenterConfig::validate() const {
  if (max_len < 1) throw InvalidArgument(fmt::format("max must be at least one frame, got {}", max_len));
  if (!(0 <= min_len && min_len <= lerp_min && lerp_min <= lerp_max && lerp_max <= max_len)) {
    throw InvalidArgument(fmt::format("need 0 <= min ({}) <= lerp_min ({}) <= lerp_max ({}) <= max ({}) in frames",
                                      min_len, lerp_min, lerp_max, max_len));
  }
  if (!(thr > 0.0 && thr < 1.0)) throw InvalidArgument(fmt::format("thr must be in (0, 1), got {}", thr));
  if (n_ma < 0) throw InvalidArgument(fmt::format("n_ma must be >= 0, got {}", n_ma));
}

SegmenterConfig SegmenterParams::resolve(const AudioSpec& spec) const {
  const bool threshold_decoder = algorithm == Algorithm::pthr || algorithm == Algorithm::pthr_ma;
  const double max_s = max_seconds.value_or(28.0);
  const double min_s = min_seconds.value_or(0.2);

  SegmenterConfig cfg;
  cfg.algorithm = algorithm;
  cfg.max_len = seconds_to_frames(max_s, spec);
  cfg.min_len = seconds_to_frames(min_s, spec);
  cfg.thr = thr.value_or(threshold_decoder ? 0.1 : 0.5);
  cfg.n_ma = seconds_to_frames(n_ma_seconds.value_or(algorithm == Algorithm::pthr_ma ? 0.1 : 0.0), spec);
  cfg.lerp_min = seconds_to_frames(lerp_min_seconds.value_or(min_s + 0.1 * (max_s - min_s)), spec);
  cfg.lerp_max = seconds_to_frames(lerp_max_seconds.value_or(max_s - 0.2 * (max_s - min_s)), spec);
  cfg.validate();
  return cfg;
}

ThresholdFilter build_threshold_filter(const SegmenterConfig& cfg) {
  cfg.validate();
  ThresholdFilter f;
  f.thrs.resize(static_cast<std::size_t>(cfg.max_len));
  const double thr = cfg.thr;
  for (FrameIndex i = 0; i < cfg.max_len; ++i) {
    double v;
    if (i < cfg.min_len) {
      v = 0.0;
    } else if (i < cfg.lerp_min) {
      // 0 at min rising to thr at lerp_min
      v = std::lerp(0.0, thr, static_cast<double>(i - cfg.min_len) / static_cast<double>(cfg.lerp_min - cfg.min_len));
    } else if (i < cfg.lerp_max) {
      v = thr;
    } else {
      // thr at lerp_max - 1 rising to 1 at max - 1
      v = std::lerp(thr, 1.0,
                    static_cast<double>(i - cfg.lerp_max + 1) / static_cast<double>(cfg.max_len - cfg.lerp_max));
    }
    f.thrs[static_cast<std::size_t>(i)] = v;
  }
  return f;
}

std::optional<Segment> trim(Segment sgm, const ProbStream& stream, double thr) {
  const auto n = static_cast<FrameIndex>(stream.size());
  if (sgm.start < 0 || sgm.end > n || sgm.start > sgm.end) {
    throw OutOfRange(fmt::format("trim: segment [{}, {}) outside stream of {} frames", sgm.start, sgm.end, n));
  }
  const auto& p = stream.probs;
  FrameIndex i = sgm.start;
  while (i < sgm.end && !(p[i] > thr)) ++i;
  if (i == sgm.end) return std::nullopt;
  FrameIndex j = sgm.end - 1;
  while (!(p[j] > thr)) --j;
  return Segment{i, j + 1};
}

namespace {

SegmentList empty_like(const ProbStream& stream) {
  SegmentList out;
  out.spec = stream.spec;
  out.recording_id = stream.recording_id;
  return out;
}

// O(1) trimming against a fixed threshold via nearest-above-threshold tables.
class Trimmer {
 public:
  Trimmer(const std::vector<float>& p, double thr) : next_(p.size() + 1), prev_(p.size()) {
    const auto n = static_cast<FrameIndex>(p.size());
    next_[n] = n;
    for (FrameIndex i = n - 1; i >= 0; --i) next_[i] = p[i] > thr ? i : next_[i + 1];
    FrameIndex last = -1;
    for (FrameIndex i = 0; i < n; ++i) {
      if (p[i] > thr) last = i;
      prev_[i] = last;
    }
  }

  // Empty segment (length 0) when nothing in [start, end) exceeds thr.
  Segment operator()(FrameIndex start, FrameIndex end) const {
    if (start >= end) return {start, start};
    const FrameIndex i = next_[start];
    if (i >= end) return {start, start};
    return {i, prev_[end - 1] + 1};
  }

 private:
  std::vector<FrameIndex> next_;
  std::vector<FrameIndex> prev_;
};

}  // namespace

SegmentList pthr(const ProbStream& stream, const SegmenterConfig& cfg) {
  const auto filter = build_threshold_filter(cfg);
  const auto& thrs = filter.thrs;
  const auto& p = stream.probs;
  const auto n = static_cast<FrameIndex>(p.size());

  SegmentList out = empty_like(stream);
  FrameIndex start = 0;
  while (start < n) {
    if (!(p[start] > cfg.thr)) {
      ++start;
      continue;
    }
    FrameIndex end = std::min(start + cfg.max_len, n);
    // Offset 0 is the opening frame; closing is tested from offset 1 so that
    // every segment holds at least one frame.
    for (FrameIndex i = start + 1; i < end; ++i) {
      if (p[i] <= thrs[static_cast<std::size_t>(i - start)]) {
        end = i;
        break;
      }
    }
    out.segments.push_back({start, end});
    start = end;
  }
  return out;
}

SegmentList pthr_ma(const ProbStream& stream, const SegmenterConfig& cfg) {
  cfg.validate();
  return pthr(moving_average(stream, {cfg.n_ma}), cfg);
}

SegmentList pdac(const ProbStream& stream, const SegmenterConfig& cfg) {
  cfg.validate();
  SegmentList out = empty_like(stream);
  const auto& p = stream.probs;
  const auto n = static_cast<FrameIndex>(p.size());
  if (n == 0) return out;

  const Trimmer trim_at(p, cfg.thr);
  // Candidate order: ascending probability, ties by lower frame index. The
  // comparator is inverted because std heaps keep the maximum on top.
  const auto later = [&p](FrameIndex a, FrameIndex b) { return p[a] > p[b] || (p[a] == p[b] && a > b); };

  std::vector<Segment> pending{{0, n}};
  std::vector<FrameIndex> heap;
  while (!pending.empty()) {
    const Segment sgm = pending.back();
    pending.pop_back();
    if (sgm.length() < cfg.max_len) {
      out.segments.push_back(sgm);
      continue;
    }

    heap.resize(static_cast<std::size_t>(sgm.length()));
    for (FrameIndex k = 0; k < sgm.length(); ++k) heap[k] = sgm.start + k;
    std::make_heap(heap.begin(), heap.end(), later);

    bool split = false;
    while (!heap.empty()) {
      std::pop_heap(heap.begin(), heap.end(), later);
      const FrameIndex k = heap.back();
      heap.pop_back();
      const Segment left = trim_at(sgm.start, k);
      const Segment right = trim_at(k + 1, sgm.end);
      if (left.length() > cfg.min_len && right.length() > cfg.min_len) {
        pending.push_back(right);
        pending.push_back(left);
        split = true;
        break;
      }
    }
    // No admissible split point: keep the segment whole.
    if (!split) out.segments.push_back(sgm);
  }
  return out;
}

SegmentList pstrm(const ProbStream& stream, const SegmenterConfig& cfg) {
  cfg.validate();
  SegmentList out = empty_like(stream);
  const auto& p = stream.probs;
  const auto n = static_cast<FrameIndex>(p.size());
  const double thr = cfg.thr;

  auto emit = [&](FrameIndex s, FrameIndex e) {
    if (auto t = trim({s, e}, stream, thr)) out.segments.push_back(*t);
  };

  FrameIndex start = 0;
  while (start < n) {
    if (n - start <= cfg.max_len) {
      emit(start, n);
      break;
    }
    const FrameIndex window_end = start + cfg.max_len;
    const FrameIndex lowest_cut = start + std::max<FrameIndex>(cfg.min_len, 1);

    FrameIndex cut = window_end;
    FrameIndex best_len = 0;
    FrameIndex i = start;
    while (i < window_end) {
      if (p[i] > thr) {
        ++i;
        continue;
      }
      FrameIndex j = i;
      while (j < window_end && !(p[j] > thr)) ++j;
      const FrameIndex len = j - i;
      const FrameIndex mid = i + len / 2;
      if (mid >= lowest_cut && len > best_len) {
        best_len = len;
        cut = mid;
      }
      i = j;
    }
    emit(start, cut);
    start = cut;
  }
  return out;
}

SegmentList segment(const ProbStream& stream, const SegmenterConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::pdac: return pdac(stream, cfg);
    case Algorithm::pstrm: return pstrm(stream, cfg);
    case Algorithm::pthr: return pthr(stream, cfg);
    case Algorithm::pthr_ma: return pthr_ma(stream, cfg);
  }
  throw InvalidArgument("unknown algorithm");
}

}  // namespace probseg
