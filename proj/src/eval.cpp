#include "probseg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "probseg/errors.hpp"

namespace probseg {
namespace {

double safe_ratio(std::int64_t num, std::int64_t den, bool& zero_division) {
  if (den == 0) {
    zero_division = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

using Cost = std::int32_t;
constexpr Cost kInf = std::numeric_limits<Cost>::max() / 4;

// Given prior[a] = cost of everything before the current reference segment
// when it starts at hypothesis position a, returns out[j] = min over a <= j of
// prior[a] + lev(hyp[a..j), ref). Positions below `from` are treated as
// unreachable.
std::vector<Cost> extend(const std::vector<Cost>& prior, const Tokens& hyp, const Tokens& ref, std::size_t from = 0) {
  const std::size_t n = hyp.size();
  std::vector<Cost> row(n + 1, kInf);
  for (std::size_t j = from; j <= n; ++j) {
    row[j] = prior[j];
    if (j > from) row[j] = std::min(row[j], row[j - 1] + 1);
  }
  std::vector<Cost> next(n + 1, kInf);
  for (const auto& token : ref) {
    next[from] = row[from] + 1;
    for (std::size_t j = from + 1; j <= n; ++j) {
      const Cost sub = row[j - 1] + (token == hyp[j - 1] ? 0 : 1);
      next[j] = std::min({row[j] + 1, sub, next[j - 1] + 1});
    }
    std::swap(row, next);
  }
  return row;
}

std::vector<Cost> origin_row(std::size_t n, std::size_t at) {
  std::vector<Cost> row(n + 1, kInf);
  row[at] = 0;
  return row;
}

}  // namespace

FramePRF frame_prf(const ProbStream& stream, const ReferenceLabels& ref, double threshold) {
  if (stream.size() != ref.size()) {
    throw InvalidArgument(fmt::format("frame_prf: stream has {} frames but labels have {}", stream.size(), ref.size()));
  }
  FramePRF out;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const bool predicted = stream.probs[i] > threshold;
    const bool gold = ref.labels[i] != 0;
    if (predicted && gold) ++out.true_positives;
    else if (predicted) ++out.false_positives;
    else if (gold) ++out.false_negatives;
  }
  out.precision = safe_ratio(out.true_positives, out.true_positives + out.false_positives, out.zero_division);
  out.recall = safe_ratio(out.true_positives, out.true_positives + out.false_negatives, out.zero_division);
  if (out.precision > 0 && out.recall > 0) {
    out.f1 = 2 * out.precision * out.recall / (out.precision + out.recall);
  }
  return out;
}

LengthStats length_stats(const SegmentList& segs, double bin_width) {
  if (!(bin_width > 0)) throw InvalidArgument("length_stats: bin width must be positive");
  LengthStats out;
  out.bin_width = bin_width;
  out.count = static_cast<std::int64_t>(segs.size());
  if (segs.empty()) return out;

  const auto& spec = segs.spec;
  std::vector<FrameIndex> lengths;
  lengths.reserve(segs.size());
  for (const auto& s : segs.segments) lengths.push_back(s.length());
  for (auto len : lengths) out.total_frames += len;
  out.mean = spec.frames_to_seconds(out.total_frames) / static_cast<double>(out.count);

  std::vector<FrameIndex> sorted = lengths;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  out.median = sorted.size() % 2 ? spec.frames_to_seconds(sorted[mid])
                                 : 0.5 * (spec.frames_to_seconds(sorted[mid - 1]) + spec.frames_to_seconds(sorted[mid]));

  const double bin_samples = static_cast<double>(spec.sample_rate) * bin_width;
  auto bin_of = [&](FrameIndex len) {
    const double x = static_cast<double>(len) * spec.frame_stride / bin_samples;
    return static_cast<std::size_t>(std::floor(x + 1e-9));
  };
  std::vector<std::int64_t> counts(bin_of(sorted.back()) + 1, 0);
  for (auto len : lengths) ++counts[bin_of(len)];
  std::size_t mode = 0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    out.histogram.push_back({static_cast<double>(k) * bin_width, counts[k]});
    if (counts[k] > counts[mode]) mode = k;
  }
  out.mode_bin = static_cast<double>(mode) * bin_width;
  return out;
}

OverlapReport overlap_metrics(const SegmentList& hyp, const SegmentList& ref) {
  if (!(hyp.spec == ref.spec)) throw InvalidArgument("overlap_metrics: hypothesis and reference specs differ");
  OverlapReport out;
  std::vector<std::int64_t> hits_per_ref(ref.size(), 0);
  std::vector<std::int64_t> hits_per_hyp(hyp.size(), 0);

  std::size_t i = 0;
  std::size_t j = 0;
  while (i < hyp.size() && j < ref.size()) {
    const auto& h = hyp.segments[i];
    const auto& r = ref.segments[j];
    const FrameIndex overlap = std::min(h.end, r.end) - std::max(h.start, r.start);
    if (overlap > 0) {
      out.intersection_frames += overlap;
      ++hits_per_hyp[i];
      ++hits_per_ref[j];
    }
    if (h.end < r.end) ++i;
    else if (r.end < h.end) ++j;
    else {
      ++i;
      ++j;
    }
  }
  out.union_frames = hyp.covered_frames() + ref.covered_frames() - out.intersection_frames;
  out.iou = out.union_frames == 0 ? 1.0
                                  : static_cast<double>(out.intersection_frames) / static_cast<double>(out.union_frames);
  for (auto c : hits_per_ref) out.over_segmented += c >= 2;
  for (auto c : hits_per_hyp) out.under_segmented += c >= 2;
  return out;
}

std::int64_t edit_distance(const Tokens& a, const Tokens& b) {
  return extend(origin_row(b.size(), 0), b, a).back();
}

AlignmentResult resegment_align(const Tokens& hyp, const std::vector<Tokens>& refs) {
  const std::size_t n = hyp.size();
  const std::size_t m = refs.size();
  AlignmentResult out;
  if (m == 0) {
    out.total_distance = static_cast<std::int64_t>(n);
    return out;
  }

  // backward[k][j]: cheapest cost of aligning refs k..m-1 to hyp[j..n),
  // obtained by running the forward recurrence over the reversed problem.
  Tokens rev_hyp(hyp.rbegin(), hyp.rend());
  std::vector<std::vector<Cost>> backward(m + 1);
  {
    std::vector<Cost> row = origin_row(n, 0);
    backward[m].assign(n + 1, kInf);
    backward[m][n] = 0;
    for (std::size_t k = m; k-- > 0;) {
      Tokens rev_ref(refs[k].rbegin(), refs[k].rend());
      row = extend(row, rev_hyp, rev_ref);
      backward[k].assign(n + 1, kInf);
      for (std::size_t j = 0; j <= n; ++j) backward[k][j] = row[n - j];
    }
  }
  const Cost total = backward[0][0];

  // Greedy reconstruction: the earliest boundary that still admits an
  // optimal completion, segment by segment.
  std::size_t begin = 0;
  Cost spent = 0;
  for (std::size_t k = 0; k < m; ++k) {
    const auto row = extend(origin_row(n, begin), hyp, refs[k], begin);
    std::size_t end = n;
    if (k + 1 < m) {
      end = begin;
      while (end <= n && spent + row[end] + backward[k + 1][end] != total) ++end;
    }
    out.spans.push_back({begin, end});
    out.distances.push_back(row[end]);
    spent += row[end];
    begin = end;
  }
  out.total_distance = total;
  return out;
}

Tokens split_tokens(const std::string& text) {
  Tokens out;
  std::istringstream in(text);
  std::string token;
  while (in >> token) out.push_back(token);
  return out;
}

namespace {

nlohmann::json to_json(const LengthStats& s) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& b : s.histogram) hist.push_back({{"bin_start", b.start}, {"count", b.count}});
  return {{"count", s.count},         {"total_frames", s.total_frames}, {"mean_seconds", s.mean},
          {"median_seconds", s.median}, {"mode_bin_seconds", s.mode_bin}, {"bin_width_seconds", s.bin_width},
          {"histogram", hist}};
}

}  // namespace

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json j;
  if (report.frame) {
    const auto& f = *report.frame;
    j["frame"] = {{"precision", f.precision},
                  {"recall", f.recall},
                  {"f1", f.f1},
                  {"true_positives", f.true_positives},
                  {"false_positives", f.false_positives},
                  {"false_negatives", f.false_negatives},
                  {"zero_division", f.zero_division}};
  }
  const auto& o = report.overlap;
  j["overlap"] = {{"iou", o.iou},
                  {"intersection_frames", o.intersection_frames},
                  {"union_frames", o.union_frames},
                  {"over_segmented", o.over_segmented},
                  {"under_segmented", o.under_segmented}};
  j["hypothesis_lengths"] = to_json(report.hyp_lengths);
  j["reference_lengths"] = to_json(report.ref_lengths);
  return j;
}

std::string summary_csv(const EvalReport& report) {
  std::string csv = "metric,value\n";
  auto row = [&csv](std::string_view key, auto value) { csv += fmt::format("{},{}\n", key, value); };
  if (report.frame) {
    row("frame_precision", report.frame->precision);
    row("frame_recall", report.frame->recall);
    row("frame_f1", report.frame->f1);
  }
  row("iou", report.overlap.iou);
  row("over_segmented", report.overlap.over_segmented);
  row("under_segmented", report.overlap.under_segmented);
  row("hyp_count", report.hyp_lengths.count);
  row("hyp_mean_seconds", report.hyp_lengths.mean);
  row("hyp_median_seconds", report.hyp_lengths.median);
  row("hyp_mode_bin_seconds", report.hyp_lengths.mode_bin);
  row("ref_count", report.ref_lengths.count);
  row("ref_mean_seconds", report.ref_lengths.mean);
  row("ref_median_seconds", report.ref_lengths.median);
  row("ref_mode_bin_seconds", report.ref_lengths.mode_bin);
  return csv;
}

std::string histogram_csv(const LengthStats& stats) {
  std::string csv = "bin_start,count\n";
  for (const auto& b : stats.histogram) csv += fmt::format("{},{}\n", b.start, b.count);
  return csv;
}

}  // namespace probseg
