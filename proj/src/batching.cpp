#include "probseg/batching.hpp"

#include <algorithm>
#include <numeric>

#include <fmt/format.h>

#include "probseg/errors.hpp"

namespace probseg {

BatchPlan simulate_batches(const SegmentList& segs, std::int64_t token_budget, CostModel cost) {
  if (segs.empty()) throw InvalidArgument("simulate_batches: empty segment list");
  if (token_budget <= 0) throw InvalidArgument("simulate_batches: token budget must be positive");

  const auto& s = segs.segments;
  std::vector<std::size_t> order(s.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&s](std::size_t a, std::size_t b) { return s[a].length() > s[b].length(); });
  if (s[order.front()].length() > token_budget) {
    const auto k = order.front();
    throw InvalidArgument(fmt::format("segment {} [{}, {}) has {} frames, exceeding the token budget of {}", k,
                                      s[k].start, s[k].end, s[k].length(), token_budget));
  }

  BatchPlan plan;
  plan.token_budget = token_budget;
  auto close = [&](Batch& b) {
    b.padded_frames = b.longest * static_cast<FrameIndex>(b.members.size());
    const double len = static_cast<double>(b.longest);
    b.cost = cost.alpha * len + cost.beta * len * len;
    plan.padded_frames += b.padded_frames;
    plan.waste_frames += b.padded_frames - b.real_frames;
    plan.simulated_cost += b.cost;
    plan.batches.push_back(std::move(b));
  };

  Batch current;
  for (auto k : order) {
    const FrameIndex len = s[k].length();
    if (!current.members.empty() &&
        current.longest * static_cast<FrameIndex>(current.members.size() + 1) > token_budget) {
      close(current);
      current = Batch{};
    }
    if (current.members.empty()) current.longest = len;
    current.members.push_back(k);
    current.real_frames += len;
  }
  close(current);
  plan.waste_ratio = static_cast<double>(plan.waste_frames) / static_cast<double>(plan.padded_frames);
  return plan;
}

}  // namespace probseg
