#pragma once

// Length-sorted greedy batching and a quadratic decode-cost proxy, used to
// compare how segmentations with different length profiles load a batched
// translation backend.

#include <cstdint>
#include <vector>

#include "probseg/frame.hpp"

namespace probseg {

inline constexpr std::int64_t kDefaultTokenBudget = 100000;  // frames per batch

/// Cost of decoding one padded batch whose longest member has L frames:
/// alpha * L + beta * L^2. A proxy, not a measured runtime.
struct CostModel {
  double alpha = 1.0;
  double beta = 1e-3;
};

struct Batch {
  std::vector<std::size_t> members;  // indices into the input SegmentList
  FrameIndex longest = 0;
  FrameIndex padded_frames = 0;      // longest * members.size()
  FrameIndex real_frames = 0;
  double cost = 0;
};

struct BatchPlan {
  std::vector<Batch> batches;
  std::int64_t token_budget = kDefaultTokenBudget;
  FrameIndex padded_frames = 0;
  FrameIndex waste_frames = 0;
  double waste_ratio = 0;      // waste_frames / padded_frames
  double simulated_cost = 0;   // sum of batch costs
};

/// Sorts segments by length (longest first, ties by index) and fills each
/// batch while longest * size stays within the budget. Throws InvalidArgument
/// for an empty list or a single segment longer than the budget.
BatchPlan simulate_batches(const SegmentList& segs, std::int64_t token_budget = kDefaultTokenBudget,
                           CostModel cost = {});

}  // namespace probseg
