#pragma once

#include "probseg/frame.hpp"

namespace probseg {

struct SmoothingConfig {
  FrameIndex n_ma = 0;  // window in frames; 0 and 1 leave the stream unchanged
};

/// Trailing simple moving average: out[i] is the mean of the (at most) n_ma
/// frames ending at i. Near the stream start the window is truncated and the
/// mean is taken over the frames actually present.
ProbStream moving_average(const ProbStream& stream, SmoothingConfig cfg);

}  // namespace probseg
