#include "probseg/smoothing.hpp"

#include <algorithm>

#include "probseg/errors.hpp"

namespace probseg {
namespace {

// The running sum is rebuilt from scratch at this interval to bound
// floating-point drift on hour-long streams.
constexpr std::size_t kResumEvery = 4096;

}  // namespace

ProbStream moving_average(const ProbStream& stream, SmoothingConfig cfg) {
  if (cfg.n_ma < 0) throw InvalidArgument("moving_average: n_ma must be >= 0");
  if (cfg.n_ma <= 1 || stream.empty()) return stream;

  const auto& in = stream.probs;
  const auto window = static_cast<std::size_t>(cfg.n_ma);
  const auto [lo_it, hi_it] = std::minmax_element(in.begin(), in.end());
  const float lo = *lo_it;
  const float hi = *hi_it;

  ProbStream out = stream;
  double sum = 0.0;
  for (std::size_t i = 0; i < in.size(); ++i) {
    const std::size_t first = i + 1 >= window ? i + 1 - window : 0;
    if (i % kResumEvery == 0) {
      sum = 0.0;
      for (std::size_t k = first; k <= i; ++k) sum += in[k];
    } else {
      sum += in[i];
      if (first > 0) sum -= in[first - 1];
    }
    const auto mean = static_cast<float>(sum / static_cast<double>(i - first + 1));
    out.probs[i] = std::clamp(mean, lo, hi);
  }
  return out;
}

}  // namespace probseg
