#pragma once

// Command-line front end. run() parses arguments and dispatches to the
// subcommands: segment, synth, eval, align, slice, bench.
//
// Exit codes: 0 ok, 1 data error, 2 usage or configuration error.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "probseg/errors.hpp"
#include "probseg/segmenters.hpp"

namespace probseg::cli {

enum ExitCode : int { kOk = 0, kDataError = 1, kUsageError = 2 };

class UsageError : public Error {
 public:
  using Error::Error;
};

/// Options shared by the subcommands, settable from a flat key=value config
/// file and overridden by flags. Seconds everywhere.
struct Settings {
  SegmenterParams params;
  std::uint64_t seed = 1;
  int jobs = 1;
  double bin_width = 1.0;
  std::int64_t token_budget = 100000;
};

/// Keys: algorithm, max, min, thr, n_ma, lerp_min, lerp_max, seed, jobs,
/// bin_width, token_budget. Blank lines and '#' comments are ignored.
void apply_config_text(const std::string& text, Settings& settings);
void apply_config_value(const std::string& key, const std::string& value, Settings& settings);
/// Every key with its effective value, defaults filled in.
std::string show_config(const Settings& settings);

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. If any call throws,
/// the exception of the lowest failing index is rethrown after all finish.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace probseg::cli
