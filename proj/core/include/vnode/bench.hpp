#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "vnode/lang.hpp"
#include "vnode/metrics.hpp"

namespace vnode {

struct BenchOptions {
  std::string server = "http://127.0.0.1:8080";
  std::size_t posts = 10;
  /// (author language, follower language); each post cycle runs every pair.
  std::vector<std::pair<LanguageCode, LanguageCode>> pairs;
  std::uint64_t clip_ms = 5000;
};

/// One create-then-first-view cycle.
struct BenchCycle {
  double end_to_end_ms = 0.0;
  std::vector<double> commit_ms;
};

struct BenchResult {
  MetricsReport report;
  std::vector<StageTiming> samples;
  std::vector<BenchCycle> cycles;
  std::size_t failures = 0;
  std::vector<std::string> errors;
};

/// Drives `posts` full cycles through the HTTP API of a running node:
/// upload as the author, then fetch the audio as a follower whose language
/// differs. end_to_end runs from upload start to translated audio received;
/// ledger_commit and engine stages come from Server-Timing headers.
/// login_to_timeline runs from a completed login to a received timeline page.
/// Node errors are counted, not thrown, except for setup failures.
BenchResult run_bench(const BenchOptions& options);

/// Parses "eng:fra"; throws unsupported_language or invalid_argument.
std::pair<LanguageCode, LanguageCode> parse_lang_pair(std::string_view text);

/// Our figures next to the published reference values (reference only, never
/// asserted).
std::string reference_table(const BenchResult& result);

/// "asr;dur=1.5, ledger_commit;dur=0.2" -> timings; unknown names skipped.
std::vector<std::pair<Stage, double>> parse_server_timing(std::string_view header);

}  // namespace vnode
