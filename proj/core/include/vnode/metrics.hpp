#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vnode/ledger.hpp"

namespace vnode {

enum class Stage { asr, translate_text, synth_speech, ledger_commit, end_to_end, login_to_timeline };

constexpr std::array<Stage, 6> kAllStages{Stage::asr,           Stage::translate_text, Stage::synth_speech,
                                          Stage::ledger_commit, Stage::end_to_end,     Stage::login_to_timeline};

std::string_view stage_name(Stage s);
std::optional<Stage> parse_stage(std::string_view name);

struct StageTiming {
  Stage stage = Stage::asr;
  double duration_ms = 0.0;
  std::int64_t at = 0;  // unix ms
};

struct StageStats {
  std::size_t count = 0;
  double p50_ms = 0.0;
  double p95_ms = 0.0;
  double mean_ms = 0.0;
};

struct CostStats {
  std::size_t count = 0;
  Wei mean_cost_wei = 0;
};

struct MetricsReport {
  std::int64_t window_start = 0;
  std::map<Stage, StageStats> stages;  // stages without samples are absent
  std::map<TxKind, CostStats> costs;
};

/// Nearest-rank percentile of an ascending-sorted sample; p in (0, 100].
double nearest_rank(std::span<const double> sorted, double p);
StageStats summarize(std::vector<double> values);

class Metrics {
 public:
  explicit Metrics(std::size_t capacity_per_stage = 10'000);

  /// Throws invalid_argument for negative durations.
  void record_stage(const StageTiming& timing);
  void record_stage(Stage stage, double duration_ms);
  void record_cost(TxKind kind, Wei cost);

  MetricsReport report() const;
  /// Retained samples, ordered by stage then arrival.
  std::vector<StageTiming> samples() const;

 private:
  std::size_t capacity_;
  std::int64_t started_;
  mutable std::mutex mu_;
  std::map<Stage, std::deque<StageTiming>> rings_;
  std::map<TxKind, std::pair<std::size_t, Wei>> costs_;
};

/// Records the enclosing scope's wall time on destruction.
class ScopedStage {
 public:
  ScopedStage(Metrics* metrics, Stage stage)
      : metrics_(metrics), stage_(stage), start_(std::chrono::steady_clock::now()) {}
  ~ScopedStage() {
    if (metrics_) metrics_->record_stage(stage_, elapsed_ms());
  }
  ScopedStage(const ScopedStage&) = delete;
  ScopedStage& operator=(const ScopedStage&) = delete;

  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  Metrics* metrics_;
  Stage stage_;
  std::chrono::steady_clock::time_point start_;
};

/// CSV with header "stage,duration_ms,at".
std::string samples_to_csv(std::span<const StageTiming> samples);

}  // namespace vnode
