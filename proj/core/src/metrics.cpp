#include "vnode/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "vnode/error.hpp"
#include "vnode/identity.hpp"

namespace vnode {

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::asr: return "asr";
    case Stage::translate_text: return "translate_text";
    case Stage::synth_speech: return "synth_speech";
    case Stage::ledger_commit: return "ledger_commit";
    case Stage::end_to_end: return "end_to_end";
    case Stage::login_to_timeline: return "login_to_timeline";
  }
  return "unknown";
}

std::optional<Stage> parse_stage(std::string_view name) {
  for (auto s : kAllStages) {
    if (stage_name(s) == name) return s;
  }
  return std::nullopt;
}

double nearest_rank(std::span<const double> sorted, double p) {
  if (sorted.empty()) return 0.0;
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

StageStats summarize(std::vector<double> values) {
  StageStats s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.p50_ms = nearest_rank(values, 50);
  s.p95_ms = nearest_rank(values, 95);
  s.mean_ms = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  return s;
}

Metrics::Metrics(std::size_t capacity_per_stage) : capacity_(capacity_per_stage), started_(system_now_ms()) {
  if (capacity_ == 0) fail(Errc::invalid_argument, "metrics capacity must be positive");
}

void Metrics::record_stage(const StageTiming& timing) {
  if (!(timing.duration_ms >= 0.0)) fail(Errc::invalid_argument, "stage duration must be non-negative");
  std::lock_guard lk(mu_);
  auto& ring = rings_[timing.stage];
  if (ring.size() == capacity_) ring.pop_front();
  ring.push_back(timing);
}

void Metrics::record_stage(Stage stage, double duration_ms) {
  record_stage(StageTiming{stage, duration_ms, system_now_ms()});
}

void Metrics::record_cost(TxKind kind, Wei cost) {
  std::lock_guard lk(mu_);
  auto& [count, total] = costs_[kind];
  ++count;
  total += cost;
}

MetricsReport Metrics::report() const {
  std::lock_guard lk(mu_);
  MetricsReport r;
  r.window_start = started_;
  for (const auto& [stage, ring] : rings_) {
    if (ring.empty()) continue;
    std::vector<double> values;
    values.reserve(ring.size());
    for (const auto& t : ring) values.push_back(t.duration_ms);
    r.stages[stage] = summarize(std::move(values));
  }
  for (const auto& [kind, acc] : costs_) r.costs[kind] = {acc.first, acc.second / acc.first};
  return r;
}

std::vector<StageTiming> Metrics::samples() const {
  std::lock_guard lk(mu_);
  std::vector<StageTiming> out;
  for (const auto& [stage, ring] : rings_) out.insert(out.end(), ring.begin(), ring.end());
  return out;
}

std::string samples_to_csv(std::span<const StageTiming> samples) {
  std::ostringstream out;
  out << "stage,duration_ms,at\n";
  out << std::setprecision(17);
  for (const auto& s : samples) out << stage_name(s.stage) << ',' << s.duration_ms << ',' << s.at << '\n';
  return out.str();
}

}  // namespace vnode
