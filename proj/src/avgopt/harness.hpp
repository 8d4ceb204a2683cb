#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "avgopt/config.hpp"
#include "avgopt/fourroom.hpp"
#include "avgopt/learners.hpp"
#include "avgopt/option_model.hpp"
#include "avgopt/oracle.hpp"

namespace avgopt {

/// Everything a run needs that does not depend on the seed.
struct ExperimentContext {
  FourRoom env;
  OptionSet options;
  OptionModel models;        // exact models of `options`
  OracleSolution optimal;    // SMDP optimum over `options`
  OptionSet primitives;

  static ExperimentContext build(const ExperimentConfig& cfg);
};

struct SeriesPoint {
  std::size_t step = 0;
  std::optional<double> window_rate;  // empty for planning-only runs
  double rbar = 0.0;
  std::optional<double> greedy_rate;
};

struct RunRecord {
  std::size_t run_id = 0;
  std::uint64_t seed = 0;
  std::vector<SeriesPoint> series;
  double mean_reward = 0.0;  // over all steps
  double final_rbar = 0.0;
  std::optional<double> final_greedy_rate;
  Table final_q;
  std::optional<ModelError> model_error;
  UpdateStats update_stats;
};

/// One run with seed cfg.execution.seed + run_id.
RunRecord run_single(const ExperimentContext& ctx, const ExperimentConfig& cfg, std::size_t run_id);

/// cfg.execution.runs runs on up to cfg.execution.jobs threads, ordered by run_id.
std::vector<RunRecord> run_experiment(const ExperimentConfig& cfg);
std::vector<RunRecord> run_experiment(const ExperimentContext& ctx, const ExperimentConfig& cfg);

/// Mean reward of each complete window of `window` steps, in order.
std::vector<double> reward_rate_curve(const std::vector<double>& rewards, std::size_t window);

/// Exact reward rate (from the start state) of the greedy policy of each snapshot's Q.
std::vector<double> greedy_snapshot_eval(const std::vector<Snapshot>& snapshots,
                                         const OptionModel& models, StateId start);

struct SweepPoint {
  double alpha = 0.0;
  double beta = 0.0;
  double eta = 0.0;
  double mean = 0.0;  // of the per-run mean reward
  double std_error = 0.0;  // sample standard deviation / sqrt(runs)
  std::vector<RunRecord> records;
};

/// Cross product of cfg.sweep lists (an empty list keeps the params value),
/// iterated alpha-major, then beta, then eta.
std::vector<SweepPoint> sweep(const ExperimentConfig& cfg);

/// Mean windowed reward rate over the last tenth of a run's series (at
/// least one point); 0 when the series has no window rates.
double final_window_rate(const RunRecord& rec);

/// Mean and standard error of xs.
std::pair<double, double> mean_and_stderr(const std::vector<double>& xs);

/// Results CSV: run_id,seed,step,window_rate,rbar,greedy_rate.
void write_results(const std::vector<RunRecord>& records, std::ostream& os);
void write_sweep_summary(const std::vector<SweepPoint>& points, std::ostream& os);

}  // namespace avgopt
