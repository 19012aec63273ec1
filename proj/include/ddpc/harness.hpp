#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ddpc/config.hpp"

namespace ddpc {

// Stream-id layout per Monte Carlo run: run i uses base stream i*kStreamsPerRun
// plus a fixed purpose offset; the online streams are shared by all variants
// of the same run.
inline constexpr uint64_t kStreamsPerRun = 8;
enum StreamPurpose : uint64_t {
    kStreamOfflineInput = 0,
    kStreamOfflineDisturbance = 1,
    kStreamOfflineNoise = 2,
    kStreamOnlineDisturbance = 3,
    kStreamOnlineNoise = 4,
};

/// Offline data collection from x0 = 0 under the configured excitation.
TrajectoryData collect_offline_data(const ScenarioConfig& cfg, uint64_t seed, int run_index);

/// Signal matrix + predictor for one data set (smm resolves per query and is
/// handled by the caller).
PredictorParams build_pipeline(const ScenarioConfig& cfg, const TrajectoryData& data);

struct RunOutcome {
    int run = 0;
    Variant variant = Variant::s_ddpc;
    Metrics metric;
    ClosedLoopLog log;
};

/// One closed-loop run of one variant; seeds derive from (seed, run_index).
RunOutcome run_single(const ScenarioConfig& cfg, const PredictorParams& params, uint64_t seed,
                      int run_index, Variant variant);

struct RunArtifacts {
    std::vector<RunOutcome> runs;  // ordered run-major, variant-minor
    std::string aggregate_path;
    std::string summary_path;
    std::string boxplot_path;
};

/**
 * Full campaign: per run, collect data, build the predictor once, and replay
 * the same online streams through all three variants. Runs execute in
 * parallel across seeds (capped by DDPC_THREADS); aggregation is a final
 * single-writer pass, so outputs are byte-identical across repetitions.
 */
RunArtifacts run_montecarlo(const ScenarioConfig& cfg);

/// Write Figure 1-3 style plot data from a completed artifacts directory.
void report(const ScenarioConfig& cfg);

/// Trajectory CSV with header t,u_0..,w_0..,y0_0..,y_0..
void write_trajectory_csv(const std::string& path, const TrajectoryData& data);
TrajectoryData read_trajectory_csv(const std::string& path, int n_u, int n_w, int n_y);

/// Closed-loop log CSV (t,u,y,y0,ybar0,cost,violation,slack,status).
void write_log_csv(const std::string& path, const ClosedLoopLog& log,
                   const OutputConstraints& oc, const ControlConfig& cfg);

/// Filter trace CSV (t,prior,posterior,measurement,variance per output).
void write_filter_trace_csv(const std::string& path, const ClosedLoopLog& log);

}  // namespace ddpc
