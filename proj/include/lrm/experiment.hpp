#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lrm/model_diagnostics.hpp"
#include "lrm/risk_metrics.hpp"

namespace lrm {

inline constexpr const char* kVersion = "0.1.0";
/// Overrides outputs.directory when set and nonempty.
inline constexpr const char* kOutputDirEnv = "LRM_OUTPUT_DIR";

struct ClaimSpec {
    double t1c = 0.0;
    double t2c = 0.0;
    double strike = 0.0;
};

enum class BinningState { Factors, Prices };
/// In-bin affine covariate: none, or the claim's running window average.
enum class BinControl { None, ClaimAverage };

/// Source of the increment covariance in the condition checks: the model's
/// exact one-step covariance, or the per-bin sample estimate.
enum class ConditionCovariance { Model, Sampled };

struct SolverSettings {
    double alpha = 1.0;
    std::size_t bins_per_dim = 10;
    std::size_t min_bin_count = 20;
    double pd_tolerance = 1e-10;
    double predictable_tolerance = 1e-10;
    BinningState state = BinningState::Factors;
    BinControl control = BinControl::ClaimAverage;
    BookValue book_value = BookValue::Nested;
    FixedPointSettings fixed_point;
    ConditionThresholds conditions;
    ConditionCovariance condition_covariance = ConditionCovariance::Model;
};

struct SimulationSettings {
    std::size_t n_paths = 100000;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
};

struct OutputSettings {
    std::string directory = "out";
    bool strategy_paths = true;
    /// Paths per hedge written to strategy_paths.csv and by the paths dump.
    std::size_t path_count = 20;
    bool paths_csv = false;
    bool prices_csv = false;
};

struct ExperimentConfig {
    std::string name = "experiment";
    double t_end = 0.1;
    std::size_t n_steps = 80;
    std::vector<OUFactorSpec> factors;
    /// Sorted by maturity after loading; labels are kept.
    std::vector<FuturesSpec> assets;
    /// Label sets; each yields one criteria row on the common paths.
    std::vector<std::vector<std::string>> hedges;
    ClaimSpec claim;
    SolverSettings solver;
    SimulationSettings simulation;
    OutputSettings outputs;

    void validate() const;
};

/// Parses and validates the JSON schema documented in the README. Unknown keys
/// are rejected.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Normalized echo of a config; parse_config(config_to_json(c)) reproduces c.
nlohmann::json config_to_json(const ExperimentConfig& c);

/// Assets named in `labels`, in maturity order.
std::vector<FuturesSpec> select_assets(const ExperimentConfig& c,
                                       const std::vector<std::string>& labels);

/// Partition builder for the configured binning state, with the claim's
/// running window average as in-bin control when configured.
PartitionBuilder make_partition_builder(const ExperimentConfig& c, const PathSet& paths,
                                        const ExtendedPriceSet& prices);

/// Fourth-moment heuristic for the inputs of the conditional moments, which
/// need finite fourth moments; a sample cannot prove that, so large sample
/// kurtosis relative to the path count is flagged instead.
struct IntegrabilityReport {
    double payoff_kurtosis = 0.0;
    /// Largest kurtosis of a one-step price increment over (k, asset).
    double max_increment_kurtosis = 0.0;
    std::size_t worst_k = 0;
    std::string worst_asset;
    /// sqrt((kurtosis - 1) / n), the relative standard error of a variance
    /// estimated from all n paths, at the worst increment.
    double variance_relative_se = 0.0;
};

IntegrabilityReport integrability_report(const ExtendedPriceSet& prices,
                                         std::span<const double> payoff);

/// variance_relative_se above which run_experiment adds a warning.
inline constexpr double kIntegrabilityWarning = 0.1;

struct HedgeOutcome {
    std::string label;
    std::vector<std::string> assets;
    CriteriaReport liquid;
    CriteriaReport classical;
    StrategySet strategy_liquid;
    StrategySet strategy_classical;
    ConditionReport conditions;
    BoundednessReport boundedness;
    std::size_t ridge_events_liquid = 0;
    std::size_t ridge_events_classical = 0;
    std::vector<SolverEvent> other_events;
    std::size_t min_bin_occupancy = 0;
    std::size_t max_bin_occupancy = 0;
    IntegrabilityReport integrability;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::uint64_t paths_checksum = 0;
    Estimate payoff;
    std::vector<HedgeOutcome> hedges;
    std::vector<std::string> warnings;
};

/// Simulates one PathSet and, per hedge, computes the illiquid strategy
/// (configured alpha) and the classical one (alpha = 0) on it; both are
/// evaluated under the configured liquidity.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Condition checks on price moments only, per hedge.
struct ConditionCheckResult {
    std::vector<std::string> hedges;
    std::vector<ConditionReport> reports;
    std::uint64_t paths_checksum = 0;
};
/// Condition suite on `moments` for the given assets, with the covariance
/// source chosen in the config.
ConditionReport conditions_for(const ExperimentConfig& config, const TimeGrid& grid,
                               std::span<const FuturesSpec> assets,
                               std::span<const StepMoments> moments);

ConditionCheckResult run_condition_check(const ExperimentConfig& config);

struct OracleCase {
    std::string name;
    bool pass = false;
    double max_error = 0.0;
    std::string detail;
};

struct OracleSuiteReport {
    std::vector<OracleCase> cases;
    bool all_pass() const;
};

/// Engine against the finite-market enumeration oracle for alpha in
/// {0, 0.5, 1, 2}, plus the closed-form identities.
OracleSuiteReport run_oracle_suite();

/// configured directory, or the environment override.
std::filesystem::path output_directory(const ExperimentConfig& config);

/// criteria.csv, strategy_paths.csv, diagnostics.json, manifest.json.
std::vector<std::filesystem::path> write_artifacts(const ExperimentResult& result,
                                                   const std::filesystem::path& dir);
std::vector<std::filesystem::path> write_condition_artifacts(const ExperimentConfig& config,
                                                             const ConditionCheckResult& result,
                                                             const std::filesystem::path& dir);
/// paths.csv (factors and spot) and prices.csv for the first path_count paths.
std::vector<std::filesystem::path> write_path_dump(const ExperimentConfig& config,
                                                   const std::filesystem::path& dir);

nlohmann::json to_json(const ConditionReport& report);
nlohmann::json to_json(const OracleSuiteReport& report);

}  // namespace lrm
