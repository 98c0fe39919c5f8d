#pragma once

#include "greenedge/controller.hpp"
#include "greenedge/energy.hpp"
#include "greenedge/lstm.hpp"
#include "greenedge/trace.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace greenedge {

enum class Policy { Enaam, Reactive, NoManagement };

std::string toString(Policy aPolicy);
Policy      policyFromString(const std::string& aName);

enum class ForecastMode {
  Train,  // train both LSTMs on the slots before the evaluation range
  Load,   // read trained models from disk
  Oracle, // use the true future trace values
};

std::string  toString(ForecastMode aMode);
ForecastMode forecastModeFromString(const std::string& aName);

// A trace comes from a CSV file when path is set, otherwise from the
// synthetic generator.
struct TraceSource {
  std::string path;
  SynthParams synth;

  bool operator==(const TraceSource&) const = default;
};

struct TracesConfig {
  TraceSource load;
  TraceSource energy;

  TracesConfig();

  bool operator==(const TracesConfig&) const = default;
};

struct ForecasterConfig {
  ForecastMode mode       = ForecastMode::Train;
  std::string  load_model;
  std::string  energy_model;
  int          hidden_dim = 32;
  int          window     = 24;
  TrainConfig  train;

  bool operator==(const ForecasterConfig&) const = default;
};

struct ExperimentConfig {
  std::uint64_t    seed   = 42;
  Policy           policy = Policy::Enaam;
  TracesConfig     traces;
  SiteConfig       site;
  LlcConfig        llc{3, 3, true, true};
  CostWeights      weights;
  ForecasterConfig forecaster;
  // Simulated slots [eval_begin, eval_end); eval_end 0 means the trace end.
  std::size_t      eval_begin = 14 * 48;
  std::size_t      eval_end   = 0;

  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

struct ExperimentTraces {
  Trace load;
  Trace energy;
};

// Loads or synthesizes both traces; they must have the same slotting.
ExperimentTraces buildTraces(const ExperimentConfig& aConfig);

struct Forecasters {
  LstmModel load;
  LstmModel energy;
};

/// Trains a forecaster for one series on the slots before eval_begin.
TrainResult trainSeries(const ExperimentConfig& aConfig, const Trace& aTrace);

// trainSeries on both series.
Forecasters trainForecasters(const ExperimentConfig& aConfig,
                             const ExperimentTraces& aTraces);

struct SlotMetrics {
  std::size_t         slot    = 0;
  double              hour    = 0;
  ControlInput        action;
  SlotEnergy          energy;          // energy-units
  std::vector<double> battery;         // energy-units, per site, end of slot
  double              offered = 0;     // MB
  double              served  = 0;     // MB
  double              qos     = 0;
  double              load_actual   = 0;
  double              energy_actual = 0;
  std::vector<double> load_forecast;   // length T when forecasts were used
  std::vector<double> energy_forecast;
  double              realized_cost  = 0; // slot_cost of what happened
  // slot_cost the controller predicted for this slot; NaN when no plan
  double              predicted_cost = 0;
  double              baseline_energy = 0; // no-management energy, same slot

  bool operator==(const SlotMetrics&) const = default;
};

struct RunReport {
  Policy                   policy = Policy::NoManagement;
  std::vector<SlotMetrics> slots;
  double                   total_energy         = 0;
  double                   total_grid_draw      = 0;
  double                   total_harvested_used = 0;
  double                   total_offered        = 0;
  double                   total_deficit        = 0; // MB
  double                   baseline_energy      = 0;
  double                   mean_qos             = 0;
  double                   mean_savings         = 0; // percent
  std::vector<double>      hourly_savings;           // 24 buckets, percent
  std::vector<double>      load_rmse;                // per horizon step
  std::vector<double>      energy_rmse;
};

struct RunOptions {
  // Force ForecastMode::Oracle regardless of the config.
  bool oracle_forecast = false;
  // Pre-trained models; skips training or loading when set.
  std::optional<Forecasters> forecasters;
};

/// Receding-horizon simulation of the configured policy on the real trace
/// values, next to the no-management baseline on the same slots. Throws
/// RuntimeError naming the slot when the history before a slot is shorter
/// than the forecaster window.
RunReport run(const ExperimentConfig& aConfig, const RunOptions& aOptions = {});

double savings(double aPolicyEnergy, double aBaselineEnergy);

struct ComparisonRow {
  Policy policy            = Policy::NoManagement;
  double mean_savings      = 0;
  double mean_qos          = 0;
  double total_grid_draw   = 0;
  double total_energy      = 0;
  double reference_savings = 0; // reference level for the policy, percent
};

/// One row per config, in order. Configs must share traces, seed and range.
std::vector<ComparisonRow> compare(const std::vector<ExperimentConfig>& aConfigs,
                                   const RunOptions& aOptions = {});

double referenceSavings(Policy aPolicy);

void writeReportCsv(const std::filesystem::path& aPath, const RunReport& aReport);
void writeReportJson(const std::filesystem::path& aPath, const RunReport& aReport);
void writeComparisonCsv(const std::filesystem::path&      aPath,
                        const std::vector<ComparisonRow>& aRows);
// Two-column "x value" file.
void writeDat(const std::filesystem::path& aPath,
              const std::vector<std::pair<double, double>>& aRows);

} // namespace greenedge
