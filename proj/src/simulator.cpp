#include "greenedge/simulator.hpp"

#include "greenedge/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace greenedge {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::ofstream openForWrite(const std::filesystem::path& aPath) {
  std::ofstream myStream(aPath);
  if (not myStream) {
    throw RuntimeError("cannot write " + aPath.string());
  }
  myStream << std::setprecision(17);
  return myStream;
}

std::string joinValues(const std::vector<double>& aValues) {
  std::ostringstream myStream;
  myStream << std::setprecision(17);
  for (std::size_t i = 0; i < aValues.size(); ++i) {
    myStream << (i > 0 ? ";" : "") << aValues[i];
  }
  return myStream.str();
}

Trace traceFrom(const TraceSource& aSource,
                const TraceKind    aKind,
                const std::uint64_t aSeed) {
  if (not aSource.path.empty()) {
    return loadTrace(aSource.path, aKind,
                     86400.0 / aSource.synth.slots_per_day,
                     aSource.synth.start_hour);
  }
  return aKind == TraceKind::Load ? generateLoad(aSource.synth, aSeed)
                                  : generateEnergy(aSource.synth, aSeed);
}

// Scales a normalized slot back to energy-units keeping the component sum
// and the harvested/grid split exact.
SlotEnergy toEnergyUnits(const SlotEnergy& aEnergy, const double aNorm) {
  SlotEnergy e;
  e.bs        = aEnergy.bs * aNorm;
  e.vm        = aEnergy.vm * aNorm;
  e.drivers   = aEnergy.drivers * aNorm;
  e.switching = aEnergy.switching * aNorm;
  e.total     = e.bs + e.vm + e.drivers + e.switching;
  const auto myGrid = std::clamp(aEnergy.grid_draw * aNorm, 0.0, e.total);
  e.harvested_used  = e.total - myGrid;
  e.grid_draw       = e.total - e.harvested_used;
  return e;
}

struct Accumulator {
  double energy = 0;
  double base   = 0;
};

} // namespace

std::string toString(const Policy aPolicy) {
  switch (aPolicy) {
    case Policy::Enaam:
      return "enaam";
    case Policy::Reactive:
      return "reactive";
    case Policy::NoManagement:
      return "no_management";
  }
  throw ValidationError("invalid policy");
}

Policy policyFromString(const std::string& aName) {
  if (aName == "enaam") {
    return Policy::Enaam;
  } else if (aName == "reactive") {
    return Policy::Reactive;
  } else if (aName == "no_management") {
    return Policy::NoManagement;
  }
  throw ValidationError("unknown policy '" + aName +
                        "' (expected enaam, reactive or no_management)");
}

std::string toString(const ForecastMode aMode) {
  switch (aMode) {
    case ForecastMode::Train:
      return "train";
    case ForecastMode::Load:
      return "load";
    case ForecastMode::Oracle:
      return "oracle";
  }
  throw ValidationError("invalid forecast mode");
}

ForecastMode forecastModeFromString(const std::string& aName) {
  if (aName == "train") {
    return ForecastMode::Train;
  } else if (aName == "load") {
    return ForecastMode::Load;
  } else if (aName == "oracle") {
    return ForecastMode::Oracle;
  }
  throw ValidationError("unknown forecaster mode '" + aName +
                        "' (expected train, load or oracle)");
}

TracesConfig::TracesConfig() {
  load.synth.day_count    = 21;
  energy.synth            = load.synth;
  energy.synth.mean       = 0.5;
  energy.synth.amplitude  = 0.9;
  energy.synth.peak_hour  = 13.0;
}

void ExperimentConfig::validate() const {
  traces.load.synth.validate(TraceKind::Load);
  traces.energy.synth.validate(TraceKind::Energy);
  site.validate();
  llc.validate();
  weights.validate();
  forecaster.train.validate();
  if (forecaster.hidden_dim < 1 or forecaster.window < 1) {
    throw ValidationError("forecaster.hidden_dim and window must be >= 1");
  }
  if (eval_end != 0 and eval_end <= eval_begin) {
    throw ValidationError("eval.end must be 0 or greater than eval.begin");
  }
}

ExperimentTraces buildTraces(const ExperimentConfig& aConfig) {
  auto myLoad   = traceFrom(aConfig.traces.load, TraceKind::Load, aConfig.seed);
  auto myEnergy = traceFrom(aConfig.traces.energy, TraceKind::Energy,
                            aConfig.seed + 1);
  if (myLoad.size() != myEnergy.size() or
      myLoad.slotDuration() != myEnergy.slotDuration()) {
    throw ValidationError("load and energy traces differ in length or slotting");
  }
  return {std::move(myLoad), std::move(myEnergy)};
}

TrainResult trainSeries(const ExperimentConfig& aConfig, const Trace& aTrace) {
  const auto& f = aConfig.forecaster;
  if (aConfig.eval_begin <= static_cast<std::size_t>(f.window) + 1) {
    throw ValidationError(
        "inline training needs more than window + 1 slots before eval.begin");
  }
  const auto& v = aTrace.values();
  const std::span<const double> myHead(
      v.data(), std::min(aConfig.eval_begin, v.size()));
  return train(makeWindows(myHead, f.window), f.train, f.hidden_dim);
}

Forecasters trainForecasters(const ExperimentConfig& aConfig,
                             const ExperimentTraces& aTraces) {
  return {trainSeries(aConfig, aTraces.load).model,
          trainSeries(aConfig, aTraces.energy).model};
}

double savings(const double aPolicyEnergy, const double aBaselineEnergy) {
  if (not(aBaselineEnergy > 0)) {
    throw ValidationError("baseline energy must be > 0 to compute savings");
  }
  return 100.0 * (1.0 - aPolicyEnergy / aBaselineEnergy);
}

double referenceSavings(const Policy aPolicy) {
  switch (aPolicy) {
    case Policy::Enaam:
      return 69.0;
    case Policy::Reactive:
      return 49.0;
    case Policy::NoManagement:
      return 0.0;
  }
  return 0.0;
}

RunReport run(const ExperimentConfig& aConfig, const RunOptions& aOptions) {
  aConfig.validate();
  const auto myMode =
      aOptions.oracle_forecast ? ForecastMode::Oracle : aConfig.forecaster.mode;
  const auto myUsesLstm =
      aConfig.policy == Policy::Enaam and myMode != ForecastMode::Oracle;

  std::vector<std::string> myFiles = {aConfig.traces.load.path,
                                      aConfig.traces.energy.path};
  if (myUsesLstm and myMode == ForecastMode::Load and not aOptions.forecasters) {
    myFiles.push_back(aConfig.forecaster.load_model);
    myFiles.push_back(aConfig.forecaster.energy_model);
    if (myFiles[2].empty() or myFiles[3].empty()) {
      throw ValidationError(
          "forecaster.mode load needs forecaster.load_model and energy_model");
    }
  }
  for (const auto& f : myFiles) {
    if (not f.empty() and not std::filesystem::is_regular_file(f)) {
      throw ValidationError("referenced file does not exist: " + f);
    }
  }

  const auto myTraces = buildTraces(aConfig);
  const auto n        = myTraces.load.size();
  const auto myBegin  = aConfig.eval_begin;
  const auto myEnd    = aConfig.eval_end == 0 ? n : aConfig.eval_end;
  if (myBegin >= myEnd or myEnd > n) {
    throw ValidationError("evaluation range [" + std::to_string(myBegin) +
                          ", " + std::to_string(myEnd) +
                          ") does not fit a trace of " + std::to_string(n) +
                          " slots");
  }

  std::optional<Forecasters> myModels = aOptions.forecasters;
  if (myUsesLstm and not myModels) {
    if (myMode == ForecastMode::Train) {
      myModels = trainForecasters(aConfig, myTraces);
    } else {
      myModels = Forecasters{loadModel(aConfig.forecaster.load_model),
                             loadModel(aConfig.forecaster.energy_model)};
    }
  }
  const auto myWindow =
      myUsesLstm ? static_cast<std::size_t>(std::max(
                       myModels->load.window, myModels->energy.window))
                 : std::size_t{0};

  // Everything runs in units of energy_norm; reports scale back.
  const auto myNorm    = aConfig.weights.energy_norm;
  const auto myConfig  = aConfig.site.normalizedBy(myNorm);
  auto       myWeights = aConfig.weights;
  myWeights.energy_norm = 1.0;
  const auto myHorizon  = static_cast<std::size_t>(aConfig.llc.horizon);
  const auto myAllOn    = noManagementPolicy(myConfig);

  auto myState = SystemState::allOn(myConfig);
  auto myBase  = myState;

  RunReport myReport;
  myReport.policy = aConfig.policy;
  std::vector<Accumulator> myHourly(24);
  double mySumEnergy = 0, mySumBase = 0, mySumGrid = 0, mySumUsed = 0;
  double mySumQos = 0;
  std::size_t myCounted = 0;

  std::vector<std::vector<double>> myLoadErr(myHorizon), myEnergyErr(myHorizon);
  std::vector<std::vector<double>> myLoadAct(myHorizon), myEnergyAct(myHorizon);

  const auto& myLoad   = myTraces.load.values();
  const auto& myEnergy = myTraces.energy.values();

  for (std::size_t t = myBegin; t < myEnd; ++t) {
    SlotMetrics m;
    m.slot           = t;
    m.hour           = myTraces.load.hourOf(t);
    m.load_actual    = myLoad[t];
    m.energy_actual  = myEnergy[t];
    m.predicted_cost = kNaN;

    ControlInput myAction;
    if (aConfig.policy == Policy::NoManagement) {
      myAction = myAllOn;
    } else if (aConfig.policy == Policy::Reactive) {
      myAction = reactivePolicy(myState, myLoad[t], myConfig);
    } else {
      if (t < myWindow) {
        throw RuntimeError("slot " + std::to_string(t) + ": history of " +
                           std::to_string(t) +
                           " slots is shorter than the forecaster window " +
                           std::to_string(myWindow));
      }
      std::vector<ForecastSlot> myForecasts(myHorizon);
      if (myUsesLstm) {
        try {
          const auto myL = forecastHorizon(
              myModels->load, std::span(myLoad.data(), t), aConfig.llc.horizon);
          const auto myH = forecastHorizon(
              myModels->energy, std::span(myEnergy.data(), t),
              aConfig.llc.horizon);
          for (std::size_t k = 0; k < myHorizon; ++k) {
            myForecasts[k] = {myL.means[k], myH.means[k]};
          }
        } catch (const ValidationError& aErr) {
          throw RuntimeError("slot " + std::to_string(t) + ": " + aErr.what());
        }
      } else {
        for (std::size_t k = 0; k < myHorizon; ++k) {
          const auto s   = std::min(t + k, n - 1);
          myForecasts[k] = {myLoad[s], myEnergy[s]};
        }
      }
      for (const auto& f : myForecasts) {
        m.load_forecast.push_back(f.load);
        m.energy_forecast.push_back(f.energy);
      }
      const auto myDecision = llcSelect(myState, myForecasts, myWeights,
                                        aConfig.llc, myConfig);
      myAction         = myDecision.action;
      m.predicted_cost = myDecision.plan.step_costs.front();

      for (std::size_t k = 0; k < myHorizon and t + k < n; ++k) {
        myLoadErr[k].push_back(myForecasts[k].load);
        myLoadAct[k].push_back(myLoad[t + k]);
        myEnergyErr[k].push_back(myForecasts[k].energy);
        myEnergyAct[k].push_back(myEnergy[t + k]);
      }
    }

    const auto myOffered = offeredLoads(myLoad[t], myConfig);
    const auto myHarvest = harvestedEnergy(myEnergy[t], myConfig);
    auto       myStep =
        transition(myState, myAction, myOffered, myHarvest, myConfig);
    auto myBaseStep =
        transition(myBase, myAllOn, myOffered, myHarvest, myConfig);

    m.realized_cost = slotCost(myStep.energy, myStep.qos, myWeights);
    m.action        = myAction;
    m.offered       = myStep.offered_total;
    m.served        = myStep.served_total;
    m.qos           = myStep.qos;
    m.energy        = toEnergyUnits(myStep.energy, myNorm);
    for (const auto& s : myStep.next.sites) {
      m.battery.push_back(
          std::min(s.battery * myNorm, aConfig.site.battery_capacity));
    }
    m.baseline_energy = myBaseStep.energy.total * myNorm;

    myReport.total_offered += myStep.offered_total;
    myReport.total_deficit +=
        std::max(0.0, myStep.offered_total - myStep.served_total);
    mySumEnergy += myStep.energy.total;
    mySumBase += myBaseStep.energy.total;
    mySumGrid += myStep.energy.grid_draw;
    mySumUsed += myStep.energy.harvested_used;
    mySumQos += myStep.qos;
    ++myCounted;
    auto& myBucket = myHourly[static_cast<std::size_t>(m.hour) % 24];
    myBucket.energy += myStep.energy.total;
    myBucket.base += myBaseStep.energy.total;

    myState = std::move(myStep.next);
    myBase  = std::move(myBaseStep.next);
    myReport.slots.push_back(std::move(m));
  }

  myReport.total_energy         = mySumEnergy * myNorm;
  myReport.baseline_energy      = mySumBase * myNorm;
  myReport.total_grid_draw      = mySumGrid * myNorm;
  myReport.total_harvested_used = mySumUsed * myNorm;
  if (myCounted > 0) {
    myReport.mean_qos     = mySumQos / static_cast<double>(myCounted);
    myReport.mean_savings = savings(mySumEnergy, mySumBase);
  }
  for (const auto& b : myHourly) {
    myReport.hourly_savings.push_back(b.base > 0 ? savings(b.energy, b.base)
                                                 : kNaN);
  }
  for (std::size_t k = 0; k < myHorizon; ++k) {
    if (not myLoadErr[k].empty()) {
      myReport.load_rmse.push_back(rmse(myLoadErr[k], myLoadAct[k]));
      myReport.energy_rmse.push_back(rmse(myEnergyErr[k], myEnergyAct[k]));
    }
  }
  return myReport;
}

std::vector<ComparisonRow> compare(const std::vector<ExperimentConfig>& aConfigs,
                                   const RunOptions&                    aOptions) {
  if (aConfigs.empty()) {
    throw ValidationError("compare needs at least one config");
  }
  const auto& myFirst = aConfigs.front();
  for (const auto& c : aConfigs) {
    if (not(c.traces == myFirst.traces) or c.seed != myFirst.seed or
        c.eval_begin != myFirst.eval_begin or c.eval_end != myFirst.eval_end) {
      throw ValidationError(
          "compared configs must share traces, seed and evaluation range");
    }
  }
  std::vector<ComparisonRow> myRows;
  for (const auto& c : aConfigs) {
    const auto myReport = run(c, aOptions);
    myRows.push_back({c.policy, myReport.mean_savings, myReport.mean_qos,
                      myReport.total_grid_draw, myReport.total_energy,
                      referenceSavings(c.policy)});
  }
  return myRows;
}

void writeReportCsv(const std::filesystem::path& aPath, const RunReport& aReport) {
  auto myStream = openForWrite(aPath);
  const auto mySites =
      aReport.slots.empty() ? std::size_t{0} : aReport.slots.front().action.sites.size();
  myStream << "slot,hour,offered_mb,served_mb,qos_deficit,energy_bs,"
              "energy_vm,energy_drivers,energy_switching,energy_total,"
              "harvested_used,grid_draw,baseline_energy,realized_cost,"
              "predicted_cost,load_actual,energy_actual,load_forecast,"
              "energy_forecast";
  for (std::size_t i = 0; i < mySites; ++i) {
    myStream << ",bs_on_" << i << ",n_vm_" << i << ",n_drv_" << i
             << ",battery_" << i;
  }
  myStream << '\n';
  for (const auto& m : aReport.slots) {
    myStream << m.slot << ',' << m.hour << ','
             << m.offered << ',' << m.served << ',' << m.qos << ','
             << m.energy.bs << ',' << m.energy.vm << ',' << m.energy.drivers
             << ',' << m.energy.switching << ',' << m.energy.total << ','
             << m.energy.harvested_used << ',' << m.energy.grid_draw << ','
             << m.baseline_energy << ',' << m.realized_cost << ','
             << m.predicted_cost << ',' << m.load_actual << ','
             << m.energy_actual << ',' << joinValues(m.load_forecast) << ','
             << joinValues(m.energy_forecast);
    for (std::size_t i = 0; i < m.action.sites.size(); ++i) {
      const auto& c = m.action.sites[i];
      myStream << ',' << (c.bs_on ? 1 : 0) << ',' << c.n_vm << ',' << c.n_drv
               << ',' << m.battery[i];
    }
    myStream << '\n';
  }
}

void writeReportJson(const std::filesystem::path& aPath,
                     const RunReport&             aReport) {
  const auto myNullable = [](const std::vector<double>& aValues) {
    nlohmann::json myArray = nlohmann::json::array();
    for (const auto v : aValues) {
      myArray.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json());
    }
    return myArray;
  };
  const nlohmann::json myDoc = {
      {"policy", toString(aReport.policy)},
      {"slots", aReport.slots.size()},
      {"total_energy", aReport.total_energy},
      {"baseline_energy", aReport.baseline_energy},
      {"total_grid_draw", aReport.total_grid_draw},
      {"total_harvested_used", aReport.total_harvested_used},
      {"total_offered_mb", aReport.total_offered},
      {"total_deficit_mb", aReport.total_deficit},
      {"mean_qos_deficit", aReport.mean_qos},
      {"mean_savings_pct", aReport.mean_savings},
      {"reference_savings_pct", referenceSavings(aReport.policy)},
      {"hourly_savings_pct", myNullable(aReport.hourly_savings)},
      {"load_rmse", aReport.load_rmse},
      {"energy_rmse", aReport.energy_rmse},
  };
  auto myStream = openForWrite(aPath);
  myStream << myDoc.dump(2) << '\n';
}

void writeComparisonCsv(const std::filesystem::path&      aPath,
                        const std::vector<ComparisonRow>& aRows) {
  auto myStream = openForWrite(aPath);
  myStream << "policy,mean_savings_pct,mean_qos_deficit,total_grid_draw,"
              "total_energy,reference_savings_pct\n";
  for (const auto& r : aRows) {
    myStream << toString(r.policy) << ',' << r.mean_savings << ','
             << r.mean_qos << ',' << r.total_grid_draw << ','
             << r.total_energy << ',' << r.reference_savings << '\n';
  }
}

void writeDat(const std::filesystem::path&                  aPath,
              const std::vector<std::pair<double, double>>& aRows) {
  auto myStream = openForWrite(aPath);
  for (const auto& [x, y] : aRows) {
    myStream << x << ' ' << y << '\n';
  }
}

} // namespace greenedge
