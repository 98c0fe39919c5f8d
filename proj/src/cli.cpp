#include "greenedge/cli.hpp"

#include "greenedge/config.hpp"
#include "greenedge/error.hpp"
#include "greenedge/simulator.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace greenedge {

namespace fs = std::filesystem;

namespace {

struct Invocation {
  std::string              config_path;
  std::string              out_dir = "out";
  std::vector<std::string> overrides;
  bool                     oracle_forecast = false;
  std::vector<std::string> policies = {"enaam", "reactive", "no_management"};
};

ExperimentConfig resolveConfig(const Invocation& aInv) {
  const auto myBase =
      aInv.config_path.empty() ? ExperimentConfig{} : loadConfig(aInv.config_path);
  return applyOverrides(myBase, aInv.overrides);
}

fs::path prepareOut(const Invocation& aInv) {
  const fs::path myDir(aInv.out_dir);
  std::error_code myErr;
  fs::create_directories(myDir, myErr);
  if (myErr or not fs::is_directory(myDir)) {
    throw RuntimeError("cannot create output directory " + myDir.string());
  }
  return myDir;
}

void genTraces(const Invocation& aInv) {
  const auto myConfig = resolveConfig(aInv);
  const auto myTraces = buildTraces(myConfig);
  const auto myDir    = prepareOut(aInv);
  saveTrace(myDir / "load.csv", myTraces.load);
  saveTrace(myDir / "energy.csv", myTraces.energy);
  std::cerr << "wrote " << myTraces.load.size() << " slots to "
            << (myDir / "load.csv").string() << " and "
            << (myDir / "energy.csv").string() << '\n';
}

void trainModels(const Invocation& aInv) {
  const auto myConfig = resolveConfig(aInv);
  const auto myTraces = buildTraces(myConfig);
  const auto myDir    = prepareOut(aInv);
  const auto n        = myTraces.load.size();
  const auto myEnd    = myConfig.eval_end == 0 ? n : myConfig.eval_end;
  if (myConfig.eval_begin >= myEnd or myEnd > n) {
    throw ValidationError("evaluation range does not fit the traces");
  }

  std::ofstream myEval(myDir / "forecast_eval.csv");
  if (not myEval) {
    throw RuntimeError("cannot write " + (myDir / "forecast_eval.csv").string());
  }
  myEval << std::setprecision(17)
         << "series,horizon,rmse,persistence_rmse,origins\n";
  nlohmann::json mySummary = nlohmann::json::object();
  for (const auto& [myName, myTrace] :
       {std::pair<std::string, const Trace*>{"load", &myTraces.load},
        std::pair<std::string, const Trace*>{"energy", &myTraces.energy}}) {
    std::cerr << "training " << myName << " forecaster\n";
    const auto myResult = trainSeries(myConfig, *myTrace);
    saveModel(myDir / (myName + "_model.json"), myResult.model);
    const auto myScore =
        evaluateHorizons(myResult.model, myTrace->values(), myConfig.eval_begin,
                         myEnd, myConfig.llc.horizon);
    for (std::size_t k = 0; k < myScore.rmse.size(); ++k) {
      myEval << myName << ',' << k + 1 << ',' << myScore.rmse[k] << ','
             << myScore.persistence_rmse[k] << ',' << myScore.origins << '\n';
    }
    mySummary[myName] = {{"initial_train_loss", myResult.initial_train_loss},
                         {"train_loss", myResult.train_loss},
                         {"validation_loss", myResult.validation_loss},
                         {"best_epoch", myResult.best_epoch},
                         {"rmse", myScore.rmse},
                         {"persistence_rmse", myScore.persistence_rmse}};
  }
  std::ofstream mySummaryFile(myDir / "train_summary.json");
  mySummaryFile << mySummary.dump(2) << '\n';
}

std::vector<std::pair<double, double>> hourly(const std::vector<double>& aValues) {
  std::vector<std::pair<double, double>> myRows;
  for (std::size_t h = 0; h < aValues.size(); ++h) {
    if (std::isfinite(aValues[h])) {
      myRows.emplace_back(static_cast<double>(h), aValues[h]);
    }
  }
  return myRows;
}

void simulate(const Invocation& aInv) {
  const auto myConfig = resolveConfig(aInv);
  RunOptions myOptions;
  myOptions.oracle_forecast = aInv.oracle_forecast;
  const auto myReport = run(myConfig, myOptions);
  const auto myDir    = prepareOut(aInv);
  saveConfig(myDir / "config.json", myConfig);
  writeReportCsv(myDir / "report.csv", myReport);
  writeReportJson(myDir / "summary.json", myReport);
  writeDat(myDir / "hourly_savings.dat", hourly(myReport.hourly_savings));
  std::cerr << toString(myConfig.policy) << ": mean savings "
            << myReport.mean_savings << "% over " << myReport.slots.size()
            << " slots\n";
}

void compareCmd(const Invocation& aInv) {
  const auto myConfig = resolveConfig(aInv);
  std::vector<ExperimentConfig> myConfigs;
  for (const auto& p : aInv.policies) {
    auto c   = myConfig;
    c.policy = policyFromString(p);
    myConfigs.push_back(std::move(c));
  }
  RunOptions myOptions;
  myOptions.oracle_forecast = aInv.oracle_forecast;
  const auto myRows = compare(myConfigs, myOptions);
  const auto myDir  = prepareOut(aInv);
  writeComparisonCsv(myDir / "comparison.csv", myRows);
  for (const auto& r : myRows) {
    std::cerr << std::left << std::setw(14) << toString(r.policy)
              << " savings " << std::fixed << std::setprecision(2)
              << r.mean_savings << "% (reference " << r.reference_savings
              << "%)\n";
  }
}

void plotData(const Invocation& aInv) {
  auto myConfig = resolveConfig(aInv);
  RunOptions myOptions;
  myOptions.oracle_forecast = aInv.oracle_forecast;
  myConfig.policy           = Policy::Enaam;
  const auto myEnaam        = run(myConfig, myOptions);
  myConfig.policy           = Policy::Reactive;
  const auto myReactive     = run(myConfig, myOptions);
  const auto myDir          = prepareOut(aInv);

  // Hours since the start of the evaluation range.
  std::vector<std::pair<double, double>> myLoad, myLoadHat, myEnergy, myEnergyHat;
  const auto myStart = myEnaam.slots.front().slot;
  const auto mySlotHours =
      24.0 / myConfig.traces.load.synth.slots_per_day;
  for (const auto& m : myEnaam.slots) {
    const auto x = static_cast<double>(m.slot - myStart) * mySlotHours;
    myLoad.emplace_back(x, m.load_actual);
    myEnergy.emplace_back(x, m.energy_actual);
    if (not m.load_forecast.empty()) {
      myLoadHat.emplace_back(x, m.load_forecast.front());
      myEnergyHat.emplace_back(x, m.energy_forecast.front());
    }
  }
  writeDat(myDir / "load_actual.dat", myLoad);
  writeDat(myDir / "load_forecast.dat", myLoadHat);
  writeDat(myDir / "energy_actual.dat", myEnergy);
  writeDat(myDir / "energy_forecast.dat", myEnergyHat);
  writeDat(myDir / "savings_enaam.dat", hourly(myEnaam.hourly_savings));
  writeDat(myDir / "savings_reactive.dat", hourly(myReactive.hourly_savings));
}

void addCommon(CLI::App& aCmd, Invocation& aInv) {
  aCmd.add_option("--config", aInv.config_path, "experiment config (JSON)");
  aCmd.add_option("--out", aInv.out_dir, "output directory")
      ->capture_default_str();
  aCmd.add_option("overrides", aInv.overrides,
                  "dotted.key=value config overrides");
}

} // namespace

int runCli(const int argc, const char* const* argv) {
  CLI::App myApp{"Energy-aware edge network management simulator", "greenedge"};
  myApp.require_subcommand(1);
  Invocation myInv;

  auto* myGen = myApp.add_subcommand("gen-traces", "write load.csv and energy.csv");
  addCommon(*myGen, myInv);
  auto* myTrain = myApp.add_subcommand(
      "train", "train both forecasters and score them per horizon step");
  addCommon(*myTrain, myInv);
  auto* mySim = myApp.add_subcommand("simulate", "run the configured policy");
  addCommon(*mySim, myInv);
  mySim->add_flag("--oracle-forecast", myInv.oracle_forecast,
                  "use the true future trace values as forecasts");
  auto* myCmp = myApp.add_subcommand(
      "compare", "run several policies on the same traces");
  addCommon(*myCmp, myInv);
  myCmp->add_flag("--oracle-forecast", myInv.oracle_forecast,
                  "use the true future trace values as forecasts");
  myCmp->add_option("--policies", myInv.policies, "policies to compare")
      ->delimiter(',')
      ->capture_default_str();
  auto* myPlot = myApp.add_subcommand(
      "plot-data", "write two-column .dat files of traces, forecasts, savings");
  addCommon(*myPlot, myInv);
  myPlot->add_flag("--oracle-forecast", myInv.oracle_forecast,
                   "use the true future trace values as forecasts");

  try {
    myApp.parse(argc, argv);
  } catch (const CLI::CallForHelp& aErr) {
    std::cout << myApp.help();
    return kExitOk;
  } catch (const CLI::ParseError& aErr) {
    std::cerr << "error: " << aErr.what() << "\n\n" << myApp.help();
    return kExitValidation;
  }

  try {
    if (myGen->parsed()) {
      genTraces(myInv);
    } else if (myTrain->parsed()) {
      trainModels(myInv);
    } else if (mySim->parsed()) {
      simulate(myInv);
    } else if (myCmp->parsed()) {
      compareCmd(myInv);
    } else {
      plotData(myInv);
    }
  } catch (const ValidationError& aErr) {
    std::cerr << "error: " << aErr.what() << '\n';
    return kExitValidation;
  } catch (const ParseError& aErr) {
    std::cerr << "error: " << aErr.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& aErr) {
    std::cerr << "runtime error: " << aErr.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

} // namespace greenedge
