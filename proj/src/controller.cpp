#include "greenedge/controller.hpp"

#include "greenedge/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <tuple>
#include <unordered_map>

namespace greenedge {

namespace {

using Commands = std::array<SiteCommand, kMaxSites>;
using Key      = std::array<std::uint32_t, kMaxSites>;

struct KeyHash {
  std::size_t operator()(const Key& aKey) const noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto v : aKey) {
      h ^= v;
      h *= 0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

Key keyOf(const Commands& aCommands, const std::size_t aSites) {
  Key myKey{};
  for (std::size_t i = 0; i < aSites; ++i) {
    const auto& c = aCommands[i];
    myKey[i]      = (static_cast<std::uint32_t>(c.bs_on) << 30) |
               (static_cast<std::uint32_t>(c.n_vm) << 12) |
               static_cast<std::uint32_t>(c.n_drv);
  }
  return myKey;
}

// Feasible commands for one site, ordered off first, then by VM and driver
// count.
std::vector<SiteCommand> siteOptions(const SiteCommand& aCurrent,
                                     const SiteConfig&  aConfig,
                                     const LlcConfig&   aLlc) {
  auto myLo = 0;
  auto myHi = aConfig.k_max;
  if (aLlc.prune) {
    myLo = std::max(0, aCurrent.n_vm - aLlc.max_vm_delta);
    myHi = std::min(aConfig.k_max, aCurrent.n_vm + aLlc.max_vm_delta);
  }
  std::vector<SiteCommand> myOptions;
  for (const bool myOn : {false, true}) {
    for (int myVm = myLo; myVm <= myHi; ++myVm) {
      for (int myDrv = 0; myDrv <= aConfig.d_max; ++myDrv) {
        const SiteCommand myCmd{myOn, myVm, myDrv};
        if (not isFeasible(myCmd, aConfig)) {
          continue;
        }
        if (aLlc.min_drivers and myDrv != (myVm > 0 ? 1 : 0)) {
          continue;
        }
        myOptions.push_back(myCmd);
      }
    }
  }
  return myOptions;
}

struct Value {
  double violation = 0;
  double cost      = 0;
};

struct Entry {
  Value    value;
  Commands best{};
  bool     found = false;
};

class Search {
 public:
  Search(std::span<const ForecastSlot> aForecasts,
         const CostWeights&            aWeights,
         const LlcConfig&              aLlc,
         const SiteConfig&             aConfig)
      : theWeights(aWeights)
      , theLlc(aLlc)
      , theConfig(aConfig)
      , theSites(aConfig.sites())
      , theMemo(aForecasts.size()) {
    for (const auto& f : aForecasts) {
      theOffered.push_back(offeredLoads(f.load, theConfig));
    }
  }

  const Entry& solve(const std::size_t aDepth, const Commands& aCurrent) {
    const auto myKey = keyOf(aCurrent, theSites);
    auto&      myMap = theMemo[aDepth];
    if (const auto it = myMap.find(myKey); it != myMap.end()) {
      return it->second;
    }

    std::vector<std::vector<SiteCommand>> myOptions(theSites);
    for (std::size_t i = 0; i < theSites; ++i) {
      myOptions[i] = siteOptions(aCurrent[i], theConfig, theLlc);
    }

    Entry                         myEntry;
    Commands                      myNext{};
    std::array<double, kMaxSites> myServed{};
    std::array<std::size_t, kMaxSites> myDigits{};
    const auto myLast = aDepth + 1 == theMemo.size();

    while (true) {
      for (std::size_t i = 0; i < theSites; ++i) {
        myNext[i] = myOptions[i][myDigits[i]];
      }
      const auto myEval = evaluateSlot(
          std::span<const SiteCommand>(aCurrent.data(), theSites),
          std::span<const SiteCommand>(myNext.data(), theSites),
          theOffered[aDepth], theConfig,
          std::span<double>(myServed.data(), theSites));
      ++theEvaluated;

      const auto myStepViolation =
          std::max(0.0, myEval.qos - theWeights.max_deficit);
      // A violating step cannot beat a violation-free sequence.
      if (not(myEntry.found and myEntry.value.violation == 0 and
              myStepViolation > 0)) {
        const auto myStepCost = slotCost(myEval.energy, myEval.qos, theWeights);
        Value      myChild;
        if (not myLast) {
          myChild = solve(aDepth + 1, myNext).value;
        }
        const Value myTotal{myStepViolation + myChild.violation,
                            myStepCost + myChild.cost};
        if (better(myTotal, myNext, myEntry)) {
          myEntry.value = myTotal;
          myEntry.best  = myNext;
          myEntry.found = true;
        }
      }

      // mixed-radix increment, last site fastest
      std::size_t i = theSites;
      while (i > 0) {
        --i;
        if (++myDigits[i] < myOptions[i].size()) {
          break;
        }
        myDigits[i] = 0;
        if (i == 0) {
          i = theSites + 1;
          break;
        }
      }
      if (i == theSites + 1) {
        break;
      }
    }

    if (not myEntry.found) {
      throw RuntimeError("LLC search found no feasible action");
    }
    return myMap.emplace(myKey, myEntry).first->second;
  }

  std::size_t evaluated() const noexcept {
    return theEvaluated;
  }

 private:
  bool better(const Value& aValue, const Commands& aNext, const Entry& aBest) const {
    if (not aBest.found) {
      return true;
    }
    if (aValue.violation != aBest.value.violation) {
      return aValue.violation < aBest.value.violation;
    }
    if (aValue.cost != aBest.value.cost) {
      return aValue.cost < aBest.value.cost;
    }
    return tieBreakLess(std::span<const SiteCommand>(aNext.data(), theSites),
                        std::span<const SiteCommand>(aBest.best.data(), theSites));
  }

  const CostWeights&                theWeights;
  const LlcConfig&                  theLlc;
  const SiteConfig&                 theConfig;
  const std::size_t                 theSites;
  std::vector<std::vector<double>>  theOffered;
  std::vector<std::unordered_map<Key, Entry, KeyHash>> theMemo;
  std::size_t                       theEvaluated = 0;
};

void checkForecast(const ForecastSlot& aForecast) {
  if (not(aForecast.load >= 0 and aForecast.load <= 1 and
          aForecast.energy >= 0 and aForecast.energy <= 1)) {
    throw ValidationError("forecasts must lie in [0,1]");
  }
}

} // namespace

void CostWeights::validate() const {
  if (not(eta >= 0 and eta <= 1)) {
    throw ValidationError("weights.eta must lie in [0,1]");
  }
  if (not(energy_norm > 0) or not std::isfinite(energy_norm)) {
    throw ValidationError("weights.energy_norm must be > 0");
  }
  if (not(max_deficit >= 0 and max_deficit <= 1)) {
    throw ValidationError("weights.max_deficit must lie in [0,1]");
  }
}

void LlcConfig::validate() const {
  if (horizon < 1) {
    throw ValidationError("llc.horizon must be >= 1");
  }
  if (max_vm_delta < 0) {
    throw ValidationError("llc.max_vm_delta must be >= 0");
  }
}

Prediction predictState(const SystemState&  aState,
                        const ControlInput& aInput,
                        const ForecastSlot& aForecast,
                        const SiteConfig&   aConfig) {
  checkForecast(aForecast);
  auto myStep = transition(aState, aInput, offeredLoads(aForecast.load, aConfig),
                           harvestedEnergy(aForecast.energy, aConfig), aConfig);
  return {std::move(myStep.next), myStep.energy, myStep.qos};
}

double slotCost(const SlotEnergy&  aEnergy,
                const double       aQos,
                const CostWeights& aWeights) {
  return (1.0 - aWeights.eta) * (aEnergy.total / aWeights.energy_norm) +
         aWeights.eta * aQos;
}

bool tieBreakLess(std::span<const SiteCommand> aLhs,
                  std::span<const SiteCommand> aRhs) {
  const auto mySummary = [](std::span<const SiteCommand> aCmds) {
    int myVm = 0, myDrv = 0, myAsleep = 0;
    for (const auto& c : aCmds) {
      myVm += c.n_vm;
      myDrv += c.n_drv;
      myAsleep += c.bs_on ? 0 : 1;
    }
    return std::make_tuple(myVm, myDrv, -myAsleep);
  };
  const auto myLhs = mySummary(aLhs);
  const auto myRhs = mySummary(aRhs);
  if (myLhs != myRhs) {
    return myLhs < myRhs;
  }
  return std::lexicographical_compare(
      aLhs.begin(), aLhs.end(), aRhs.begin(), aRhs.end(),
      [](const SiteCommand& a, const SiteCommand& b) {
        return std::make_tuple(a.bs_on, a.n_vm, a.n_drv) <
               std::make_tuple(b.bs_on, b.n_vm, b.n_drv);
      });
}

std::vector<ControlInput> enumerateActions(const SystemState& aState,
                                           const SiteConfig&  aConfig,
                                           const LlcConfig&   aLlc) {
  aState.validate(aConfig);
  aLlc.validate();
  std::vector<std::vector<SiteCommand>> myOptions;
  for (const auto& s : aState.sites) {
    myOptions.push_back(siteOptions({s.bs_on, s.n_vm, s.n_drv}, aConfig, aLlc));
  }
  std::vector<ControlInput> myActions{ControlInput{}};
  for (const auto& mySiteOptions : myOptions) {
    std::vector<ControlInput> myExtended;
    myExtended.reserve(myActions.size() * mySiteOptions.size());
    for (const auto& myPrefix : myActions) {
      for (const auto& myCmd : mySiteOptions) {
        auto myInput = myPrefix;
        myInput.sites.push_back(myCmd);
        myExtended.push_back(std::move(myInput));
      }
    }
    myActions = std::move(myExtended);
  }
  return myActions;
}

LlcDecision llcSelect(const SystemState&            aState,
                      std::span<const ForecastSlot> aForecasts,
                      const CostWeights&            aWeights,
                      const LlcConfig&              aLlc,
                      const SiteConfig&             aConfig) {
  aConfig.validate();
  aWeights.validate();
  aLlc.validate();
  aState.validate(aConfig);
  if (aForecasts.size() != static_cast<std::size_t>(aLlc.horizon)) {
    throw ValidationError("expected " + std::to_string(aLlc.horizon) +
                          " forecast slots, got " +
                          std::to_string(aForecasts.size()));
  }
  for (const auto& f : aForecasts) {
    checkForecast(f);
  }

  const auto  myConfig  = aConfig.normalizedBy(aWeights.energy_norm);
  auto        myWeights = aWeights;
  myWeights.energy_norm = 1.0;

  const auto n = aConfig.sites();
  Commands   myRoot{};
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = aState.sites[i];
    myRoot[i]     = {s.bs_on, s.n_vm, s.n_drv};
  }

  Search      mySearch(aForecasts, myWeights, aLlc, myConfig);
  const auto& myRootEntry = mySearch.solve(0, myRoot);

  LlcDecision myDecision;
  myDecision.plan.cost      = myRootEntry.value.cost;
  myDecision.plan.violation = myRootEntry.value.violation;
  myDecision.evaluated      = mySearch.evaluated();

  // Follow the memoised argmins and replay them for the predicted states.
  auto                          myNormState = aState;
  for (auto& s : myNormState.sites) {
    s.battery /= aWeights.energy_norm;
  }
  auto     myRawState = aState;
  Commands myCursor   = myRoot;
  for (std::size_t d = 0; d < aForecasts.size(); ++d) {
    const auto& myEntry = mySearch.solve(d, myCursor);
    ControlInput myInput;
    myInput.sites.assign(myEntry.best.begin(), myEntry.best.begin() + n);

    auto myNorm = predictState(myNormState, myInput, aForecasts[d], myConfig);
    myDecision.plan.step_costs.push_back(
        slotCost(myNorm.energy, myNorm.qos, myWeights));
    myDecision.plan.step_qos.push_back(myNorm.qos);
    myNormState = std::move(myNorm.state);

    auto myRaw = predictState(myRawState, myInput, aForecasts[d], aConfig);
    myRawState = myRaw.state;
    myDecision.plan.predicted_states.push_back(std::move(myRaw.state));
    myDecision.plan.inputs.push_back(std::move(myInput));
    myCursor = myEntry.best;
  }
  myDecision.action = myDecision.plan.inputs.front();
  return myDecision;
}

ControlInput reactivePolicy(const SystemState& aState,
                            const double       aCurrentLoad,
                            const SiteConfig&  aConfig) {
  if (not(aCurrentLoad >= 0 and aCurrentLoad <= 1)) {
    throw ValidationError("current load must lie in [0,1]");
  }
  aState.validate(aConfig);
  ControlInput myInput;
  for (const auto myOffered : offeredLoads(aCurrentLoad, aConfig)) {
    if (myOffered <= 0) {
      myInput.sites.push_back({false, 0, 0});
      continue;
    }
    // the epsilon keeps exact multiples such as 0.3 * 100 / 10 from rounding up
    const auto myNeeded = static_cast<int>(
        std::ceil(myOffered / aConfig.gamma_max - 1e-9));
    const auto myVm = std::clamp(myNeeded, 1, aConfig.k_max);
    myInput.sites.push_back({true, myVm, std::min(1, aConfig.d_max)});
  }
  return myInput;
}

ControlInput noManagementPolicy(const SiteConfig& aConfig) {
  ControlInput myInput;
  myInput.sites.assign(aConfig.sites(),
                       SiteCommand{true, aConfig.k_max, aConfig.d_max});
  return myInput;
}

} // namespace greenedge
