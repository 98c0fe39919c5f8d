#include "greenedge/energy.hpp"

#include "greenedge/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>

namespace greenedge {

namespace {

struct SiteEnergy {
  double bs        = 0;
  double vm        = 0;
  double drivers   = 0;
  double switching = 0;
};

SiteEnergy siteEnergy(const SiteCommand& aPrev,
                      const SiteCommand& aNext,
                      const double       aServed,
                      const SiteConfig&  aConfig) {
  SiteEnergy e;
  e.bs = aNext.bs_on ? aConfig.bs_active_power +
                           aConfig.bs_load_coeff * aServed / aConfig.lambda_max
                     : aConfig.bs_sleep_power;
  e.vm      = aNext.n_vm * aConfig.vm_idle + aConfig.vm_load_coeff * aServed;
  e.drivers = aNext.n_drv * aConfig.driver_power;
  e.switching =
      aConfig.vm_switch_cost * std::abs(aNext.n_vm - aPrev.n_vm) +
      aConfig.driver_tune_cost * std::abs(aNext.n_drv - aPrev.n_drv) +
      (aNext.bs_on and not aPrev.bs_on ? aConfig.bs_wake_cost : 0.0);
  return e;
}

// Splits aTotal into (used, grid) with used + grid == aTotal exactly in
// floating point, grid taken as close as possible to aGrid.
void splitExact(const double aTotal, double aGrid, double& aUsed, double& aOut) {
  aGrid = std::clamp(aGrid, 0.0, aTotal);
  aUsed = aTotal - aGrid;
  aOut  = aTotal - aUsed;
}

void checkSpans(const std::size_t aSites, const std::size_t aOther) {
  if (aSites != aOther) {
    throw ValidationError("per-site vectors have mismatched lengths");
  }
}

} // namespace

void SiteConfig::validate() const {
  if (not(gamma_max > 0)) {
    throw ValidationError("site.gamma_max must be > 0");
  }
  if (k_max < 0 or d_max < 0 or k_max > 1000 or d_max > 1000) {
    throw ValidationError("site.k_max and site.d_max must lie in [0, 1000]");
  }
  if (not(lambda_max > 0)) {
    throw ValidationError("site.lambda_max must be > 0");
  }
  if (not(k_max * gamma_max >= lambda_max)) {
    throw ValidationError(
        "site.k_max * site.gamma_max must cover site.lambda_max");
  }
  for (const auto v : {bs_active_power, bs_load_coeff, bs_sleep_power, vm_idle,
                       vm_load_coeff, driver_power, driver_tune_cost,
                       vm_switch_cost, bs_wake_cost, harvest_peak,
                       battery_capacity}) {
    if (not(v >= 0) or not std::isfinite(v)) {
      throw ValidationError("energy coefficients must be finite and >= 0");
    }
  }
  if (not(battery_init >= 0 and battery_init <= battery_capacity)) {
    throw ValidationError("site.battery_init must lie in [0, capacity]");
  }
  if (load_weights.empty() or load_weights.size() > kMaxSites) {
    throw ValidationError("cluster must have between 1 and " +
                          std::to_string(kMaxSites) + " sites");
  }
  if (harvest_weights.size() != load_weights.size()) {
    throw ValidationError(
        "site.harvest_weights and site.load_weights differ in length");
  }
  for (const auto w : load_weights) {
    if (not(w >= 0 and w <= 1)) {
      throw ValidationError("site.load_weights must lie in [0,1]");
    }
  }
  for (const auto w : harvest_weights) {
    if (not(w >= 0) or not std::isfinite(w)) {
      throw ValidationError("site.harvest_weights must be >= 0");
    }
  }
}

SiteConfig SiteConfig::scaledEnergy(const double aFactor) const {
  auto c = *this;
  for (auto* v : {&c.bs_active_power, &c.bs_load_coeff, &c.bs_sleep_power,
                  &c.vm_idle, &c.vm_load_coeff, &c.driver_power,
                  &c.driver_tune_cost, &c.vm_switch_cost, &c.bs_wake_cost,
                  &c.harvest_peak, &c.battery_capacity, &c.battery_init}) {
    *v *= aFactor;
  }
  return c;
}

SiteConfig SiteConfig::normalizedBy(const double aNorm) const {
  if (not(aNorm > 0)) {
    throw ValidationError("energy normalizer must be > 0");
  }
  auto c = *this;
  for (auto* v : {&c.bs_active_power, &c.bs_load_coeff, &c.bs_sleep_power,
                  &c.vm_idle, &c.vm_load_coeff, &c.driver_power,
                  &c.driver_tune_cost, &c.vm_switch_cost, &c.bs_wake_cost,
                  &c.harvest_peak, &c.battery_capacity, &c.battery_init}) {
    *v /= aNorm;
  }
  return c;
}

SystemState SystemState::allOn(const SiteConfig& aConfig) {
  SystemState myState;
  myState.sites.assign(aConfig.sites(),
                       SiteState{true, aConfig.k_max, aConfig.d_max,
                                 aConfig.battery_init, 0.0});
  return myState;
}

void SystemState::validate(const SiteConfig& aConfig) const {
  if (sites.size() != aConfig.sites()) {
    throw ValidationError("state has " + std::to_string(sites.size()) +
                          " sites, config has " +
                          std::to_string(aConfig.sites()));
  }
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const auto& s = sites[i];
    if (s.n_vm < 0 or s.n_vm > aConfig.k_max or s.n_drv < 0 or
        s.n_drv > aConfig.d_max) {
      throw ValidationError("site " + std::to_string(i) +
                            ": VM or driver count out of bounds");
    }
    if (not(s.battery >= 0 and s.battery <= aConfig.battery_capacity)) {
      throw ValidationError("site " + std::to_string(i) +
                            ": battery out of [0, capacity]");
    }
    if (not s.bs_on and s.served != 0) {
      throw ValidationError("site " + std::to_string(i) +
                            ": sleeping BS cannot carry load");
    }
  }
}

bool isFeasible(const SiteCommand& aCommand, const SiteConfig& aConfig) {
  if (aCommand.n_vm < 0 or aCommand.n_vm > aConfig.k_max or
      aCommand.n_drv < 0 or aCommand.n_drv > aConfig.d_max) {
    return false;
  }
  if (not aCommand.bs_on and (aCommand.n_vm > 0 or aCommand.n_drv > 0)) {
    return false;
  }
  return not(aCommand.n_vm > 0 and aCommand.n_drv == 0);
}

void validateInput(const ControlInput& aInput, const SiteConfig& aConfig) {
  if (aInput.sites.size() != aConfig.sites()) {
    throw ValidationError("control input has " +
                          std::to_string(aInput.sites.size()) +
                          " sites, config has " +
                          std::to_string(aConfig.sites()));
  }
  for (std::size_t i = 0; i < aInput.sites.size(); ++i) {
    const auto& c = aInput.sites[i];
    if (not isFeasible(c, aConfig)) {
      throw ValidationError(
          "site " + std::to_string(i) + ": infeasible command (bs_on=" +
          std::to_string(c.bs_on) + ", n_vm=" + std::to_string(c.n_vm) +
          ", n_drv=" + std::to_string(c.n_drv) + ")");
    }
  }
}

double routeInto(std::span<const SiteCommand> aSites,
                 std::span<const double>      aOffered,
                 const SiteConfig&            aConfig,
                 std::span<double>            aServed) {
  const auto n = aSites.size();
  checkSpans(n, aOffered.size());
  checkSpans(n, aServed.size());
  if (n > kMaxSites) {
    throw ValidationError("too many sites");
  }

  std::array<double, kMaxSites>      myResidual{};
  std::array<std::size_t, kMaxSites> myOrder{};
  std::size_t                        myActive = 0;
  double                             myPool   = 0;

  for (std::size_t i = 0; i < n; ++i) {
    if (not(aOffered[i] >= 0)) {
      throw ValidationError("offered load must be >= 0");
    }
    if (aSites[i].bs_on) {
      const auto myCapacity = aSites[i].n_vm * aConfig.gamma_max;
      aServed[i]            = std::min(aOffered[i], myCapacity);
      myResidual[i]         = myCapacity - aServed[i];
      myPool += aOffered[i] - aServed[i];
      myOrder[myActive++] = i;
    } else {
      aServed[i] = 0;
      myPool += aOffered[i];
    }
  }

  std::stable_sort(myOrder.begin(), myOrder.begin() + myActive,
                   [&myResidual](const std::size_t a, const std::size_t b) {
                     return myResidual[a] > myResidual[b];
                   });
  for (std::size_t k = 0; k < myActive and myPool > 0; ++k) {
    const auto i     = myOrder[k];
    if (myResidual[i] <= myPool) {
      aServed[i] = aSites[i].n_vm * aConfig.gamma_max;
      myPool -= myResidual[i];
    } else {
      aServed[i] = std::min(aServed[i] + myPool,
                            aSites[i].n_vm * aConfig.gamma_max);
      myPool     = 0;
    }
  }

  // Round-off in the pool arithmetic can leave the served sum a few ulps
  // above the offered sum; trim the largest share until it is not.
  double myOffered = 0;
  for (std::size_t i = 0; i < n; ++i) {
    myOffered += aOffered[i];
  }
  double myServed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    myServed += aServed[i];
  }
  while (myServed > myOffered) {
    const auto k = static_cast<std::size_t>(
        std::max_element(aServed.begin(), aServed.end()) - aServed.begin());
    aServed[k] = std::max(0.0, std::min(aServed[k] - (myServed - myOffered),
                                        std::nextafter(aServed[k], 0.0)));
    myServed = 0;
    for (std::size_t i = 0; i < n; ++i) {
      myServed += aServed[i];
    }
  }
  return myOffered - myServed;
}

RoutingResult routeAndServe(std::span<const SiteCommand> aSites,
                            std::span<const double>      aOffered,
                            const SiteConfig&            aConfig) {
  RoutingResult myResult;
  myResult.served.assign(aSites.size(), 0.0);
  myResult.deficit = routeInto(aSites, aOffered, aConfig, myResult.served);
  return myResult;
}

double siteDemand(const SiteCommand& aPrev,
                  const SiteCommand& aNext,
                  const double       aServed,
                  const SiteConfig&  aConfig) {
  const auto e = siteEnergy(aPrev, aNext, aServed, aConfig);
  return e.bs + e.vm + e.drivers + e.switching;
}

SlotEnergy slotEnergy(std::span<const SiteCommand> aPrev,
                      std::span<const SiteCommand> aNext,
                      std::span<const double>      aServed,
                      const SiteConfig&            aConfig) {
  checkSpans(aPrev.size(), aNext.size());
  checkSpans(aPrev.size(), aServed.size());
  SlotEnergy myEnergy;
  for (std::size_t i = 0; i < aNext.size(); ++i) {
    const auto e = siteEnergy(aPrev[i], aNext[i], aServed[i], aConfig);
    myEnergy.bs += e.bs;
    myEnergy.vm += e.vm;
    myEnergy.drivers += e.drivers;
    myEnergy.switching += e.switching;
  }
  myEnergy.total =
      myEnergy.bs + myEnergy.vm + myEnergy.drivers + myEnergy.switching;
  return myEnergy;
}

BatteryStep batteryStep(const double aBattery,
                        const double aHarvested,
                        const double aDemand,
                        const double aCapacity) {
  if (not(aHarvested >= 0) or not(aDemand >= 0)) {
    throw ValidationError("harvested energy and demand must be >= 0");
  }
  BatteryStep myStep;
  const auto  myAvailable = std::min(aBattery + aHarvested, aCapacity);
  const auto  myUsed      = std::min(myAvailable, aDemand);
  splitExact(aDemand, aDemand - myUsed, myStep.harvested_used,
             myStep.grid_draw);
  myStep.battery = std::clamp(myAvailable - myUsed, 0.0, aCapacity);
  return myStep;
}

double qosDeficit(const double aOffered, const double aServed) {
  if (not(aServed >= 0)) {
    throw ContractError("served workload must be >= 0");
  }
  // a few ulps of routing round-off are tolerated
  if (aServed > aOffered * (1.0 + 1e-12) + 1e-12) {
    throw ContractError("served workload exceeds offered workload");
  }
  if (aOffered <= 0) {
    return 0;
  }
  return std::clamp((aOffered - aServed) / aOffered, 0.0, 1.0);
}

SlotEvaluation evaluateSlot(std::span<const SiteCommand> aPrev,
                            std::span<const SiteCommand> aNext,
                            std::span<const double>      aOffered,
                            const SiteConfig&            aConfig,
                            std::span<double>            aServed) {
  SlotEvaluation myEval;
  routeInto(aNext, aOffered, aConfig, aServed);
  myEval.energy = slotEnergy(aPrev, aNext, aServed, aConfig);
  for (std::size_t i = 0; i < aNext.size(); ++i) {
    myEval.offered_total += aOffered[i];
    myEval.served_total += aServed[i];
  }
  myEval.qos = qosDeficit(myEval.offered_total, myEval.served_total);
  return myEval;
}

Transition transition(const SystemState&      aState,
                      const ControlInput&     aInput,
                      std::span<const double> aOffered,
                      std::span<const double> aHarvested,
                      const SiteConfig&       aConfig) {
  const auto n = aConfig.sites();
  checkSpans(n, aState.sites.size());
  checkSpans(n, aOffered.size());
  checkSpans(n, aHarvested.size());
  validateInput(aInput, aConfig);

  Transition myOut;
  myOut.offered.assign(aOffered.begin(), aOffered.end());
  myOut.served.assign(n, 0.0);
  const auto myPrev = commandsOf(aState);
  const auto myEval =
      evaluateSlot(myPrev, aInput.sites, aOffered, aConfig, myOut.served);
  myOut.energy        = myEval.energy;
  myOut.qos           = myEval.qos;
  myOut.offered_total = myEval.offered_total;
  myOut.served_total  = myEval.served_total;

  myOut.next.sites.resize(n);
  double myGrid = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = aInput.sites[i];
    const auto  myDemand =
        siteDemand(myPrev[i], c, myOut.served[i], aConfig);
    const auto myBattery = batteryStep(aState.sites[i].battery, aHarvested[i],
                                       myDemand, aConfig.battery_capacity);
    myGrid += myBattery.grid_draw;
    myOut.next.sites[i] = SiteState{c.bs_on, c.n_vm, c.n_drv,
                                    myBattery.battery, myOut.served[i]};
  }
  splitExact(myOut.energy.total, myGrid, myOut.energy.harvested_used,
             myOut.energy.grid_draw);
  return myOut;
}

std::vector<double> offeredLoads(const double aLoad, const SiteConfig& aConfig) {
  std::vector<double> myOffered(aConfig.sites());
  for (std::size_t i = 0; i < myOffered.size(); ++i) {
    myOffered[i] = aLoad * aConfig.lambda_max * aConfig.load_weights[i];
  }
  return myOffered;
}

std::vector<double> harvestedEnergy(const double      aEnergy,
                                    const SiteConfig& aConfig) {
  std::vector<double> myHarvest(aConfig.sites());
  for (std::size_t i = 0; i < myHarvest.size(); ++i) {
    myHarvest[i] = aEnergy * aConfig.harvest_peak * aConfig.harvest_weights[i];
  }
  return myHarvest;
}

std::vector<SiteCommand> commandsOf(const SystemState& aState) {
  std::vector<SiteCommand> myCommands;
  myCommands.reserve(aState.sites.size());
  for (const auto& s : aState.sites) {
    myCommands.push_back({s.bs_on, s.n_vm, s.n_drv});
  }
  return myCommands;
}

} // namespace greenedge
