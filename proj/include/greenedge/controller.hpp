#pragma once

#include "greenedge/energy.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace greenedge {

/// Weights of the per-slot cost (1 - eta) * energy / energy_norm + eta * qos.
///
/// max_deficit is the QoS guarantee: a predicted slot whose deficit exceeds
/// it is a violation, and the search ranks sequences by total violation
/// before cost. The default 0 asks for every forecast MB to be served.
struct CostWeights {
  double eta         = 0.0;
  double energy_norm = 100.0;
  double max_deficit = 0.0;

  void validate() const;

  bool operator==(const CostWeights&) const = default;
};

struct LlcConfig {
  int  horizon      = 3;
  // With prune set, each site's commanded VM count stays within
  // max_vm_delta of its current count.
  int  max_vm_delta = 1000;
  bool prune        = false;
  // Heuristic: run exactly one driver when VMs are on, none otherwise.
  bool min_drivers  = false;

  void validate() const;

  bool operator==(const LlcConfig&) const = default;
};

// Normalized load and harvest forecasts for one future slot.
struct ForecastSlot {
  double load   = 0;
  double energy = 0;

  bool operator==(const ForecastSlot&) const = default;
};

struct Prediction {
  SystemState state;
  SlotEnergy  energy;
  double      qos = 0;
};

/// One-step state estimate: applies the input under forecast load and
/// harvest. Throws ValidationError for out-of-bounds inputs or forecasts.
Prediction predictState(const SystemState&  aState,
                        const ControlInput& aInput,
                        const ForecastSlot& aForecast,
                        const SiteConfig&   aConfig);

double slotCost(const SlotEnergy& aEnergy, double aQos, const CostWeights& aWeights);

/// Total order used to break cost ties: fewer VMs, then fewer drivers, then
/// more sleeping BSs, then lexicographic on (bs_on, n_vm, n_drv) per site.
bool tieBreakLess(std::span<const SiteCommand> aLhs,
                  std::span<const SiteCommand> aRhs);

/// Feasible commands reachable from aState: the per-site Cartesian product
/// of BS on/off, VM count and driver count, minus infeasible combinations
/// and, when pruning, VM counts outside the max_vm_delta neighbourhood.
std::vector<ControlInput> enumerateActions(const SystemState& aState,
                                           const SiteConfig&  aConfig,
                                           const LlcConfig&   aLlc);

struct ActionSequence {
  std::vector<ControlInput> inputs;
  // Right fold over the steps: c_1 + (c_2 + (... + c_T)).
  double                    cost      = 0;
  double                    violation = 0;
  std::vector<double>       step_costs;
  std::vector<double>       step_qos;
  std::vector<SystemState>  predicted_states;
};

struct LlcDecision {
  ControlInput   action;
  ActionSequence plan;
  std::size_t    evaluated = 0; // slot evaluations performed by the search
};

/// Limited lookahead control. Searches every action sequence of length
/// forecasts.size() (memoising subtrees on the commanded configuration,
/// which is all the cost depends on) and returns the first input of the
/// best one. Energies are evaluated with coefficients divided by
/// energy_norm.
LlcDecision llcSelect(const SystemState&             aState,
                      std::span<const ForecastSlot>  aForecasts,
                      const CostWeights&             aWeights,
                      const LlcConfig&               aLlc,
                      const SiteConfig&              aConfig);

/// Threshold rule on the last measured load only: each site with offered
/// load runs ceil(offered / gamma_max) VMs and one driver; sites with no
/// offered load sleep.
ControlInput reactivePolicy(const SystemState& aState,
                            double             aCurrentLoad,
                            const SiteConfig&  aConfig);

// Always-on baseline: every BS on with k_max VMs and d_max drivers.
ControlInput noManagementPolicy(const SiteConfig& aConfig);

} // namespace greenedge
