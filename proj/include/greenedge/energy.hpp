#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace greenedge {

// Upper bound on the number of BS sites in a cluster; the controller keeps
// per-site data in fixed-size arrays.
inline constexpr std::size_t kMaxSites = 8;

/// Cluster of MEC-enabled BS sites sharing one set of coefficients.
///
/// Workload is in MB per slot, energy in abstract energy-units. Site i is
/// offered L(t) * lambda_max * load_weights[i] MB and harvests
/// H(t) * harvest_peak * harvest_weights[i] energy-units per slot.
struct SiteConfig {
  double gamma_max  = 10.0;  // MB one VM processes per slot
  int    k_max      = 10;    // VMs per site
  int    d_max      = 2;     // transmission drivers per site
  double lambda_max = 100.0; // MB per slot offered at L = 1

  double bs_active_power  = 5.0;
  double bs_load_coeff    = 2.0;
  double bs_sleep_power   = 0.5;
  double vm_idle          = 1.0;
  double vm_load_coeff    = 0.1;
  double driver_power     = 1.0;
  double driver_tune_cost = 0.25;
  double vm_switch_cost   = 0.25;
  double bs_wake_cost     = 1.0;

  double harvest_peak     = 8.0;
  double battery_capacity = 40.0;
  double battery_init     = 20.0;

  std::vector<double> load_weights    = {1.0, 0.8, 0.6};
  std::vector<double> harvest_weights = {1.0, 1.0, 1.0};

  std::size_t sites() const noexcept {
    return load_weights.size();
  }

  void validate() const;

  // Copy with every energy-valued field multiplied by aFactor.
  SiteConfig scaledEnergy(double aFactor) const;
  // Copy with every energy-valued field divided by aNorm, so energies are
  // expressed in multiples of aNorm.
  SiteConfig normalizedBy(double aNorm) const;

  bool operator==(const SiteConfig&) const = default;
};

struct SiteState {
  bool   bs_on   = true;
  int    n_vm    = 0;
  int    n_drv   = 0;
  double battery = 0;
  double served  = 0; // MB carried in the last slot

  bool operator==(const SiteState&) const = default;
};

struct SystemState {
  std::vector<SiteState> sites;

  // Every site on with all VMs and drivers running, batteries at battery_init.
  static SystemState allOn(const SiteConfig& aConfig);

  void validate(const SiteConfig& aConfig) const;

  bool operator==(const SystemState&) const = default;
};

struct SiteCommand {
  bool bs_on = false;
  int  n_vm  = 0;
  int  n_drv = 0;

  bool operator==(const SiteCommand&) const = default;
};

struct ControlInput {
  std::vector<SiteCommand> sites;

  bool operator==(const ControlInput&) const = default;
};

// A site command is feasible when its counts are within bounds, a sleeping
// BS runs no VMs or drivers, and running VMs have at least one driver.
bool isFeasible(const SiteCommand& aCommand, const SiteConfig& aConfig);

// Throws ValidationError naming the first offending site.
void validateInput(const ControlInput& aInput, const SiteConfig& aConfig);

struct SlotEnergy {
  double bs             = 0;
  double vm             = 0;
  double drivers        = 0;
  double switching      = 0;
  double total          = 0;
  double harvested_used = 0;
  double grid_draw      = 0;

  bool operator==(const SlotEnergy&) const = default;
};

struct RoutingResult {
  std::vector<double> served;
  double              deficit = 0;
};

/// Location-aware routing. Each active site first serves its own offered
/// load up to its capacity n_vm * gamma_max. Load offered to sleeping sites,
/// plus any overflow of active sites, is then assigned to active sites in
/// descending residual-capacity order (ties by site index).
RoutingResult routeAndServe(std::span<const SiteCommand> aSites,
                            std::span<const double>      aOffered,
                            const SiteConfig&            aConfig);

// Same as routeAndServe, writing into a caller buffer. Returns the deficit.
double routeInto(std::span<const SiteCommand> aSites,
                 std::span<const double>      aOffered,
                 const SiteConfig&            aConfig,
                 std::span<double>            aServed);

/// Energy drawn in one slot when moving from aPrev to aNext and carrying
/// aServed MB per site. harvested_used and grid_draw are left at zero; the
/// battery step fills them.
SlotEnergy slotEnergy(std::span<const SiteCommand> aPrev,
                      std::span<const SiteCommand> aNext,
                      std::span<const double>      aServed,
                      const SiteConfig&            aConfig);

// Per-site share of slotEnergy().total, in the same order as the summation.
double siteDemand(const SiteCommand& aPrev,
                  const SiteCommand& aNext,
                  double             aServed,
                  const SiteConfig&  aConfig);

struct BatteryStep {
  double battery        = 0;
  double harvested_used = 0;
  double grid_draw      = 0;
};

/// Harvest first charges the battery (spilling above capacity), then the
/// stored energy covers as much of the demand as it can; the grid covers
/// the rest. harvested_used + grid_draw == demand exactly.
BatteryStep batteryStep(double aBattery,
                        double aHarvested,
                        double aDemand,
                        double aCapacity);

/// Fraction of offered workload left unserved; 0 when nothing is offered.
/// Throws ContractError when aServed exceeds aOffered.
double qosDeficit(double aOffered, double aServed);

struct SlotEvaluation {
  SlotEnergy energy; // harvested_used and grid_draw left at zero
  double     qos           = 0;
  double     offered_total = 0;
  double     served_total  = 0;
};

/// Routing, energy and QoS of one slot without battery bookkeeping. Writes
/// the per-site served MB into aServed and does not allocate; the
/// controller's search and transition() both go through it.
SlotEvaluation evaluateSlot(std::span<const SiteCommand> aPrev,
                            std::span<const SiteCommand> aNext,
                            std::span<const double>      aOffered,
                            const SiteConfig&            aConfig,
                            std::span<double>            aServed);

struct Transition {
  SystemState         next;
  SlotEnergy          energy;
  double              qos           = 0;
  double              offered_total = 0;
  double              served_total  = 0;
  std::vector<double> offered;
  std::vector<double> served;
};

/// The behavioral model: applies the input to the state for one slot with
/// the given per-site offered workload (MB) and harvest (energy-units).
/// Used with forecasts by the controller and with trace values by the
/// simulator, so both agree exactly when forecasts equal actuals.
Transition transition(const SystemState&      aState,
                      const ControlInput&     aInput,
                      std::span<const double> aOffered,
                      std::span<const double> aHarvested,
                      const SiteConfig&       aConfig);

// Offered MB and harvested energy per site for normalized trace values.
std::vector<double> offeredLoads(double aLoad, const SiteConfig& aConfig);
std::vector<double> harvestedEnergy(double aEnergy, const SiteConfig& aConfig);

std::vector<SiteCommand> commandsOf(const SystemState& aState);

} // namespace greenedge
