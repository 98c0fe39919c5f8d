#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace greenedge {

enum class TraceKind { Load, Energy };

std::string toString(TraceKind aKind);
TraceKind traceKindFromString(const std::string& aKind);

/// Time-slotted series of normalized values in [0,1].
///
/// A Load trace carries L(t), the fraction of the per-site peak workload
/// offered in slot t. An Energy trace carries H(t), the fraction of the peak
/// harvestable energy collected in slot t. Values are immutable once built.
class Trace {
 public:
  Trace(TraceKind aKind,
        double aSlotDuration,
        double aStartHour,
        std::vector<double> aValues);

  TraceKind kind() const noexcept {
    return theKind;
  }
  // seconds
  double slotDuration() const noexcept {
    return theSlotDuration;
  }
  double startHour() const noexcept {
    return theStartHour;
  }
  const std::vector<double>& values() const noexcept {
    return theValues;
  }
  std::size_t size() const noexcept {
    return theValues.size();
  }
  double operator[](std::size_t aSlot) const {
    return theValues.at(aSlot);
  }

  // Hour of day in [0, 24) at the start of the given slot.
  double hourOf(std::size_t aSlot) const;

  bool operator==(const Trace&) const = default;

 private:
  TraceKind           theKind;
  double              theSlotDuration;
  double              theStartHour;
  std::vector<double> theValues;
};

// Parameters of the synthetic diurnal generators.
struct SynthParams {
  double        mean          = 0.6;
  double        amplitude     = 0.3;
  double        peak_hour     = 17.0;
  double        noise_sigma   = 0.05;
  int           day_count     = 7;
  int           slots_per_day = 48;
  double        start_hour    = 0.0;

  // Throws ValidationError. Load traces need mean +/- amplitude inside
  // [0,1]; energy traces only use the amplitude, which must lie in [0,1].
  void validate(TraceKind aKind) const;

  bool operator==(const SynthParams&) const = default;
};

// Hours of daylight in the solar profile; sunrise is peak_hour - 6.
inline constexpr double kDaylightHours = 12.0;
inline constexpr int    kDefaultSlotsPerDay = 48;

/// Parses a `slot_index,value` CSV body. A non-numeric first line is a
/// header; `#` lines and blank lines are skipped. Slot indices must be
/// consecutive. Values outside [0,1] are rejected, never clamped.
Trace parseTrace(std::istream& aStream,
                 TraceKind     aKind,
                 double        aSlotDuration = 86400.0 / kDefaultSlotsPerDay,
                 double        aStartHour    = 0.0);

Trace loadTrace(const std::filesystem::path& aPath,
                TraceKind                    aKind,
                double aSlotDuration = 86400.0 / kDefaultSlotsPerDay,
                double aStartHour    = 0.0);

void saveTrace(const std::filesystem::path& aPath, const Trace& aTrace);

/// Diurnal sinusoid peaking at peak_hour, plus Gaussian noise, clamped.
Trace generateLoad(const SynthParams& aParams, std::uint64_t aSeed);

/// Half-sine solar profile centred on peak_hour, zero at night.
Trace generateEnergy(const SynthParams& aParams, std::uint64_t aSeed);

/// Chronological split; both halves are non-empty.
std::pair<Trace, Trace> split(const Trace& aTrace, double aTrainFraction);

} // namespace greenedge
