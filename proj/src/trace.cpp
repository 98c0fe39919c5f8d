#include "greenedge/trace.hpp"

#include "greenedge/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>

namespace greenedge {

namespace {

std::string trim(const std::string& aStr) {
  const auto myBegin = aStr.find_first_not_of(" \t\r");
  if (myBegin == std::string::npos) {
    return std::string();
  }
  const auto myEnd = aStr.find_last_not_of(" \t\r");
  return aStr.substr(myBegin, myEnd - myBegin + 1);
}

bool parseDouble(const std::string& aStr, double& aOut) {
  const auto myStr = trim(aStr);
  if (myStr.empty()) {
    return false;
  }
  const auto* myFirst = myStr.data();
  const auto* myLast  = myStr.data() + myStr.size();
  const auto  myRes   = std::from_chars(myFirst, myLast, aOut);
  return myRes.ec == std::errc() and myRes.ptr == myLast;
}

double hourOfDay(const double aStartHour,
                 const std::size_t aSlot,
                 const int aSlotsPerDay) {
  const auto mySlotInDay = static_cast<double>(aSlot % aSlotsPerDay);
  return std::fmod(aStartHour + mySlotInDay * 24.0 / aSlotsPerDay, 24.0);
}

} // namespace

std::string toString(const TraceKind aKind) {
  switch (aKind) {
    case TraceKind::Load:
      return "load";
    case TraceKind::Energy:
      return "energy";
  }
  throw ValidationError("invalid trace kind");
}

TraceKind traceKindFromString(const std::string& aKind) {
  if (aKind == "load") {
    return TraceKind::Load;
  } else if (aKind == "energy") {
    return TraceKind::Energy;
  }
  throw ValidationError("invalid trace kind: " + aKind);
}

Trace::Trace(const TraceKind     aKind,
             const double        aSlotDuration,
             const double        aStartHour,
             std::vector<double> aValues)
    : theKind(aKind)
    , theSlotDuration(aSlotDuration)
    , theStartHour(aStartHour)
    , theValues(std::move(aValues)) {
  if (not(theSlotDuration > 0)) {
    throw ValidationError("slot duration must be positive");
  }
  if (theValues.empty()) {
    throw ValidationError("trace must contain at least one slot");
  }
  for (std::size_t i = 0; i < theValues.size(); ++i) {
    const auto v = theValues[i];
    if (not(v >= 0.0 and v <= 1.0)) {
      throw ValidationError("trace value out of [0,1] at slot " +
                            std::to_string(i) + ": " + std::to_string(v));
    }
  }
}

double Trace::hourOf(const std::size_t aSlot) const {
  const auto myHours = theStartHour + aSlot * theSlotDuration / 3600.0;
  return std::fmod(myHours, 24.0);
}

void SynthParams::validate(const TraceKind aKind) const {
  if (day_count < 1) {
    throw ValidationError("day_count must be >= 1");
  }
  if (slots_per_day < 1) {
    throw ValidationError("slots_per_day must be >= 1");
  }
  if (not(noise_sigma >= 0)) {
    throw ValidationError("noise_sigma must be >= 0");
  }
  if (not std::isfinite(peak_hour) or not std::isfinite(start_hour)) {
    throw ValidationError("peak_hour and start_hour must be finite");
  }
  if (aKind == TraceKind::Load) {
    if (not(mean - amplitude >= 0.0 and mean + amplitude <= 1.0)) {
      throw ValidationError(
          "load generator needs 0 <= mean - amplitude and mean + amplitude "
          "<= 1");
    }
  } else {
    if (not(amplitude >= 0.0 and amplitude <= 1.0)) {
      throw ValidationError("energy generator needs amplitude in [0,1]");
    }
  }
}

Trace parseTrace(std::istream&   aStream,
                 const TraceKind aKind,
                 const double    aSlotDuration,
                 const double    aStartHour) {
  std::vector<double> myValues;
  std::string         myLine;
  std::size_t         myLineNo    = 0;
  bool                mySeenFirst = false;
  double              myPrevIndex = 0;

  while (std::getline(aStream, myLine)) {
    ++myLineNo;
    const auto myTrimmed = trim(myLine);
    if (myTrimmed.empty() or myTrimmed.front() == '#') {
      continue;
    }
    const auto myComma = myTrimmed.find(',');
    if (myComma == std::string::npos) {
      throw ParseError("expected two columns 'slot_index,value'", myLineNo);
    }
    const auto myIndexStr = myTrimmed.substr(0, myComma);
    const auto myValueStr = myTrimmed.substr(myComma + 1);
    if (myValueStr.find(',') != std::string::npos) {
      throw ParseError("too many columns", myLineNo);
    }

    double myIndex = 0;
    if (not parseDouble(myIndexStr, myIndex)) {
      if (not mySeenFirst) {
        // header line
        mySeenFirst = true;
        continue;
      }
      throw ParseError("non-numeric slot index '" + trim(myIndexStr) + "'",
                       myLineNo);
    }
    mySeenFirst = true;
    if (myIndex != std::floor(myIndex)) {
      throw ParseError("slot index is not an integer", myLineNo);
    }

    double myValue = 0;
    if (not parseDouble(myValueStr, myValue)) {
      throw ParseError("non-numeric value '" + trim(myValueStr) + "'",
                       myLineNo);
    }
    if (not(myValue >= 0.0 and myValue <= 1.0)) {
      throw ValidationError("line " + std::to_string(myLineNo) +
                            ": value out of [0,1]: " + trim(myValueStr));
    }
    if (not myValues.empty() and myIndex != myPrevIndex + 1) {
      throw ValidationError("line " + std::to_string(myLineNo) +
                            ": slot indices must be consecutive");
    }
    myPrevIndex = myIndex;
    myValues.push_back(myValue);
  }

  if (myValues.empty()) {
    throw ValidationError("trace file contains no data rows");
  }
  return Trace(aKind, aSlotDuration, aStartHour, std::move(myValues));
}

Trace loadTrace(const std::filesystem::path& aPath,
                const TraceKind              aKind,
                const double                 aSlotDuration,
                const double                 aStartHour) {
  std::ifstream myStream(aPath);
  if (not myStream) {
    throw RuntimeError("cannot open trace file: " + aPath.string());
  }
  return parseTrace(myStream, aKind, aSlotDuration, aStartHour);
}

void saveTrace(const std::filesystem::path& aPath, const Trace& aTrace) {
  std::ofstream myStream(aPath);
  if (not myStream) {
    throw RuntimeError("cannot write trace file: " + aPath.string());
  }
  myStream << "slot_index,value\n" << std::setprecision(17);
  for (std::size_t i = 0; i < aTrace.size(); ++i) {
    myStream << i << ',' << aTrace[i] << '\n';
  }
}

Trace generateLoad(const SynthParams& aParams, const std::uint64_t aSeed) {
  aParams.validate(TraceKind::Load);
  std::mt19937_64                  myRng(aSeed);
  std::normal_distribution<double> myNoise(0.0, 1.0);

  const auto          mySlots = static_cast<std::size_t>(aParams.day_count) *
                       aParams.slots_per_day;
  std::vector<double> myValues(mySlots);
  for (std::size_t i = 0; i < mySlots; ++i) {
    const auto myHour =
        hourOfDay(aParams.start_hour, i, aParams.slots_per_day);
    auto myValue =
        aParams.mean +
        aParams.amplitude *
            std::sin(2.0 * std::numbers::pi *
                     (myHour - aParams.peak_hour + 6.0) / 24.0);
    if (aParams.noise_sigma > 0) {
      myValue += aParams.noise_sigma * myNoise(myRng);
    }
    myValues[i] = std::clamp(myValue, 0.0, 1.0);
  }
  return Trace(TraceKind::Load,
               86400.0 / aParams.slots_per_day,
               aParams.start_hour,
               std::move(myValues));
}

Trace generateEnergy(const SynthParams& aParams, const std::uint64_t aSeed) {
  aParams.validate(TraceKind::Energy);
  std::mt19937_64                  myRng(aSeed);
  std::normal_distribution<double> myNoise(0.0, 1.0);

  const auto mySunrise = aParams.peak_hour - kDaylightHours / 2.0;
  const auto mySlots   = static_cast<std::size_t>(aParams.day_count) *
                       aParams.slots_per_day;
  std::vector<double> myValues(mySlots);
  for (std::size_t i = 0; i < mySlots; ++i) {
    const auto myHour =
        hourOfDay(aParams.start_hour, i, aParams.slots_per_day);
    auto mySinceSunrise = std::fmod(myHour - mySunrise, 24.0);
    if (mySinceSunrise < 0) {
      mySinceSunrise += 24.0;
    }
    double myValue = 0;
    if (mySinceSunrise > 0 and mySinceSunrise < kDaylightHours) {
      myValue = aParams.amplitude *
                std::sin(std::numbers::pi * mySinceSunrise / kDaylightHours);
      if (aParams.noise_sigma > 0) {
        myValue += aParams.noise_sigma * myNoise(myRng);
      }
    }
    myValues[i] = std::clamp(myValue, 0.0, 1.0);
  }
  return Trace(TraceKind::Energy,
               86400.0 / aParams.slots_per_day,
               aParams.start_hour,
               std::move(myValues));
}

std::pair<Trace, Trace> split(const Trace& aTrace, const double aTrainFraction) {
  if (not(aTrainFraction > 0.0 and aTrainFraction < 1.0)) {
    throw ValidationError("train fraction must lie in (0,1)");
  }
  const auto mySize  = aTrace.size();
  const auto myTrain = static_cast<std::size_t>(
      std::llround(static_cast<double>(mySize) * aTrainFraction));
  if (myTrain == 0 or myTrain >= mySize) {
    throw ValidationError("split of a " + std::to_string(mySize) +
                          "-slot trace leaves an empty part");
  }
  const auto& myValues = aTrace.values();
  std::vector<double> myHead(myValues.begin(), myValues.begin() + myTrain);
  std::vector<double> myTail(myValues.begin() + myTrain, myValues.end());
  const auto myTailStart =
      std::fmod(aTrace.startHour() + myTrain * aTrace.slotDuration() / 3600.0,
                24.0);
  return {Trace(aTrace.kind(), aTrace.slotDuration(), aTrace.startHour(),
                std::move(myHead)),
          Trace(aTrace.kind(), aTrace.slotDuration(), myTailStart,
                std::move(myTail))};
}

} // namespace greenedge
