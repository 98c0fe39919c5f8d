#include "greenedge/error.hpp"
#include "greenedge/trace.hpp"

#include "gtest/gtest.h"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <sstream>

namespace greenedge {

struct TestTrace : public ::testing::Test {
  static Trace parse(const std::string& aBody) {
    std::istringstream myStream(aBody);
    return parseTrace(myStream, TraceKind::Load);
  }

  static SynthParams noiseless() {
    SynthParams myParams;
    myParams.noise_sigma = 0;
    myParams.day_count   = 2;
    return myParams;
  }

  // slot index of an hour of day with the default 48 slots/day
  static std::size_t slotAt(const double aHour) {
    return static_cast<std::size_t>(std::llround(aHour * 2));
  }
};

TEST_F(TestTrace, test_csv_identity) {
  const auto myTrace = parse("0,0.3\n1,0.4\n2,0.5");
  ASSERT_EQ(3u, myTrace.size());
  EXPECT_EQ((std::vector<double>{0.3, 0.4, 0.5}), myTrace.values());
  EXPECT_EQ(TraceKind::Load, myTrace.kind());
}

TEST_F(TestTrace, test_csv_header_and_comments) {
  const auto myTrace = parse("slot_index,value\n# note\n\n0,0\n1,1\n");
  EXPECT_EQ((std::vector<double>{0.0, 1.0}), myTrace.values());
}

TEST_F(TestTrace, test_csv_out_of_range) {
  EXPECT_THROW(parse("0,1.2"), ValidationError);
  EXPECT_THROW(parse("0,-0.1"), ValidationError);
}

TEST_F(TestTrace, test_csv_malformed) {
  try {
    parse("0,abc");
    FAIL() << "expected ParseError";
  } catch (const ParseError& aErr) {
    EXPECT_EQ(1u, aErr.line());
  }
  try {
    parse("slot_index,value\n0,0.1\n1\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& aErr) {
    EXPECT_EQ(3u, aErr.line());
  }
  EXPECT_THROW(parse("0,0.1\n2,0.2\n"), ValidationError);
  EXPECT_THROW(parse("0,0.1,7\n"), ParseError);
  EXPECT_THROW(parse(""), ValidationError);
}

TEST_F(TestTrace, test_save_load_roundtrip) {
  SynthParams myParams;
  const auto  myTrace = generateLoad(myParams, 3);
  const auto  myPath =
      std::filesystem::temp_directory_path() / "greenedge_test_trace.csv";
  saveTrace(myPath, myTrace);
  EXPECT_EQ(myTrace, loadTrace(myPath, TraceKind::Load));
  std::filesystem::remove(myPath);
  EXPECT_THROW(loadTrace(myPath, TraceKind::Load), RuntimeError);
}

TEST_F(TestTrace, test_load_sinusoid) {
  const auto myParams = noiseless();
  const auto myTrace  = generateLoad(myParams, 1);
  EXPECT_NEAR(0.9, myTrace[slotAt(myParams.peak_hour)], 1e-12);
  EXPECT_NEAR(0.3, myTrace[slotAt(myParams.peak_hour - 12)], 1e-12);
  // trough at 5:00 with the default peak at 17:00
  EXPECT_NEAR(0.3, myTrace[slotAt(5)], 1e-12);
  EXPECT_EQ(96u, myTrace.size());
}

TEST_F(TestTrace, test_load_periodic_without_noise) {
  const auto myTrace = generateLoad(noiseless(), 9);
  for (std::size_t t = 0; t + 48 < myTrace.size(); ++t) {
    ASSERT_EQ(myTrace[t], myTrace[t + 48]) << t;
  }
}

TEST_F(TestTrace, test_generators_deterministic) {
  SynthParams myParams;
  EXPECT_EQ(generateLoad(myParams, 5), generateLoad(myParams, 5));
  EXPECT_NE(generateLoad(myParams, 5), generateLoad(myParams, 6));
  EXPECT_EQ(generateEnergy(myParams, 5), generateEnergy(myParams, 5));
}

TEST_F(TestTrace, test_values_in_range) {
  SynthParams myParams;
  myParams.noise_sigma = 0.5;
  for (const auto& myTrace :
       {generateLoad(myParams, 2), generateEnergy(myParams, 2)}) {
    for (const auto v : myTrace.values()) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST_F(TestTrace, test_energy_profile) {
  auto myParams      = noiseless();
  myParams.amplitude = 1.0;
  myParams.peak_hour = 13.0;
  const auto myTrace = generateEnergy(myParams, 1);
  EXPECT_EQ(0.0, myTrace[slotAt(2)]);
  EXPECT_EQ(0.0, myTrace[slotAt(23.5)]);
  EXPECT_NEAR(1.0, myTrace[slotAt(13)], 1e-12);
}

TEST_F(TestTrace, test_energy_night_has_no_noise) {
  SynthParams myParams;
  myParams.peak_hour   = 13.0;
  myParams.noise_sigma = 0.2;
  const auto myTrace   = generateEnergy(myParams, 4);
  for (std::size_t t = 0; t < myTrace.size(); ++t) {
    const auto h = myTrace.hourOf(t);
    if (h < 7.0 or h >= 19.0) {
      ASSERT_EQ(0.0, myTrace[t]) << t;
    }
  }
}

TEST_F(TestTrace, test_energy_daily_integral) {
  const auto a       = 0.7;
  auto       myParams = noiseless();
  myParams.amplitude  = a;
  myParams.day_count  = 1;
  const auto myTrace  = generateEnergy(myParams, 1);
  double     mySum    = 0;
  for (const auto v : myTrace.values()) {
    mySum += v;
  }
  // half-sine over 12 h at 2 slots per hour
  const auto myClosedForm = a * 12.0 * (2.0 / std::numbers::pi) * 2.0;
  EXPECT_NEAR(myClosedForm, mySum, 0.01 * myClosedForm);
  // exact discrete sum of sin(pi k / 24), k = 0..23
  EXPECT_NEAR(a / std::tan(std::numbers::pi / 48), mySum, 1e-12);
}

TEST_F(TestTrace, test_invalid_params) {
  SynthParams myParams;
  myParams.mean = 0.8;
  EXPECT_THROW(generateLoad(myParams, 1), ValidationError);
  EXPECT_NO_THROW(generateEnergy(myParams, 1));
  myParams           = SynthParams{};
  myParams.day_count = 0;
  EXPECT_THROW(generateLoad(myParams, 1), ValidationError);
  myParams             = SynthParams{};
  myParams.noise_sigma = -1;
  EXPECT_THROW(generateEnergy(myParams, 1), ValidationError);
  myParams           = SynthParams{};
  myParams.amplitude = 1.5;
  EXPECT_THROW(generateEnergy(myParams, 1), ValidationError);
}

TEST_F(TestTrace, test_split) {
  const Trace myTen(TraceKind::Load, 1800, 0, std::vector<double>(10, 0.5));
  const auto [myTrain, myTest] = split(myTen, 0.8);
  EXPECT_EQ(8u, myTrain.size());
  EXPECT_EQ(2u, myTest.size());

  const Trace myTwo(TraceKind::Load, 1800, 0, {0.1, 0.2});
  const auto [a, b] = split(myTwo, 0.5);
  EXPECT_EQ((std::vector<double>{0.1}), a.values());
  EXPECT_EQ((std::vector<double>{0.2}), b.values());

  EXPECT_THROW(split(myTen, 1.0), ValidationError);
  EXPECT_THROW(split(myTen, 0.0), ValidationError);
}

TEST_F(TestTrace, test_invalid_trace) {
  EXPECT_THROW(Trace(TraceKind::Load, 1800, 0, {}), ValidationError);
  EXPECT_THROW(Trace(TraceKind::Load, 0, 0, {0.1}), ValidationError);
  EXPECT_THROW(Trace(TraceKind::Energy, 1800, 0, {1.5}), ValidationError);
}

TEST_F(TestTrace, test_kind_names) {
  EXPECT_EQ(TraceKind::Energy, traceKindFromString(toString(TraceKind::Energy)));
  EXPECT_THROW(traceKindFromString("wind"), ValidationError);
}

} // namespace greenedge
