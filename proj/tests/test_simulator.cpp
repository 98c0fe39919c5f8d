#include "greenedge/error.hpp"
#include "greenedge/simulator.hpp"

#include "gtest/gtest.h"

#include <cmath>

namespace greenedge {

struct TestSimulator : public ::testing::Test {
  // Two simulated days after one day of history.
  static ExperimentConfig small() {
    ExperimentConfig c;
    c.traces.load.synth.day_count   = 3;
    c.traces.energy.synth.day_count = 3;
    c.eval_begin                    = 48;
    c.eval_end                      = 0;
    return c;
  }

  static ExperimentConfig zeroTraces() {
    auto c = small();
    for (auto* s : {&c.traces.load.synth, &c.traces.energy.synth}) {
      s->mean        = 0;
      s->amplitude   = 0;
      s->noise_sigma = 0;
    }
    return c;
  }

  static RunOptions oracle() {
    RunOptions myOptions;
    myOptions.oracle_forecast = true;
    return myOptions;
  }
};

TEST_F(TestSimulator, test_savings) {
  EXPECT_EQ(0.0, savings(50, 50));
  EXPECT_NEAR(69.0, savings(31, 100), 1e-12);
  EXPECT_NEAR(49.0, savings(51, 100), 1e-12);
  EXPECT_NEAR(-10.0, savings(110, 100), 1e-12);
  EXPECT_THROW(savings(1, 0), ValidationError);
}

TEST_F(TestSimulator, test_policy_names) {
  for (const auto p : {Policy::Enaam, Policy::Reactive, Policy::NoManagement}) {
    EXPECT_EQ(p, policyFromString(toString(p)));
  }
  EXPECT_THROW(policyFromString("greedy"), ValidationError);
  EXPECT_EQ(ForecastMode::Load, forecastModeFromString("load"));
  EXPECT_THROW(forecastModeFromString("magic"), ValidationError);
}

TEST_F(TestSimulator, test_no_management_zero_savings) {
  auto c   = small();
  c.policy = Policy::NoManagement;
  const auto r = run(c);
  EXPECT_EQ(96u, r.slots.size());
  EXPECT_EQ(0.0, r.mean_savings);
  EXPECT_EQ(r.baseline_energy, r.total_energy);
  EXPECT_TRUE(r.slots.front().load_forecast.empty());
  EXPECT_TRUE(std::isnan(r.slots.front().predicted_cost));
}

TEST_F(TestSimulator, test_zero_load_floor) {
  auto c = zeroTraces();
  c.llc  = LlcConfig{1, 1000, false, false};
  const auto r = run(c, oracle());
  for (const auto& m : r.slots) {
    for (const auto& s : m.action.sites) {
      ASSERT_EQ((SiteCommand{false, 0, 0}), s) << m.slot;
    }
  }
  const auto& p = c.site;
  const auto  mySleep = 3 * p.bs_sleep_power;
  // the first slot also pays for stopping every VM and driver
  const auto myShutdown =
      3 * (p.k_max * p.vm_switch_cost + p.d_max * p.driver_tune_cost);
  EXPECT_NEAR(r.slots.size() * mySleep + myShutdown, r.total_energy, 1e-9);
  EXPECT_NEAR(mySleep, r.slots.back().energy.total, 1e-12);
}

TEST_F(TestSimulator, test_oracle_consistency) {
  const auto r = run(small(), oracle());
  for (const auto& m : r.slots) {
    ASSERT_EQ(m.predicted_cost, m.realized_cost) << m.slot;
    ASSERT_EQ(3u, m.load_forecast.size());
    EXPECT_EQ(m.load_actual, m.load_forecast.front());
    EXPECT_EQ(m.energy_actual, m.energy_forecast.front());
  }
}

TEST_F(TestSimulator, test_deterministic) {
  const auto a = run(small(), oracle());
  const auto b = run(small(), oracle());
  EXPECT_EQ(a.slots, b.slots);
  EXPECT_EQ(a.mean_savings, b.mean_savings);
}

TEST_F(TestSimulator, test_report_consistency) {
  const auto r = run(small(), oracle());
  double myEnergy = 0, myBase = 0, myDeficit = 0, myGrid = 0;
  for (const auto& m : r.slots) {
    myEnergy += m.energy.total;
    myBase += m.baseline_energy;
    myDeficit += m.offered - m.served;
    myGrid += m.energy.grid_draw;
    ASSERT_EQ(m.energy.total, m.energy.harvested_used + m.energy.grid_draw);
    for (const auto b : m.battery) {
      ASSERT_GE(b, 0.0);
      ASSERT_LE(b, small().site.battery_capacity);
    }
  }
  EXPECT_NEAR(myEnergy, r.total_energy, 1e-9 * myEnergy);
  EXPECT_NEAR(myBase, r.baseline_energy, 1e-9 * myBase);
  EXPECT_NEAR(myDeficit, r.total_deficit, 1e-9);
  EXPECT_NEAR(myGrid, r.total_grid_draw, 1e-9 * (1 + myGrid));
  EXPECT_NEAR(savings(r.total_energy, r.baseline_energy), r.mean_savings, 1e-9);
  EXPECT_EQ(24u, r.hourly_savings.size());
  EXPECT_EQ(3u, r.load_rmse.size());
  EXPECT_EQ(0.0, r.load_rmse[0]);
}

TEST_F(TestSimulator, test_scale_invariance) {
  auto c = small();
  // exactly representable after scaling, like the defaults
  c.site.bs_active_power = 4.5;
  c.site.vm_idle         = 0.875;
  c.weights.energy_norm  = 37;
  const auto a = run(c, oracle());
  c.site                 = c.site.scaledEnergy(7);
  c.weights.energy_norm *= 7;
  const auto b = run(c, oracle());
  ASSERT_EQ(a.slots.size(), b.slots.size());
  for (std::size_t t = 0; t < a.slots.size(); ++t) {
    ASSERT_EQ(a.slots[t].action, b.slots[t].action) << t;
  }
  EXPECT_EQ(a.mean_savings, b.mean_savings);
}

TEST_F(TestSimulator, test_enaam_t1_oracle_not_worse_than_reactive) {
  auto c       = small();
  c.llc        = LlcConfig{1, 1000, false, false};
  const auto e = run(c, oracle());
  c.policy     = Policy::Reactive;
  const auto r = run(c, oracle());
  double myEnaam = 0, myReactive = 0;
  for (std::size_t t = 0; t < e.slots.size(); ++t) {
    myEnaam += e.slots[t].realized_cost;
    myReactive += r.slots[t].realized_cost;
  }
  EXPECT_LE(myEnaam, myReactive);
  EXPECT_GT(e.mean_savings, r.mean_savings);
}

TEST_F(TestSimulator, test_reactive_serves_everything) {
  auto c   = small();
  c.policy = Policy::Reactive;
  const auto r = run(c);
  EXPECT_EQ(0.0, r.mean_qos);
  EXPECT_GT(r.mean_savings, 0.0);
}

TEST_F(TestSimulator, test_lstm_run) {
  auto c                          = small();
  c.traces.load.synth.day_count   = 4;
  c.traces.energy.synth.day_count = 4;
  c.eval_begin                    = 144;
  c.forecaster.hidden_dim         = 6;
  c.forecaster.window             = 12;
  c.forecaster.train.epochs       = 3;
  const auto r = run(c);
  ASSERT_EQ(48u, r.slots.size());
  for (const auto& m : r.slots) {
    ASSERT_EQ(3u, m.load_forecast.size());
    for (const auto v : m.load_forecast) {
      ASSERT_GE(v, 0.0);
      ASSERT_LE(v, 1.0);
    }
  }
  EXPECT_EQ(3u, r.energy_rmse.size());
  EXPECT_GT(r.load_rmse[0], 0.0);
}

TEST_F(TestSimulator, test_window_underrun) {
  auto c       = small();
  c.eval_begin = 10;
  RunOptions myOptions;
  myOptions.forecasters =
      Forecasters{LstmModel::random(4, 24, 1), LstmModel::random(4, 24, 2)};
  try {
    run(c, myOptions);
    FAIL() << "expected RuntimeError";
  } catch (const RuntimeError& aErr) {
    EXPECT_NE(std::string::npos, std::string(aErr.what()).find("slot 10"))
        << aErr.what();
  }
}

TEST_F(TestSimulator, test_invalid_configs) {
  auto c     = small();
  c.eval_end = 1000;
  EXPECT_THROW(run(c, oracle()), ValidationError);
  c                        = small();
  c.traces.load.path       = "/nonexistent/load.csv";
  EXPECT_THROW(run(c, oracle()), ValidationError);
  c                        = small();
  c.forecaster.mode        = ForecastMode::Load;
  c.forecaster.load_model  = "/nonexistent/a.json";
  c.forecaster.energy_model = "/nonexistent/b.json";
  EXPECT_THROW(run(c), ValidationError);
  c                        = small();
  c.forecaster.mode        = ForecastMode::Load;
  EXPECT_THROW(run(c), ValidationError);
  c                         = small();
  c.traces.energy.synth.day_count = 2;
  EXPECT_THROW(run(c, oracle()), ValidationError);
}

TEST_F(TestSimulator, test_compare) {
  auto c   = small();
  c.policy = Policy::NoManagement;
  const auto myAlone = compare({c});
  ASSERT_EQ(1u, myAlone.size());
  EXPECT_EQ(0.0, myAlone[0].mean_savings);

  auto d   = small();
  d.policy = Policy::Reactive;
  const auto myTwice = compare({d, d});
  ASSERT_EQ(2u, myTwice.size());
  EXPECT_EQ(myTwice[0].mean_savings, myTwice[1].mean_savings);
  EXPECT_EQ(myTwice[0].total_grid_draw, myTwice[1].total_grid_draw);
  EXPECT_EQ(49.0, myTwice[0].reference_savings);

  auto e = d;
  e.seed = 7;
  EXPECT_THROW(compare({d, e}), ValidationError);
  e                              = d;
  e.traces.load.synth.noise_sigma = 0.1;
  EXPECT_THROW(compare({d, e}), ValidationError);
  EXPECT_THROW(compare({}), ValidationError);
}

} // namespace greenedge
