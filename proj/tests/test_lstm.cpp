#include "gradcheck.hpp"

#include "greenedge/error.hpp"
#include "greenedge/lstm.hpp"

#include "gtest/gtest.h"

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

namespace greenedge {

struct TestLstm : public ::testing::Test {
  static std::vector<double> sinusoid(const std::size_t aLength) {
    std::vector<double> myOut;
    for (std::size_t t = 0; t < aLength; ++t) {
      myOut.push_back(0.5 + 0.3 * std::sin(2 * std::numbers::pi * t / 24.0));
    }
    return myOut;
  }

  static TrainConfig quick() {
    TrainConfig myConfig;
    myConfig.epochs = 50;
    return myConfig;
  }
};

TEST_F(TestLstm, test_make_windows) {
  const std::vector<double> myValues = {0.1, 0.2, 0.3, 0.4, 0.5};
  const auto myData = makeWindows(myValues, 3);
  ASSERT_EQ(2u, myData.size());
  EXPECT_EQ((std::vector<double>{0.1, 0.2, 0.3}), myData[0].input);
  EXPECT_EQ(myValues[3], myData[0].target);
  EXPECT_EQ(myValues[4], myData[1].target);
  EXPECT_THROW(makeWindows(myValues, 5), ValidationError);
  EXPECT_THROW(makeWindows(myValues, 0), ValidationError);
}

TEST_F(TestLstm, test_zero_params_predict_bias) {
  auto myModel = LstmModel::zeros(4, 3);
  const std::vector<double> myWindow = {0.2, 0.9, 0.4};
  myModel.params.readout_bias = 0.37;
  EXPECT_EQ(0.37, forward(myModel, myWindow).prediction);
  myModel.params.readout_bias = 1.8;
  EXPECT_EQ(1.0, forward(myModel, myWindow).prediction);
  myModel.params.readout_bias = -0.5;
  EXPECT_EQ(0.0, forward(myModel, myWindow).prediction);
}

TEST_F(TestLstm, test_golden_forward) {
  // value reproduced by an independent numpy implementation of the cell
  const auto myModel = LstmModel::random(4, 5, 7);
  const std::vector<double> myWindow = {0.1, 0.5, 0.9, 0.3, 0.7};
  EXPECT_NEAR(0.48524774295582551, forward(myModel, myWindow).prediction, 1e-14);
  EXPECT_EQ(forward(myModel, myWindow).prediction,
            forward(myModel, myWindow).prediction);
}

TEST_F(TestLstm, test_forward_shape_mismatch) {
  const auto myModel = LstmModel::random(4, 5, 7);
  const std::vector<double> myWindow = {0.1, 0.5};
  EXPECT_THROW(forward(myModel, myWindow), ValidationError);
}

TEST_F(TestLstm, test_gradient_check) {
  std::mt19937_64                        myRng(11);
  std::uniform_real_distribution<double> myUnit(0.0, 1.0);
  for (int k = 0; k < 5; ++k) {
    const auto myModel = LstmModel::random(2 + k, 3 + k % 3, 100 + k);
    std::vector<double> myWindow(myModel.window);
    for (auto& x : myWindow) {
      x = myUnit(myRng);
    }
    EXPECT_LT(testing::gradientCheck(myModel, myWindow, myUnit(myRng)), 1e-4)
        << k;
  }
}

TEST_F(TestLstm, test_zero_gradient_at_target) {
  const auto myModel = LstmModel::random(3, 4, 2);
  const std::vector<double> myWindow = {0.3, 0.1, 0.8, 0.6};
  const auto myFwd = forward(myModel, myWindow);
  const auto myBwd = backward(myModel, myFwd.cache, myFwd.cache.raw_output);
  EXPECT_EQ(0.0, myBwd.loss);
  EXPECT_EQ(0.0, myBwd.gradients.squaredNorm());
}

TEST_F(TestLstm, test_mismatched_cache) {
  const auto myModel = LstmModel::random(3, 4, 2);
  const auto myOther = LstmModel::random(3, 4, 3);
  const std::vector<double> myWindow = {0.3, 0.1, 0.8, 0.6};
  const auto myFwd = forward(myModel, myWindow);
  EXPECT_THROW(backward(myOther, myFwd.cache, 0.5), ContractError);
  EXPECT_THROW(backward(LstmModel::random(5, 4, 2), myFwd.cache, 0.5),
               ContractError);
}

TEST_F(TestLstm, test_clip) {
  auto myGrad = LstmModel::random(4, 3, 1).params;
  myGrad *= 100.0;
  clipGradients(myGrad, 5.0);
  EXPECT_LE(std::sqrt(myGrad.squaredNorm()), 5.0 * (1 + 1e-12));
  auto mySmall = LstmParams::zeros(4);
  mySmall.readout_bias = 0.1;
  const auto myCopy = mySmall;
  clipGradients(mySmall, 5.0);
  EXPECT_EQ(myCopy, mySmall);
}

TEST_F(TestLstm, test_constant_trace) {
  const std::vector<double> mySeries(200, 0.5);
  const auto myResult = train(makeWindows(mySeries, 6), quick(), 8);
  const auto myHeld   = makeWindows(std::vector<double>(40, 0.5), 6);
  std::vector<double> myPred, myActual;
  for (const auto& s : myHeld) {
    myPred.push_back(forward(myResult.model, s.input).prediction);
    myActual.push_back(s.target);
  }
  EXPECT_LT(rmse(myPred, myActual), 0.01);

  const auto myForecast = forecastHorizon(myResult.model, mySeries, 3);
  for (const auto v : myForecast.means) {
    EXPECT_NEAR(0.5, v, 0.01);
  }
}

TEST_F(TestLstm, test_sinusoid_beats_persistence) {
  const auto mySeries = sinusoid(24 * 20);
  const auto myResult =
      train(makeWindows(std::span(mySeries).first(24 * 15), 8), quick(), 8);
  const auto myEval =
      evaluateHorizons(myResult.model, mySeries, 24 * 15, mySeries.size(), 1);
  EXPECT_LT(myEval.rmse[0], myEval.persistence_rmse[0]);
  EXPECT_LE(meanSquaredLoss(myResult.model, makeWindows(std::span(mySeries).first(24 * 15), 8)),
            myResult.initial_train_loss);
}

TEST_F(TestLstm, test_train_deterministic) {
  const auto mySeries = sinusoid(120);
  auto       myConfig = quick();
  myConfig.epochs     = 5;
  const auto a        = train(makeWindows(mySeries, 6), myConfig, 4);
  const auto b        = train(makeWindows(mySeries, 6), myConfig, 4);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.train_loss, b.train_loss);
  myConfig.seed = 2;
  EXPECT_NE(a.model, train(makeWindows(mySeries, 6), myConfig, 4).model);
}

TEST_F(TestLstm, test_train_diverges) {
  const auto mySeries       = sinusoid(120);
  auto       myConfig       = quick();
  myConfig.learning_rate    = 1e200;
  myConfig.grad_clip_norm   = 1e200;
  EXPECT_THROW(train(makeWindows(mySeries, 6), myConfig, 4), RuntimeError);
  EXPECT_THROW(train({}, quick(), 4), ValidationError);
  myConfig                = quick();
  myConfig.learning_rate  = 0;
  EXPECT_THROW(train(makeWindows(mySeries, 6), myConfig, 4), ValidationError);
}

TEST_F(TestLstm, test_forecast_horizon) {
  const auto myModel  = LstmModel::random(4, 5, 9);
  const auto mySeries = sinusoid(30);
  const auto myOne    = forecastHorizon(myModel, mySeries, 1);
  ASSERT_EQ(1, myOne.horizon());
  EXPECT_EQ(forward(myModel, std::span(mySeries).last(5)).prediction,
            myOne.means[0]);
  const auto myTwo   = forecastHorizon(myModel, mySeries, 2);
  const auto myThree = forecastHorizon(myModel, mySeries, 3);
  EXPECT_EQ(myTwo.means[0], myThree.means[0]);
  EXPECT_EQ(myTwo.means[1], myThree.means[1]);
  for (const auto v : myThree.means) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  EXPECT_THROW(forecastHorizon(myModel, std::span(mySeries).first(4), 1),
               ValidationError);
  EXPECT_THROW(forecastHorizon(myModel, mySeries, 0), ValidationError);
}

TEST_F(TestLstm, test_rmse) {
  const std::vector<double> a = {0.0, 0.0};
  const std::vector<double> b = {0.3, 0.4};
  EXPECT_NEAR(0.3536, rmse(a, b), 5e-5);
  EXPECT_EQ(0.0, rmse(b, b));
  EXPECT_THROW(rmse(a, std::vector<double>{0.1}), ValidationError);
  EXPECT_THROW(rmse(std::vector<double>{}, std::vector<double>{}),
               ValidationError);
}

TEST_F(TestLstm, test_json_roundtrip) {
  const auto myModel = LstmModel::random(3, 4, 5);
  const auto myDoc   = toJson(myModel);
  EXPECT_EQ(1, myDoc.at("version").get<int>());
  EXPECT_EQ(myModel, modelFromJson(myDoc));

  const auto myPath =
      std::filesystem::temp_directory_path() / "greenedge_test_model.json";
  saveModel(myPath, myModel);
  EXPECT_EQ(myModel, loadModel(myPath));
  std::filesystem::remove(myPath);

  auto myBad       = myDoc;
  myBad["version"] = 99;
  EXPECT_THROW(modelFromJson(myBad), ValidationError);
  myBad = myDoc;
  myBad.erase("version");
  EXPECT_THROW(modelFromJson(myBad), ValidationError);
  myBad = myDoc;
  myBad["tensors"]["gate_bias"]["data"].push_back(0.0);
  EXPECT_THROW(modelFromJson(myBad), ValidationError);
}

} // namespace greenedge
