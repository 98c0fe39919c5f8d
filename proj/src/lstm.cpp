#include "greenedge/lstm.hpp"

#include "greenedge/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace greenedge {

namespace {

constexpr int kModelVersion = 1;

Eigen::VectorXd sigmoid(const Eigen::VectorXd& aX) {
  return aX.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Eigen::VectorXd tanhOf(const Eigen::VectorXd& aX) {
  return aX.unaryExpr([](double v) { return std::tanh(v); });
}

double checksum(const LstmParams& aParams) {
  const auto myFlat = aParams.flatten();
  double     mySum  = 0;
  for (std::size_t i = 0; i < myFlat.size(); ++i) {
    mySum += myFlat[i] * static_cast<double>((i % 7) + 1);
  }
  return mySum;
}

nlohmann::json tensorToJson(const Eigen::MatrixXd& aMatrix) {
  std::vector<double> myData;
  myData.reserve(aMatrix.size());
  for (Eigen::Index r = 0; r < aMatrix.rows(); ++r) {
    for (Eigen::Index c = 0; c < aMatrix.cols(); ++c) {
      myData.push_back(aMatrix(r, c));
    }
  }
  return {{"shape", {aMatrix.rows(), aMatrix.cols()}}, {"data", myData}};
}

Eigen::MatrixXd tensorFromJson(const nlohmann::json& aDoc,
                               const std::string&    aName,
                               const Eigen::Index    aRows,
                               const Eigen::Index    aCols) {
  if (not aDoc.contains(aName)) {
    throw ValidationError("model document lacks tensor '" + aName + "'");
  }
  const auto& myTensor = aDoc.at(aName);
  const auto  myShape  = myTensor.at("shape").get<std::vector<Eigen::Index>>();
  if (myShape.size() != 2 or myShape[0] != aRows or myShape[1] != aCols) {
    throw ValidationError("tensor '" + aName + "' has unexpected shape");
  }
  const auto myData = myTensor.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(myData.size()) != aRows * aCols) {
    throw ValidationError("tensor '" + aName +
                          "' data length does not match its shape");
  }
  Eigen::MatrixXd myMatrix(aRows, aCols);
  for (Eigen::Index r = 0; r < aRows; ++r) {
    for (Eigen::Index c = 0; c < aCols; ++c) {
      myMatrix(r, c) = myData[r * aCols + c];
    }
  }
  return myMatrix;
}

} // namespace

LstmParams LstmParams::zeros(const int aHiddenDim) {
  if (aHiddenDim < 1) {
    throw ValidationError("hidden_dim must be >= 1");
  }
  LstmParams myParams;
  myParams.input_weights     = Eigen::MatrixXd::Zero(4 * aHiddenDim, 1);
  myParams.recurrent_weights = Eigen::MatrixXd::Zero(4 * aHiddenDim, aHiddenDim);
  myParams.gate_bias         = Eigen::VectorXd::Zero(4 * aHiddenDim);
  myParams.readout_weights   = Eigen::VectorXd::Zero(aHiddenDim);
  myParams.readout_bias      = 0;
  return myParams;
}

std::size_t LstmParams::size() const noexcept {
  return input_weights.size() + recurrent_weights.size() + gate_bias.size() +
         readout_weights.size() + 1;
}

bool LstmParams::allFinite() const {
  return input_weights.allFinite() and recurrent_weights.allFinite() and
         gate_bias.allFinite() and readout_weights.allFinite() and
         std::isfinite(readout_bias);
}

double LstmParams::squaredNorm() const {
  return input_weights.squaredNorm() + recurrent_weights.squaredNorm() +
         gate_bias.squaredNorm() + readout_weights.squaredNorm() +
         readout_bias * readout_bias;
}

std::vector<double> LstmParams::flatten() const {
  std::vector<double> myFlat;
  myFlat.reserve(size());
  const auto myAppend = [&myFlat](const Eigen::MatrixXd& aM) {
    for (Eigen::Index r = 0; r < aM.rows(); ++r) {
      for (Eigen::Index c = 0; c < aM.cols(); ++c) {
        myFlat.push_back(aM(r, c));
      }
    }
  };
  myAppend(input_weights);
  myAppend(recurrent_weights);
  myAppend(gate_bias);
  myAppend(readout_weights);
  myFlat.push_back(readout_bias);
  return myFlat;
}

void LstmParams::assign(std::span<const double> aFlat) {
  if (aFlat.size() != size()) {
    throw ValidationError("flat parameter vector has wrong length");
  }
  std::size_t myPos     = 0;
  const auto  myReadOne = [&](auto& aM) {
    for (Eigen::Index r = 0; r < aM.rows(); ++r) {
      for (Eigen::Index c = 0; c < aM.cols(); ++c) {
        aM(r, c) = aFlat[myPos++];
      }
    }
  };
  myReadOne(input_weights);
  myReadOne(recurrent_weights);
  myReadOne(gate_bias);
  myReadOne(readout_weights);
  readout_bias = aFlat[myPos];
}

LstmParams& LstmParams::operator*=(const double aScale) {
  input_weights *= aScale;
  recurrent_weights *= aScale;
  gate_bias *= aScale;
  readout_weights *= aScale;
  readout_bias *= aScale;
  return *this;
}

void LstmParams::axpy(const double aScale, const LstmParams& aOther) {
  input_weights += aScale * aOther.input_weights;
  recurrent_weights += aScale * aOther.recurrent_weights;
  gate_bias += aScale * aOther.gate_bias;
  readout_weights += aScale * aOther.readout_weights;
  readout_bias += aScale * aOther.readout_bias;
}

bool LstmParams::operator==(const LstmParams& aOther) const {
  return input_weights == aOther.input_weights and
         recurrent_weights == aOther.recurrent_weights and
         gate_bias == aOther.gate_bias and
         readout_weights == aOther.readout_weights and
         readout_bias == aOther.readout_bias;
}

LstmModel LstmModel::zeros(const int aHiddenDim, const int aWindow) {
  LstmModel myModel;
  myModel.window = aWindow;
  myModel.params = LstmParams::zeros(aHiddenDim);
  myModel.validate();
  return myModel;
}

LstmModel LstmModel::random(const int           aHiddenDim,
                            const int           aWindow,
                            const std::uint64_t aSeed) {
  auto            myModel = zeros(aHiddenDim, aWindow);
  std::mt19937_64 myRng(aSeed);
  const auto      myScale = 1.0 / std::sqrt(static_cast<double>(aHiddenDim));
  std::uniform_real_distribution<double> myDist(-myScale, myScale);

  auto& p = myModel.params;
  for (Eigen::Index i = 0; i < p.input_weights.size(); ++i) {
    p.input_weights(i) = myDist(myRng);
  }
  for (Eigen::Index i = 0; i < p.recurrent_weights.size(); ++i) {
    p.recurrent_weights(i) = myDist(myRng);
  }
  for (Eigen::Index i = 0; i < p.readout_weights.size(); ++i) {
    p.readout_weights(i) = myDist(myRng);
  }
  p.gate_bias.segment(aHiddenDim, aHiddenDim).setOnes();
  p.readout_bias = 0.5;
  return myModel;
}

void LstmModel::validate() const {
  const auto H = params.hiddenDim();
  if (window < 1) {
    throw ValidationError("window must be >= 1");
  }
  if (H < 1 or params.input_weights.rows() != 4 * H or
      params.input_weights.cols() != 1 or
      params.recurrent_weights.rows() != 4 * H or
      params.recurrent_weights.cols() != H or params.gate_bias.size() != 4 * H) {
    throw ValidationError("LSTM parameter shapes are inconsistent");
  }
  if (not params.allFinite()) {
    throw ValidationError("LSTM parameters contain NaN or Inf");
  }
}

void TrainConfig::validate() const {
  if (not(learning_rate > 0)) {
    throw ValidationError("learning_rate must be > 0");
  }
  if (epochs < 1) {
    throw ValidationError("epochs must be >= 1");
  }
  if (not(grad_clip_norm > 0)) {
    throw ValidationError("grad_clip_norm must be > 0");
  }
  if (early_stop_patience < 1) {
    throw ValidationError("early_stop_patience must be >= 1");
  }
  if (not(validation_fraction >= 0 and validation_fraction < 1)) {
    throw ValidationError("validation_fraction must lie in [0,1)");
  }
}

Dataset makeWindows(std::span<const double> aSeries, const int aWindow) {
  if (aWindow < 1) {
    throw ValidationError("window must be >= 1");
  }
  if (aSeries.size() <= static_cast<std::size_t>(aWindow)) {
    throw ValidationError("series of length " + std::to_string(aSeries.size()) +
                          " is too short for window " +
                          std::to_string(aWindow));
  }
  Dataset myData;
  myData.reserve(aSeries.size() - aWindow);
  for (std::size_t t = aWindow; t < aSeries.size(); ++t) {
    myData.push_back(
        {std::vector<double>(aSeries.begin() + (t - aWindow),
                             aSeries.begin() + t),
         aSeries[t]});
  }
  return myData;
}

Dataset makeWindows(const Trace& aTrace, const int aWindow) {
  return makeWindows(std::span<const double>(aTrace.values()), aWindow);
}

ForwardResult forward(const LstmModel&              aModel,
                      const std::span<const double> aWindow) {
  if (aWindow.size() != static_cast<std::size_t>(aModel.window)) {
    throw ValidationError("input window has length " +
                          std::to_string(aWindow.size()) + ", model expects " +
                          std::to_string(aModel.window));
  }
  const auto  H = aModel.hiddenDim();
  const auto& p = aModel.params;

  ForwardResult myResult;
  auto&         c = myResult.cache;
  c.hidden_dim     = H;
  c.param_checksum = checksum(p);
  c.inputs.assign(aWindow.begin(), aWindow.end());
  c.cell.push_back(Eigen::VectorXd::Zero(H));
  c.hidden.push_back(Eigen::VectorXd::Zero(H));

  for (const auto x : aWindow) {
    const Eigen::VectorXd z =
        p.input_weights.col(0) * x + p.recurrent_weights * c.hidden.back() +
        p.gate_bias;
    c.input_gate.push_back(sigmoid(z.segment(0, H)));
    c.forget_gate.push_back(sigmoid(z.segment(H, H)));
    c.candidate.push_back(tanhOf(z.segment(2 * H, H)));
    c.output_gate.push_back(sigmoid(z.segment(3 * H, H)));
    c.cell.push_back(c.forget_gate.back().cwiseProduct(c.cell.back()) +
                     c.input_gate.back().cwiseProduct(c.candidate.back()));
    c.hidden.push_back(
        c.output_gate.back().cwiseProduct(tanhOf(c.cell.back())));
  }

  c.raw_output          = p.readout_weights.dot(c.hidden.back()) + p.readout_bias;
  myResult.prediction   = std::clamp(c.raw_output, 0.0, 1.0);
  // keep divergence visible instead of clamping inf to a valid value
  if (not std::isfinite(c.raw_output)) {
    myResult.prediction = c.raw_output;
  }
  return myResult;
}

BackwardResult backward(const LstmModel&    aModel,
                        const ForwardCache& aCache,
                        const double        aTarget) {
  const auto H = aModel.hiddenDim();
  const auto W = aCache.inputs.size();
  if (aCache.hidden_dim != H or W != static_cast<std::size_t>(aModel.window) or
      aCache.hidden.size() != W + 1 or aCache.cell.size() != W + 1 or
      aCache.param_checksum != checksum(aModel.params)) {
    throw ContractError("forward cache does not belong to this model");
  }
  const auto& p = aModel.params;

  BackwardResult myResult;
  myResult.gradients = LstmParams::zeros(H);
  auto& g            = myResult.gradients;

  const auto myErr = aCache.raw_output - aTarget;
  myResult.loss    = myErr * myErr;
  const auto dy    = 2.0 * myErr;

  g.readout_weights = dy * aCache.hidden.back();
  g.readout_bias    = dy;

  Eigen::VectorXd dh = dy * p.readout_weights;
  Eigen::VectorXd dc = Eigen::VectorXd::Zero(H);
  Eigen::VectorXd dz(4 * H);

  for (std::size_t s = W; s-- > 0;) {
    const auto& i      = aCache.input_gate[s];
    const auto& f      = aCache.forget_gate[s];
    const auto& cand   = aCache.candidate[s];
    const auto& o      = aCache.output_gate[s];
    const auto& cPrev  = aCache.cell[s];
    const auto& hPrev  = aCache.hidden[s];
    const Eigen::VectorXd tanhC = tanhOf(aCache.cell[s + 1]);

    const Eigen::VectorXd dOut = dh.cwiseProduct(tanhC);
    dc += dh.cwiseProduct(o).cwiseProduct(
        (1.0 - tanhC.array().square()).matrix());

    dz.segment(0, H) = dc.cwiseProduct(cand).cwiseProduct(
        i.cwiseProduct((1.0 - i.array()).matrix()));
    dz.segment(H, H) = dc.cwiseProduct(cPrev).cwiseProduct(
        f.cwiseProduct((1.0 - f.array()).matrix()));
    dz.segment(2 * H, H) =
        dc.cwiseProduct(i).cwiseProduct((1.0 - cand.array().square()).matrix());
    dz.segment(3 * H, H) =
        dOut.cwiseProduct(o.cwiseProduct((1.0 - o.array()).matrix()));

    g.input_weights.col(0) += dz * aCache.inputs[s];
    g.recurrent_weights.noalias() += dz * hPrev.transpose();
    g.gate_bias += dz;

    dh = p.recurrent_weights.transpose() * dz;
    dc = dc.cwiseProduct(f);
  }
  return myResult;
}

void clipGradients(LstmParams& aGradients, const double aMaxNorm) {
  const auto myNorm = std::sqrt(aGradients.squaredNorm());
  if (myNorm > aMaxNorm) {
    aGradients *= aMaxNorm / myNorm;
  }
}

double meanSquaredLoss(const LstmModel& aModel, const Dataset& aData) {
  if (aData.empty()) {
    return 0;
  }
  double mySum = 0;
  for (const auto& mySample : aData) {
    const auto myErr =
        forward(aModel, mySample.input).cache.raw_output - mySample.target;
    mySum += myErr * myErr;
  }
  return mySum / static_cast<double>(aData.size());
}

TrainResult train(const Dataset&     aData,
                  const TrainConfig& aConfig,
                  const int          aHiddenDim) {
  aConfig.validate();
  if (aData.empty()) {
    throw ValidationError("cannot train on an empty dataset");
  }
  const auto myWindow = static_cast<int>(aData.front().input.size());
  for (const auto& mySample : aData) {
    if (static_cast<int>(mySample.input.size()) != myWindow) {
      throw ValidationError("dataset windows have different lengths");
    }
  }

  // Chronological hold-out; tiny datasets validate on the training set.
  auto myValSize = static_cast<std::size_t>(
      std::floor(aData.size() * aConfig.validation_fraction));
  if (aData.size() - myValSize < 1) {
    myValSize = 0;
  }
  const Dataset myTrain(aData.begin(), aData.end() - myValSize);
  const Dataset myVal =
      myValSize > 0 ? Dataset(aData.end() - myValSize, aData.end()) : myTrain;

  TrainResult myResult;
  myResult.model = LstmModel::random(aHiddenDim, myWindow, aConfig.seed);
  auto myModel   = myResult.model;

  myResult.initial_train_loss = meanSquaredLoss(myModel, myTrain);
  auto myBestVal              = meanSquaredLoss(myModel, myVal);
  int  mySinceBest            = 0;

  std::mt19937_64          myRng(aConfig.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> myOrder(myTrain.size());
  std::iota(myOrder.begin(), myOrder.end(), std::size_t{0});

  for (int myEpoch = 0; myEpoch < aConfig.epochs; ++myEpoch) {
    std::shuffle(myOrder.begin(), myOrder.end(), myRng);
    for (const auto myIdx : myOrder) {
      const auto& mySample = myTrain[myIdx];
      const auto  myFwd    = forward(myModel, mySample.input);
      auto        myBwd    = backward(myModel, myFwd.cache, mySample.target);
      if (not std::isfinite(myBwd.loss)) {
        std::ostringstream myMsg;
        myMsg << "training diverged at epoch " << myEpoch
              << " (non-finite loss); learning rate "
              << aConfig.learning_rate << " is likely too high";
        throw RuntimeError(myMsg.str());
      }
      clipGradients(myBwd.gradients, aConfig.grad_clip_norm);
      myModel.params.axpy(-aConfig.learning_rate, myBwd.gradients);
      if (not myModel.params.allFinite()) {
        throw RuntimeError("training produced non-finite parameters at epoch " +
                           std::to_string(myEpoch));
      }
    }

    const auto myTrainLoss = meanSquaredLoss(myModel, myTrain);
    const auto myValLoss   = meanSquaredLoss(myModel, myVal);
    if (not std::isfinite(myTrainLoss) or not std::isfinite(myValLoss)) {
      throw RuntimeError("training diverged at epoch " +
                         std::to_string(myEpoch) +
                         " (non-finite loss); lower the learning rate");
    }
    myResult.train_loss.push_back(myTrainLoss);
    myResult.validation_loss.push_back(myValLoss);

    if (myValLoss < myBestVal) {
      myBestVal           = myValLoss;
      myResult.model      = myModel;
      myResult.best_epoch = myEpoch;
      mySinceBest         = 0;
    } else if (++mySinceBest >= aConfig.early_stop_patience) {
      break;
    }
  }
  return myResult;
}

Forecast forecastHorizon(const LstmModel&              aModel,
                         const std::span<const double> aHistory,
                         const int                     aHorizon) {
  if (aHorizon < 1) {
    throw ValidationError("forecast horizon must be >= 1");
  }
  if (aHistory.size() < static_cast<std::size_t>(aModel.window)) {
    throw ValidationError("history of length " +
                          std::to_string(aHistory.size()) +
                          " is shorter than the model window " +
                          std::to_string(aModel.window));
  }
  std::vector<double> myWindow(aHistory.end() - aModel.window, aHistory.end());
  Forecast            myForecast;
  myForecast.means.reserve(aHorizon);
  for (int k = 0; k < aHorizon; ++k) {
    const auto myPrediction =
        std::clamp(forward(aModel, myWindow).prediction, 0.0, 1.0);
    myForecast.means.push_back(myPrediction);
    myWindow.erase(myWindow.begin());
    myWindow.push_back(myPrediction);
  }
  return myForecast;
}

double rmse(const std::span<const double> aPredictions,
            const std::span<const double> aActuals) {
  if (aPredictions.size() != aActuals.size()) {
    throw ValidationError("rmse: length mismatch");
  }
  if (aPredictions.empty()) {
    throw ValidationError("rmse: empty input");
  }
  double mySum = 0;
  for (std::size_t i = 0; i < aPredictions.size(); ++i) {
    const auto myErr = aPredictions[i] - aActuals[i];
    mySum += myErr * myErr;
  }
  return std::sqrt(mySum / static_cast<double>(aPredictions.size()));
}

HorizonEvaluation evaluateHorizons(const LstmModel&              aModel,
                                   const std::span<const double> aSeries,
                                   std::size_t                   aBegin,
                                   const std::size_t             aEnd,
                                   const int                     aMaxHorizon) {
  if (aMaxHorizon < 1) {
    throw ValidationError("max horizon must be >= 1");
  }
  if (aEnd > aSeries.size() or aBegin >= aEnd) {
    throw ValidationError("evaluation range is empty or out of bounds");
  }
  aBegin = std::max<std::size_t>(aBegin, aModel.window);
  if (aBegin + aMaxHorizon > aEnd) {
    throw ValidationError("evaluation range too short for the horizon");
  }

  std::vector<std::vector<double>> myPred(aMaxHorizon), myPersist(aMaxHorizon),
      myActual(aMaxHorizon);
  HorizonEvaluation myEval;
  for (std::size_t t = aBegin; t + aMaxHorizon <= aEnd; ++t) {
    const auto myForecast =
        forecastHorizon(aModel, aSeries.subspan(0, t), aMaxHorizon);
    for (int k = 0; k < aMaxHorizon; ++k) {
      myPred[k].push_back(myForecast.means[k]);
      myPersist[k].push_back(aSeries[t - 1]);
      myActual[k].push_back(aSeries[t + k]);
    }
    ++myEval.origins;
  }
  for (int k = 0; k < aMaxHorizon; ++k) {
    myEval.rmse.push_back(rmse(myPred[k], myActual[k]));
    myEval.persistence_rmse.push_back(rmse(myPersist[k], myActual[k]));
  }
  return myEval;
}

nlohmann::json toJson(const LstmModel& aModel) {
  const auto& p = aModel.params;
  return {
      {"format", "greenedge-lstm"},
      {"version", kModelVersion},
      {"input_dim", 1},
      {"hidden_dim", aModel.hiddenDim()},
      {"window", aModel.window},
      {"gate_order", {"input", "forget", "candidate", "output"}},
      {"tensors",
       {{"input_weights", tensorToJson(p.input_weights)},
        {"recurrent_weights", tensorToJson(p.recurrent_weights)},
        {"gate_bias", tensorToJson(p.gate_bias)},
        {"readout_weights", tensorToJson(p.readout_weights.transpose())},
        {"readout_bias",
         tensorToJson(Eigen::MatrixXd::Constant(1, 1, p.readout_bias))}}},
  };
}

LstmModel modelFromJson(const nlohmann::json& aDoc) {
  try {
    if (aDoc.at("format").get<std::string>() != "greenedge-lstm") {
      throw ValidationError("not an LSTM model document");
    }
    const auto myVersion = aDoc.at("version").get<int>();
    if (myVersion != kModelVersion) {
      throw ValidationError("unsupported model version " +
                            std::to_string(myVersion));
    }
    if (aDoc.at("input_dim").get<int>() != 1) {
      throw ValidationError("only input_dim 1 is supported");
    }
    const auto H = aDoc.at("hidden_dim").get<int>();
    auto myModel = LstmModel::zeros(H, aDoc.at("window").get<int>());
    const auto& t = aDoc.at("tensors");
    auto&       p = myModel.params;
    p.input_weights     = tensorFromJson(t, "input_weights", 4 * H, 1);
    p.recurrent_weights = tensorFromJson(t, "recurrent_weights", 4 * H, H);
    p.gate_bias         = tensorFromJson(t, "gate_bias", 4 * H, 1);
    p.readout_weights =
        tensorFromJson(t, "readout_weights", 1, H).transpose();
    p.readout_bias = tensorFromJson(t, "readout_bias", 1, 1)(0, 0);
    myModel.validate();
    return myModel;
  } catch (const nlohmann::json::exception& aErr) {
    throw ValidationError(std::string("malformed model document: ") +
                          aErr.what());
  }
}

void saveModel(const std::filesystem::path& aPath, const LstmModel& aModel) {
  std::ofstream myStream(aPath);
  if (not myStream) {
    throw RuntimeError("cannot write model file: " + aPath.string());
  }
  myStream << toJson(aModel).dump(1) << '\n';
}

LstmModel loadModel(const std::filesystem::path& aPath) {
  std::ifstream myStream(aPath);
  if (not myStream) {
    throw RuntimeError("cannot open model file: " + aPath.string());
  }
  nlohmann::json myDoc;
  try {
    myStream >> myDoc;
  } catch (const nlohmann::json::exception& aErr) {
    throw ValidationError("cannot parse model file " + aPath.string() + ": " +
                          aErr.what());
  }
  return modelFromJson(myDoc);
}

} // namespace greenedge
