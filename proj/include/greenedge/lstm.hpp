#pragma once

#include "greenedge/trace.hpp"

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace greenedge {

/// Trainable tensors of a single-layer LSTM with a scalar input and a
/// scalar affine read-out of the last hidden state.
///
/// Gate rows are stacked as [input; forget; candidate; output], each block
/// hidden_dim rows tall, so input_weights is 4H x 1, recurrent_weights is
/// 4H x H and gate_bias has 4H entries.
struct LstmParams {
  Eigen::MatrixXd input_weights;
  Eigen::MatrixXd recurrent_weights;
  Eigen::VectorXd gate_bias;
  Eigen::VectorXd readout_weights;
  double          readout_bias = 0;

  static LstmParams zeros(int aHiddenDim);

  int hiddenDim() const noexcept {
    return static_cast<int>(readout_weights.size());
  }
  std::size_t size() const noexcept;
  bool        allFinite() const;
  double      squaredNorm() const;

  // Flat views in a fixed order, used by finite differences and checksums.
  std::vector<double> flatten() const;
  void                assign(std::span<const double> aFlat);

  LstmParams& operator*=(double aScale);
  // this += aScale * aOther
  void axpy(double aScale, const LstmParams& aOther);

  bool operator==(const LstmParams& aOther) const;
};

struct LstmModel {
  int        window = 24;
  LstmParams params;

  int hiddenDim() const noexcept {
    return params.hiddenDim();
  }

  static LstmModel zeros(int aHiddenDim, int aWindow);
  // Uniform(-1/sqrt(H), 1/sqrt(H)) weights, forget bias 1, read-out bias 0.5.
  static LstmModel random(int aHiddenDim, int aWindow, std::uint64_t aSeed);

  void validate() const;

  bool operator==(const LstmModel&) const = default;
};

struct TrainConfig {
  double        learning_rate       = 0.05;
  int           epochs              = 40;
  double        grad_clip_norm      = 5.0;
  std::uint64_t seed                = 1;
  int           early_stop_patience = 8;
  // Tail fraction of the dataset held out for early stopping.
  double        validation_fraction = 0.2;

  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

struct Sample {
  std::vector<double> input;
  double              target = 0;
};
using Dataset = std::vector<Sample>;

Dataset makeWindows(std::span<const double> aSeries, int aWindow);
Dataset makeWindows(const Trace& aTrace, int aWindow);

// Activations of one forward pass, enough for exact backpropagation.
struct ForwardCache {
  int                          hidden_dim = 0;
  double                       param_checksum = 0;
  std::vector<double>          inputs;
  std::vector<Eigen::VectorXd> input_gate;
  std::vector<Eigen::VectorXd> forget_gate;
  std::vector<Eigen::VectorXd> candidate;
  std::vector<Eigen::VectorXd> output_gate;
  std::vector<Eigen::VectorXd> cell;   // c_0 .. c_W, c_0 = 0
  std::vector<Eigen::VectorXd> hidden; // h_0 .. h_W, h_0 = 0
  double                       raw_output = 0;
};

struct ForwardResult {
  double       prediction = 0; // clamped to [0,1]
  ForwardCache cache;
};

ForwardResult forward(const LstmModel& aModel, std::span<const double> aWindow);

struct BackwardResult {
  LstmParams gradients;
  double     loss = 0;
};

/// Gradients of (raw_output - target)^2. The loss is taken on the
/// unclamped read-out so saturated predictions still receive a gradient;
/// for in-range outputs it coincides with the loss on the prediction.
BackwardResult backward(const LstmModel&    aModel,
                        const ForwardCache& aCache,
                        double              aTarget);

// Rescales in place so the global L2 norm is at most aMaxNorm.
void clipGradients(LstmParams& aGradients, double aMaxNorm);

double meanSquaredLoss(const LstmModel& aModel, const Dataset& aData);

struct TrainResult {
  LstmModel           model;
  std::vector<double> train_loss; // per epoch, after the epoch's updates
  std::vector<double> validation_loss;
  int                 best_epoch = -1; // -1: the initial model was best
  double              initial_train_loss = 0;
};

/// Per-sample SGD with gradient-norm clipping and early stopping on a
/// chronological validation tail. Returns the parameters with the lowest
/// validation loss. Throws RuntimeError if the loss becomes non-finite.
TrainResult train(const Dataset&     aData,
                  const TrainConfig& aConfig,
                  int                aHiddenDim);

struct Forecast {
  std::vector<double> means;

  int horizon() const noexcept {
    return static_cast<int>(means.size());
  }
};

/// Iterated one-step forecasting: each prediction is appended to the window
/// and fed back as the next input.
Forecast forecastHorizon(const LstmModel&        aModel,
                         std::span<const double> aHistory,
                         int                     aHorizon);

double rmse(std::span<const double> aPredictions,
            std::span<const double> aActuals);

/// Accuracy of k-step-ahead forecasts on slots [aBegin, aEnd) of a series,
/// next to the persistence forecast (last observed value). Every horizon is
/// scored on the same set of forecast origins.
struct HorizonEvaluation {
  std::vector<double> rmse;
  std::vector<double> persistence_rmse;
  std::size_t         origins = 0;
};

HorizonEvaluation evaluateHorizons(const LstmModel&        aModel,
                                   std::span<const double> aSeries,
                                   std::size_t             aBegin,
                                   std::size_t             aEnd,
                                   int                     aMaxHorizon);

nlohmann::json toJson(const LstmModel& aModel);
LstmModel      modelFromJson(const nlohmann::json& aDoc);
void           saveModel(const std::filesystem::path& aPath,
                         const LstmModel&             aModel);
LstmModel      loadModel(const std::filesystem::path& aPath);

} // namespace greenedge
