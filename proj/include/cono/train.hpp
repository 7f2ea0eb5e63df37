#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cono/model.hpp"
#include "cono/pdedata.hpp"

namespace cono {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // decoupled
};

/// Bias-corrected Adam; Re and Im parts are independent coordinates.
class Adam {
 public:
  Adam(std::vector<ad::Parameter*> params, AdamOptions opt = {});

  /// Applies one update from each parameter's grad.
  void step();
  void set_lr(double lr) noexcept { opt_.lr = lr; }
  double lr() const noexcept { return opt_.lr; }
  std::uint64_t steps() const noexcept { return t_; }

 private:
  std::vector<ad::Parameter*> params_;
  std::vector<std::vector<double>> m_, v_;  // interleaved Re/Im
  AdamOptions opt_;
  std::uint64_t t_ = 0;
};

/// Mean over samples of ||pred - target||^2 / ||target||^2.
/// Throws std::invalid_argument on a zero-norm target or shape mismatch.
double relative_l2(const std::vector<ComplexTensor>& pred, const std::vector<ComplexTensor>& target);

struct EpochRecord {
  std::size_t epoch = 0;
  double train = 0.0;  // mean training loss over the epoch
  double val = 0.0;
  double lr = 0.0;
  std::vector<std::vector<double>> alphas;  // per block, per dim
};

struct TrainOptions {
  double lr = 1e-3;
  bool cosine = true;
  std::size_t epochs = 50;
  std::size_t batch = 16;
  std::uint64_t seed = 0;
  double weight_decay = 0.0;
  std::size_t threads = 0;
  /// Called after every epoch with the epoch record just appended.
  std::function<void(const EpochRecord&)> on_epoch;
};

struct RunReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val = 0.0;
  std::optional<double> test;
  double wall_s = 0.0;
  std::string config_hash;
  std::uint64_t seed = 0;

  /// Line-oriented key=value log.
  std::string to_text() const;
};

/// Fits normalisation and native grid from `train`, then minimises the
/// mean relative L2 by mini-batch Adam. The parameters of the epoch with the
/// lowest validation error are restored at the end. A non-finite loss
/// throws NumericalError with epoch, batch and parameter norms.
RunReport fit(ConoModel& model, const GridDataset& train, const GridDataset& val, const TrainOptions& opt);

/// Per-channel mean / std of inputs and outputs.
Normalization fit_normalization(const GridDataset& ds);

/// Predictions for every sample.
std::vector<ComplexTensor> predict_all(const ConoModel& model, const GridDataset& ds, std::size_t threads = 0);

/// Mean relative L2 on `ds`; with `at_resolution` both inputs and targets
/// are spectrally resampled to that grid first (targets already on it are used as is).
double evaluate(const ConoModel& model, const GridDataset& ds, std::optional<std::size_t> at_resolution = {},
                std::size_t threads = 0);

/// Mean alpha per spatial dim over blocks.
std::vector<double> mean_alphas(const ConoModel& model);

}  // namespace cono
