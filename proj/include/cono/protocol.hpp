#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cono/train.hpp"

namespace cono {

/// Line-oriented `key = value` text; `#` starts a comment. Throws
/// FormatError naming the line on malformed or duplicated keys.
std::map<std::string, std::string> parse_kv(const std::string& text);
std::map<std::string, std::string> read_kv_file(const std::filesystem::path& path);

/// One CSV row of a protocol table.
struct ProtocolRow {
  std::string condition;
  std::uint64_t seed = 0;
  double rel_l2 = 0.0;
  double std = 0.0;  // over repeats
  double wall_s = 0.0;
  std::vector<double> alpha;  // mean per spatial dim
  std::string config_hash;
};

/// condition,seed,rel_l2,std,wall_s,alpha_x,alpha_y,config_hash
std::string csv_header();
std::string csv_line(const ProtocolRow& row);
std::string to_csv(const std::vector<ProtocolRow>& rows);

/// What a training protocol trains: model, optimiser and repeat count.
/// Repeat r uses seed + r for the model init and the data order.
struct Experiment {
  ConoConfig model;
  TrainOptions train;
  std::size_t repeats = 1;
};

/// Models of one training condition, one per repeat.
struct TrainedSet {
  std::vector<std::unique_ptr<ConoModel>> models;
  std::uint64_t seed = 0;
  std::size_t threads = 0;
  double wall_s = 0.0;
};

TrainedSet train_models(const Experiment& ex, const GridDataset& train, const GridDataset& val);
/// Mean and std of the test error over the set's models.
ProtocolRow score(const std::string& condition, const TrainedSet& set, const GridDataset& test);

/// Train on `train`, select on `val`, score on `test`; mean and std over repeats.
ProtocolRow train_row(const std::string& condition, const Experiment& ex, const GridDataset& train,
                      const GridDataset& val, const GridDataset& test);

/// Scores a trained model on test sets at other grids. `native_data` maps a
/// grid size to a dataset generated there; missing sizes are resampled from
/// `test`. The condition records which target was used.
std::vector<ProtocolRow> protocol_superres(const ConoModel& model, const GridDataset& test,
                                           const std::vector<std::size_t>& resolutions,
                                           const std::vector<GridDataset>& native_data, std::size_t threads = 0);

/// One row per dataset, labelled by its `beta` metadata.
std::vector<ProtocolRow> protocol_ood_beta(const ConoModel& model, const std::vector<GridDataset>& sets,
                                           std::size_t threads = 0);

/// Trains on the first round(f * n) samples of `ds` for each fraction f;
/// val and test are the last 10% + 10% of the seeded split.
std::vector<ProtocolRow> protocol_data_efficiency(const GridDataset& ds, const Experiment& ex,
                                                  const std::vector<double>& fractions, std::uint64_t split_seed);

/// clean / train-noisy / test-noisy / both for every gamma.
std::vector<ProtocolRow> protocol_noise(const GridDataset& train, const GridDataset& val, const GridDataset& test,
                                        const Experiment& ex, const std::vector<double>& gammas,
                                        std::uint64_t noise_seed);

/// full, vanilla, fourier, no_alias and no_bias variants of ex.model.
std::vector<ProtocolRow> protocol_ablation(const GridDataset& train, const GridDataset& val, const GridDataset& test,
                                           const Experiment& ex);

}  // namespace cono
