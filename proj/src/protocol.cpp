#include "cono/protocol.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "cono/errors.hpp"

namespace cono {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string grid_label(std::size_t n, std::size_t dims) {
  std::string s = std::to_string(n);
  for (std::size_t d = 1; d < dims; ++d) s += "x" + std::to_string(n);
  return s;
}

}  // namespace

std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("config line " + std::to_string(number) + ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw FormatError("config line " + std::to_string(number) + ": empty key");
    if (!kv.emplace(key, value).second)
      throw FormatError("config line " + std::to_string(number) + ": duplicate key '" + key + "'");
  }
  return kv;
}

std::map<std::string, std::string> read_kv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_kv(os.str());
}

std::string csv_header() { return "condition,seed,rel_l2,std,wall_s,alpha_x,alpha_y,config_hash"; }

std::string csv_line(const ProtocolRow& row) {
  std::ostringstream os;
  os << row.condition << ',' << row.seed << ',' << format_double(row.rel_l2) << ',' << format_double(row.std) << ','
     << format_double(row.wall_s) << ',';
  os << (row.alpha.size() > 0 ? format_double(row.alpha[0]) : "") << ',';
  os << (row.alpha.size() > 1 ? format_double(row.alpha[1]) : "") << ',';
  os << row.config_hash;
  return os.str();
}

std::string to_csv(const std::vector<ProtocolRow>& rows) {
  std::string out = csv_header() + "\n";
  for (const auto& r : rows) out += csv_line(r) + "\n";
  return out;
}

TrainedSet train_models(const Experiment& ex, const GridDataset& train, const GridDataset& val) {
  if (ex.repeats == 0) throw std::invalid_argument("repeats must be at least 1");
  const auto t0 = std::chrono::steady_clock::now();
  TrainedSet set;
  set.seed = ex.train.seed;
  set.threads = ex.train.threads;
  for (std::size_t r = 0; r < ex.repeats; ++r) {
    ConoConfig cfg = ex.model;
    cfg.seed = ex.model.seed + r;
    TrainOptions opt = ex.train;
    opt.seed = ex.train.seed + r;
    auto model = std::make_unique<ConoModel>(cfg);
    fit(*model, train, val, opt);
    set.models.push_back(std::move(model));
  }
  set.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return set;
}

ProtocolRow score(const std::string& condition, const TrainedSet& set, const GridDataset& test) {
  if (set.models.empty()) throw std::invalid_argument("score: no trained models");
  const auto t0 = std::chrono::steady_clock::now();
  ProtocolRow row;
  row.condition = condition;
  row.seed = set.seed;
  row.config_hash = set.models.front()->config().hash();
  const double k = static_cast<double>(set.models.size());
  std::vector<double> scores;
  row.alpha.assign(set.models.front()->config().spatial_dims(), 0.0);
  for (const auto& m : set.models) {
    scores.push_back(evaluate(*m, test, std::nullopt, set.threads));
    const auto a = mean_alphas(*m);
    for (std::size_t d = 0; d < row.alpha.size(); ++d) row.alpha[d] += a[d] / k;
  }
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= k;
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  row.rel_l2 = mean;
  row.std = scores.size() > 1 ? std::sqrt(var / (k - 1.0)) : 0.0;
  row.wall_s = set.wall_s + std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

ProtocolRow train_row(const std::string& condition, const Experiment& ex, const GridDataset& train,
                      const GridDataset& val, const GridDataset& test) {
  return score(condition, train_models(ex, train, val), test);
}

std::vector<ProtocolRow> protocol_superres(const ConoModel& model, const GridDataset& test,
                                           const std::vector<std::size_t>& resolutions,
                                           const std::vector<GridDataset>& native_data, std::size_t threads) {
  std::vector<ProtocolRow> rows;
  const std::size_t dims = test.grid.spatial_dims();
  for (std::size_t res : resolutions) {
    const auto t0 = std::chrono::steady_clock::now();
    const GridDataset* native = nullptr;
    for (const auto& ds : native_data)
      if (ds.grid.sizes == std::vector<std::size_t>(dims, res)) native = &ds;
    ProtocolRow row;
    if (native) {
      row.rel_l2 = evaluate(model, *native, std::nullopt, threads);
      row.condition = "res=" + grid_label(res, dims) + ";target=native";
    } else {
      row.rel_l2 = evaluate(model, test, res, threads);
      row.condition = "res=" + grid_label(res, dims) + ";target=resampled";
    }
    row.seed = model.config().seed;
    row.alpha = mean_alphas(model);
    row.config_hash = model.config().hash();
    row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(row);
  }
  return rows;
}

std::vector<ProtocolRow> protocol_ood_beta(const ConoModel& model, const std::vector<GridDataset>& sets,
                                           std::size_t threads) {
  std::vector<ProtocolRow> rows;
  for (const auto& ds : sets) {
    const auto it = ds.meta.find("beta");
    if (it == ds.meta.end()) throw std::invalid_argument("ood_beta: dataset without 'beta' metadata");
    const auto t0 = std::chrono::steady_clock::now();
    ProtocolRow row;
    row.condition = "beta=" + it->second;
    row.rel_l2 = evaluate(model, ds, std::nullopt, threads);
    row.seed = model.config().seed;
    row.alpha = mean_alphas(model);
    row.config_hash = model.config().hash();
    row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(row);
  }
  return rows;
}

std::vector<ProtocolRow> protocol_data_efficiency(const GridDataset& ds, const Experiment& ex,
                                                  const std::vector<double>& fractions, std::uint64_t split_seed) {
  auto [train, val, test] = split(ds, split_seed);
  std::vector<ProtocolRow> rows;
  for (double f : fractions) {
    const auto count = static_cast<std::size_t>(std::llround(f * static_cast<double>(ds.size())));
    if (!(f > 0.0) || count == 0 || count > train.size())
      throw std::invalid_argument("data_efficiency: fraction " + format_double(f) + " gives " +
                                  std::to_string(count) + " samples; the training split holds " +
                                  std::to_string(train.size()));
    rows.push_back(train_row("fraction=" + format_double(f), ex, take(train, count), val, test));
  }
  return rows;
}

std::vector<ProtocolRow> protocol_noise(const GridDataset& train, const GridDataset& val, const GridDataset& test,
                                        const Experiment& ex, const std::vector<double>& gammas,
                                        std::uint64_t noise_seed) {
  for (double g : gammas)
    if (!(g >= 0.0)) throw std::invalid_argument("noise: gamma must be >= 0, got " + format_double(g));
  // The clean models serve the clean and test-noisy rows of every gamma.
  const TrainedSet clean = train_models(ex, train, val);
  std::vector<ProtocolRow> rows;
  for (double g : gammas) {
    const std::string tag = ";gamma=" + format_double(g);
    const GridDataset noisy_test = add_noise(test, g, noise_seed + 2);
    const TrainedSet noisy = train_models(ex, add_noise(train, g, noise_seed), add_noise(val, g, noise_seed + 1));
    rows.push_back(score("clean" + tag, clean, test));
    rows.push_back(score("train-noisy" + tag, noisy, test));
    rows.push_back(score("test-noisy" + tag, clean, noisy_test));
    rows.push_back(score("both" + tag, noisy, noisy_test));
  }
  return rows;
}

std::vector<ProtocolRow> protocol_ablation(const GridDataset& train, const GridDataset& val, const GridDataset& test,
                                           const Experiment& ex) {
  std::vector<ProtocolRow> rows;
  for (Ablation a : {Ablation::full, Ablation::vanilla, Ablation::fourier, Ablation::no_alias, Ablation::no_bias}) {
    Experiment variant = ex;
    variant.model.ablation = a;
    rows.push_back(train_row(to_string(a), variant, train, val, test));
  }
  return rows;
}

}  // namespace cono
