#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "cono/errors.hpp"
#include "cono/ops.hpp"
#include "cono/train.hpp"

namespace cono {

namespace {

double squared_norm(const ComplexTensor& x) {
  double s = 0.0;
  for (const auto& z : x.data()) s += std::norm(z);
  return s;
}

std::vector<std::pair<double, double>> channel_moments(const GridDataset& ds, bool inputs) {
  const std::size_t channels = inputs ? ds.in_channels : ds.out_channels;
  std::vector<std::pair<double, double>> out(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    double sum = 0.0, sq = 0.0, count = 0.0;
    for (const auto& s : ds.samples) {
      const ComplexTensor& f = inputs ? s.input : s.output;
      const std::size_t points = f.size() / channels;
      for (std::size_t p = 0; p < points; ++p) {
        const double v = f[c * points + p].real();
        sum += v;
        sq += v * v;
        count += 1.0;
      }
    }
    const double mean = sum / count;
    const double var = std::max(0.0, sq / count - mean * mean);
    const double sd = std::sqrt(var);
    out[c] = {mean, sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0};
  }
  return out;
}

std::string parameter_norms(ConoModel& model) {
  std::ostringstream os;
  for (const auto* p : model.params().all()) {
    const double n = std::sqrt(squared_norm(p->value));
    os << "\n  " << p->name << " |w|=" << n;
  }
  return os.str();
}

double cosine_lr(const TrainOptions& opt, std::size_t step, std::size_t total) {
  if (!opt.cosine || total == 0) return opt.lr;
  return 0.5 * opt.lr * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / static_cast<double>(total)));
}

void check_compatible(const ConoModel& model, const GridDataset& ds, const char* which) {
  if (ds.size() == 0) throw std::invalid_argument(std::string("fit: ") + which + " dataset is empty");
  ds.validate();
  const auto& c = model.config();
  if (ds.in_channels != c.in_channels || ds.out_channels != c.out_channels ||
      ds.grid.spatial_dims() != c.spatial_dims())
    throw ShapeError(std::string("fit: ") + which + " dataset channels/dims do not match the model");
}

}  // namespace

double relative_l2(const std::vector<ComplexTensor>& pred, const std::vector<ComplexTensor>& target) {
  if (pred.size() != target.size())
    throw std::invalid_argument("relative_l2: " + std::to_string(pred.size()) + " predictions for " +
                                std::to_string(target.size()) + " targets");
  if (pred.empty()) throw std::invalid_argument("relative_l2: no samples");
  double total = 0.0;
  for (std::size_t j = 0; j < pred.size(); ++j) {
    if (pred[j].shape() != target[j].shape())
      throw ShapeError("relative_l2: prediction " + shape_str(pred[j].shape()) + " vs target " +
                       shape_str(target[j].shape()));
    const double den = squared_norm(target[j]);
    if (!(den > 0.0)) throw std::invalid_argument("relative_l2: target " + std::to_string(j) + " has zero norm");
    total += squared_norm(cono::sub(pred[j], target[j])) / den;
  }
  return total / static_cast<double>(pred.size());
}

Normalization fit_normalization(const GridDataset& ds) {
  if (ds.size() == 0) throw std::invalid_argument("fit_normalization: empty dataset");
  Normalization n;
  for (auto [m, s] : channel_moments(ds, true)) {
    n.in_shift.push_back(m);
    n.in_scale.push_back(s);
  }
  for (auto [m, s] : channel_moments(ds, false)) {
    n.out_shift.push_back(m);
    n.out_scale.push_back(s);
  }
  return n;
}

std::vector<ComplexTensor> predict_all(const ConoModel& model, const GridDataset& ds, std::size_t threads) {
  std::vector<ComplexTensor> out(ds.size());
  parallel_for(ds.size(), threads, [&](std::size_t i) { out[i] = model.predict(ds.samples[i].input); });
  return out;
}

double evaluate(const ConoModel& model, const GridDataset& ds, std::optional<std::size_t> at_resolution,
                std::size_t threads) {
  if (ds.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  const bool change = at_resolution && std::any_of(ds.grid.sizes.begin(), ds.grid.sizes.end(),
                                                   [&](std::size_t s) { return s != *at_resolution; });
  const GridDataset& data = change ? resample(ds, *at_resolution) : ds;
  const std::vector<ComplexTensor> pred = predict_all(model, data, threads);
  std::vector<ComplexTensor> target;
  target.reserve(data.size());
  for (const auto& s : data.samples) target.push_back(s.output);
  return relative_l2(pred, target);
}

std::vector<double> mean_alphas(const ConoModel& model) {
  const auto per_block = model.alphas();
  std::vector<double> mean(model.config().spatial_dims(), 0.0);
  if (per_block.empty()) return mean;
  for (const auto& a : per_block)
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += a[d];
  for (auto& m : mean) m /= static_cast<double>(per_block.size());
  return mean;
}

RunReport fit(ConoModel& model, const GridDataset& train, const GridDataset& val, const TrainOptions& opt) {
  check_compatible(model, train, "training");
  check_compatible(model, val, "validation");
  if (opt.batch == 0) throw std::invalid_argument("fit: batch must be positive");
  const auto t0 = std::chrono::steady_clock::now();

  model.set_normalization(fit_normalization(train));
  model.set_native_grid(train.grid.sizes);

  std::vector<ad::Parameter*> params = model.trainable();
  Adam adam(params, AdamOptions{opt.lr, 0.9, 0.999, 1e-8, opt.weight_decay});

  RunReport report;
  report.config_hash = model.config().hash();
  report.seed = opt.seed;

  const std::size_t n = train.size();
  const std::size_t batches = (n + opt.batch - 1) / opt.batch;
  const std::size_t total_steps = batches * opt.epochs;
  std::vector<std::size_t> order(n);
  std::mt19937_64 rng(opt.seed ^ 0x5eed5eed5eed5eedULL);

  std::vector<ComplexTensor> best;
  for (const auto* p : params) best.push_back(p->value);
  report.best_val = std::numeric_limits<double>::infinity();

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i) {
      const std::size_t j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
      std::swap(order[i - 1], order[j]);
    }

    double epoch_loss = 0.0;
    double lr = opt.lr;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t begin = b * opt.batch, end = std::min(n, begin + opt.batch);
      const std::size_t count = end - begin;
      std::vector<double> losses(count);
      std::vector<std::vector<std::pair<ad::Parameter*, ComplexTensor>>> grads(count);
      parallel_for(count, opt.threads, [&](std::size_t k) {
        const GridSample& s = train.samples[order[begin + k]];
        ad::Tape tape;
        ad::Var loss = ad::squared_error_ratio(model.forward(tape, s.input), s.output);
        losses[k] = loss.value()[0].real();
        tape.backward(loss);
        grads[k] = tape.parameter_grads();
      });

      double batch_loss = 0.0;
      for (double l : losses) batch_loss += l;
      if (!std::isfinite(batch_loss))
        throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(b) + "; parameter norms:" + parameter_norms(model));
      epoch_loss += batch_loss;

      // Sum in sample order so the result does not depend on the thread count.
      const double inv = 1.0 / static_cast<double>(count);
      for (auto* p : params) p->grad = ComplexTensor(p->value.shape());
      for (auto& per_sample : grads)
        for (auto& [p, g] : per_sample)
          if (!p->frozen && p->grad.shape() == g.shape()) p->grad.axpy(inv, g);

      lr = cosine_lr(opt, step, total_steps);
      adam.set_lr(lr);
      adam.step();
      ++step;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train = epoch_loss / static_cast<double>(n);
    rec.val = evaluate(model, val, std::nullopt, opt.threads);
    rec.lr = lr;
    rec.alphas = model.alphas();
    if (!std::isfinite(rec.val))
      throw NumericalError("non-finite validation error at epoch " + std::to_string(epoch) +
                           "; parameter norms:" + parameter_norms(model));
    if (rec.val < report.best_val) {
      report.best_val = rec.val;
      report.best_epoch = epoch;
      for (std::size_t k = 0; k < params.size(); ++k) best[k] = params[k]->value;
    }
    report.epochs.push_back(rec);
    if (opt.on_epoch) opt.on_epoch(report.epochs.back());
  }

  for (std::size_t k = 0; k < params.size(); ++k) {
    params[k]->value = best[k];
    params[k]->grad = ComplexTensor();
  }
  if (opt.epochs == 0) report.best_val = evaluate(model, val, std::nullopt, opt.threads);
  report.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::string RunReport::to_text() const {
  std::ostringstream os;
  os << "config_hash=" << config_hash << "\n";
  os << "seed=" << seed << "\n";
  os << "epochs=" << epochs.size() << "\n";
  for (const auto& e : epochs) {
    os << "epoch." << e.epoch << ".train=" << format_double(e.train) << "\n";
    os << "epoch." << e.epoch << ".val=" << format_double(e.val) << "\n";
    os << "epoch." << e.epoch << ".lr=" << format_double(e.lr) << "\n";
    for (std::size_t b = 0; b < e.alphas.size(); ++b) {
      os << "epoch." << e.epoch << ".alpha." << b << "=";
      for (std::size_t d = 0; d < e.alphas[b].size(); ++d) os << (d ? "," : "") << format_double(e.alphas[b][d]);
      os << "\n";
    }
  }
  os << "best_epoch=" << best_epoch << "\n";
  os << "best_val=" << format_double(best_val) << "\n";
  if (test) os << "test=" << format_double(*test) << "\n";
  os << "wall_s=" << format_double(wall_s) << "\n";
  return os.str();
}

}  // namespace cono
