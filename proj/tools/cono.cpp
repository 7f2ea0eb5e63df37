#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "cono/errors.hpp"
#include "cono/frft.hpp"
#include "cono/protocol.hpp"

namespace fs = std::filesystem;
using namespace cono;

namespace {

constexpr int kUsage = 2;
constexpr int kNumerical = 3;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

GridDataset load_data(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("dataset not found: " + path);
  return read_gfd(path);
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write " + path);
  out << text;
}

// ---- model and training settings shared by train / protocol ----------------

// Flags and config-file keys share names; flags win over the file.
struct Settings {
  std::string config_file;
  std::map<std::string, std::string> flags;
  std::size_t threads = 0;

  void add(CLI::App* app) {
    app->add_option("--config", config_file, "key = value file (flags override it)")->check(CLI::ExistingFile);
    for (const char* key : {"epochs", "lr", "batch", "seed", "weight_decay", "schedule", "width", "lift_dim",
                            "blocks", "modes", "unet_levels", "alpha_init", "ablation", "filter_taps", "filter_beta"}) {
      std::string flag = std::string("--") + key;
      for (auto& ch : flag)
        if (ch == '_') ch = '-';
      app->add_option_function<std::string>(flag, [this, key](const std::string& v) { flags[key] = v; });
    }
  }

  std::map<std::string, std::string> merged() const {
    auto kv = config_file.empty() ? std::map<std::string, std::string>{} : read_kv_file(config_file);
    for (const auto& [k, v] : flags) kv[k] = v;
    return kv;
  }
};

double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty()) throw UsageError("bad value for " + key + ": '" + v + "'");
  return x;
}

std::uint64_t parse_count(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw UsageError("bad value for " + key + ": '" + v + "'");
  return std::stoull(v);
}

Experiment make_experiment(const Settings& s, const GridDataset& data, std::size_t repeats) {
  auto kv = s.merged();
  Experiment ex;
  ex.repeats = repeats;
  ex.train.threads = s.threads;
  std::map<std::string, std::string> model_kv;
  for (const auto& [k, v] : kv) {
    if (k == "epochs") ex.train.epochs = parse_count(k, v);
    else if (k == "lr") ex.train.lr = parse_real(k, v);
    else if (k == "batch") ex.train.batch = parse_count(k, v);
    else if (k == "weight_decay") ex.train.weight_decay = parse_real(k, v);
    else if (k == "schedule") {
      if (v != "cosine" && v != "constant") throw UsageError("schedule must be cosine or constant, got '" + v + "'");
      ex.train.cosine = v == "cosine";
    } else if (k == "seed") {
      ex.train.seed = parse_count(k, v);
      model_kv[k] = v;
    } else {
      model_kv[k] = v;
    }
  }
  const std::size_t dims = data.grid.spatial_dims();
  ConoConfig base;
  base.in_channels = data.in_channels;
  base.out_channels = data.out_channels;
  base.modes.assign(dims, 16);
  base.alpha_init.assign(dims, 1.0);
  try {
    ex.model = ConoConfig::from_map(model_kv, base);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  // a single value applies to every spatial dim
  if (ex.model.modes.size() == 1) ex.model.modes.assign(dims, ex.model.modes[0]);
  if (ex.model.alpha_init.size() == 1) ex.model.alpha_init.assign(dims, ex.model.alpha_init[0]);
  ex.model.in_channels = data.in_channels;
  ex.model.out_channels = data.out_channels;
  try {
    ex.model.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return ex;
}

struct Splits {
  GridDataset train, val, test;
};

Splits make_splits(const std::vector<std::string>& data, const std::string& val, const std::string& test,
                   std::uint64_t seed) {
  if (data.size() != 1) throw UsageError("expected exactly one --data file");
  Splits s;
  if (val.empty() != test.empty()) throw UsageError("--val and --test go together");
  if (!val.empty()) {
    s.train = load_data(data[0]);
    s.val = load_data(val);
    s.test = load_data(test);
  } else {
    std::tie(s.train, s.val, s.test) = split(load_data(data[0]), seed);
  }
  return s;
}

// ---- gen --------------------------------------------------------------------

struct GenArgs {
  std::string pde, out;
  std::size_t n = 64, nx = 0;
  double nu = 0.1, dt_out = 0.1, beta = 1.0, a_low = 3.0, a_high = 12.0, tau = 2.5, sigma = 1.0;
  std::uint64_t seed = 0;
};

int run_gen(const GenArgs& a, std::size_t threads) {
  GridDataset ds;
  GaussianRandomField grf;
  grf.tau = a.tau;
  grf.sigma = a.sigma;
  if (a.pde == "burgers") {
    BurgersOptions o;
    o.n_samples = a.n;
    o.nx = a.nx ? a.nx : 128;
    o.nu = a.nu;
    o.dt_out = a.dt_out;
    o.seed = a.seed;
    o.grf = grf;
    o.threads = threads;
    if (!(o.nu > 0.0)) throw UsageError("--nu must be positive");
    if (o.nx < 4 || (o.nx & (o.nx - 1)) != 0) throw UsageError("--nx must be a power of two for burgers");
    ds = gen_burgers(o);
  } else {
    DarcyOptions o;
    o.n_samples = a.n;
    o.nx = a.nx ? a.nx : 64;
    o.beta = a.beta;
    o.seed = a.seed;
    o.a_low = a.a_low;
    o.a_high = a.a_high;
    o.grf = grf;
    o.threads = threads;
    if (o.nx < 16) throw UsageError("--nx must be at least 16 for darcy");
    if (!std::isfinite(o.beta)) throw UsageError("--beta must be finite");
    ds = gen_darcy(o);
  }
  const std::string out = a.out.empty() ? a.pde + ".gfd" : a.out;
  write_gfd(ds, out);
  std::cout << "wrote " << out << "\n";
  std::cout << "n = " << ds.size() << "\ngrid =";
  for (auto s : ds.grid.sizes) std::cout << " " << s;
  std::cout << "\n";
  for (const auto& [k, v] : ds.meta) std::cout << k << " = " << v << "\n";
  if (ds.size() > 0) std::cout << "input_variance = " << format_double(ds.input_variance()) << "\n";
  return 0;
}

// ---- train / eval -------------------------------------------------------------

struct TrainArgs {
  std::vector<std::string> data;
  std::string val, test, out_dir = "run";
};

int run_train(const TrainArgs& a, const Settings& s) {
  const auto kv = s.merged();
  const std::uint64_t seed = kv.contains("seed") ? parse_count("seed", kv.at("seed")) : 0;
  Splits sp = make_splits(a.data, a.val, a.test, seed);
  Experiment ex = make_experiment(s, sp.train, 1);
  ex.train.on_epoch = [](const EpochRecord& e) {
    std::cerr << "epoch " << e.epoch << " train " << format_double(e.train) << " val " << format_double(e.val) << "\n";
  };
  ConoModel model(ex.model);
  RunReport report = fit(model, sp.train, sp.val, ex.train);
  report.test = evaluate(model, sp.test, std::nullopt, s.threads);

  fs::create_directories(a.out_dir);
  save_checkpoint(model, fs::path(a.out_dir) / "model.ckpt");
  ProtocolRow row;
  row.condition = "test";
  row.seed = ex.train.seed;
  row.rel_l2 = *report.test;
  row.wall_s = report.wall_s;
  row.alpha = mean_alphas(model);
  row.config_hash = report.config_hash;
  write_text((fs::path(a.out_dir) / "metrics.csv").string(), to_csv({row}));
  write_text((fs::path(a.out_dir) / "train.log").string(), ex.model.to_text() + report.to_text());
  std::cout << csv_line(row) << "\n";
  return 0;
}

struct EvalArgs {
  std::string ckpt, data, csv;
  std::size_t resolution = 0;
};

std::unique_ptr<ConoModel> load_model(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("checkpoint not found: " + path);
  return load_checkpoint(path);
}

int run_eval(const EvalArgs& a, std::size_t threads) {
  auto model = load_model(a.ckpt);
  const GridDataset ds = load_data(a.data);
  std::vector<ProtocolRow> rows;
  if (a.resolution) {
    rows = protocol_superres(*model, ds, {a.resolution}, {ds}, threads);
  } else {
    ProtocolRow row;
    row.condition = "eval";
    row.seed = model->config().seed;
    row.rel_l2 = evaluate(*model, ds, std::nullopt, threads);
    row.alpha = mean_alphas(*model);
    row.config_hash = model->config().hash();
    rows.push_back(row);
  }
  write_text(a.csv, to_csv(rows));
  return 0;
}

// ---- protocol -------------------------------------------------------------------

struct ProtocolArgs {
  std::string kind, ckpt, val, test, csv;
  std::vector<std::string> data;
  std::vector<std::size_t> resolutions{32, 128};
  std::vector<double> fractions{0.8, 0.6, 0.4, 0.2};
  std::vector<double> gammas{0.01, 0.05};
  std::size_t repeats = 1;
  std::uint64_t noise_seed = 0;
};

int run_protocol(const ProtocolArgs& a, const Settings& s) {
  std::vector<ProtocolRow> rows;
  if (a.kind == "superres" || a.kind == "ood_beta") {
    if (a.ckpt.empty()) throw UsageError(a.kind + " needs --ckpt");
    if (a.data.empty()) throw UsageError(a.kind + " needs --data");
    auto model = load_model(a.ckpt);
    std::vector<GridDataset> sets;
    for (const auto& p : a.data) sets.push_back(load_data(p));
    if (a.kind == "superres") {
      // the first file is the test set at the training grid, the rest are native data at other grids
      rows = protocol_superres(*model, sets.front(), a.resolutions, {sets.begin() + 1, sets.end()}, s.threads);
    } else {
      rows = protocol_ood_beta(*model, sets, s.threads);
    }
  } else {
    const auto kv = s.merged();
    const std::uint64_t seed = kv.contains("seed") ? parse_count("seed", kv.at("seed")) : 0;
    if (a.kind == "data_efficiency") {
      if (a.data.size() != 1) throw UsageError("data_efficiency needs exactly one --data file");
      const GridDataset ds = load_data(a.data[0]);
      rows = protocol_data_efficiency(ds, make_experiment(s, ds, a.repeats), a.fractions, seed);
    } else {
      Splits sp = make_splits(a.data, a.val, a.test, seed);
      const Experiment ex = make_experiment(s, sp.train, a.repeats);
      rows = a.kind == "noise" ? protocol_noise(sp.train, sp.val, sp.test, ex, a.gammas, a.noise_seed)
                               : protocol_ablation(sp.train, sp.val, sp.test, ex);
    }
  }
  write_text(a.csv, to_csv(rows));
  return 0;
}

// ---- frft -----------------------------------------------------------------------

struct FrftArgs {
  std::string in, out;
  double alpha = 1.0;
  bool check = false, dft = false;
  std::size_t n = 64;
  std::uint64_t seed = 0;
};

ComplexTensor read_signal(const std::string& path) {
  if (!fs::exists(path)) throw UsageError("signal file not found: " + path);
  std::ifstream probe(path, std::ios::binary);
  char magic[4] = {};
  probe.read(magic, 4);
  if (probe.gcount() == 4 && std::string(magic, 4) == "GFD1") {
    const GridDataset ds = read_gfd(path);
    if (ds.size() == 0) throw UsageError("GFD file holds no samples: " + path);
    const ComplexTensor& x = ds.samples[0].input;
    const std::size_t points = x.size() / x.extent(0);
    ComplexTensor y(Shape(x.shape().begin() + 1, x.shape().end()));
    for (std::size_t i = 0; i < points; ++i) y[i] = x[i];
    return y;
  }
  std::ifstream in(path);
  std::vector<cplx> values;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double re = 0.0, im = 0.0;
    if (!(ls >> re)) throw UsageError(path + ":" + std::to_string(number) + ": expected 're [im]'");
    if (!(ls >> im)) {
      if (!ls.eof()) throw UsageError(path + ":" + std::to_string(number) + ": expected 're [im]'");
      im = 0.0;
    }
    std::string rest;
    if (ls >> rest) throw UsageError(path + ":" + std::to_string(number) + ": trailing text '" + rest + "'");
    values.emplace_back(re, im);
  }
  if (values.size() < 4) throw UsageError("signal needs at least 4 samples: " + path);
  const std::size_t n = values.size();
  return ComplexTensor({n}, std::move(values));
}

std::string signal_text(const ComplexTensor& y) {
  std::string out;
  char buf[64];
  for (const auto& z : y.data()) {
    std::snprintf(buf, sizeof buf, "%.17g %.17g\n", z.real(), z.imag());
    out += buf;
  }
  return out;
}

ComplexTensor transform_all(const ComplexTensor& x, double alpha, bool dft) {
  ComplexTensor y = x;
  for (std::size_t d = 0; d < x.rank(); ++d)
    y = dft ? centered_dft(y, d, false) : frft::apply(*frft::build_plan(x.extent(d)), y, d, alpha);
  return y;
}

double rel(const ComplexTensor& a, const ComplexTensor& b) { return sub(a, b).norm() / b.norm(); }

int run_frft_check(std::size_t n, std::uint64_t seed) {
  if (n < 4) throw UsageError("--n must be at least 4");
  const auto plan = frft::build_plan(n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-2.0, 3.0);
  ComplexTensor x({n});
  for (auto& z : x.data()) z = cplx(g(rng), g(rng));
  const double a = u(rng), b = u(rng);
  auto F = [&](const ComplexTensor& v, double alpha) { return frft::apply(*plan, v, 0, alpha); };

  ComplexTensor parity({n});
  const std::size_t c = n / 2;
  for (std::size_t j = 0; j < n; ++j) parity[(2 * c + n - j) % n] = x[j];

  struct Check {
    const char* name;
    double err, tol;
  };
  const Check checks[] = {
      {"unitarity", std::abs(F(x, a).norm() - x.norm()) / x.norm(), 1e-10},
      {"additivity", rel(F(F(x, b), a), F(x, a + b)), 1e-9},
      {"order0_identity", rel(F(x, 0.0), x), 1e-8},
      {"order1_centered_dft", rel(F(x, 1.0), centered_dft(x, 0, false)), 1e-8},
      {"order2_parity", rel(F(x, 2.0), parity), 1e-8},
      {"order4_identity", rel(F(x, 4.0), x), 1e-8},
  };
  bool ok = true;
  for (const auto& ch : checks) {
    const bool pass = ch.err <= ch.tol;
    ok = ok && pass;
    std::printf("%s %s n=%zu err=%.3e tol=%.0e\n", pass ? "PASS" : "FAIL", ch.name, n, ch.err, ch.tol);
  }
  std::printf("orders a=%.6f b=%.6f\n", a, b);
  return ok ? 0 : kNumerical;
}

int run_frft(const FrftArgs& a) {
  if (a.check) return run_frft_check(a.n, a.seed);
  if (a.in.empty()) throw UsageError("frft needs --in (or --check)");
  write_text(a.out, signal_text(transform_all(read_signal(a.in), a.alpha, a.dft)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Complex neural operator: data generation, training, evaluation and protocols"};
  app.require_subcommand(1);
  app.fallthrough();
  std::size_t threads = 0;
  app.add_option("--threads", threads, "worker cap (0: all cores)");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "generate a dataset");
  g->add_option("pde", gen.pde, "burgers or darcy")->required()->check(CLI::IsMember({"burgers", "darcy"}));
  g->add_option("--n", gen.n, "samples");
  g->add_option("--nx", gen.nx, "grid points per dim");
  g->add_option("--nu", gen.nu, "burgers viscosity");
  g->add_option("--dt-out", gen.dt_out, "burgers output time");
  g->add_option("--beta", gen.beta, "darcy forcing");
  g->add_option("--a-low", gen.a_low, "darcy low conductivity");
  g->add_option("--a-high", gen.a_high, "darcy high conductivity");
  g->add_option("--tau", gen.tau, "random field decay exponent");
  g->add_option("--sigma", gen.sigma, "random field std");
  g->add_option("--seed", gen.seed);
  g->add_option("--out", gen.out, "output file (default <pde>.gfd)");

  TrainArgs train;
  Settings train_settings;
  auto* t = app.add_subcommand("train", "train a model");
  t->add_option("--data", train.data, "dataset (split 0.8/0.1/0.1 unless --val/--test)")->required();
  t->add_option("--val", train.val);
  t->add_option("--test", train.test);
  t->add_option("--out-dir", train.out_dir, "checkpoint, metrics.csv and train.log go here");
  train_settings.add(t);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "evaluate a checkpoint");
  e->add_option("--ckpt", ev.ckpt)->required();
  e->add_option("--data", ev.data)->required();
  e->add_option("--resolution", ev.resolution, "zero-shot evaluation grid");
  e->add_option("--csv", ev.csv, "output (default stdout)");

  ProtocolArgs pr;
  Settings protocol_settings;
  auto* p = app.add_subcommand("protocol", "run an experiment protocol");
  p->add_option("kind", pr.kind)
      ->required()
      ->check(CLI::IsMember({"superres", "ood_beta", "data_efficiency", "noise", "ablation"}));
  p->add_option("--ckpt", pr.ckpt);
  p->add_option("--data", pr.data, "dataset file(s)");
  p->add_option("--val", pr.val);
  p->add_option("--test", pr.test);
  p->add_option("--resolutions", pr.resolutions)->delimiter(',');
  p->add_option("--fractions", pr.fractions)->delimiter(',');
  p->add_option("--gammas", pr.gammas)->delimiter(',');
  p->add_option("--repeats", pr.repeats)->check(CLI::PositiveNumber);
  p->add_option("--noise-seed", pr.noise_seed);
  p->add_option("--csv", pr.csv, "output (default stdout)");
  protocol_settings.add(p);

  FrftArgs fr;
  auto* f = app.add_subcommand("frft", "fractional Fourier transform of a signal");
  f->add_option("--alpha", fr.alpha);
  f->add_option("--in", fr.in, "GFD file (first sample, first input channel) or text 're [im]' per line");
  f->add_option("--out", fr.out, "text output (default stdout)");
  f->add_flag("--dft", fr.dft, "centred unitary DFT instead of F^alpha");
  f->add_flag("--check", fr.check, "run the property suite");
  f->add_option("--n", fr.n, "size for --check");
  f->add_option("--seed", fr.seed, "seed for --check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : kUsage;
  }

  try {
    train_settings.threads = protocol_settings.threads = threads;
    if (*g) return run_gen(gen, threads);
    if (*t) return run_train(train, train_settings);
    if (*e) return run_eval(ev, threads);
    if (*p) return run_protocol(pr, protocol_settings);
    if (*f) return run_frft(fr);
  } catch (const NumericalError& err) {
    std::cerr << "numerical failure: " << err.what() << "\n";
    return kNumerical;
  } catch (const std::invalid_argument& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kUsage;
  } catch (const FormatError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kUsage;
  } catch (const fs::filesystem_error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kUsage;
  } catch (const std::exception& err) {
    std::cerr << "internal error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
