#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cono/layers.hpp"

namespace cono {

enum class Ablation { full, vanilla, fourier, no_alias, no_bias };

std::string to_string(Ablation a);
Ablation parse_ablation(const std::string& s);

struct ConoConfig {
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::size_t lift_dim = 16;    // d0
  std::size_t width = 16;       // d1 = d2 = d3 = d4
  std::size_t n_blocks = 1;
  std::vector<std::size_t> modes{16};
  std::size_t unet_levels = 2;
  std::vector<double> alpha_init{1.0};
  Ablation ablation = Ablation::full;
  std::uint64_t seed = 0;
  std::size_t filter_taps = 0;  // 0: ideal sinc
  double filter_beta = 10.0;

  std::size_t spatial_dims() const noexcept { return modes.size(); }
  ResampleFilter filter() const;
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  /// Canonical `key = value` lines (reals in hex-float, so the text is exact).
  std::string to_text() const;
  static ConoConfig from_text(const std::string& text);
  /// Applies known keys; unknown keys throw with the key name.
  static ConoConfig from_map(const std::map<std::string, std::string>& kv, ConoConfig base);
  static ConoConfig from_map(const std::map<std::string, std::string>& kv) { return from_map(kv, ConoConfig{}); }
  /// FNV-1a of to_text(), as 16 hex digits.
  std::string hash() const;

  bool operator==(const ConoConfig&) const = default;
};

/// Fixed per-channel affine maps fitted on training data: the network sees
/// (a - in_shift) / in_scale and its output is mapped back by out_scale, out_shift.
struct Normalization {
  std::vector<double> in_shift, in_scale, out_shift, out_scale;
  bool empty() const noexcept { return in_shift.empty(); }
  bool operator==(const Normalization&) const = default;
};

class ConoModel {
 public:
  explicit ConoModel(ConoConfig config);
  ConoModel(const ConoModel&) = delete;
  ConoModel& operator=(const ConoModel&) = delete;

  const ConoConfig& config() const noexcept { return config_; }
  ParameterStore& params() noexcept { return store_; }
  const ParameterStore& params() const noexcept { return store_; }
  /// Parameters the optimizer may update.
  std::vector<ad::Parameter*> trainable();

  /// Forward on a real field [C_in, spatial...]; returns a real [C_out, spatial...].
  ad::Var forward(ad::Tape& tape, const ComplexTensor& input) const;
  ComplexTensor predict(const ComplexTensor& input) const;

  /// Learned (or pinned) order per block and dim.
  std::vector<std::vector<double>> alphas() const;

  const Normalization& normalization() const noexcept { return norm_; }
  void set_normalization(Normalization n);

  /// Grid the model was trained on. When set, inputs on other grids are
  /// spectrally resampled to it and the prediction is resampled back.
  const std::vector<std::size_t>& native_grid() const noexcept { return native_; }
  void set_native_grid(std::vector<std::size_t> grid);

  const std::vector<SpectralBlock>& blocks() const noexcept { return blocks_; }

 private:
  ad::Var network(ad::Tape& tape, ad::Var x) const;

  ConoConfig config_;
  ParameterStore store_;
  Normalization norm_;
  std::vector<std::size_t> native_;
  ComplexConv p_in_, p_hidden_, q_conv_, q_skip_, r_, r_out_, q_out_conv_, p_out_hidden_, p_out_;
  bool q_has_skip_ = false;
  std::vector<SpectralBlock> blocks_;
};

/// Checkpoint file: "CONO", u32 version, config text, normalisation, native
/// grid, then (name, flags, shape, interleaved f64 Re/Im) per parameter.
void save_checkpoint(const ConoModel& model, const std::filesystem::path& path);
std::unique_ptr<ConoModel> load_checkpoint(const std::filesystem::path& path);
/// Loads parameters into an existing model; the stored config must match.
void load_checkpoint_into(ConoModel& model, const std::filesystem::path& path);

}  // namespace cono
