#include "cono/errors.hpp"
#include "cono/layers.hpp"
#include "cono/ops.hpp"

namespace cono {

ComplexUNet ComplexUNet::create(ParameterStore& store, const std::string& name, std::size_t channels,
                                std::size_t levels, std::size_t spatial_dims, std::uint64_t seed, Activation act,
                                ResampleFilter filter) {
  ComplexUNet u;
  u.channels = channels;
  u.levels = levels;
  u.activation = act;
  u.filter = filter;
  for (std::size_t l = 0; l < levels; ++l) {
    const std::size_t c = channels << l;
    u.encoder.push_back(ComplexConv::create(store, name + ".enc" + std::to_string(l), c, 2 * c, 3, spatial_dims, seed));
  }
  const std::size_t deep = channels << levels;
  u.bottleneck = ComplexConv::create(store, name + ".mid", deep, deep, 3, spatial_dims, seed);
  for (std::size_t l = 0; l < levels; ++l) {
    const std::size_t c = channels << l;
    // input: upsampled deeper features (2c) concatenated with the skip (2c)
    u.decoder.push_back(ComplexConv::create(store, name + ".dec" + std::to_string(l), 4 * c, c, 3, spatial_dims, seed));
  }
  u.head = ComplexConv::create(store, name + ".head", channels, channels, 1, spatial_dims, seed);
  return u;
}

ad::Var ComplexUNet::operator()(ad::Tape& tape, ad::Var x) const {
  const auto extents = spatial_extents(x.value());
  for (std::size_t n : extents)
    if (n % (std::size_t{1} << levels) != 0)
      throw ShapeError("complex_unet: extent " + std::to_string(n) + " is not divisible by 2^" + std::to_string(levels));
  if (x.value().extent(0) != channels)
    throw ShapeError("complex_unet: expected " + std::to_string(channels) + " channels, got " + shape_str(x.shape()));

  std::vector<ad::Var> skips;
  ad::Var h = x;
  for (std::size_t l = 0; l < levels; ++l) {
    h = ad::activate(encoder[l](tape, h), activation, filter);
    skips.push_back(h);
    h = ad::downsample2(h, filter);
  }
  h = ad::activate(bottleneck(tape, h), activation, filter);
  for (std::size_t l = levels; l-- > 0;) {
    h = ad::concat_channels(ad::upsample2(h, filter), skips[l]);
    h = ad::activate(decoder[l](tape, h), activation, filter);
  }
  return head(tape, h);
}

}  // namespace cono
