#include "voxtherm/models.hpp"

#include <cmath>

#include "voxtherm/error.hpp"
#include "voxtherm/random.hpp"
#include "voxtherm/voxelizer.hpp"

namespace voxtherm {
namespace {

template <class T>
Tensor<T> uniform_tensor(Shape shape, double bound, Rng& rng) {
  Tensor<T> t(std::move(shape));
  for (T& v : t.data()) v = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

void require_spatial_input(const Shape& s, const char* who) {
  if (s.size() != 4 || s[0] != kInputChannels) {
    throw ShapeMismatch(std::string(who) + ": input must be 3 x D x H x W, got " + shape_string(s));
  }
}

}  // namespace

// ---- configs ----------------------------------------------------------------

void FnoConfig::validate() const {
  if (width == 0 || layers == 0 || projection_hidden == 0) {
    throw ValidationError("fno: width, layers and projection_hidden must be >= 1");
  }
  for (auto m : modes) {
    if (m == 0) throw ValidationError("fno: modes must be >= 1");
  }
  if (activation != "gelu") throw ValidationError("fno: unsupported activation '" + activation + "'");
}

std::size_t FnoConfig::parameter_count() const {
  const std::size_t c = width, h = projection_hidden;
  const std::size_t lifting = kInputChannels * c + c;
  const std::size_t per_layer = retained_modes() * c * c * 2 + c * c + c;
  const std::size_t projection = c * h + h + h + 1;
  return lifting + layers * per_layer + projection;
}

void UnetConfig::validate() const {
  if (levels == 0 || base_channels == 0 || multiplier == 0) {
    throw ValidationError("unet: levels, base_channels and multiplier must be >= 1");
  }
  if (kernel % 2 == 0) throw ValidationError("unet: kernel must be odd");
}

std::size_t UnetConfig::channels(std::size_t level) const {
  std::size_t c = base_channels;
  for (std::size_t i = 0; i < level; ++i) c *= multiplier;
  return c;
}

nlohmann::json to_json(const FnoConfig& c) {
  return {{"width", c.width},
          {"layers", c.layers},
          {"modes", c.modes},
          {"projection_hidden", c.projection_hidden},
          {"activation", c.activation}};
}

nlohmann::json to_json(const UnetConfig& c) {
  return {{"levels", c.levels},
          {"base_channels", c.base_channels},
          {"multiplier", c.multiplier},
          {"kernel", c.kernel}};
}

FnoConfig fno_config_from_json(const nlohmann::json& doc) {
  FnoConfig c;
  try {
    c.width = doc.value("width", c.width);
    c.layers = doc.value("layers", c.layers);
    if (doc.contains("modes")) c.modes = doc["modes"].get<std::array<std::size_t, 3>>();
    c.projection_hidden = doc.value("projection_hidden", c.projection_hidden);
    c.activation = doc.value("activation", c.activation);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("fno config: ") + e.what());
  }
  c.validate();
  return c;
}

UnetConfig unet_config_from_json(const nlohmann::json& doc) {
  UnetConfig c;
  try {
    c.levels = doc.value("levels", c.levels);
    c.base_channels = doc.value("base_channels", c.base_channels);
    c.multiplier = doc.value("multiplier", c.multiplier);
    c.kernel = doc.value("kernel", c.kernel);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("unet config: ") + e.what());
  }
  c.validate();
  return c;
}

// ---- Model ------------------------------------------------------------------

template <class T>
std::vector<ad::Var<T>> Model<T>::bind(ad::Tape<T>& tape) const {
  std::vector<ad::Var<T>> vars;
  vars.reserve(params_.size());
  for (const auto& v : params_.values) vars.push_back(tape.parameter(v));
  return vars;
}

template <class T>
Tensor<T> Model<T>::predict(const Tensor<T>& input) const {
  ad::Tape<T> tape;
  auto x = tape.constant(input);
  return forward(tape, x).value();
}

// ---- FNO --------------------------------------------------------------------

template <class T>
Fno<T>::Fno(FnoConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(seed);
  const std::size_t c = cfg_.width, h = cfg_.projection_hidden;
  auto& p = this->params_;
  const double in_bound = 1.0 / std::sqrt(static_cast<double>(kInputChannels));
  const double c_bound = 1.0 / std::sqrt(static_cast<double>(c));
  const double h_bound = 1.0 / std::sqrt(static_cast<double>(h));
  const double spectral_bound = 1.0 / static_cast<double>(c * c);
  p.add("lift.weight", uniform_tensor<T>({c, kInputChannels}, in_bound, rng));
  p.add("lift.bias", Tensor<T>({c}));
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const std::string prefix = "layer" + std::to_string(l);
    p.add(prefix + ".spectral", uniform_tensor<T>({cfg_.retained_modes(), c, c, 2}, spectral_bound, rng));
    p.add(prefix + ".local.weight", uniform_tensor<T>({c, c}, c_bound, rng));
    p.add(prefix + ".local.bias", Tensor<T>({c}));
  }
  p.add("proj1.weight", uniform_tensor<T>({h, c}, c_bound, rng));
  p.add("proj1.bias", Tensor<T>({h}));
  p.add("proj2.weight", uniform_tensor<T>({1, h}, h_bound, rng));
  p.add("proj2.bias", Tensor<T>({1}));
}

template <class T>
ad::Var<T> Fno<T>::spectral_conv(ad::Var<T> v, ad::Var<T> weights,
                                 const std::array<std::size_t, 3>& modes) {
  const Shape& s = v.shape();
  if (s.size() != 4) throw ShapeMismatch("spectral_conv: expected c x D x H x W, got " + shape_string(s));
  auto layout = std::make_shared<const fft::SpectrumLayout>(
      fft::SpectrumLayout::low_modes(s[1], s[2], s[3], modes[0], modes[1], modes[2]));
  return ad::irfft3(ad::spectral_mix(ad::rfft3(v, layout), weights), layout);
}

template <class T>
ad::Var<T> Fno<T>::forward(ad::Tape<T>& tape, ad::Var<T> input) const {
  require_spatial_input(input.shape(), "fno");
  const auto p = this->bind(tape);
  std::size_t k = 0;
  auto next = [&] { return p[k++]; };
  const auto lift_w = next();
  const auto lift_b = next();
  auto v = ad::channel_linear(input, lift_w, lift_b);
  for (std::size_t l = 0; l < cfg_.layers; ++l) {
    const auto r = next();
    const auto w = next();
    const auto b = next();
    v = ad::add(spectral_conv(v, r, cfg_.modes), ad::channel_linear(v, w, b));
    if (l + 1 < cfg_.layers) v = ad::gelu(v);
  }
  const auto q1w = next();
  const auto q1b = next();
  const auto q2w = next();
  const auto q2b = next();
  return ad::channel_linear(ad::gelu(ad::channel_linear(v, q1w, q1b)), q2w, q2b);
}

// ---- U-Net ------------------------------------------------------------------

template <class T>
Unet<T>::Unet(UnetConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(seed);
  auto& p = this->params_;
  const std::size_t k = cfg_.kernel;
  auto conv = [&](const std::string& name, std::size_t in, std::size_t out) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in * k * k * k));
    p.add(name + ".weight", uniform_tensor<T>({out, in, k, k, k}, bound, rng));
    p.add(name + ".bias", Tensor<T>({out}));
  };
  for (std::size_t l = 0; l < cfg_.levels; ++l) {
    const std::size_t in = l == 0 ? kInputChannels : cfg_.channels(l - 1);
    const std::string prefix = "enc" + std::to_string(l);
    conv(prefix + ".conv1", in, cfg_.channels(l));
    conv(prefix + ".conv2", cfg_.channels(l), cfg_.channels(l));
  }
  for (std::size_t l = cfg_.levels - 1; l-- > 0;) {
    const std::string prefix = "dec" + std::to_string(l);
    conv(prefix + ".conv1", cfg_.channels(l + 1) + cfg_.channels(l), cfg_.channels(l));
    conv(prefix + ".conv2", cfg_.channels(l), cfg_.channels(l));
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg_.channels(0)));
  p.add("head.weight", uniform_tensor<T>({1, cfg_.channels(0)}, bound, rng));
  p.add("head.bias", Tensor<T>({1}));
}

template <class T>
ad::Var<T> Unet<T>::forward(ad::Tape<T>& tape, ad::Var<T> input) const {
  require_spatial_input(input.shape(), "unet");
  const std::size_t factor = std::size_t{1} << (cfg_.levels - 1);
  for (std::size_t a = 1; a < 4; ++a) {
    if (input.shape()[a] % factor != 0) {
      throw ShapeMismatch("unet: grid " + shape_string(input.shape()) + " not divisible by " +
                          std::to_string(factor));
    }
  }
  const auto p = this->bind(tape);
  std::size_t k = 0;
  auto conv = [&](ad::Var<T> x, std::size_t stride) {
    const auto w = p[k++];
    const auto b = p[k++];
    return ad::gelu(ad::conv3d(x, w, b, stride));
  };

  std::vector<ad::Var<T>> skips;
  auto v = input;
  for (std::size_t l = 0; l < cfg_.levels; ++l) {
    v = conv(v, l == 0 ? 1 : 2);
    v = conv(v, 1);
    skips.push_back(v);
  }
  for (std::size_t l = cfg_.levels - 1; l-- > 0;) {
    v = ad::concat_channels(ad::upsample2(v), skips[l]);
    v = conv(v, 1);
    v = conv(v, 1);
  }
  const auto hw = p[k++];
  const auto hb = p[k++];
  return ad::channel_linear(v, hw, hb);
}

// ---- bias only --------------------------------------------------------------

template <class T>
BiasOnly<T>::BiasOnly(T initial) {
  this->params_.add("bias", Tensor<T>({1}, initial));
}

template <class T>
ad::Var<T> BiasOnly<T>::forward(ad::Tape<T>& tape, ad::Var<T> input) const {
  require_spatial_input(input.shape(), "bias");
  const auto p = this->bind(tape);
  const auto zero = tape.constant(Tensor<T>({1, kInputChannels}));
  return ad::channel_linear(input, zero, p[0]);
}

template <class T>
std::unique_ptr<Model<T>> make_model(const std::string& kind, const nlohmann::json& config,
                                     std::uint64_t seed) {
  if (kind == "fno") return std::make_unique<Fno<T>>(fno_config_from_json(config), seed);
  if (kind == "unet") return std::make_unique<Unet<T>>(unet_config_from_json(config), seed);
  if (kind == "bias") return std::make_unique<BiasOnly<T>>();
  throw ValidationError("unknown model kind '" + kind + "' (expected fno, unet or bias)");
}

template class Model<float>;
template class Model<double>;
template class Fno<float>;
template class Fno<double>;
template class Unet<float>;
template class Unet<double>;
template class BiasOnly<float>;
template class BiasOnly<double>;
template std::unique_ptr<Model<float>> make_model<float>(const std::string&, const nlohmann::json&,
                                                         std::uint64_t);
template std::unique_ptr<Model<double>> make_model<double>(const std::string&, const nlohmann::json&,
                                                           std::uint64_t);

}  // namespace voxtherm
