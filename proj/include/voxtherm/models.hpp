#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>

#include <json.hpp>

#include "voxtherm/autodiff.hpp"
#include "voxtherm/optim.hpp"

namespace voxtherm {

struct FnoConfig {
  std::size_t width = 16;  // latent channels
  std::size_t layers = 4;
  std::array<std::size_t, 3> modes{8, 4, 8};  // depth, height, width (half axis)
  std::size_t projection_hidden = 32;
  std::string activation = "gelu";

  /// Throws ValidationError for non-positive sizes; grid fit is checked per input.
  void validate() const;
  /// Retained spectral bins per layer: (2 m_d - 1)(2 m_h - 1) m_w.
  std::size_t retained_modes() const { return (2 * modes[0] - 1) * (2 * modes[1] - 1) * modes[2]; }
  /// Closed-form parameter count; independent of the grid.
  std::size_t parameter_count() const;
};

struct UnetConfig {
  std::size_t levels = 3;
  std::size_t base_channels = 16;
  std::size_t multiplier = 2;
  std::size_t kernel = 3;

  void validate() const;
  std::size_t channels(std::size_t level) const;
};

nlohmann::json to_json(const FnoConfig& c);
nlohmann::json to_json(const UnetConfig& c);
FnoConfig fno_config_from_json(const nlohmann::json& doc);
UnetConfig unet_config_from_json(const nlohmann::json& doc);

/// Maps a normalized 3 x D x H x W input to a 1 x D x H x W normalized heatmap.
template <class T>
class Model {
 public:
  virtual ~Model() = default;
  virtual std::string kind() const = 0;
  virtual nlohmann::json config() const = 0;
  /// Binds every parameter on `tape` (in ParameterSet order) and records the
  /// forward pass. Throws ShapeMismatch for incompatible inputs.
  virtual ad::Var<T> forward(ad::Tape<T>& tape, ad::Var<T> input) const = 0;

  ParameterSet<T>& parameters() { return params_; }
  const ParameterSet<T>& parameters() const { return params_; }

  /// Convenience: forward without gradients.
  Tensor<T> predict(const Tensor<T>& input) const;

 protected:
  std::vector<ad::Var<T>> bind(ad::Tape<T>& tape) const;
  ParameterSet<T> params_;
};

template <class T>
class Fno final : public Model<T> {
 public:
  Fno(FnoConfig cfg, std::uint64_t seed);
  std::string kind() const override { return "fno"; }
  nlohmann::json config() const override { return to_json(cfg_); }
  ad::Var<T> forward(ad::Tape<T>& tape, ad::Var<T> input) const override;
  const FnoConfig& fno_config() const { return cfg_; }

  /// F^-1(R . F(v)) on the retained low modes of `v` ([c, D, H, W]).
  static ad::Var<T> spectral_conv(ad::Var<T> v, ad::Var<T> weights, const std::array<std::size_t, 3>& modes);

 private:
  FnoConfig cfg_;
};

template <class T>
class Unet final : public Model<T> {
 public:
  Unet(UnetConfig cfg, std::uint64_t seed);
  std::string kind() const override { return "unet"; }
  nlohmann::json config() const override { return to_json(cfg_); }
  ad::Var<T> forward(ad::Tape<T>& tape, ad::Var<T> input) const override;

 private:
  UnetConfig cfg_;
};

/// Spatially constant prediction: one trainable bias. Used to sanity-check
/// the training loop.
template <class T>
class BiasOnly final : public Model<T> {
 public:
  explicit BiasOnly(T initial = T(0));
  std::string kind() const override { return "bias"; }
  nlohmann::json config() const override { return nlohmann::json::object(); }
  ad::Var<T> forward(ad::Tape<T>& tape, ad::Var<T> input) const override;
};

/// kind in {"fno", "unet", "bias"}; throws ValidationError otherwise.
template <class T>
std::unique_ptr<Model<T>> make_model(const std::string& kind, const nlohmann::json& config,
                                     std::uint64_t seed);

}  // namespace voxtherm
