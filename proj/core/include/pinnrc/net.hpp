#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace pinnrc {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using WeightView = Eigen::Map<RowMajorMatrix>;
using ConstWeightView = Eigen::Map<const RowMajorMatrix>;
using BiasView = Eigen::Map<Eigen::VectorXd>;
using ConstBiasView = Eigen::Map<const Eigen::VectorXd>;

/// Flat storage for the weights and biases of a fully-connected stack.
///
/// Layer l maps width sizes[l] to sizes[l+1]. Its weight matrix
/// (sizes[l+1] x sizes[l], row-major) is stored first, then its bias.
/// Both Mlp and GradientSet use this layout so parameters and gradients
/// line up elementwise.
class LayeredParams {
 public:
  LayeredParams() = default;
  explicit LayeredParams(std::vector<int> layer_sizes);

  const std::vector<int>& layer_sizes() const { return sizes_; }
  std::size_t layer_count() const { return sizes_.size() - 1; }
  int input_width() const { return sizes_.front(); }
  int output_width() const { return sizes_.back(); }

  WeightView weight(std::size_t layer);
  ConstWeightView weight(std::size_t layer) const;
  BiasView bias(std::size_t layer);
  ConstBiasView bias(std::size_t layer) const;

  Eigen::VectorXd& values() { return values_; }
  const Eigen::VectorXd& values() const { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }

  bool same_shape(const LayeredParams& other) const { return sizes_ == other.sizes_; }

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::Index> offsets_;
  Eigen::VectorXd values_;
};

/// Gradient of a scalar with respect to every Mlp parameter.
class GradientSet : public LayeredParams {
 public:
  using LayeredParams::LayeredParams;

  GradientSet& operator+=(const GradientSet& other);
  GradientSet& operator*=(double s);
};

/// tanh hidden layers, identity output.
class Mlp : public LayeredParams {
 public:
  using LayeredParams::LayeredParams;

  /// Glorot-uniform weights, zero biases. Throws std::invalid_argument
  /// unless sizes has at least two positive entries and starts with 1.
  static Mlp init(const std::vector<int>& layer_sizes, std::uint64_t seed);
  static Mlp zeros(const std::vector<int>& layer_sizes);

  bool all_finite() const { return values().allFinite(); }
};

std::vector<int> default_layer_sizes(int outputs = 1, int hidden_layers = 3, int width = 40);

/// Network outputs and their derivative with respect to the scalar input,
/// for a batch of inputs (one column per input).
struct TangentEval {
  Eigen::MatrixXd u;   // outputs x batch
  Eigen::MatrixXd du;  // d u / d input, same shape

  // Post-activations and their tangents per layer input, index 0 being the
  // network input itself. Kept for the reverse pass.
  std::vector<Eigen::MatrixXd> act;
  std::vector<Eigen::MatrixXd> dact;
  // Tangents of the hidden pre-activations, one per hidden layer.
  std::vector<Eigen::MatrixXd> dpre;

  Eigen::Index batch() const { return u.cols(); }
};

Eigen::MatrixXd forward(const Mlp& net, std::span<const double> inputs);
Eigen::VectorXd forward(const Mlp& net, double input);

TangentEval forward_tangent(const Mlp& net, std::span<const double> inputs);
TangentEval forward_tangent(const Mlp& net, double input);

/// Gradient of sum(seed_u .* u) + sum(seed_du .* du) with respect to the
/// parameters, including the mixed second-order path through du.
GradientSet backward(const Mlp& net, const TangentEval& eval,
                     const Eigen::MatrixXd& seed_u, const Eigen::MatrixXd& seed_du);

}  // namespace pinnrc
