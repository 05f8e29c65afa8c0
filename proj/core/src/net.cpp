#include "pinnrc/net.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace pinnrc {

namespace {

void validate_sizes(const std::vector<int>& sizes) {
  if (sizes.size() < 2) throw std::invalid_argument("layer_sizes needs at least input and output");
  if (sizes.front() != 1) throw std::invalid_argument("layer_sizes must start with input width 1");
  for (int s : sizes) {
    if (s <= 0) throw std::invalid_argument("layer sizes must be positive");
  }
}

Eigen::Map<const Eigen::RowVectorXd> as_row(std::span<const double> xs) {
  return {xs.data(), static_cast<Eigen::Index>(xs.size())};
}

}  // namespace

LayeredParams::LayeredParams(std::vector<int> layer_sizes) : sizes_(std::move(layer_sizes)) {
  validate_sizes(sizes_);
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(offset);
    offset += static_cast<Eigen::Index>(sizes_[l + 1]) * sizes_[l] + sizes_[l + 1];
  }
  values_ = Eigen::VectorXd::Zero(offset);
}

WeightView LayeredParams::weight(std::size_t layer) {
  return {values_.data() + offsets_.at(layer), sizes_[layer + 1], sizes_[layer]};
}

ConstWeightView LayeredParams::weight(std::size_t layer) const {
  return {values_.data() + offsets_.at(layer), sizes_[layer + 1], sizes_[layer]};
}

BiasView LayeredParams::bias(std::size_t layer) {
  const Eigen::Index w = static_cast<Eigen::Index>(sizes_[layer + 1]) * sizes_[layer];
  return {values_.data() + offsets_.at(layer) + w, sizes_[layer + 1]};
}

ConstBiasView LayeredParams::bias(std::size_t layer) const {
  const Eigen::Index w = static_cast<Eigen::Index>(sizes_[layer + 1]) * sizes_[layer];
  return {values_.data() + offsets_.at(layer) + w, sizes_[layer + 1]};
}

GradientSet& GradientSet::operator+=(const GradientSet& other) {
  if (!same_shape(other)) throw std::invalid_argument("gradient shape mismatch");
  values() += other.values();
  return *this;
}

GradientSet& GradientSet::operator*=(double s) {
  values() *= s;
  return *this;
}

Mlp Mlp::init(const std::vector<int>& layer_sizes, std::uint64_t seed) {
  Mlp net(layer_sizes);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    const double fan_in = layer_sizes[l];
    const double fan_out = layer_sizes[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto w = net.weight(l);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
    }
  }
  return net;
}

Mlp Mlp::zeros(const std::vector<int>& layer_sizes) { return Mlp(layer_sizes); }

std::vector<int> default_layer_sizes(int outputs, int hidden_layers, int width) {
  std::vector<int> sizes{1};
  for (int i = 0; i < hidden_layers; ++i) sizes.push_back(width);
  sizes.push_back(outputs);
  return sizes;
}

Eigen::MatrixXd forward(const Mlp& net, std::span<const double> inputs) {
  Eigen::MatrixXd a = as_row(inputs);
  const std::size_t last = net.layer_count() - 1;
  for (std::size_t l = 0; l < last; ++l) {
    Eigen::MatrixXd z = net.weight(l) * a;
    z.colwise() += net.bias(l);
    a = z.array().tanh().matrix();
  }
  Eigen::MatrixXd u = net.weight(last) * a;
  u.colwise() += net.bias(last);
  return u;
}

Eigen::VectorXd forward(const Mlp& net, double input) {
  return forward(net, std::span<const double>(&input, 1)).col(0);
}

TangentEval forward_tangent(const Mlp& net, std::span<const double> inputs) {
  TangentEval ev;
  const auto batch = static_cast<Eigen::Index>(inputs.size());
  const std::size_t last = net.layer_count() - 1;
  ev.act.reserve(last + 1);
  ev.dact.reserve(last + 1);
  ev.dpre.reserve(last);
  ev.act.emplace_back(as_row(inputs));
  ev.dact.emplace_back(Eigen::MatrixXd::Ones(1, batch));
  for (std::size_t l = 0; l < last; ++l) {
    const auto w = net.weight(l);
    Eigen::MatrixXd z = w * ev.act.back();
    z.colwise() += net.bias(l);
    Eigen::MatrixXd dz = w * ev.dact.back();
    Eigen::MatrixXd a = z.array().tanh().matrix();
    Eigen::MatrixXd da = ((1.0 - a.array().square()) * dz.array()).matrix();
    ev.act.push_back(std::move(a));
    ev.dact.push_back(std::move(da));
    ev.dpre.push_back(std::move(dz));
  }
  const auto w = net.weight(last);
  ev.u = w * ev.act.back();
  ev.u.colwise() += net.bias(last);
  ev.du = w * ev.dact.back();
  return ev;
}

TangentEval forward_tangent(const Mlp& net, double input) {
  return forward_tangent(net, std::span<const double>(&input, 1));
}

GradientSet backward(const Mlp& net, const TangentEval& eval, const Eigen::MatrixXd& seed_u,
                     const Eigen::MatrixXd& seed_du) {
  if (seed_u.rows() != eval.u.rows() || seed_u.cols() != eval.u.cols() ||
      seed_du.rows() != eval.du.rows() || seed_du.cols() != eval.du.cols()) {
    throw std::invalid_argument("backward: seed dimensions do not match the evaluation");
  }
  if (eval.act.size() != net.layer_count()) {
    throw std::invalid_argument("backward: evaluation was produced by a different network");
  }

  GradientSet grads(net.layer_sizes());
  const std::size_t last = net.layer_count() - 1;

  // Output layer: u = W a + b, du = W da.
  grads.weight(last).noalias() =
      seed_u * eval.act[last].transpose() + seed_du * eval.dact[last].transpose();
  grads.bias(last) = seed_u.rowwise().sum();
  Eigen::MatrixXd g_a = net.weight(last).transpose() * seed_u;
  Eigen::MatrixXd g_da = net.weight(last).transpose() * seed_du;

  // Hidden layers: a = tanh(z), da = s * dz with s = 1 - a^2.
  for (std::size_t l = last; l-- > 0;) {
    const auto a = eval.act[l + 1].array();
    const auto dz = eval.dpre[l].array();
    const Eigen::ArrayXXd s = 1.0 - a.square();
    const Eigen::MatrixXd g_dz = (s * g_da.array()).matrix();
    const Eigen::MatrixXd g_z = (s * (g_a.array() - 2.0 * a * g_da.array() * dz)).matrix();

    grads.weight(l).noalias() =
        g_z * eval.act[l].transpose() + g_dz * eval.dact[l].transpose();
    grads.bias(l) = g_z.rowwise().sum();
    if (l > 0) {
      g_a.noalias() = net.weight(l).transpose() * g_z;
      g_da.noalias() = net.weight(l).transpose() * g_dz;
    }
  }
  return grads;
}

}  // namespace pinnrc
