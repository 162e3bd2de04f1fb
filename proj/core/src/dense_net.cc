#include "semalloc/dense_net.h"

#include <random>
#include <stdexcept>

namespace semalloc::learner {

DenseNet::DenseNet(std::vector<int> widths) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw std::invalid_argument("DenseNet needs at least two widths");
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l] < 1 || widths_[l + 1] < 1) {
      throw std::invalid_argument("DenseNet widths must be positive");
    }
    offsets_.push_back(offset);
    offset += static_cast<Eigen::Index>(widths_[l]) * widths_[l + 1] + widths_[l + 1];
  }
  params_ = Eigen::VectorXd::Zero(offset);
}

Eigen::Index DenseNet::parameter_count(std::span<const int> widths) {
  Eigen::Index total = 0;
  for (std::size_t l = 1; l < widths.size(); ++l) {
    total += static_cast<Eigen::Index>(widths[l - 1]) * widths[l] + widths[l];
  }
  return total;
}

void DenseNet::init_normal(Rng& rng, double stddev) {
  std::normal_distribution<double> normal(0.0, stddev);
  for (Eigen::Index i = 0; i < params_.size(); ++i) params_[i] = normal(rng);
}

DenseNet::ConstMatrixMap DenseNet::weight(int layer) const {
  return ConstMatrixMap(params_.data() + offsets_[layer], widths_[layer + 1], widths_[layer]);
}

DenseNet::ConstVectorMap DenseNet::bias(int layer) const {
  Eigen::Index start =
      offsets_[layer] + static_cast<Eigen::Index>(widths_[layer]) * widths_[layer + 1];
  return ConstVectorMap(params_.data() + start, widths_[layer + 1]);
}

Eigen::MatrixXd DenseNet::forward(const Eigen::MatrixXd& inputs, Tape* tape) const {
  if (inputs.rows() != input_dim()) {
    throw std::invalid_argument("DenseNet input dimension mismatch");
  }
  if (tape) {
    tape->layers.clear();
    tape->layers.push_back(inputs);
  }
  Eigen::MatrixXd a = inputs;
  for (int l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd z = weight(l) * a;
    z.colwise() += bias(l);
    if (l + 1 < num_layers()) z = z.array().tanh().matrix();
    a = std::move(z);
    if (tape) tape->layers.push_back(a);
  }
  return a;
}

Eigen::VectorXd DenseNet::forward(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd out = forward(Eigen::MatrixXd(x));
  return out.col(0);
}

void DenseNet::backward(const Tape& tape, const Eigen::MatrixXd& grad_output,
                        Eigen::VectorXd& grad) const {
  if (grad.size() != params_.size()) grad = Eigen::VectorXd::Zero(params_.size());
  Eigen::MatrixXd delta = grad_output;  // dL/d(pre-activation) of the current layer
  for (int l = num_layers() - 1; l >= 0; --l) {
    const Eigen::MatrixXd& input = tape.layers[l];
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + offsets_[l], widths_[l + 1], widths_[l]);
    Eigen::Map<Eigen::VectorXd> gb(
        grad.data() + offsets_[l] + static_cast<Eigen::Index>(widths_[l]) * widths_[l + 1],
        widths_[l + 1]);
    gw.noalias() += delta * input.transpose();
    gb += delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd up = weight(l).transpose() * delta;
      // tanh'(z) = 1 - tanh(z)^2, and tape holds tanh(z).
      delta = up.array() * (1.0 - input.array().square());
    }
  }
}

}  // namespace semalloc::learner
