#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "semalloc/rng.h"

namespace semalloc::learner {

// Fully connected network: tanh on hidden layers, identity on the output.
// All weights and biases live in one flat vector so optimizers and
// finite-difference checks can treat the parameters uniformly.
class DenseNet {
 public:
  // Activations of every layer, input first; filled by forward().
  struct Tape {
    std::vector<Eigen::MatrixXd> layers;
  };

  DenseNet() = default;
  explicit DenseNet(std::vector<int> widths);

  // Sum over layers of fan_in * fan_out + fan_out.
  static Eigen::Index parameter_count(std::span<const int> widths);

  const std::vector<int>& widths() const { return widths_; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  int num_layers() const { return static_cast<int>(widths_.size()) - 1; }
  Eigen::Index parameter_count() const { return params_.size(); }

  Eigen::VectorXd& parameters() { return params_; }
  const Eigen::VectorXd& parameters() const { return params_; }

  void init_normal(Rng& rng, double stddev);

  // inputs: input_dim x batch. Throws std::invalid_argument on a dimension
  // mismatch.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs, Tape* tape = nullptr) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

  // Adds dL/dparams to grad given dL/doutput for the batch recorded in tape.
  void backward(const Tape& tape, const Eigen::MatrixXd& grad_output,
                Eigen::VectorXd& grad) const;

 private:
  using ConstMatrixMap = Eigen::Map<const Eigen::MatrixXd>;
  using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

  ConstMatrixMap weight(int layer) const;
  ConstVectorMap bias(int layer) const;

  std::vector<int> widths_;
  std::vector<Eigen::Index> offsets_;  // start of each layer's weights
  Eigen::VectorXd params_;
};

}  // namespace semalloc::learner
