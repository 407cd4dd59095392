#pragma once

#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dta::learners {

/// Fully connected ReLU network with a single linear output unit.
class ValueNetwork {
 public:
  struct Layer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
  };

  /// `layer_sizes` = {input, hidden..., 1}. Weights use He initialization.
  ValueNetwork(std::vector<int> layer_sizes, std::mt19937_64& rng);
  explicit ValueNetwork(std::vector<Layer> layers);

  int input_size() const { return static_cast<int>(layers_.front().weight.cols()); }
  std::vector<int> layer_sizes() const;
  std::size_t num_parameters() const;

  double forward(std::span<const double> features) const;
  /// One column per sample.
  Eigen::VectorXd forward_batch(const Eigen::MatrixXd& features) const;

  /// Mean squared error over the batch and its gradient, flattened in
  /// `parameters()` order.
  double loss_and_gradient(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                           std::vector<double>& gradient) const;
  double loss(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets) const;

  /// Flattened as W_0 (row-major), b_0, W_1, b_1, ...
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> flat);

  const std::vector<Layer>& layers() const { return layers_; }

  void save(std::ostream& out) const;
  static ValueNetwork load(std::istream& in, const std::string& source = "<network>");

 private:
  std::vector<Layer> layers_;
};

struct OptimizerConfig {
  enum class Kind { adam, sgd };
  Kind kind = Kind::adam;
  double learning_rate = 0.001;
  double momentum = 0.0;  // sgd only
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Optimizer state matching one network's parameter layout.
class Optimizer {
 public:
  Optimizer(OptimizerConfig config, std::size_t num_parameters);

  void apply(std::vector<double>& parameters, const std::vector<double>& gradient);
  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  std::vector<double> first_;
  std::vector<double> second_;
  long steps_ = 0;
};

/// One gradient step on the batch's squared regression error. Returns the
/// pre-step loss. Throws TrainingDiverged on a non-finite loss or gradient.
double train_value_network(ValueNetwork& net, Optimizer& optimizer,
                           const Eigen::MatrixXd& features, const Eigen::VectorXd& targets);

}  // namespace dta::learners
