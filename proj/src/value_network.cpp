#include "dta/value_network.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "dta/errors.hpp"

namespace dta::learners {

namespace {

constexpr const char* kMagic = "dta-value-network";
constexpr int kFormatVersion = 1;

Eigen::MatrixXd relu(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

}  // namespace

ValueNetwork::ValueNetwork(std::vector<int> layer_sizes, std::mt19937_64& rng) {
  if (layer_sizes.size() < 2 || layer_sizes.back() != 1)
    throw ContractViolation("layer sizes must be {input, hidden..., 1}");
  for (int n : layer_sizes)
    if (n <= 0) throw ContractViolation("layer sizes must be positive");

  for (std::size_t i = 0; i + 1 < layer_sizes.size(); ++i) {
    const int in = layer_sizes[i];
    const int out = layer_sizes[i + 1];
    std::normal_distribution<double> init(0.0, std::sqrt(2.0 / in));
    Layer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Zero(out)};
    for (int r = 0; r < out; ++r)
      for (int c = 0; c < in; ++c) layer.weight(r, c) = init(rng);
    layers_.push_back(std::move(layer));
  }
}

ValueNetwork::ValueNetwork(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ContractViolation("network needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& l = layers_[i];
    if (l.bias.size() != l.weight.rows()) throw ContractViolation("bias/weight shape mismatch");
    if (i > 0 && l.weight.cols() != layers_[i - 1].weight.rows())
      throw ContractViolation("layer shapes do not chain");
  }
  if (layers_.back().weight.rows() != 1) throw ContractViolation("output must be scalar");
}

std::vector<int> ValueNetwork::layer_sizes() const {
  std::vector<int> sizes{static_cast<int>(layers_.front().weight.cols())};
  for (const auto& l : layers_) sizes.push_back(static_cast<int>(l.weight.rows()));
  return sizes;
}

std::size_t ValueNetwork::num_parameters() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

double ValueNetwork::forward(std::span<const double> features) const {
  if (static_cast<Eigen::Index>(features.size()) != layers_.front().weight.cols())
    throw ContractViolation("feature dimension mismatch");
  Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(features.data(),
                                                        static_cast<Eigen::Index>(features.size()));
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Eigen::VectorXd z = layers_[i].weight * h + layers_[i].bias;
    h = (i + 1 < layers_.size()) ? Eigen::VectorXd(z.cwiseMax(0.0)) : z;
  }
  return h(0);
}

Eigen::VectorXd ValueNetwork::forward_batch(const Eigen::MatrixXd& features) const {
  Eigen::MatrixXd h = features;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Eigen::MatrixXd z = layers_[i].weight * h;
    z.colwise() += layers_[i].bias;
    h = (i + 1 < layers_.size()) ? relu(z) : z;
  }
  return h.row(0).transpose();
}

double ValueNetwork::loss(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets) const {
  const Eigen::VectorXd residual = forward_batch(features) - targets;
  return residual.squaredNorm() / static_cast<double>(targets.size());
}

double ValueNetwork::loss_and_gradient(const Eigen::MatrixXd& features,
                                       const Eigen::VectorXd& targets,
                                       std::vector<double>& gradient) const {
  const auto batch = features.cols();
  if (batch == 0 || targets.size() != batch) throw ContractViolation("batch shape mismatch");

  // Post-activation outputs per layer; activations[0] is the input.
  std::vector<Eigen::MatrixXd> activations{features};
  activations.reserve(layers_.size() + 1);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Eigen::MatrixXd z = layers_[i].weight * activations.back();
    z.colwise() += layers_[i].bias;
    activations.push_back((i + 1 < layers_.size()) ? relu(z) : z);
  }

  const Eigen::RowVectorXd residual = activations.back().row(0) - targets.transpose();
  const double scale = 1.0 / static_cast<double>(batch);
  const double loss_value = residual.squaredNorm() * scale;

  std::vector<Eigen::MatrixXd> weight_grads(layers_.size());
  std::vector<Eigen::VectorXd> bias_grads(layers_.size());
  Eigen::MatrixXd delta = 2.0 * scale * residual;  // dL/dz for the output layer
  for (std::size_t i = layers_.size(); i-- > 0;) {
    weight_grads[i] = delta * activations[i].transpose();
    bias_grads[i] = delta.rowwise().sum();
    if (i > 0) {
      Eigen::MatrixXd back = layers_[i].weight.transpose() * delta;
      delta = back.cwiseProduct((activations[i].array() > 0.0).cast<double>().matrix());
    }
  }

  gradient.clear();
  gradient.reserve(num_parameters());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& w = weight_grads[i];
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) gradient.push_back(w(r, c));
    for (Eigen::Index r = 0; r < bias_grads[i].size(); ++r) gradient.push_back(bias_grads[i](r));
  }
  return loss_value;
}

std::vector<double> ValueNetwork::parameters() const {
  std::vector<double> flat;
  flat.reserve(num_parameters());
  for (const auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) flat.push_back(l.weight(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) flat.push_back(l.bias(r));
  }
  return flat;
}

void ValueNetwork::set_parameters(std::span<const double> flat) {
  if (flat.size() != num_parameters()) throw ContractViolation("parameter count mismatch");
  std::size_t k = 0;
  for (auto& l : layers_) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = flat[k++];
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = flat[k++];
  }
}

void ValueNetwork::save(std::ostream& out) const {
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "activation relu\n";
  out << "layers";
  for (int n : layer_sizes()) out << ' ' << n;
  out << '\n';
  char buf[32];
  auto write_row = [&](const char* tag, auto begin, auto end) {
    out << tag;
    for (auto it = begin; it != end; ++it) {
      std::snprintf(buf, sizeof buf, " %.17g", *it);
      out << buf;
    }
    out << '\n';
  };
  for (const auto& l : layers_) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = l.weight;
    write_row("W", w.data(), w.data() + w.size());
    write_row("b", l.bias.data(), l.bias.data() + l.bias.size());
  }
}

ValueNetwork ValueNetwork::load(std::istream& in, const std::string& source) {
  int line = 0;
  std::string raw;
  auto next_line = [&](const char* expected) -> std::istringstream {
    if (!std::getline(in, raw))
      throw ConfigError(source, line + 1, std::string("unexpected end of file, expected ") + expected);
    ++line;
    std::istringstream fields(raw);
    std::string tag;
    fields >> tag;
    if (tag != expected) throw ConfigError(source, line, std::string("expected '") + expected + "'");
    return fields;
  };

  {
    auto header = next_line(kMagic);
    int version = 0;
    if (!(header >> version) || version != kFormatVersion)
      throw ConfigError(source, line, "unsupported network format version");
  }
  {
    auto act = next_line("activation");
    std::string name;
    if (!(act >> name) || name != "relu") throw ConfigError(source, line, "unsupported activation");
  }
  std::vector<int> sizes;
  {
    auto fields = next_line("layers");
    int n = 0;
    while (fields >> n) sizes.push_back(n);
    if (sizes.size() < 2 || sizes.back() != 1) throw ConfigError(source, line, "bad layer sizes");
  }

  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    Layer l{Eigen::MatrixXd(sizes[i + 1], sizes[i]), Eigen::VectorXd(sizes[i + 1])};
    auto w = next_line("W");
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c)
        if (!(w >> l.weight(r, c))) throw ConfigError(source, line, "truncated weight row");
    auto b = next_line("b");
    for (Eigen::Index r = 0; r < l.bias.size(); ++r)
      if (!(b >> l.bias(r))) throw ConfigError(source, line, "truncated bias row");
    layers.push_back(std::move(l));
  }
  return ValueNetwork(std::move(layers));
}

Optimizer::Optimizer(OptimizerConfig config, std::size_t num_parameters)
    : config_(config), first_(num_parameters, 0.0), second_(num_parameters, 0.0) {}

void Optimizer::apply(std::vector<double>& parameters, const std::vector<double>& gradient) {
  if (parameters.size() != first_.size() || gradient.size() != first_.size())
    throw ContractViolation("optimizer/parameter size mismatch");
  ++steps_;
  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerConfig::Kind::sgd) {
    for (std::size_t i = 0; i < parameters.size(); ++i) {
      first_[i] = config_.momentum * first_[i] + gradient[i];
      parameters[i] -= lr * first_[i];
    }
    return;
  }
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < parameters.size(); ++i) {
    first_[i] = config_.beta1 * first_[i] + (1.0 - config_.beta1) * gradient[i];
    second_[i] = config_.beta2 * second_[i] + (1.0 - config_.beta2) * gradient[i] * gradient[i];
    const double m = first_[i] / c1;
    const double v = second_[i] / c2;
    parameters[i] -= lr * m / (std::sqrt(v) + config_.epsilon);
  }
}

double train_value_network(ValueNetwork& net, Optimizer& optimizer,
                           const Eigen::MatrixXd& features, const Eigen::VectorXd& targets) {
  if (features.cols() == 0) throw ContractViolation("empty training batch");
  if (!targets.allFinite()) throw ContractViolation("non-finite regression targets");
  std::vector<double> gradient;
  const double loss = net.loss_and_gradient(features, targets, gradient);
  if (!std::isfinite(loss)) throw TrainingDiverged("value network loss is not finite");
  for (double g : gradient)
    if (!std::isfinite(g)) throw TrainingDiverged("value network gradient is not finite");
  auto params = net.parameters();
  optimizer.apply(params, gradient);
  net.set_parameters(params);
  return loss;
}

}  // namespace dta::learners
