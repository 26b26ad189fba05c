#pragma once

#include "wosno/rng.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace wosno {

enum class Activation { identity, tanh };

// Fully connected network with tanh hidden layers and a scalar output.
// Parameters are flattened layer by layer as W (column-major) then b.
class Mlp {
 public:
  Mlp() = default;
  // sizes = {input, hidden..., 1}. Parameters start at zero; call init().
  explicit Mlp(std::vector<int> sizes, Activation output = Activation::identity);

  // Glorot-uniform weights, zero biases.
  void init(Rng& rng);

  const std::vector<int>& sizes() const { return sizes_; }
  int input_size() const { return sizes_.front(); }
  int layers() const { return static_cast<int>(weights_.size()); }
  Activation output_activation() const { return output_; }
  std::size_t parameter_count() const;

  Eigen::MatrixXd& weight(int layer) { return weights_[layer]; }
  const Eigen::MatrixXd& weight(int layer) const { return weights_[layer]; }
  Eigen::VectorXd& bias(int layer) { return biases_[layer]; }
  const Eigen::VectorXd& bias(int layer) const { return biases_[layer]; }

  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& theta);

  double forward(const std::vector<double>& features) const;
  // One column per sample; returns one prediction per column.
  Eigen::VectorXd forward(const Eigen::MatrixXd& features) const;

 private:
  std::vector<int> sizes_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
  Activation output_ = Activation::identity;
};

// Mean squared deviation between predictions and targets over all columns.
double weak_supervision_loss(const Mlp& model, const Eigen::MatrixXd& features,
                             const Eigen::VectorXd& targets);

struct LossGradient {
  double loss = 0.0;
  Eigen::VectorXd gradient;  // same layout as Mlp::parameters()
};

// Exact reverse-mode gradient of weak_supervision_loss.
LossGradient backward(const Mlp& model, const Eigen::MatrixXd& features,
                      const Eigen::VectorXd& targets);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // L2 penalty added to the gradient.
  double weight_decay = 1e-6;
};

class Adam {
 public:
  Adam(std::size_t n_parameters, AdamConfig cfg);
  void step(Eigen::VectorXd& theta, const Eigen::VectorXd& gradient);
  double lr() const { return cfg_.lr; }
  void set_lr(double lr) { cfg_.lr = lr; }
  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  Eigen::VectorXd m_, v_;
  long t_ = 0;
};

// Multiplies the learning rate by `factor` once the metric has failed to
// improve for more than `patience` consecutive observations.
class PlateauScheduler {
 public:
  PlateauScheduler(double factor = 0.9, int patience = 2) : factor_(factor), patience_(patience) {}
  // Returns the factor to apply to the learning rate (1 or `factor`).
  double observe(double metric);

 private:
  double factor_;
  int patience_;
  double best_ = 0.0;
  bool has_best_ = false;
  int bad_ = 0;
};

// Versioned binary: magic, version, provenance, output activation, layer
// sizes, float64 parameters.
void save_checkpoint(const std::string& path, const Mlp& model, const std::string& provenance);
Mlp load_checkpoint(const std::string& path, std::string* provenance = nullptr);

}  // namespace wosno
