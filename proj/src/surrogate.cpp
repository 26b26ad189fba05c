#include "wosno/surrogate.hpp"

#include "wosno/types.hpp"

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <fstream>

namespace wosno {

Mlp::Mlp(std::vector<int> sizes, Activation output) : sizes_(std::move(sizes)), output_(output) {
  if (sizes_.size() < 2) throw Error("mlp: need at least input and output sizes");
  for (int s : sizes_)
    if (s < 1) throw Error("mlp: layer sizes must be positive");
  if (sizes_.back() != 1) throw Error("mlp: output size must be 1");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    weights_.push_back(Eigen::MatrixXd::Zero(sizes_[l + 1], sizes_[l]));
    biases_.push_back(Eigen::VectorXd::Zero(sizes_[l + 1]));
  }
}

void Mlp::init(Rng& rng) {
  for (auto& w : weights_) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j)
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = uniform(rng, -limit, limit);
  }
  for (auto& b : biases_) b.setZero();
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l)
    n += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  return n;
}

Eigen::VectorXd Mlp::parameters() const {
  Eigen::VectorXd theta(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    theta.segment(at, weights_[l].size()) = weights_[l].reshaped();
    at += weights_[l].size();
    theta.segment(at, biases_[l].size()) = biases_[l];
    at += biases_[l].size();
  }
  return theta;
}

void Mlp::set_parameters(const Eigen::VectorXd& theta) {
  if (static_cast<std::size_t>(theta.size()) != parameter_count())
    throw Error("mlp: parameter count mismatch");
  Eigen::Index at = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    weights_[l].reshaped() = theta.segment(at, weights_[l].size());
    at += weights_[l].size();
    biases_[l] = theta.segment(at, biases_[l].size());
    at += biases_[l].size();
  }
}

double Mlp::forward(const std::vector<double>& features) const {
  const Eigen::Map<const Eigen::VectorXd> x(features.data(),
                                            static_cast<Eigen::Index>(features.size()));
  return forward(Eigen::MatrixXd(x))(0);
}

Eigen::VectorXd Mlp::forward(const Eigen::MatrixXd& features) const {
  if (features.rows() != input_size()) throw Error("mlp: feature length does not match input size");
  Eigen::MatrixXd a = features;
  for (int l = 0; l < layers(); ++l) {
    Eigen::MatrixXd z = weights_[l] * a;
    z.colwise() += biases_[l];
    const bool hidden = l + 1 < layers();
    if (hidden || output_ == Activation::tanh) z = z.array().tanh();
    a = std::move(z);
  }
  return a.row(0).transpose();
}

double weak_supervision_loss(const Mlp& model, const Eigen::MatrixXd& features,
                             const Eigen::VectorXd& targets) {
  if (features.cols() != targets.size()) throw Error("loss: feature/target count mismatch");
  if (targets.size() == 0) throw Error("loss: empty batch");
  return (model.forward(features) - targets).squaredNorm() / static_cast<double>(targets.size());
}

LossGradient backward(const Mlp& model, const Eigen::MatrixXd& features,
                      const Eigen::VectorXd& targets) {
  if (features.cols() != targets.size()) throw Error("loss: feature/target count mismatch");
  if (targets.size() == 0) throw Error("loss: empty batch");
  if (features.rows() != model.input_size())
    throw Error("mlp: feature length does not match input size");
  const int n_layers = model.layers();
  const double n = static_cast<double>(targets.size());

  std::vector<Eigen::MatrixXd> acts;  // acts[l] is the input of layer l
  acts.reserve(n_layers + 1);
  acts.push_back(features);
  for (int l = 0; l < n_layers; ++l) {
    Eigen::MatrixXd z = model.weight(l) * acts.back();
    z.colwise() += model.bias(l);
    if (l + 1 < n_layers || model.output_activation() == Activation::tanh) z = z.array().tanh();
    acts.push_back(std::move(z));
  }

  const Eigen::RowVectorXd residual = acts.back().row(0) - targets.transpose();
  LossGradient out;
  out.loss = residual.squaredNorm() / n;
  out.gradient.resize(static_cast<Eigen::Index>(model.parameter_count()));

  // delta = dLoss / dz for the current layer, one column per sample.
  Eigen::MatrixXd delta = (2.0 / n) * residual;
  if (model.output_activation() == Activation::tanh)
    delta.array() *= 1.0 - acts.back().array().square();

  std::vector<Eigen::Index> offsets(n_layers + 1, 0);
  for (int l = 0; l < n_layers; ++l)
    offsets[l + 1] = offsets[l] + model.weight(l).size() + model.bias(l).size();

  for (int l = n_layers - 1; l >= 0; --l) {
    const Eigen::MatrixXd grad_w = delta * acts[l].transpose();
    out.gradient.segment(offsets[l], grad_w.size()) = grad_w.reshaped();
    out.gradient.segment(offsets[l] + grad_w.size(), model.bias(l).size()) = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = model.weight(l).transpose() * delta;
      delta = back.array() * (1.0 - acts[l].array().square());
    }
  }
  return out;
}

Adam::Adam(std::size_t n_parameters, AdamConfig cfg)
    : cfg_(cfg),
      m_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_parameters))),
      v_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_parameters))) {}

void Adam::step(Eigen::VectorXd& theta, const Eigen::VectorXd& gradient) {
  if (theta.size() != m_.size() || gradient.size() != m_.size())
    throw Error("adam: parameter count mismatch");
  ++t_;
  const Eigen::VectorXd g = gradient + cfg_.weight_decay * theta;
  m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * g;
  v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  theta.array() -= cfg_.lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + cfg_.eps);
}

double PlateauScheduler::observe(double metric) {
  if (!has_best_ || metric < best_ * (1.0 - 1e-4)) {
    best_ = metric;
    has_best_ = true;
    bad_ = 0;
    return 1.0;
  }
  if (++bad_ > patience_) {
    bad_ = 0;
    return factor_;
  }
  return 1.0;
}

namespace {

constexpr char kCheckpointMagic[8] = {'W', 'O', 'S', 'N', 'O', 'M', 'L', 'P'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw Error("checkpoint truncated");
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Mlp& model, const std::string& provenance) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path + " for writing");
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put(out, kCheckpointVersion);
  put(out, static_cast<std::uint64_t>(provenance.size()));
  out.write(provenance.data(), static_cast<std::streamsize>(provenance.size()));
  put(out, static_cast<std::uint32_t>(model.output_activation() == Activation::tanh ? 1 : 0));
  put(out, static_cast<std::uint32_t>(model.sizes().size()));
  for (int s : model.sizes()) put(out, static_cast<std::uint32_t>(s));
  const Eigen::VectorXd theta = model.parameters();
  out.write(reinterpret_cast<const char*>(theta.data()),
            static_cast<std::streamsize>(theta.size() * sizeof(double)));
  if (!out) throw Error("failed writing " + path);
}

Mlp load_checkpoint(const std::string& path, std::string* provenance) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(magic, magic + sizeof(magic), kCheckpointMagic))
    throw Error(path + ": not a checkpoint");
  if (get<std::uint32_t>(in) != kCheckpointVersion)
    throw Error(path + ": unsupported checkpoint version");
  const auto prov_len = get<std::uint64_t>(in);
  if (prov_len > (1u << 20)) throw Error(path + ": corrupt header");
  std::string prov(prov_len, '\0');
  in.read(prov.data(), static_cast<std::streamsize>(prov_len));
  if (provenance) *provenance = prov;
  const auto output = get<std::uint32_t>(in) == 1 ? Activation::tanh : Activation::identity;
  const auto n_sizes = get<std::uint32_t>(in);
  if (n_sizes < 2 || n_sizes > 64) throw Error(path + ": corrupt layer count");
  std::vector<int> sizes;
  for (std::uint32_t i = 0; i < n_sizes; ++i) sizes.push_back(static_cast<int>(get<std::uint32_t>(in)));
  Mlp model(sizes, output);
  Eigen::VectorXd theta(static_cast<Eigen::Index>(model.parameter_count()));
  in.read(reinterpret_cast<char*>(theta.data()),
          static_cast<std::streamsize>(theta.size() * sizeof(double)));
  if (!in) throw Error("checkpoint truncated");
  model.set_parameters(theta);
  return model;
}

}  // namespace wosno
