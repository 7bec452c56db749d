#include "deepls/net.hpp"

#include <cmath>
#include <random>
#include <utility>

namespace deepls {
namespace {

void validate_widths(const std::vector<int>& widths, const char* which) {
  if (widths.empty()) {
    throw std::invalid_argument(std::string(which) + " branch: empty width list");
  }
  for (int w : widths) {
    if (w <= 0) throw std::invalid_argument(std::string(which) + " branch: non-positive width");
  }
  if (widths.back() != 1) {
    throw std::invalid_argument(std::string(which) + " branch: output width must be 1");
  }
}

int index_of(Branch b) { return static_cast<int>(b); }

void apply_activation(Activation kind, const Eigen::MatrixXd& z, Eigen::MatrixXd& a) {
  switch (kind) {
    case Activation::Identity:
      a = z;
      break;
    case Activation::LeakyReLU:
      a = z.array().max(kLeakySlope * z.array());
      break;
    case Activation::Sigmoid:
      a = ((-z.array()).exp() + 1.0).inverse();
      break;
  }
}

// delta <- delta * psi'(z), using the stored activation a = psi(z) where cheaper.
void scale_by_derivative(Activation kind, const Eigen::MatrixXd& z, const Eigen::MatrixXd& a,
                         Eigen::MatrixXd& delta) {
  switch (kind) {
    case Activation::Identity:
      break;
    case Activation::LeakyReLU:
      delta.array() *= (z.array() > 0.0).select(1.0, Eigen::ArrayXXd::Constant(z.rows(), z.cols(), kLeakySlope));
      break;
    case Activation::Sigmoid:
      delta.array() *= a.array() * (1.0 - a.array());
      break;
  }
}

}  // namespace

std::size_t branch_parameter_count(const std::vector<int>& widths) {
  std::size_t total = 0;
  int in = 1;
  for (int out : widths) {
    total += static_cast<std::size_t>(out) * static_cast<std::size_t>(in + 1);
    in = out;
  }
  return total;
}

TwoBranchNet::TwoBranchNet(Architecture arch, Activation hidden)
    : arch_(std::move(arch)), hidden_(hidden) {
  validate_widths(arch_.upper, "upper");
  validate_widths(arch_.lower, "lower");
  std::size_t offset = 0;
  for (int b = 0; b < 2; ++b) {
    const auto& widths = b == 0 ? arch_.upper : arch_.lower;
    offset_[b] = offset;
    int in = 1;
    for (int out : widths) {
      LayerSlice slice;
      slice.in = in;
      slice.out = out;
      slice.weight_offset = offset;
      offset += static_cast<std::size_t>(in) * static_cast<std::size_t>(out);
      slice.bias_offset = offset;
      offset += static_cast<std::size_t>(out);
      layers_[b].push_back(slice);
      in = out;
    }
    count_[b] = offset - offset_[b];
  }
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offset));
}

std::size_t TwoBranchNet::branch_offset(Branch b) const { return offset_[index_of(b)]; }
std::size_t TwoBranchNet::branch_param_count(Branch b) const { return count_[index_of(b)]; }
const std::vector<LayerSlice>& TwoBranchNet::layers(Branch b) const { return layers_[index_of(b)]; }

LayerParams TwoBranchNet::layer(Branch b, std::size_t l) {
  const LayerSlice& s = layers_[index_of(b)].at(l);
  double* data = params_.data();
  return {Eigen::Map<Eigen::MatrixXd>(data + s.weight_offset, s.out, s.in),
          Eigen::Map<Eigen::VectorXd>(data + s.bias_offset, s.out)};
}

ConstLayerParams TwoBranchNet::layer(Branch b, std::size_t l) const {
  const LayerSlice& s = layers_[index_of(b)].at(l);
  const double* data = params_.data();
  return {Eigen::Map<const Eigen::MatrixXd>(data + s.weight_offset, s.out, s.in),
          Eigen::Map<const Eigen::VectorXd>(data + s.bias_offset, s.out)};
}

const Eigen::MatrixXd& TwoBranchNet::forward(Branch b, std::span<const double> xs,
                                             BranchTape& tape) const {
  const auto& slices = layers(b);
  const std::size_t depth = slices.size();
  const auto n = static_cast<Eigen::Index>(xs.size());
  tape.pre.resize(depth);
  tape.post.resize(depth + 1);
  tape.post[0] = Eigen::Map<const Eigen::RowVectorXd>(xs.data(), n);
  for (std::size_t l = 0; l < depth; ++l) {
    const ConstLayerParams p = layer(b, l);
    Eigen::MatrixXd& z = tape.pre[l];
    z.noalias() = p.weights * tape.post[l];
    z.colwise() += p.biases;
    const Activation act = l + 1 == depth ? Activation::Identity : hidden_;
    apply_activation(act, z, tape.post[l + 1]);
  }
  return tape.post[depth];
}

void TwoBranchNet::backward(Branch b, BranchTape& tape, std::span<const double> adjoint,
                            std::span<double> grad) const {
  const auto& slices = layers(b);
  const std::size_t depth = slices.size();
  const Eigen::Index n = tape.post[0].cols();
  if (static_cast<Eigen::Index>(adjoint.size()) != n) {
    throw std::invalid_argument("backward: adjoint length does not match the recorded batch");
  }
  if (grad.size() != param_count()) {
    throw std::invalid_argument("backward: gradient length does not match param_count");
  }
  Eigen::MatrixXd* delta = &tape.delta[0];
  Eigen::MatrixXd* next = &tape.delta[1];
  *delta = Eigen::Map<const Eigen::RowVectorXd>(adjoint.data(), n);
  for (std::size_t l = depth; l-- > 0;) {
    const LayerSlice& s = slices[l];
    const Activation act = l + 1 == depth ? Activation::Identity : hidden_;
    scale_by_derivative(act, tape.pre[l], tape.post[l + 1], *delta);
    tape.grad_w.noalias() = (*delta) * tape.post[l].transpose();
    tape.grad_b.noalias() = delta->rowwise().sum();
    double* gw = grad.data() + s.weight_offset;
    for (Eigen::Index i = 0; i < tape.grad_w.size(); ++i) gw[i] += tape.grad_w.data()[i];
    double* gb = grad.data() + s.bias_offset;
    for (Eigen::Index i = 0; i < tape.grad_b.size(); ++i) gb[i] += tape.grad_b[i];
    if (l > 0) {
      next->noalias() = layer(b, l).weights.transpose() * (*delta);
      std::swap(delta, next);
    }
  }
}

void TwoBranchNet::evaluate(Branch b, std::span<const double> xs, std::span<double> out) const {
  if (out.size() != xs.size()) throw std::invalid_argument("evaluate: size mismatch");
  BranchTape tape;
  const Eigen::MatrixXd& y = forward(b, xs, tape);
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = y(0, static_cast<Eigen::Index>(i));
}

double TwoBranchNet::evaluate(Branch b, double x) const {
  double y = 0.0;
  evaluate(b, std::span<const double>(&x, 1), std::span<double>(&y, 1));
  return y;
}

BranchValues TwoBranchNet::forward(double x) const {
  return {evaluate(Branch::Upper, x), evaluate(Branch::Lower, x)};
}

std::string to_string(InitScheme scheme) {
  switch (scheme) {
    case InitScheme::Glorot:
      return "glorot";
    case InitScheme::He:
      return "he";
    case InitScheme::LeCun:
      return "lecun";
  }
  return "he";
}

InitScheme parse_init_scheme(std::string_view name) {
  if (name == "glorot") return InitScheme::Glorot;
  if (name == "he") return InitScheme::He;
  if (name == "lecun") return InitScheme::LeCun;
  throw std::invalid_argument("unknown init scheme '" + std::string(name) + "'");
}

TwoBranchNet init_network(const Architecture& arch, Activation hidden, std::uint64_t seed, InitScheme scheme) {
  TwoBranchNet net(arch, hidden);
  std::mt19937_64 rng(seed);
  for (Branch b : {Branch::Upper, Branch::Lower}) {
    for (std::size_t l = 0; l < net.layers(b).size(); ++l) {
      const LayerSlice& s = net.layers(b)[l];
      const double in = s.in;
      const double wr = scheme == InitScheme::Glorot ? std::sqrt(6.0 / (in + s.out))
                        : scheme == InitScheme::He   ? std::sqrt(6.0 / in)
                                                     : std::sqrt(1.0 / in);
      const double br = 1.0 / std::sqrt(static_cast<double>(s.in));
      std::uniform_real_distribution<double> wdist(-wr, wr);
      std::uniform_real_distribution<double> bdist(-br, br);
      LayerParams p = net.layer(b, l);
      for (Eigen::Index j = 0; j < p.weights.cols(); ++j) {
        for (Eigen::Index i = 0; i < p.weights.rows(); ++i) p.weights(i, j) = wdist(rng);
      }
      for (Eigen::Index i = 0; i < p.biases.size(); ++i) p.biases(i) = bdist(rng);
    }
  }
  return net;
}

double evaluate_objective(const SampledObjective& objective, const TwoBranchNet& net) {
  std::vector<double> u(objective.sites.upper.size());
  std::vector<double> s(objective.sites.lower.size());
  if (!u.empty()) net.evaluate(Branch::Upper, objective.sites.upper, u);
  if (!s.empty()) net.evaluate(Branch::Lower, objective.sites.lower, s);
  const double value = objective.assemble(u, s, {}, {});
  if (!std::isfinite(value)) throw NonFiniteError("objective value is not finite");
  return value;
}

double param_gradient(const SampledObjective& objective, const TwoBranchNet& net,
                      std::span<double> grad, GradientWorkspace* workspace) {
  if (grad.size() != net.param_count()) {
    throw std::invalid_argument("param_gradient: gradient length does not match param_count");
  }
  GradientWorkspace local;
  GradientWorkspace& ws = workspace != nullptr ? *workspace : local;
  const std::vector<double>* sites[2] = {&objective.sites.upper, &objective.sites.lower};
  for (int b = 0; b < 2; ++b) {
    const std::size_t n = sites[b]->size();
    ws.values[b].resize(n);
    ws.adjoint[b].assign(n, 0.0);
    if (n == 0) continue;
    const Eigen::MatrixXd& y = net.forward(static_cast<Branch>(b), *sites[b], ws.tape[b]);
    std::copy(y.data(), y.data() + n, ws.values[b].begin());
  }
  const double value = objective.assemble(ws.values[0], ws.values[1], ws.adjoint[0], ws.adjoint[1]);
  if (!std::isfinite(value)) throw NonFiniteError("objective value is not finite");
  std::fill(grad.begin(), grad.end(), 0.0);
  for (int b = 0; b < 2; ++b) {
    if (sites[b]->empty()) continue;
    net.backward(static_cast<Branch>(b), ws.tape[b], ws.adjoint[b], grad);
  }
  return value;
}

Eigen::VectorXd param_gradient(const SampledObjective& objective, const TwoBranchNet& net) {
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.param_count()));
  param_gradient(objective, net, std::span<double>(grad.data(), static_cast<std::size_t>(grad.size())));
  return grad;
}

}  // namespace deepls
