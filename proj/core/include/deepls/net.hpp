#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "deepls/activation.hpp"

namespace deepls {

// Raised when a network output, loss value or gradient stops being finite.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Branch : int { Upper = 0, Lower = 1 };

// Output widths of every layer of each branch. The input width is always 1
// and the last entry of each list must be 1.
struct Architecture {
  std::vector<int> upper;
  std::vector<int> lower;

  // Same widths on both branches.
  static Architecture symmetric(std::vector<int> widths) { return {widths, widths}; }
};

// Where one fully connected layer lives inside the flat parameter vector.
// Weights are stored column-major (out x in), followed by the biases.
struct LayerSlice {
  int in = 0;
  int out = 0;
  std::size_t weight_offset = 0;
  std::size_t bias_offset = 0;
};

template <class Matrix, class Vector>
struct BasicLayerParams {
  Matrix weights;
  Vector biases;
};

using LayerParams =
    BasicLayerParams<Eigen::Map<Eigen::MatrixXd>, Eigen::Map<Eigen::VectorXd>>;
using ConstLayerParams = BasicLayerParams<Eigen::Map<const Eigen::MatrixXd>,
                                          Eigen::Map<const Eigen::VectorXd>>;

struct BranchValues {
  double u = 0.0;
  double sigma = 0.0;
};

// Activations kept by a batched forward pass for the matching backward pass.
struct BranchTape {
  std::vector<Eigen::MatrixXd> pre;   // z_l = W_l a_{l-1} + b_l
  std::vector<Eigen::MatrixXd> post;  // a_l, post[0] is the input row
  Eigen::MatrixXd delta[2];           // backward scratch
  Eigen::MatrixXd grad_w;             // per-layer gradient, owned so that its
  Eigen::VectorXd grad_b;             // alignment (and summation order) is fixed
};

// Two independent fully connected branches sharing the scalar input x:
// the upper one approximates u, the lower one the flux sigma. Hidden layers
// use one activation, output layers are affine.
class TwoBranchNet {
 public:
  TwoBranchNet(Architecture arch, Activation hidden);

  const Architecture& architecture() const { return arch_; }
  Activation hidden_activation() const { return hidden_; }

  std::size_t param_count() const { return static_cast<std::size_t>(params_.size()); }
  std::size_t branch_offset(Branch b) const;
  std::size_t branch_param_count(Branch b) const;
  const std::vector<LayerSlice>& layers(Branch b) const;

  const Eigen::VectorXd& params() const { return params_; }
  Eigen::VectorXd& params() { return params_; }

  LayerParams layer(Branch b, std::size_t l);
  ConstLayerParams layer(Branch b, std::size_t l) const;

  BranchValues forward(double x) const;
  double evaluate(Branch b, double x) const;
  void evaluate(Branch b, std::span<const double> xs, std::span<double> out) const;

  // Batched pass that records activations into `tape`; returns the output row.
  const Eigen::MatrixXd& forward(Branch b, std::span<const double> xs, BranchTape& tape) const;

  // Accumulates d(loss)/d(params of branch b) into `grad` (full length),
  // given d(loss)/d(output) for every column of the recorded batch.
  void backward(Branch b, BranchTape& tape, std::span<const double> adjoint,
                std::span<double> grad) const;

 private:
  Architecture arch_;
  Activation hidden_;
  std::vector<LayerSlice> layers_[2];
  std::size_t offset_[2] = {0, 0};
  std::size_t count_[2] = {0, 0};
  Eigen::VectorXd params_;
};

// sum_l n_l (n_{l-1} + 1) with n_0 = 1.
std::size_t branch_parameter_count(const std::vector<int>& widths);

// Weight ranges: Glorot +-sqrt(6/(n_in+n_out)), He +-sqrt(6/n_in), LeCun +-sqrt(1/n_in).
enum class InitScheme { Glorot, He, LeCun };

std::string to_string(InitScheme scheme);
InitScheme parse_init_scheme(std::string_view name);  // "glorot" | "he" | "lecun"

// Deterministic for a given seed. Weights are uniform in the scheme's range,
// biases uniform in +-1/sqrt(n_in).
TwoBranchNet init_network(const Architecture& arch, Activation hidden, std::uint64_t seed,
                          InitScheme scheme = InitScheme::He);

// (g(x) - g(x - tau)) / tau
template <class F>
double fd_derivative(F&& g, double x, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("fd_derivative: tau must be positive");
  return (g(x) - g(x - tau)) / tau;
}

// (g(x + tau) - 2 g(x) + g(x - tau)) / tau^2
template <class F>
double fd_second_derivative(F&& g, double x, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("fd_second_derivative: tau must be positive");
  return (g(x + tau) - 2.0 * g(x) + g(x - tau)) / (tau * tau);
}

// Evaluation sites of a loss for each branch.
struct SampleSites {
  std::vector<double> upper;
  std::vector<double> lower;
};

// A scalar loss that depends on the network only through branch values at
// fixed sites. `assemble` receives those values and returns the loss; when
// the adjoint spans are non-empty it also writes d(loss)/d(value) per site.
struct SampledObjective {
  using Assemble = std::function<double(std::span<const double> u, std::span<const double> sigma,
                                        std::span<double> du, std::span<double> dsigma)>;
  SampleSites sites;
  Assemble assemble;
};

// Reusable buffers for repeated gradient evaluations.
struct GradientWorkspace {
  BranchTape tape[2];
  std::vector<double> values[2];
  std::vector<double> adjoint[2];
};

double evaluate_objective(const SampledObjective& objective, const TwoBranchNet& net);

// Reverse-mode gradient of the objective with respect to all parameters.
// Writes into `grad` (length param_count) and returns the loss value.
double param_gradient(const SampledObjective& objective, const TwoBranchNet& net,
                      std::span<double> grad, GradientWorkspace* workspace = nullptr);

Eigen::VectorXd param_gradient(const SampledObjective& objective, const TwoBranchNet& net);

}  // namespace deepls
