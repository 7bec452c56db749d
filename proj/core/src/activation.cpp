#include "deepls/activation.hpp"

#include <cmath>
#include <stdexcept>

namespace deepls {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double activate(Activation kind, double z) {
  switch (kind) {
    case Activation::LeakyReLU:
      return leaky_relu(z);
    case Activation::Sigmoid:
      return sigmoid(z);
    case Activation::Identity:
      return z;
  }
  return z;
}

double activate_derivative(Activation kind, double z) {
  switch (kind) {
    case Activation::LeakyReLU:
      return z > 0.0 ? 1.0 : kLeakySlope;
    case Activation::Sigmoid: {
      const double s = sigmoid(z);
      return s * (1.0 - s);
    }
    case Activation::Identity:
      return 1.0;
  }
  return 1.0;
}

std::string to_string(Activation kind) {
  switch (kind) {
    case Activation::LeakyReLU:
      return "leaky-relu";
    case Activation::Sigmoid:
      return "sigmoid";
    case Activation::Identity:
      return "identity";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "leaky-relu") return Activation::LeakyReLU;
  if (name == "sigmoid") return Activation::Sigmoid;
  if (name == "identity") return Activation::Identity;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

}  // namespace deepls
