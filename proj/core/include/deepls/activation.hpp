#pragma once

#include <string>
#include <string_view>

namespace deepls {

enum class Activation { LeakyReLU, Sigmoid, Identity };

inline constexpr double kLeakySlope = 0.01;

// x for x > 0, 0.01 x otherwise (including x == 0).
inline double leaky_relu(double x) { return x > 0.0 ? x : kLeakySlope * x; }

double sigmoid(double x);

double activate(Activation kind, double z);

// Derivative with respect to the pre-activation z.
double activate_derivative(Activation kind, double z);

std::string to_string(Activation kind);

// Accepts "leaky-relu", "sigmoid", "identity" (case-sensitive).
Activation parse_activation(std::string_view name);

}  // namespace deepls
