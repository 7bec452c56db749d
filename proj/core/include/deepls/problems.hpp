#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

namespace deepls {

using ScalarFn = std::function<double(double)>;

struct BoundaryCondition {
  enum class Kind { Dirichlet, Neumann };
  Kind kind = Kind::Dirichlet;
  double value = 0.0;

  static BoundaryCondition dirichlet(double g) { return {Kind::Dirichlet, g}; }
  static BoundaryCondition neumann(double g) { return {Kind::Neumann, g}; }
  bool is_dirichlet() const { return kind == Kind::Dirichlet; }
};

// Closed-form solution with its flux sigma = -a u'. sigma' follows from
// sigma' = f - b u' - c u, so no second derivative of u is needed.
struct ExactSolution {
  ScalarFn u;
  ScalarFn u_prime;
  ScalarFn sigma;
  ScalarFn sigma_prime;
};

// -(a u')' + b u' + c u = f on (left, right). A Dirichlet condition fixes u,
// a Neumann condition fixes n.sigma = -n a u'. An empty coeff_b means b = 0.
struct ProblemSpec {
  std::string name;
  double left = 0.0;
  double right = 1.0;
  ScalarFn coeff_a;
  ScalarFn coeff_b;
  ScalarFn coeff_c;
  ScalarFn rhs_f;
  BoundaryCondition bc_left;
  BoundaryCondition bc_right;
  std::optional<ExactSolution> exact;

  bool has_convection() const { return static_cast<bool>(coeff_b); }
  double b(double x) const { return coeff_b ? coeff_b(x) : 0.0; }
};

// Throws std::invalid_argument when the interval is empty or a coefficient is missing.
void validate(const ProblemSpec& problem);

// -u'' = f on (0,1), u(0) = u(1) = 0, u = x (exp(-(x-1/3)^2/0.01) - exp(-(4/9)/0.01)).
ProblemSpec poisson_problem();

// -eps^2 u'' + u = f on (-1,1), u = tanh((x^2-1/4)/eps) - tanh(3/(4 eps)).
ProblemSpec reaction_diffusion_problem(double epsilon);

// -(a u')' = f on (0,1) with a = 1 left of 1/2 and a = k right of it.
// a(1/2) takes the left value.
ProblemSpec interface_problem(double k);

// "poisson", "reaction-diffusion" (uses epsilon) or "interface" (uses k).
ProblemSpec make_problem(std::string_view name, double epsilon = 0.01, double k = 10.0);

bool is_known_problem(std::string_view name);

}  // namespace deepls
