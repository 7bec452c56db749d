#include "deepls/problems.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace deepls {
namespace {

ScalarFn constant(double v) {
  return [v](double) { return v; };
}

// Attaches the flux and its derivative via sigma = -a u', sigma' = f - b u' - c u.
ExactSolution complete_exact(const ProblemSpec& p, ScalarFn u, ScalarFn du) {
  ExactSolution ex;
  ex.u = u;
  ex.u_prime = du;
  ex.sigma = [a = p.coeff_a, du](double x) { return -a(x) * du(x); };
  ex.sigma_prime = [f = p.rhs_f, b = p.coeff_b, c = p.coeff_c, u, du](double x) {
    const double bx = b ? b(x) : 0.0;
    return f(x) - bx * du(x) - c(x) * u(x);
  };
  return ex;
}

}  // namespace

void validate(const ProblemSpec& problem) {
  if (!(problem.left < problem.right)) {
    throw std::invalid_argument("problem '" + problem.name + "': interval must satisfy left < right");
  }
  if (!problem.coeff_a || !problem.coeff_c || !problem.rhs_f) {
    throw std::invalid_argument("problem '" + problem.name + "': missing coefficient");
  }
}

ProblemSpec poisson_problem() {
  ProblemSpec p;
  p.name = "poisson";
  p.left = 0.0;
  p.right = 1.0;
  p.coeff_a = constant(1.0);
  p.coeff_c = constant(0.0);
  p.rhs_f = [](double x) {
    const double poly = x * x * x - 2.0 * x * x / 3.0 + 173.0 * x / 1800.0 + 1.0 / 300.0;
    const double d = x - 1.0 / 3.0;
    return -40000.0 * poly * std::exp(-100.0 * d * d);
  };
  p.bc_left = BoundaryCondition::dirichlet(0.0);
  p.bc_right = BoundaryCondition::dirichlet(0.0);

  const double tail = std::exp(-(4.0 / 9.0) / 0.01);
  auto u = [tail](double x) {
    const double d = x - 1.0 / 3.0;
    return x * (std::exp(-d * d / 0.01) - tail);
  };
  auto du = [tail](double x) {
    const double d = x - 1.0 / 3.0;
    const double g = std::exp(-d * d / 0.01);
    return g - tail + x * (-200.0 * d) * g;
  };
  p.exact = complete_exact(p, u, du);
  return p;
}

ProblemSpec reaction_diffusion_problem(double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("reaction-diffusion: epsilon must be positive");
  ProblemSpec p;
  p.name = "reaction-diffusion";
  p.left = -1.0;
  p.right = 1.0;
  const double eps = epsilon;
  p.coeff_a = constant(eps * eps);
  p.coeff_c = constant(1.0);
  const double shift = std::tanh(3.0 / (4.0 * eps));
  p.rhs_f = [eps, shift](double x) {
    const double z = (x * x - 0.25) / eps;
    const double t = std::tanh(z);
    const double sech = 1.0 / std::cosh(z);
    return -2.0 * (eps - 4.0 * x * x * t) * sech * sech + t - shift;
  };
  p.bc_left = BoundaryCondition::dirichlet(0.0);
  p.bc_right = BoundaryCondition::dirichlet(0.0);

  auto u = [eps, shift](double x) { return std::tanh((x * x - 0.25) / eps) - shift; };
  auto du = [eps](double x) {
    const double sech = 1.0 / std::cosh((x * x - 0.25) / eps);
    return sech * sech * 2.0 * x / eps;
  };
  p.exact = complete_exact(p, u, du);
  return p;
}

ProblemSpec interface_problem(double k) {
  if (!(k > 0.0)) throw std::invalid_argument("interface: k must be positive");
  ProblemSpec p;
  p.name = "interface";
  p.left = 0.0;
  p.right = 1.0;
  p.coeff_a = [k](double x) { return x <= 0.5 ? 1.0 : k; };
  p.coeff_c = constant(0.0);
  p.rhs_f = [k](double x) { return x <= 0.5 ? 8.0 * k * (3.0 * x - 1.0) : 4.0 * k * (k + 1.0); };
  p.bc_left = BoundaryCondition::dirichlet(0.0);
  p.bc_right = BoundaryCondition::dirichlet(0.0);

  auto u = [k](double x) {
    if (x <= 0.5) return 4.0 * k * x * x * (1.0 - x);
    return (2.0 * (k + 1.0) * x - 1.0) * (1.0 - x);
  };
  auto du = [k](double x) {
    if (x <= 0.5) return 4.0 * k * (2.0 * x - 3.0 * x * x);
    return 2.0 * (k + 1.0) * (1.0 - x) - (2.0 * (k + 1.0) * x - 1.0);
  };
  p.exact = complete_exact(p, u, du);
  return p;
}

bool is_known_problem(std::string_view name) {
  return name == "poisson" || name == "reaction-diffusion" || name == "interface";
}

ProblemSpec make_problem(std::string_view name, double epsilon, double k) {
  if (name == "poisson") return poisson_problem();
  if (name == "reaction-diffusion") return reaction_diffusion_problem(epsilon);
  if (name == "interface") return interface_problem(k);
  throw std::invalid_argument("unknown problem '" + std::string(name) + "'");
}

}  // namespace deepls
