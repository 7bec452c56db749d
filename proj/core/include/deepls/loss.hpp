#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deepls/net.hpp"
#include "deepls/problems.hpp"
#include "deepls/quad.hpp"

namespace deepls {

enum class LossKind { Energy, LS, FOSLS };

std::string to_string(LossKind kind);
LossKind parse_loss_kind(std::string_view name);  // "energy", "ls", "fosls"

// What h_E means in the boundary weights. Element: length of the element next
// to the endpoint. Unit: h_E = 1, so the terms are plain point penalties.
// Auto: Element for the energy functional, Unit for FOSLS and LS.
// The one-sided quotients at the boundary always use the adjacent element.
enum class BoundaryScale { Element, Unit, Auto };

std::string to_string(BoundaryScale scale);
BoundaryScale parse_boundary_scale(std::string_view name);  // "element", "unit", "auto"
// Element or Unit; Auto is resolved by loss kind.
BoundaryScale resolve_boundary_scale(BoundaryScale scale, LossKind kind);

struct LossSpec {
  LossKind kind = LossKind::FOSLS;
  double alpha_d = 1.0;
  double alpha_n = 1.0;
  BoundaryScale boundary_scale = BoundaryScale::Element;
};

// (u, sigma) given as plain functions instead of a network, e.g. an exact solution.
struct CandidatePair {
  ScalarFn u;
  ScalarFn sigma;
};

CandidatePair exact_pair(const ProblemSpec& problem);

struct LossBreakdown {
  std::vector<double> interior;  // per-element contribution, left to right
  double boundary = 0.0;
  double total = 0.0;
};

// A discrete loss functional on a fixed partition. Derivatives in x are
// backward difference quotients with tau = |K|/2 at each midpoint x_K.
//
//   FOSLS:  sum_K [(s' + b u' + c u - f)^2 + (s/sqrt(a) + sqrt(a) u')^2](x_K) |K|
//           + alpha_D sum_D (u - g_D)^2 |E|/h_E + alpha_N sum_N (n s - g_N)^2 |E| h_E
//   Energy: sum_K [a u'^2/2 + c u^2/2 - f u](x_K) |K| + sum_N g_N u |E|
//           + alpha_D sum_D (u - g_D)^2 |E|/h_E
//   LS:     sum_K [-(a u')' + b u' + c u - f]^2(x_K) |K|
//           + alpha_D sum_D (u - g_D)^2 |E|/h_E^3 + alpha_N sum_N (n a u' + g_N)^2 |E|/h_E
//
// In LS, (a u')' is the conservative quotient
// [a(x+tau/2)(u(x+tau)-u(x)) - a(x-tau/2)(u(x)-u(x-tau))] / tau^2.
// Energy and LS only read the upper branch.
class DiscreteLoss {
 public:
  DiscreteLoss(const ProblemSpec& problem, const Partition& partition, const LossSpec& spec);

  LossKind kind() const;
  const LossSpec& spec() const;
  const Partition& partition() const;
  const SampleSites& sites() const;

  // Shares the precomputed state; the objective stays valid after this object dies.
  SampledObjective objective() const;

  double evaluate(const TwoBranchNet& net) const;
  double evaluate(const CandidatePair& candidate) const;
  LossBreakdown breakdown(const TwoBranchNet& net) const;
  LossBreakdown breakdown(const CandidatePair& candidate) const;

  // Loss from branch values at sites(); adjoints filled when non-empty.
  double assemble(std::span<const double> u, std::span<const double> sigma, std::span<double> du,
                  std::span<double> dsigma, LossBreakdown* parts = nullptr) const;

  // Throws std::invalid_argument when the network cannot be used with this loss
  // (LS with a piecewise linear activation).
  void check_compatible(const TwoBranchNet& net) const;

  struct Data;

 private:
  std::shared_ptr<const Data> data_;
};

double fosls_loss(const TwoBranchNet& net, const ProblemSpec& problem, const Partition& partition,
                  const LossSpec& spec = {});
double fosls_loss(const CandidatePair& candidate, const ProblemSpec& problem,
                  const Partition& partition, const LossSpec& spec = {});

double energy_loss(const TwoBranchNet& net, const ProblemSpec& problem, const Partition& partition,
                   const LossSpec& spec);
double energy_loss(const CandidatePair& candidate, const ProblemSpec& problem,
                   const Partition& partition, const LossSpec& spec);

double ls_loss(const TwoBranchNet& net, const ProblemSpec& problem, const Partition& partition,
               const LossSpec& spec);
double ls_loss(const CandidatePair& candidate, const ProblemSpec& problem,
               const Partition& partition, const LossSpec& spec);

// eta_K = [(s' + b u' + c u - f)^2 + (s/sqrt(a) + sqrt(a) u')^2](x_K) |K|
std::vector<double> fosls_indicators(const TwoBranchNet& net, const ProblemSpec& problem,
                                     const Partition& partition);
std::vector<double> fosls_indicators(const CandidatePair& candidate, const ProblemSpec& problem,
                                     const Partition& partition);

}  // namespace deepls
