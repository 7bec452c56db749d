#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "deepls/loss.hpp"
#include "deepls/net.hpp"
#include "deepls/problems.hpp"
#include "deepls/quad.hpp"

namespace deepls {

// Which pair normalises the functional: the exact (sigma, u) or the computed one.
enum class DenominatorKind { ExactPair, ComputedPair };

std::string to_string(DenominatorKind kind);  // "exact", "computed"
DenominatorKind parse_denominator_kind(std::string_view name);

// Optional entries are absent when they do not apply: the flux and the
// functional only exist for runs that train the lower branch.
struct ErrorReport {
  double rel_l2_u = 0.0;
  double rel_h1semi_u = 0.0;
  std::optional<double> rel_energy_u;
  std::optional<double> rel_l2_sigma;
  std::optional<double> rel_functional;
  DenominatorKind denominator_kind = DenominatorKind::ExactPair;
  std::size_t eval_points = 0;
};

struct ReportOptions {
  bool flux_trained = true;
  DenominatorKind denominator = DenominatorKind::ExactPair;
  std::size_t eval_points = 0;  // 0 selects default_eval_points(training points)
  LossSpec functional{LossKind::FOSLS, 1.0, 1.0};
};

// max(10 * training_points, 10^4)
std::size_t default_eval_points(std::size_t training_points);

// ||e||/||r|| for sampled values with quadrature weights.
double relative_l2(std::span<const double> reference, std::span<const double> approx,
                   std::span<const double> weights);

// |||(tau, v)|||^2 = ||tau/sqrt(a)||^2 + ||tau'||^2 + ||v||^2 + ||sqrt(a) v'||^2
// by the midpoint rule on `grid`; derivatives of the candidate are backward
// quotients with tau = h/2, those of the exact pair are analytic.
double energy_norm(const CandidatePair& candidate, const ProblemSpec& problem, const Partition& grid);
double energy_norm(const TwoBranchNet& net, const ProblemSpec& problem, const Partition& grid);
double exact_energy_norm(const ProblemSpec& problem, const Partition& grid);

// All norms are midpoint sums on a fresh uniform grid with n_eval elements.
// rel_energy_u uses |||v|||^2 = ||v||^2 + ||sqrt(a) v'||^2. rel_functional is
// G^{1/2} on the evaluation grid over the chosen denominator.
ErrorReport relative_errors(const TwoBranchNet& net, const ProblemSpec& problem, std::size_t n_eval,
                            const ReportOptions& options = {});
ErrorReport relative_errors(const CandidatePair& candidate, const ProblemSpec& problem,
                            std::size_t n_eval, const ReportOptions& options = {});

// sqrt(FOSLS loss on `partition`) / |||pair||| with the denominator evaluated
// on a uniform grid of n_eval elements (0: default_eval_points). Throws
// std::domain_error when the denominator vanishes.
double relative_functional(const TwoBranchNet& net, const ProblemSpec& problem, const Partition& partition,
                           DenominatorKind kind, std::size_t n_eval = 0, const LossSpec& spec = {});
double relative_functional(const CandidatePair& candidate, const ProblemSpec& problem,
                           const Partition& partition, DenominatorKind kind, std::size_t n_eval = 0,
                           const LossSpec& spec = {});

}  // namespace deepls
