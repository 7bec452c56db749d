#include "deepls/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace deepls {
namespace {

using BatchFn = std::function<void(std::span<const double>, std::span<double>)>;

struct PairSampler {
  BatchFn u;
  BatchFn sigma;
};

PairSampler sampler_for(const TwoBranchNet& net) {
  return {[&net](std::span<const double> xs, std::span<double> out) { net.evaluate(Branch::Upper, xs, out); },
          [&net](std::span<const double> xs, std::span<double> out) { net.evaluate(Branch::Lower, xs, out); }};
}

PairSampler sampler_for(const CandidatePair& c) {
  auto wrap = [](const ScalarFn& g) -> BatchFn {
    return [g](std::span<const double> xs, std::span<double> out) {
      for (std::size_t i = 0; i < xs.size(); ++i) out[i] = g(xs[i]);
    };
  };
  return {wrap(c.u), wrap(c.sigma)};
}

// Candidate values and backward quotients at the midpoints of `grid`.
struct GridSample {
  std::vector<double> x, h, a;
  std::vector<double> u, du, s, ds;
};

GridSample sample(const PairSampler& pair, const ProblemSpec& problem, const Partition& grid) {
  const std::size_t n = grid.size();
  GridSample g;
  g.x = grid.midpoints();
  g.h = grid.measures();
  g.a.resize(n);
  std::vector<double> xm(n);
  for (std::size_t i = 0; i < n; ++i) {
    xm[i] = g.x[i] - 0.5 * g.h[i];
    g.a[i] = problem.coeff_a(g.x[i]);
  }
  std::vector<double> um(n), sm(n);
  g.u.resize(n);
  g.s.resize(n);
  pair.u(g.x, g.u);
  pair.u(xm, um);
  pair.sigma(g.x, g.s);
  pair.sigma(xm, sm);
  g.du.resize(n);
  g.ds.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double tau = 0.5 * g.h[i];
    g.du[i] = (g.u[i] - um[i]) / tau;
    g.ds[i] = (g.s[i] - sm[i]) / tau;
  }
  return g;
}

struct ExactSample {
  std::vector<double> u, du, s, ds;
};

ExactSample sample_exact(const ProblemSpec& problem, const std::vector<double>& x) {
  if (!problem.exact) throw std::invalid_argument("problem '" + problem.name + "' has no exact solution");
  const ExactSolution& ex = *problem.exact;
  ExactSample e;
  for (double xi : x) {
    e.u.push_back(ex.u(xi));
    e.du.push_back(ex.u_prime(xi));
    e.s.push_back(ex.sigma(xi));
    e.ds.push_back(ex.sigma_prime(xi));
  }
  return e;
}

double squared_energy(std::span<const double> s, std::span<const double> ds, std::span<const double> u,
                      std::span<const double> du, std::span<const double> a, std::span<const double> h) {
  double sum = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    sum += (s[i] * s[i] / a[i] + ds[i] * ds[i] + u[i] * u[i] + a[i] * du[i] * du[i]) * h[i];
  }
  return sum;
}

std::size_t resolve_eval_points(std::size_t requested, std::size_t training_points) {
  return requested > 0 ? requested : default_eval_points(training_points);
}

double denominator(const PairSampler& pair, const ProblemSpec& problem, DenominatorKind kind,
                   std::size_t n_eval) {
  const Partition grid = uniform_partition(problem.left, problem.right, n_eval);
  if (kind == DenominatorKind::ExactPair) return exact_energy_norm(problem, grid);
  const GridSample g = sample(pair, problem, grid);
  return std::sqrt(squared_energy(g.s, g.ds, g.u, g.du, g.a, g.h));
}

template <class Candidate>
double relative_functional_impl(const Candidate& candidate, const ProblemSpec& problem,
                                const Partition& partition, DenominatorKind kind, std::size_t n_eval,
                                const LossSpec& spec) {
  LossSpec fosls = spec;
  fosls.kind = LossKind::FOSLS;
  const double g = DiscreteLoss(problem, partition, fosls).evaluate(candidate);
  const double denom =
      denominator(sampler_for(candidate), problem, kind, resolve_eval_points(n_eval, partition.size()));
  if (!(denom > 0.0)) throw std::domain_error("relative_functional: denominator is zero");
  return std::sqrt(g) / denom;
}

template <class Candidate>
ErrorReport relative_errors_impl(const Candidate& candidate, const ProblemSpec& problem, std::size_t n_eval,
                                 const ReportOptions& options) {
  if (!problem.exact) throw std::invalid_argument("relative_errors: problem has no exact solution");
  if (n_eval == 0) throw std::invalid_argument("relative_errors: n_eval must be positive");
  const Partition grid = uniform_partition(problem.left, problem.right, n_eval);
  const GridSample g = sample(sampler_for(candidate), problem, grid);
  const ExactSample e = sample_exact(problem, g.x);

  ErrorReport r;
  r.eval_points = n_eval;
  r.denominator_kind = options.denominator;
  r.rel_l2_u = relative_l2(e.u, g.u, g.h);
  r.rel_h1semi_u = relative_l2(e.du, g.du, g.h);

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < g.h.size(); ++i) {
    const double eu = e.u[i] - g.u[i];
    const double edu = e.du[i] - g.du[i];
    num += (eu * eu + g.a[i] * edu * edu) * g.h[i];
    den += (e.u[i] * e.u[i] + g.a[i] * e.du[i] * e.du[i]) * g.h[i];
  }
  if (den > 0.0) r.rel_energy_u = std::sqrt(num / den);

  if (options.flux_trained) {
    r.rel_l2_sigma = relative_l2(e.s, g.s, g.h);
    r.rel_functional =
        relative_functional_impl(candidate, problem, grid, options.denominator, n_eval, options.functional);
  }
  return r;
}

}  // namespace

std::string to_string(DenominatorKind kind) {
  return kind == DenominatorKind::ExactPair ? "exact" : "computed";
}

DenominatorKind parse_denominator_kind(std::string_view name) {
  if (name == "exact") return DenominatorKind::ExactPair;
  if (name == "computed") return DenominatorKind::ComputedPair;
  throw std::invalid_argument("unknown denominator kind '" + std::string(name) + "'");
}

std::size_t default_eval_points(std::size_t training_points) {
  return std::max<std::size_t>(10 * training_points, 10000);
}

double relative_l2(std::span<const double> reference, std::span<const double> approx,
                   std::span<const double> weights) {
  if (reference.size() != approx.size() || reference.size() != weights.size()) {
    throw std::invalid_argument("relative_l2: size mismatch");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double e = reference[i] - approx[i];
    num += e * e * weights[i];
    den += reference[i] * reference[i] * weights[i];
  }
  if (!(den > 0.0)) throw std::domain_error("relative_l2: reference has zero norm");
  return std::sqrt(num / den);
}

double energy_norm(const CandidatePair& candidate, const ProblemSpec& problem, const Partition& grid) {
  const GridSample g = sample(sampler_for(candidate), problem, grid);
  return std::sqrt(squared_energy(g.s, g.ds, g.u, g.du, g.a, g.h));
}

double energy_norm(const TwoBranchNet& net, const ProblemSpec& problem, const Partition& grid) {
  const GridSample g = sample(sampler_for(net), problem, grid);
  return std::sqrt(squared_energy(g.s, g.ds, g.u, g.du, g.a, g.h));
}

double exact_energy_norm(const ProblemSpec& problem, const Partition& grid) {
  const std::vector<double> x = grid.midpoints();
  const std::vector<double> h = grid.measures();
  std::vector<double> a(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) a[i] = problem.coeff_a(x[i]);
  const ExactSample e = sample_exact(problem, x);
  return std::sqrt(squared_energy(e.s, e.ds, e.u, e.du, a, h));
}

ErrorReport relative_errors(const TwoBranchNet& net, const ProblemSpec& problem, std::size_t n_eval,
                            const ReportOptions& options) {
  return relative_errors_impl(net, problem, n_eval, options);
}

ErrorReport relative_errors(const CandidatePair& candidate, const ProblemSpec& problem, std::size_t n_eval,
                            const ReportOptions& options) {
  return relative_errors_impl(candidate, problem, n_eval, options);
}

double relative_functional(const TwoBranchNet& net, const ProblemSpec& problem, const Partition& partition,
                           DenominatorKind kind, std::size_t n_eval, const LossSpec& spec) {
  return relative_functional_impl(net, problem, partition, kind, n_eval, spec);
}

double relative_functional(const CandidatePair& candidate, const ProblemSpec& problem,
                           const Partition& partition, DenominatorKind kind, std::size_t n_eval,
                           const LossSpec& spec) {
  return relative_functional_impl(candidate, problem, partition, kind, n_eval, spec);
}

}  // namespace deepls
