#include "deepls/train.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace deepls {

void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, long t, double lr,
               const AdamConfig& config) {
  const auto n = static_cast<Eigen::Index>(params.size());
  if (grad.size() != params.size() || state.m.size() != n || state.v.size() != n) {
    throw std::invalid_argument("adam_step: vector lengths disagree");
  }
  if (t < 1) throw std::invalid_argument("adam_step: step index must be at least 1");
  for (double g : grad) {
    if (!std::isfinite(g)) throw NonFiniteError("adam_step: non-finite gradient component");
  }
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double g = grad[static_cast<std::size_t>(i)];
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    params[static_cast<std::size_t>(i)] -= lr * mhat / (std::sqrt(vhat) + config.epsilon);
  }
}

void validate(const TrainConfig& config) {
  if (config.iterations < 1) throw std::invalid_argument("iterations must be at least 1");
  if (!(config.lr0 > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (config.halve_every && *config.halve_every < 1) {
    throw std::invalid_argument("decay interval must be at least 1");
  }
  if (const auto* local = std::get_if<RefineLocal>(&config.refine)) {
    if (local->every < 1) throw std::invalid_argument("refinement interval must be at least 1");
    if (!(local->fraction > 0.0 && local->fraction <= 1.0)) {
      throw std::invalid_argument("refinement fraction must lie in (0, 1]");
    }
  }
  if (const auto* global = std::get_if<RefineGlobalOnce>(&config.refine)) {
    if (global->at < 1) throw std::invalid_argument("global refinement step must be at least 1");
  }
}

double learning_rate(const TrainConfig& config, long t) {
  if (!config.halve_every) return config.lr0;
  return std::ldexp(config.lr0, -static_cast<int>(t / *config.halve_every));
}

namespace {

bool refine_after(const RefineSchedule& schedule, long completed, long iterations) {
  if (completed >= iterations) return false;
  if (const auto* local = std::get_if<RefineLocal>(&schedule)) return completed % local->every == 0;
  if (const auto* global = std::get_if<RefineGlobalOnce>(&schedule)) return completed == global->at;
  return false;
}

}  // namespace

TrainResult train(TwoBranchNet net, const ProblemSpec& problem, Partition partition, const LossSpec& loss,
                  const TrainConfig& config, std::uint64_t seed, const TrainObserver& observer) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  DiscreteLoss objective(problem, partition, loss);
  objective.check_compatible(net);

  const std::size_t n = net.param_count();
  AdamState state(n);
  GradientWorkspace workspace;
  std::vector<double> grad(n, 0.0);

  TrainResult result{net, {}, {}, partition, seed, 0.0};
  result.loss_history.reserve(static_cast<std::size_t>(config.iterations));
  result.lr_history.reserve(static_cast<std::size_t>(config.iterations));
  SampledObjective sampled = objective.objective();
  std::span<double> params(net.params().data(), n);

  for (long t = 0; t < config.iterations; ++t) {
    double value = 0.0;
    try {
      value = param_gradient(sampled, net, grad, &workspace);
    } catch (const NonFiniteError&) {
      value = std::numeric_limits<double>::quiet_NaN();
    }
    if (!std::isfinite(value) ||
        std::any_of(grad.begin(), grad.end(), [](double g) { return !std::isfinite(g); })) {
      std::ostringstream msg;
      msg << "training diverged at iteration " << t << " (seed " << seed << "): loss = " << value;
      throw NonFiniteError(msg.str());
    }
    const double lr = learning_rate(config, t);
    result.loss_history.push_back(value);
    result.lr_history.push_back(lr);
    adam_step(params, grad, state, t + 1, lr, config.adam);

    const long completed = t + 1;
    if (refine_after(config.refine, completed, config.iterations)) {
      if (const auto* local = std::get_if<RefineLocal>(&config.refine)) {
        partition = refine_local(partition, fosls_indicators(net, problem, partition), local->fraction);
      } else {
        partition = refine_global(partition);
      }
      objective = DiscreteLoss(problem, partition, loss);
      sampled = objective.objective();
    }
    if (observer) observer(completed, net, partition);
  }

  result.net = std::move(net);
  result.partition = std::move(partition);
  result.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

std::size_t median_index(std::span<const double> metrics) {
  if (metrics.empty()) throw std::invalid_argument("median_index: no metrics");
  std::vector<std::size_t> order(metrics.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return metrics[a] < metrics[b]; });
  return order[(order.size() - 1) / 2];
}

double default_replica_metric(const TrainResult& result, const ErrorReport& report) {
  (void)result;
  if (std::isfinite(report.rel_l2_u)) return report.rel_l2_u;
  if (report.rel_functional) return *report.rel_functional;
  throw std::invalid_argument("replica report carries neither an L2 error nor a functional value");
}

ReplicatedResult run_replicated(const ReplicaSetup& setup, const ReplicaMetric& metric) {
  validate(setup.train);
  const std::vector<std::uint64_t>& seeds = setup.train.seeds;
  if (seeds.empty() || seeds.size() % 2 == 0) {
    throw std::invalid_argument("run_replicated: need an odd number of seeds");
  }

  const std::size_t count = seeds.size();
  std::vector<std::optional<TrainResult>> results(count);
  std::vector<std::optional<ErrorReport>> reports(count);
  std::vector<std::exception_ptr> errors(count);

  auto run_one = [&](std::size_t i) {
    try {
      TwoBranchNet net = init_network(setup.arch, setup.activation, seeds[i], setup.init);
      TrainResult r = train(std::move(net), setup.problem, setup.partition, setup.loss, setup.train, seeds[i]);
      ErrorReport report;
      if (setup.problem.exact) {
        const std::size_t n_eval = setup.report.eval_points > 0 ? setup.report.eval_points
                                                                : default_eval_points(setup.partition.size());
        report = relative_errors(r.net, setup.problem, n_eval, setup.report);
      } else {
        report.rel_l2_u = std::numeric_limits<double>::quiet_NaN();
        report.rel_h1semi_u = std::numeric_limits<double>::quiet_NaN();
        report.denominator_kind = DenominatorKind::ComputedPair;
        report.eval_points = default_eval_points(r.partition.size());
        report.rel_functional = relative_functional(r.net, setup.problem, r.partition,
                                                    DenominatorKind::ComputedPair, report.eval_points,
                                                    setup.report.functional);
      }
      reports[i] = report;
      results[i] = std::move(r);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  const std::size_t workers = std::clamp<std::size_t>(setup.workers, 1, count);
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) run_one(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  ReplicatedResult out;
  std::exception_ptr first_error;
  for (std::size_t i = 0; i < count; ++i) {
    if (errors[i]) {
      if (!first_error) first_error = errors[i];
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        out.failures.push_back("seed " + std::to_string(seeds[i]) + ": " + e.what());
      } catch (...) {
        out.failures.push_back("seed " + std::to_string(seeds[i]) + ": unknown error");
      }
      continue;
    }
    out.metrics.push_back(metric(*results[i], *reports[i]));
    out.replicas.push_back(std::move(*results[i]));
    out.reports.push_back(*reports[i]);
  }
  if (out.replicas.empty()) std::rethrow_exception(first_error);
  out.median = median_index(out.metrics);
  return out;
}

}  // namespace deepls
