#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "deepls/loss.hpp"
#include "deepls/metrics.hpp"
#include "deepls/net.hpp"
#include "deepls/problems.hpp"
#include "deepls/quad.hpp"

namespace deepls {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;

  explicit AdamState(std::size_t n = 0)
      : m(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
        v(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))) {}
};

// One bias-corrected Adam update; t is the 1-based step index.
void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state, long t,
               double lr, const AdamConfig& config = {});

struct RefineLocal {
  long every = 2000;
  double fraction = 0.1;
};

struct RefineGlobalOnce {
  long at = 5000;
};

using RefineSchedule = std::variant<std::monostate, RefineLocal, RefineGlobalOnce>;

struct TrainConfig {
  long iterations = 10000;
  double lr0 = 5e-4;
  std::optional<long> halve_every;  // lr0 * 2^-floor(t / k)
  AdamConfig adam;
  std::vector<std::uint64_t> seeds = {1, 2, 3};
  RefineSchedule refine;
};

void validate(const TrainConfig& config);

// Learning rate used for the step taken at zero-based iteration t.
double learning_rate(const TrainConfig& config, long t);

struct TrainResult {
  TwoBranchNet net;
  std::vector<double> loss_history;  // loss at the parameters each step differentiated
  std::vector<double> lr_history;
  Partition partition;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;
};

// Called after each completed step with the number of steps done so far.
using TrainObserver = std::function<void(long completed, const TwoBranchNet&, const Partition&)>;

// Full-batch Adam on the discrete loss. Refinement events happen after step t
// when t is a multiple of RefineLocal::every (or equals RefineGlobalOnce::at)
// and t < iterations; Adam moments carry over. Throws NonFiniteError with the
// iteration index and value if the loss or gradient blows up.
TrainResult train(TwoBranchNet net, const ProblemSpec& problem, Partition partition,
                  const LossSpec& loss, const TrainConfig& config, std::uint64_t seed = 0,
                  const TrainObserver& observer = {});

// Index of the median entry (lower median for even counts).
std::size_t median_index(std::span<const double> metrics);

// Metric the median is taken over.
using ReplicaMetric = std::function<double(const TrainResult&, const ErrorReport&)>;

// Relative L2 error of u when the problem has an exact solution, otherwise the
// relative functional with the computed-pair denominator.
double default_replica_metric(const TrainResult& result, const ErrorReport& report);

struct ReplicaSetup {
  Architecture arch;
  Activation activation = Activation::LeakyReLU;
  InitScheme init = InitScheme::He;
  ProblemSpec problem;
  Partition partition{std::vector<double>{0.0, 1.0}};
  LossSpec loss;
  TrainConfig train;
  ReportOptions report;
  std::size_t workers = 1;
};

struct ReplicatedResult {
  std::vector<TrainResult> replicas;
  std::vector<ErrorReport> reports;
  std::vector<double> metrics;
  std::vector<std::string> failures;  // "seed <s>: <message>" for replicas that threw
  std::size_t median = 0;

  const TrainResult& selected() const { return replicas.at(median); }
  const ErrorReport& selected_report() const { return reports.at(median); }
};

// Trains one network per seed (initialised with init_network(arch, activation, seed, init))
// on up to `workers` threads and picks the replica with the median metric.
ReplicatedResult run_replicated(const ReplicaSetup& setup, const ReplicaMetric& metric = default_replica_metric);

}  // namespace deepls
