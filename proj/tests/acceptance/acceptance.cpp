// Acceptance runs. Usage: deepls_acceptance <criterion>...   (1-8)
// Run directories go under $DEEPLS_ACCEPTANCE_DIR (default: a temp dir).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "deepls/experiment.hpp"
#include "deepls/loss.hpp"
#include "deepls/metrics.hpp"
#include "deepls/net.hpp"
#include "deepls/problems.hpp"
#include "deepls/quad.hpp"
#include "deepls/train.hpp"
#include "unit/oracles.hpp"

using namespace deepls;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back((ok ? "ok   " : "FAIL ") + what);
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path work_root() {
  const char* env = std::getenv("DEEPLS_ACCEPTANCE_DIR");
  return env && *env ? fs::path(env) : fs::temp_directory_path() / "deepls_acceptance";
}

ExperimentOutcome run(ExperimentConfig c, const std::string& tag) {
  c.out_dir = (work_root() / tag).string();
  fs::remove_all(c.out_dir);
  std::printf("  running %s ...\n", tag.c_str());
  std::fflush(stdout);
  ExperimentOutcome o = run_experiment(c);
  std::string seeds;
  for (std::size_t i = 0; i < o.replicated.replicas.size(); ++i) {
    seeds += fmt(" %.6f", o.replicated.reports[i].rel_l2_u);
  }
  std::printf("  %s: median rel_l2_u %.6f (seed %llu); per seed:%s\n", tag.c_str(), o.report.rel_l2_u,
              static_cast<unsigned long long>(o.seed), seeds.c_str());
  return o;
}

void check_runtime(Verdict& v, const ExperimentOutcome& o, const std::string& tag, double limit_s) {
  double worst = 0.0;
  for (const TrainResult& r : o.replicated.replicas) worst = std::max(worst, r.wall_time_s);
  v.check(worst <= limit_s, tag + " slowest replica " + fmt("%.1f s", worst) + " <= " + fmt("%.0f s", limit_s));
  v.check(o.replicated.failures.empty() && o.replicated.replicas.size() == 3, tag + " all three replicas finished");
}

Verdict criterion1() {
  Verdict v;
  const std::size_t small = TwoBranchNet(Architecture::symmetric({24, 14, 14, 1}), Activation::LeakyReLU).param_count();
  const std::size_t large = TwoBranchNet(Architecture::symmetric({32, 24, 24, 1}), Activation::Sigmoid).param_count();
  v.check(small == 1246, "Poisson architecture has " + std::to_string(small) + " parameters (1246)");
  v.check(large == 2962, "reaction-diffusion/interface architecture has " + std::to_string(large) + " parameters (2962)");
  v.check(init_network(Architecture::symmetric({24, 14, 14, 1}), Activation::LeakyReLU, 1).param_count() == 1246,
          "initialised network agrees");
  return v;
}

Verdict criterion2() {
  Verdict v;
  const ExperimentOutcome fine = run(preset("table1"), "table1-800");
  ExperimentConfig c = preset("table1");
  c.points = 200;
  const ExperimentOutcome coarse = run(c, "table1-200");
  v.check(fine.report.rel_l2_u <= 0.06, "800 points: rel_l2_u " + fmt("%.6f", fine.report.rel_l2_u) + " <= 0.06");
  const double s = fine.report.rel_l2_sigma.value_or(INFINITY);
  v.check(s <= 0.05, "800 points: rel_l2_sigma " + fmt("%.6f", s) + " <= 0.05");
  v.check(fine.report.rel_l2_u <= coarse.report.rel_l2_u,
          "rel_l2_u 800 points " + fmt("%.6f", fine.report.rel_l2_u) + " <= 200 points " +
              fmt("%.6f", coarse.report.rel_l2_u));
  check_runtime(v, fine, "table1-800", 15 * 60);
  check_runtime(v, coarse, "table1-200", 15 * 60);
  return v;
}

Verdict criterion3() {
  Verdict v;
  for (LossKind k : {LossKind::Energy, LossKind::LS, LossKind::FOSLS}) {
    ExperimentConfig c = preset("table2");
    c.loss = k;
    const std::string tag = "table2-" + to_string(k);
    const ExperimentOutcome o = run(c, tag);
    v.check(o.report.rel_l2_u <= 0.04, tag + " rel_l2_u " + fmt("%.6f", o.report.rel_l2_u) + " <= 0.04");
    check_runtime(v, o, tag, 10 * 60);
  }
  return v;
}

double max_abs_on_grid(const std::function<double(double)>& g, const ProblemSpec& p, std::size_t n) {
  double m = 0.0;
  for (double x : uniform_partition(p.left, p.right, n).midpoints()) m = std::max(m, std::abs(g(x)));
  return m;
}

Verdict criterion4() {
  Verdict v;
  const std::pair<Activation, double> runs[] = {{Activation::LeakyReLU, 0.03}, {Activation::Sigmoid, 0.01}};
  for (const auto& [act, bound] : runs) {
    ExperimentConfig c = preset("table3");
    c.activation = act;
    const std::string tag = "table3-" + to_string(act);
    const ExperimentOutcome o = run(c, tag);
    v.check(o.report.rel_l2_u <= bound,
            tag + " rel_l2_u " + fmt("%.6f", o.report.rel_l2_u) + " <= " + fmt("%g", bound));
    const ReplicaSetup s = replica_setup(c);
    const TwoBranchNet& net = o.replicated.selected().net;
    const std::size_t n = s.report.eval_points;
    const double pred = max_abs_on_grid([&](double x) { return net.evaluate(Branch::Upper, x); }, s.problem, n);
    const double exact = max_abs_on_grid(s.problem.exact->u, s.problem, n);
    v.check(pred <= 1.05 * exact, tag + " max|u_hat| " + fmt("%.4f", pred) + " <= 1.05 max|u| = " +
                                      fmt("%.4f", 1.05 * exact));
    check_runtime(v, o, tag, 40 * 60);
  }
  return v;
}

Verdict criterion5() {
  Verdict v;
  ExperimentConfig fosls = preset("table4");
  fosls.activation = Activation::LeakyReLU;
  ExperimentConfig energy = preset("table4");
  energy.loss = LossKind::Energy;
  ExperimentConfig ls = preset("table4");
  ls.loss = LossKind::LS;
  const ExperimentOutcome f = run(fosls, "table4-fosls-leaky-relu");
  const ExperimentOutcome e = run(energy, "table4-energy-sigmoid");
  const ExperimentOutcome l = run(ls, "table4-ls-sigmoid");
  const double uf = f.report.rel_l2_u, ue = e.report.rel_l2_u, ul = l.report.rel_l2_u;
  v.check(uf <= 0.02, "FOSLS/leaky ReLU rel_l2_u " + fmt("%.6f", uf) + " <= 0.02");
  v.check(ue <= 0.12, "energy/sigmoid rel_l2_u " + fmt("%.6f", ue) + " <= 0.12");
  v.check(ul >= 0.1, "LS/sigmoid rel_l2_u " + fmt("%.6f", ul) + " >= 0.1");
  v.check(uf < ue && ue < ul, "FOSLS < energy < LS");
  check_runtime(v, f, "table4-fosls", 40 * 60);
  check_runtime(v, e, "table4-energy", 40 * 60);
  check_runtime(v, l, "table4-ls", 40 * 60);
  return v;
}

Verdict criterion6() {
  Verdict v;
  std::vector<double> medians;
  for (const char* mode : {"local", "global", "uniform"}) {
    const ExperimentConfig c = preset("table5", mode);
    const std::string tag = std::string("table5-") + mode;
    const ExperimentOutcome o = run(c, tag);
    const ReplicaSetup s = replica_setup(c);
    std::vector<double> g;
    std::string sizes;
    for (const TrainResult& r : o.replicated.replicas) {
      g.push_back(relative_functional(r.net, s.problem, r.partition, DenominatorKind::ComputedPair,
                                      s.report.eval_points, s.report.functional));
      sizes += " " + std::to_string(r.partition.size());
    }
    std::vector<double> sorted = g;
    std::sort(sorted.begin(), sorted.end());
    medians.push_back(sorted[1]);
    std::printf("  %s: relative functional per seed %.6f %.6f %.6f, median %.6f, final points%s\n", tag.c_str(), g[0],
                g[1], g[2], sorted[1], sizes.c_str());
    check_runtime(v, o, tag, 20 * 60);
  }
  v.check(medians[0] < medians[1], "local " + fmt("%.6f", medians[0]) + " < global " + fmt("%.6f", medians[1]));
  v.check(medians[0] < medians[2], "local " + fmt("%.6f", medians[0]) + " < uniform " + fmt("%.6f", medians[2]));
  return v;
}

TwoBranchNet random_net(std::mt19937_64& rng, const Architecture& arch, Activation act, double scale) {
  TwoBranchNet net(arch, act);
  std::uniform_real_distribution<double> d(-scale, scale);
  for (Eigen::Index i = 0; i < net.params().size(); ++i) net.params()[i] = d(rng);
  return net;
}

Verdict criterion7() {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();

  {  // reverse-mode gradient vs central differences
    const ProblemSpec p = poisson_problem();
    const DiscreteLoss loss(p, uniform_partition(0.0, 1.0, 10), LossSpec{});
    const SampledObjective obj = loss.objective();
    std::mt19937_64 rng(7);
    GradientWorkspace ws;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const TwoBranchNet net = random_net(rng, Architecture::symmetric({6, 6, 1}), Activation::Sigmoid, 1.0);
      std::vector<double> g(net.param_count());
      param_gradient(obj, net, g, &ws);
      const auto c = oracle::richardson_gradient(net, [&](const TwoBranchNet& n) { return loss.evaluate(n); }, 1e-3);
      worst = std::max(worst, oracle::max_relative_error(g, c));
    }
    v.check(worst < 1e-5, "gradient vs central differences, worst relative error " + fmt("%.2e", worst));
  }
  {  // quadrature
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
      const double s = 10.0 * u(rng) - 5.0, c = 10.0 * u(rng) - 5.0;
      std::vector<double> bp{0.0, 1.0};
      for (int i = 0; i < 15; ++i) bp.push_back(u(rng));
      std::sort(bp.begin(), bp.end());
      bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
      const double exact = s / 2.0 + c;
      worst = std::max(worst, std::abs(Partition(bp).integrate([&](double x) { return s * x + c; }) - exact));
    }
    v.check(worst < 1e-12, "midpoint rule exact on affine functions " + fmt("(%.1e)", worst));
    auto err = [](std::size_t n) {
      return std::abs(uniform_partition(0.0, 1.0, n).integrate([](double x) { return std::exp(x); }) - (std::numbers::e - 1.0));
    };
    bool ok = true;
    std::string ratios;
    for (std::size_t n : {8u, 32u, 128u}) {
      const double r = err(n) / err(2 * n);
      ok = ok && r >= 3.6 && r <= 4.4;
      ratios += fmt(" %.3f", r);
    }
    v.check(ok, "O(n^-2) convergence ratios" + ratios);
  }
  {  // measure conservation under refinement
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Partition part = uniform_partition(-1.0, 1.0, 50);
    double worst = 0.0;
    for (int step = 0; step < 10; ++step) {
      if (step % 3 == 2) {
        part = refine_global(part);
      } else {
        std::vector<double> eta(part.size());
        for (double& e : eta) e = u(rng);
        part = refine_local(part, eta, 0.1);
      }
      const auto m = part.measures();
      double total = 0.0;
      for (double h : m) total += h;
      worst = std::max(worst, std::abs(total - 2.0));
    }
    v.check(worst <= 1e-12, "measure conserved under refinement " + fmt("(%.1e)", worst));
  }
  {  // exact-solution identities
    double worst = 0.0;
    for (const ProblemSpec& p : {poisson_problem(), reaction_diffusion_problem(0.01), interface_problem(10.0)}) {
      const ExactSolution& e = *p.exact;
      for (double x : uniform_partition(p.left, p.right, 997).midpoints()) {
        worst = std::max(worst, std::abs(e.sigma(x) + p.coeff_a(x) * e.u_prime(x)));
        const double r = e.sigma_prime(x) - (p.rhs_f(x) - p.b(x) * e.u_prime(x) - p.coeff_c(x) * e.u(x));
        worst = std::max(worst, std::abs(r) / (1.0 + std::abs(p.rhs_f(x))));
      }
      for (auto [x, bc] : {std::pair{p.left, p.bc_left}, std::pair{p.right, p.bc_right}}) {
        if (bc.is_dirichlet()) worst = std::max(worst, std::abs(e.u(x) - bc.value));
      }
    }
    v.check(worst < 1e-8, "exact-solution residual identities " + fmt("(%.1e)", worst));
  }
  {  // zero network FOSLS oracle
    const ProblemSpec p = poisson_problem();
    const Partition part = uniform_partition(0.0, 1.0, 200);
    TwoBranchNet zero(Architecture::symmetric({24, 14, 14, 1}), Activation::LeakyReLU);
    double want = 0.0;
    for (std::size_t i = 0; i < part.size(); ++i) {
      const double f = p.rhs_f(part.midpoint(i));
      want += f * f * part.measure(i);
    }
    const double got = fosls_loss(zero, p, part);
    v.check(std::abs(got - want) <= 1e-12 * want, "zero-network FOSLS loss equals sum f^2 |K|");
  }
  {  // indicator sum
    const ProblemSpec p = poisson_problem();
    const Partition part = refine_local(uniform_partition(0.0, 1.0, 64), std::vector<double>(64, 1.0), 0.25);
    std::mt19937_64 rng(10);
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
      const TwoBranchNet net = random_net(rng, Architecture::symmetric({8, 8, 1}), Activation::Sigmoid, 1.0);
      const std::vector<double> eta = fosls_indicators(net, p, part);
      double sum = 0.0;
      for (double e : eta) sum += e;
      const LossBreakdown b = DiscreteLoss(p, part, LossSpec{}).breakdown(net);
      worst = std::max(worst, std::abs(sum - (b.total - b.boundary)) / std::max(1.0, sum));
    }
    v.check(worst <= 1e-12, "indicators sum to the interior functional " + fmt("(%.1e)", worst));
  }
  {  // exact pair beats random networks
    bool ok = true;
    for (const ProblemSpec& p : {poisson_problem(), reaction_diffusion_problem(0.1), interface_problem(10.0)}) {
      const Partition part = uniform_partition(p.left, p.right, 400);
      const double at_exact = fosls_loss(exact_pair(p), p, part);
      std::mt19937_64 rng(11);
      for (int i = 0; i < 50; ++i) {
        ok = ok && fosls_loss(random_net(rng, Architecture::symmetric({8, 8, 1}), Activation::Sigmoid, 2.0), p, part) >
                       at_exact;
      }
    }
    v.check(ok, "exact pair has a smaller FOSLS loss than 50 random networks (3 problems)");
  }
  {  // interface flux continuity
    const ProblemSpec p = interface_problem(10.0);
    const double lo = p.exact->sigma(std::nextafter(0.5, 0.0));
    const double hi = p.exact->sigma(std::nextafter(0.5, 1.0));
    v.check(std::abs(lo + 10.0) < 1e-9 && std::abs(hi + 10.0) < 1e-9,
            "interface flux " + fmt("%.9f", lo) + " / " + fmt("%.9f", hi) + " = -10 on both sides");
  }

  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  v.check(secs < 60.0, "property suite took " + fmt("%.1f s", secs) + " < 60 s");
  return v;
}

std::string read_text(const fs::path& file) {
  std::ifstream is(file);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

Verdict criterion8() {
  // Every preset with a shortened budget; table5 local still reaches its first refinement.
  Verdict v;
  std::vector<std::pair<std::string, ExperimentConfig>> configs;
  for (const char* name : {"table1", "table2", "table3", "table4"}) configs.emplace_back(name, preset(name));
  for (const char* mode : {"local", "global", "uniform"}) configs.emplace_back(std::string("table5-") + mode, preset("table5", mode));
  for (auto& [tag, c] : configs) {
    c.iterations = tag.rfind("table5", 0) == 0 ? 2500 : 300;
    if (std::holds_alternative<RefineGlobalOnce>(c.refine)) c.refine = RefineGlobalOnce{1000};
    c.out_dir = (work_root() / ("determinism-" + tag)).string();
    fs::remove_all(c.out_dir);
    run_experiment(c);
    ExperimentConfig again = load_config(fs::path(c.out_dir) / "config.txt");
    again.out_dir = c.out_dir + "-rerun";
    fs::remove_all(again.out_dir);
    run_experiment(again);
    bool same = true;
    for (std::uint64_t s : c.seeds) {
      const std::string f = "replica_" + std::to_string(s) + "/history.csv";
      const std::string a = read_text(fs::path(c.out_dir) / f);
      same = same && !a.empty() && a == read_text(fs::path(again.out_dir) / f);
    }
    v.check(same, tag + ": histories re-run from config.txt are bit-identical");
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::function<Verdict()>> criteria = {criterion1, criterion2, criterion3, criterion4,
                                                          criterion5, criterion6, criterion7, criterion8};
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty()) {
    for (int i = 1; i <= 8; ++i) which.push_back(i);
  }
  bool all = true;
  for (int n : which) {
    if (n < 1 || n > 8) {
      std::fprintf(stderr, "unknown criterion %d\n", n);
      return 2;
    }
    Verdict v;
    try {
      v = criteria[static_cast<std::size_t>(n - 1)]();
    } catch (const std::exception& e) {
      v.check(false, std::string("exception: ") + e.what());
    }
    for (const std::string& note : v.notes) std::printf("  %s\n", note.c_str());
    std::printf("criterion %d: %s\n", n, v.pass ? "PASS" : "FAIL");
    std::fflush(stdout);
    all = all && v.pass;
  }
  return all ? 0 : 1;
}
