#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"

#include "deepls/loss.hpp"
#include "deepls/problems.hpp"
#include "deepls/quad.hpp"
#include "unit/oracles.hpp"

using namespace deepls;

namespace {

auto constant(double v) {
  return [v](double) { return v; };
}

ProblemSpec zero_data_problem() {
  ProblemSpec p;
  p.name = "zero";
  p.coeff_a = constant(1.0);
  p.coeff_c = constant(0.0);
  p.rhs_f = constant(0.0);
  p.bc_left = BoundaryCondition::dirichlet(0.0);
  p.bc_right = BoundaryCondition::dirichlet(0.0);
  return p;
}

// u = x on (0,1): Dirichlet on the left, flux condition n.sigma = -1 on the right.
ProblemSpec linear_neumann_problem() {
  ProblemSpec p = zero_data_problem();
  p.name = "linear";
  p.bc_right = BoundaryCondition::neumann(-1.0);
  p.exact = ExactSolution{[](double x) { return x; }, constant(1.0), constant(-1.0), constant(0.0)};
  return p;
}

TwoBranchNet zero_net() { return TwoBranchNet(Architecture::symmetric({6, 4, 1}), Activation::Sigmoid); }

TwoBranchNet random_net(std::mt19937_64& rng, Activation act = Activation::Sigmoid) {
  TwoBranchNet net(Architecture::symmetric({8, 6, 1}), act);
  std::normal_distribution<double> d(0.0, 1.0);
  for (Eigen::Index i = 0; i < net.params().size(); ++i) net.params()[i] = d(rng);
  return net;
}

double sum_f_squared(const ProblemSpec& p, std::size_t n) {
  return oracle::midpoint_sum([&](double x) { return p.rhs_f(x) * p.rhs_f(x); }, p.left, p.right, n);
}

}  // namespace

TEST_CASE("loss kinds parse") {
  CHECK(parse_loss_kind("fosls") == LossKind::FOSLS);
  CHECK(parse_loss_kind("energy") == LossKind::Energy);
  CHECK(parse_loss_kind(to_string(LossKind::LS)) == LossKind::LS);
  CHECK_THROWS_AS(parse_loss_kind("l2"), std::invalid_argument);
}

TEST_CASE("zero candidate on Poisson gives the summed square of f") {
  const ProblemSpec p = poisson_problem();
  for (std::size_t n : {10u, 200u, 800u}) {
    const Partition part = uniform_partition(0.0, 1.0, n);
    const double want = sum_f_squared(p, n);
    CHECK(fosls_loss(zero_net(), p, part) == doctest::Approx(want).epsilon(1e-12));
    CHECK(ls_loss(zero_net(), p, part, LossSpec{LossKind::LS}) == doctest::Approx(want).epsilon(1e-12));
    CHECK(energy_loss(zero_net(), p, part, LossSpec{LossKind::Energy}) == 0.0);
  }
}

TEST_CASE("zero data and zero candidate give zero") {
  const ProblemSpec p = zero_data_problem();
  const Partition part = uniform_partition(0.0, 1.0, 50);
  CHECK(fosls_loss(zero_net(), p, part) == 0.0);
  CHECK(ls_loss(zero_net(), p, part, LossSpec{LossKind::LS}) == 0.0);
  CHECK(energy_loss(zero_net(), p, part, LossSpec{LossKind::Energy}) == 0.0);
  for (double eta : fosls_indicators(zero_net(), p, part)) CHECK(eta == 0.0);
}

TEST_CASE("exact interface pair leaves only FD residuals") {
  const ProblemSpec p = interface_problem(10.0);
  const CandidatePair exact = exact_pair(p);
  // Interior sum written out from the definition, backward quotients at tau = h/2.
  auto by_hand = [&](std::size_t n) {
    const double h = 1.0 / static_cast<double>(n), tau = h / 2.0;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double x = (static_cast<double>(i) + 0.5) * h;
      const double du = (exact.u(x) - exact.u(x - tau)) / tau;
      const double ds = (exact.sigma(x) - exact.sigma(x - tau)) / tau;
      const double a = p.coeff_a(x);
      const double r1 = ds - p.rhs_f(x);
      const double r2 = exact.sigma(x) / std::sqrt(a) + std::sqrt(a) * du;
      s += (r1 * r1 + r2 * r2) * h;
    }
    return s;
  };
  auto interior = [&](std::size_t n) {
    const LossBreakdown b = DiscreteLoss(p, uniform_partition(0.0, 1.0, n), LossSpec{}).breakdown(exact);
    CHECK(b.boundary == 0.0);
    double s = 0.0;
    for (double eta : b.interior) s += eta;
    CHECK(b.total == doctest::Approx(s + b.boundary).epsilon(1e-14));
    return s;
  };
  const double coarse = interior(250), fine = interior(500);
  CHECK(fine == doctest::Approx(by_hand(500)).epsilon(1e-12));
  CHECK(fine < 2e-2);
  // Only truncation error is left, so it falls like h^2.
  CHECK(coarse / fine > 3.5);
  CHECK(coarse / fine < 4.5);
}

TEST_CASE("energy of the exact Poisson solution") {
  const ProblemSpec p = poisson_problem();
  const Partition part = uniform_partition(0.0, 1.0, 2000);
  const double du2 = oracle::midpoint_sum([&](double x) { return std::pow(p.exact->u_prime(x), 2); }, 0.0, 1.0, 200000);
  const double value = energy_loss(exact_pair(p), p, part, LossSpec{LossKind::Energy});
  CHECK(std::abs(value + 0.5 * du2) < 1e-3);
}

TEST_CASE("energy is minimal at the exact solution") {
  const ProblemSpec p = poisson_problem();
  const Partition part = uniform_partition(0.0, 1.0, 200);
  const LossSpec spec{LossKind::Energy};
  const double at_exact = energy_loss(exact_pair(p), p, part, spec);
  std::mt19937_64 rng(21);
  for (int i = 0; i < 50; ++i) CHECK(energy_loss(random_net(rng), p, part, spec) >= at_exact - 1e-2);
}

TEST_CASE("energy Neumann term has the sign of the natural condition") {
  const ProblemSpec p = linear_neumann_problem();
  // Fine enough that the O(eps h) quotient error stays below the O(eps^2) gain.
  const Partition part = uniform_partition(0.0, 1.0, 1024);
  const LossSpec spec{LossKind::Energy};
  const CandidatePair exact = exact_pair(p);
  const double at_exact = energy_loss(exact, p, part, spec);
  // 1/2 int u'^2 + g_N u(1) with u = x and g_N = -1.
  CHECK(at_exact == doctest::Approx(0.5 - 1.0));
  for (double eps : {-0.1, -0.01, 0.01, 0.1}) {
    CandidatePair v{[eps](double x) { return x + eps * x * x; }, exact.sigma};
    CHECK(energy_loss(v, p, part, spec) > at_exact);
  }
}

TEST_CASE("LS residual of the exact Poisson solution") {
  const ProblemSpec p = poisson_problem();
  const Partition part = uniform_partition(0.0, 1.0, 200);
  const DiscreteLoss loss(p, part, LossSpec{LossKind::LS});
  const LossBreakdown b = loss.breakdown(exact_pair(p));
  double interior = 0.0;
  for (double eta : b.interior) interior += eta;
  CHECK(interior < 1e-2);
  CHECK(b.boundary < 1e-20);
}

TEST_CASE("indicators partition the interior loss") {
  const ProblemSpec p = poisson_problem();
  const Partition part = refine_local(uniform_partition(0.0, 1.0, 40), std::vector<double>(40, 1.0), 0.3);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 10; ++i) {
    const TwoBranchNet net = random_net(rng);
    const std::vector<double> eta = fosls_indicators(net, p, part);
    REQUIRE(eta.size() == part.size());
    double sum = 0.0;
    for (double v : eta) sum += v;
    const LossBreakdown b = DiscreteLoss(p, part, LossSpec{}).breakdown(net);
    CHECK(std::abs(sum - (fosls_loss(net, p, part) - b.boundary)) <= 1e-12 * std::max(1.0, sum));
  }
}

TEST_CASE("zero-candidate indicators peak where |f| does") {
  const ProblemSpec p = poisson_problem();
  const Partition part = uniform_partition(0.0, 1.0, 200);
  const std::vector<double> eta = fosls_indicators(zero_net(), p, part);
  for (std::size_t i = 0; i < part.size(); ++i) {
    const double f = p.rhs_f(part.midpoint(i));
    CHECK(eta[i] == doctest::Approx(f * f * part.measure(i)).epsilon(1e-14));
  }
  const auto peak = static_cast<std::size_t>(std::max_element(eta.begin(), eta.end()) - eta.begin());
  std::size_t f_peak = 0;
  for (std::size_t i = 1; i < part.size(); ++i) {
    if (std::abs(p.rhs_f(part.midpoint(i))) > std::abs(p.rhs_f(part.midpoint(f_peak)))) f_peak = i;
  }
  CHECK(peak == f_peak);
  CHECK(std::abs(part.midpoint(peak) - 1.0 / 3.0) < 0.1);
}

TEST_CASE("exact pair beats random networks") {
  for (const ProblemSpec& p : {poisson_problem(), reaction_diffusion_problem(0.1), interface_problem(10.0)}) {
    const Partition part = uniform_partition(p.left, p.right, 400);
    const double at_exact = fosls_loss(exact_pair(p), p, part);
    std::mt19937_64 rng(31);
    for (int i = 0; i < 50; ++i) CHECK(fosls_loss(random_net(rng), p, part) > at_exact);
  }
}

TEST_CASE("losses are non-negative") {
  const ProblemSpec p = reaction_diffusion_problem(0.05);
  const Partition part = uniform_partition(-1.0, 1.0, 100);
  std::mt19937_64 rng(13);
  for (int i = 0; i < 20; ++i) {
    const TwoBranchNet net = random_net(rng);
    CHECK(fosls_loss(net, p, part) >= 0.0);
    CHECK(ls_loss(net, p, part, LossSpec{LossKind::LS}) >= 0.0);
  }
}

TEST_CASE("Dirichlet boundary weights scale with h_E") {
  // u = 1 - x, sigma = 1: interior residuals vanish, only u(0) = 1 is off.
  const ProblemSpec p = zero_data_problem();
  const CandidatePair c{[](double x) { return 1.0 - x; }, constant(1.0)};
  auto boundary = [&](double h, LossKind kind) {
    const Partition part({0.0, h, 1.0});
    return DiscreteLoss(p, part, LossSpec{kind}).breakdown(c).boundary;
  };
  for (double h : {0.01, 0.1, 0.2}) {
    CHECK(boundary(h, LossKind::FOSLS) == doctest::Approx(1.0 / h));
    CHECK(boundary(2 * h, LossKind::FOSLS) == doctest::Approx(boundary(h, LossKind::FOSLS) / 2.0));
    CHECK(boundary(2 * h, LossKind::LS) == doctest::Approx(boundary(h, LossKind::LS) / 8.0));
    CHECK(boundary(2 * h, LossKind::Energy) == doctest::Approx(boundary(h, LossKind::Energy) / 2.0));
  }
  const Partition part({0.0, 0.1, 1.0});
  CHECK(DiscreteLoss(p, part, LossSpec{LossKind::FOSLS, 3.0, 1.0}).breakdown(c).boundary ==
        doctest::Approx(30.0));
}

TEST_CASE("unit and auto boundary scales") {
  const ProblemSpec p = zero_data_problem();
  const CandidatePair c{[](double x) { return 1.0 - x; }, constant(1.0)};
  auto boundary = [&](double h, LossKind kind, BoundaryScale scale) {
    const Partition part({0.0, h, 1.0});
    return DiscreteLoss(p, part, LossSpec{kind, 1.0, 1.0, scale}).breakdown(c).boundary;
  };
  for (LossKind kind : {LossKind::FOSLS, LossKind::LS, LossKind::Energy}) {
    // u(0) - 1 = 0 squared with weight |E| = 1.
    CHECK(boundary(0.05, kind, BoundaryScale::Unit) == doctest::Approx(1.0));
    CHECK(boundary(0.2, kind, BoundaryScale::Unit) == doctest::Approx(1.0));
  }
  CHECK(boundary(0.05, LossKind::Energy, BoundaryScale::Auto) == doctest::Approx(20.0));
  CHECK(boundary(0.05, LossKind::FOSLS, BoundaryScale::Auto) == doctest::Approx(1.0));
  CHECK(boundary(0.05, LossKind::LS, BoundaryScale::Auto) == doctest::Approx(1.0));

  CHECK(resolve_boundary_scale(BoundaryScale::Auto, LossKind::Energy) == BoundaryScale::Element);
  CHECK(resolve_boundary_scale(BoundaryScale::Auto, LossKind::LS) == BoundaryScale::Unit);
  CHECK(resolve_boundary_scale(BoundaryScale::Element, LossKind::LS) == BoundaryScale::Element);
  for (BoundaryScale s : {BoundaryScale::Element, BoundaryScale::Unit, BoundaryScale::Auto}) {
    CHECK(parse_boundary_scale(to_string(s)) == s);
  }
  CHECK_THROWS_AS(parse_boundary_scale("diameter"), std::invalid_argument);
}

TEST_CASE("Neumann boundary terms") {
  const ProblemSpec p = linear_neumann_problem();
  const Partition part({0.0, 0.5, 0.75, 1.0});
  const CandidatePair exact = exact_pair(p);
  CHECK(DiscreteLoss(p, part, LossSpec{}).breakdown(exact).boundary == doctest::Approx(0.0));
  CHECK(DiscreteLoss(p, part, LossSpec{LossKind::LS}).breakdown(exact).boundary == doctest::Approx(0.0));
  // Flux off by 1 at the right end: weight alpha_N |E| h_E with h_E = 0.25.
  const CandidatePair off{exact.u, constant(0.0)};
  CHECK(DiscreteLoss(p, part, LossSpec{LossKind::FOSLS, 1.0, 2.0}).breakdown(off).boundary ==
        doctest::Approx(2.0 * 0.25));
}

TEST_CASE("construction errors") {
  const Partition part = uniform_partition(0.0, 1.0, 10);
  ProblemSpec conv = poisson_problem();
  conv.coeff_b = constant(1.0);
  CHECK_THROWS_AS(DiscreteLoss(conv, part, LossSpec{LossKind::Energy}), std::invalid_argument);
  CHECK_NOTHROW(DiscreteLoss(conv, part, LossSpec{LossKind::FOSLS}));
  CHECK_THROWS_AS(DiscreteLoss(poisson_problem(), uniform_partition(0.0, 2.0, 10), LossSpec{}),
                  std::invalid_argument);
  CHECK_THROWS_AS(DiscreteLoss(poisson_problem(), part, LossSpec{LossKind::FOSLS, -1.0, 1.0}),
                  std::invalid_argument);
  ProblemSpec bad_a = poisson_problem();
  bad_a.coeff_a = constant(0.0);
  CHECK_THROWS_AS(DiscreteLoss(bad_a, part, LossSpec{}), std::invalid_argument);

  const DiscreteLoss ls(poisson_problem(), part, LossSpec{LossKind::LS});
  CHECK_THROWS_AS(ls.check_compatible(TwoBranchNet(Architecture::symmetric({4, 1}), Activation::LeakyReLU)),
                  std::invalid_argument);
  CHECK_NOTHROW(ls.check_compatible(TwoBranchNet(Architecture::symmetric({4, 1}), Activation::Sigmoid)));

  CHECK_THROWS_AS(fosls_loss(zero_net(), poisson_problem(), part, LossSpec{LossKind::LS}), std::invalid_argument);
  CHECK_THROWS_AS(energy_loss(zero_net(), poisson_problem(), part, LossSpec{}), std::invalid_argument);
  CHECK_THROWS_AS(ls_loss(zero_net(), poisson_problem(), part, LossSpec{}), std::invalid_argument);
}

TEST_CASE("non-finite network output is rejected") {
  TwoBranchNet net = zero_net();
  net.params()[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(fosls_loss(net, poisson_problem(), uniform_partition(0.0, 1.0, 10)), NonFiniteError);
}

TEST_CASE("net and candidate evaluations agree") {
  const ProblemSpec p = interface_problem(10.0);
  const Partition part = uniform_partition(0.0, 1.0, 64);
  std::mt19937_64 rng(3);
  const TwoBranchNet net = random_net(rng);
  const CandidatePair c{[&](double x) { return net.evaluate(Branch::Upper, x); },
                        [&](double x) { return net.evaluate(Branch::Lower, x); }};
  for (LossKind kind : {LossKind::FOSLS, LossKind::LS, LossKind::Energy}) {
    const DiscreteLoss loss(p, part, LossSpec{kind});
    CHECK(loss.evaluate(net) == doctest::Approx(loss.evaluate(c)).epsilon(1e-13));
  }
}
