#include "deepls/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace deepls {

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::Energy:
      return "energy";
    case LossKind::LS:
      return "ls";
    case LossKind::FOSLS:
      return "fosls";
  }
  return "fosls";
}

LossKind parse_loss_kind(std::string_view name) {
  if (name == "energy") return LossKind::Energy;
  if (name == "ls") return LossKind::LS;
  if (name == "fosls") return LossKind::FOSLS;
  throw std::invalid_argument("unknown loss '" + std::string(name) + "'");
}

std::string to_string(BoundaryScale scale) {
  switch (scale) {
    case BoundaryScale::Element: return "element";
    case BoundaryScale::Unit: return "unit";
    case BoundaryScale::Auto: return "auto";
  }
  return "element";
}

BoundaryScale parse_boundary_scale(std::string_view name) {
  if (name == "element") return BoundaryScale::Element;
  if (name == "unit") return BoundaryScale::Unit;
  if (name == "auto") return BoundaryScale::Auto;
  throw std::invalid_argument("unknown boundary scale '" + std::string(name) + "' (element, unit, auto)");
}

BoundaryScale resolve_boundary_scale(BoundaryScale scale, LossKind kind) {
  if (scale != BoundaryScale::Auto) return scale;
  // The energy penalty moves the minimiser unless it grows like 1/h.
  return kind == LossKind::Energy ? BoundaryScale::Element : BoundaryScale::Unit;
}

CandidatePair exact_pair(const ProblemSpec& problem) {
  if (!problem.exact) throw std::invalid_argument("problem '" + problem.name + "' has no exact solution");
  return {problem.exact->u, problem.exact->sigma};
}

struct BoundarySite {
  BoundaryElement element;
  BoundaryCondition bc;
  std::size_t site = 0;        // index of x_E in the branch carrying the condition
  std::size_t inner_site = 0;  // LS Neumann: u at the one-sided FD point inside
  double a = 1.0;
  double scale = 1.0;          // h_E in the boundary weights
};

struct DiscreteLoss::Data {
  LossSpec spec;
  Partition partition{std::vector<double>{0.0, 1.0}};
  SampleSites sites;
  std::size_t n = 0;
  std::vector<double> h, tau, a, sqrt_a, b, c, f;
  std::vector<double> a_minus, a_plus;  // LS only
  std::vector<BoundarySite> boundary;
};

namespace {

using Data = DiscreteLoss::Data;

bool wants_adjoint(std::span<double> du, std::span<double> ds) { return !du.empty() || !ds.empty(); }

double assemble_fosls(const Data& d, std::span<const double> u, std::span<const double> s,
                      std::span<double> du, std::span<double> ds, LossBreakdown* parts) {
  const std::size_t n = d.n;
  const bool adj = wants_adjoint(du, ds);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double tau = d.tau[i];
    const double uk = u[i], um = u[n + i];
    const double sk = s[i], sm = s[n + i];
    const double dudx = (uk - um) / tau;
    const double dsdx = (sk - sm) / tau;
    const double r1 = dsdx + d.b[i] * dudx + d.c[i] * uk - d.f[i];
    const double r2 = sk / d.sqrt_a[i] + d.sqrt_a[i] * dudx;
    const double term = (r1 * r1 + r2 * r2) * d.h[i];
    total += term;
    if (parts != nullptr) parts->interior[i] = term;
    if (adj) {
      const double g1 = 2.0 * r1 * d.h[i];
      const double g2 = 2.0 * r2 * d.h[i];
      ds[i] += g1 / tau + g2 / d.sqrt_a[i];
      ds[n + i] -= g1 / tau;
      du[i] += g1 * (d.b[i] / tau + d.c[i]) + g2 * d.sqrt_a[i] / tau;
      du[n + i] -= g1 * d.b[i] / tau + g2 * d.sqrt_a[i] / tau;
    }
  }
  double boundary = 0.0;
  for (const BoundarySite& e : d.boundary) {
    if (e.bc.is_dirichlet()) {
      const double w = d.spec.alpha_d * e.element.measure / e.scale;
      const double r = u[e.site] - e.bc.value;
      boundary += w * r * r;
      if (adj) du[e.site] += 2.0 * w * r;
    } else {
      const double w = d.spec.alpha_n * e.element.measure * e.scale;
      const double r = e.element.normal * s[e.site] - e.bc.value;
      boundary += w * r * r;
      if (adj) ds[e.site] += 2.0 * w * r * e.element.normal;
    }
  }
  if (parts != nullptr) parts->boundary = boundary;
  return total + boundary;
}

double assemble_energy(const Data& d, std::span<const double> u, std::span<double> du,
                       LossBreakdown* parts) {
  const std::size_t n = d.n;
  const bool adj = !du.empty();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double tau = d.tau[i];
    const double uk = u[i], um = u[n + i];
    const double dudx = (uk - um) / tau;
    const double term = (0.5 * (d.a[i] * dudx * dudx + d.c[i] * uk * uk) - d.f[i] * uk) * d.h[i];
    total += term;
    if (parts != nullptr) parts->interior[i] = term;
    if (adj) {
      du[i] += d.h[i] * (d.a[i] * dudx / tau + d.c[i] * uk - d.f[i]);
      du[n + i] -= d.h[i] * d.a[i] * dudx / tau;
    }
  }
  double boundary = 0.0;
  for (const BoundarySite& e : d.boundary) {
    if (e.bc.is_dirichlet()) {
      const double w = d.spec.alpha_d * e.element.measure / e.scale;
      const double r = u[e.site] - e.bc.value;
      boundary += w * r * r;
      if (adj) du[e.site] += 2.0 * w * r;
    } else {
      boundary += e.bc.value * u[e.site] * e.element.measure;
      if (adj) du[e.site] += e.bc.value * e.element.measure;
    }
  }
  if (parts != nullptr) parts->boundary = boundary;
  return total + boundary;
}

double assemble_ls(const Data& d, std::span<const double> u, std::span<double> du, LossBreakdown* parts) {
  const std::size_t n = d.n;
  const bool adj = !du.empty();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double tau = d.tau[i];
    const double tau2 = tau * tau;
    const double uk = u[i], um = u[n + i], up = u[2 * n + i];
    const double div = (d.a_plus[i] * (up - uk) - d.a_minus[i] * (uk - um)) / tau2;
    const double dudx = (uk - um) / tau;
    const double r = -div + d.b[i] * dudx + d.c[i] * uk - d.f[i];
    const double term = r * r * d.h[i];
    total += term;
    if (parts != nullptr) parts->interior[i] = term;
    if (adj) {
      const double g = 2.0 * r * d.h[i];
      du[2 * n + i] -= g * d.a_plus[i] / tau2;
      du[i] += g * ((d.a_plus[i] + d.a_minus[i]) / tau2 + d.b[i] / tau + d.c[i]);
      du[n + i] -= g * (d.a_minus[i] / tau2 + d.b[i] / tau);
    }
  }
  double boundary = 0.0;
  for (const BoundarySite& e : d.boundary) {
    const double hE = e.scale;
    if (e.bc.is_dirichlet()) {
      const double w = d.spec.alpha_d * e.element.measure / (hE * hE * hE);
      const double r = u[e.site] - e.bc.value;
      boundary += w * r * r;
      if (adj) du[e.site] += 2.0 * w * r;
    } else {
      // n a u' with the one-sided quotient at tau = h_E/2 pointing into the domain.
      const double tau = 0.5 * e.element.h;
      const double w = d.spec.alpha_n * e.element.measure / hE;
      const double r = e.a * (u[e.site] - u[e.inner_site]) / tau + e.bc.value;
      boundary += w * r * r;
      if (adj) {
        du[e.site] += 2.0 * w * r * e.a / tau;
        du[e.inner_site] -= 2.0 * w * r * e.a / tau;
      }
    }
  }
  if (parts != nullptr) parts->boundary = boundary;
  return total + boundary;
}

std::vector<double> eval_fn(const ScalarFn& g, const std::vector<double>& xs) {
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = g(xs[i]);
  return out;
}

void eval_net(const TwoBranchNet& net, const SampleSites& sites, std::vector<double>& u,
              std::vector<double>& s) {
  u.resize(sites.upper.size());
  s.resize(sites.lower.size());
  if (!u.empty()) net.evaluate(Branch::Upper, sites.upper, u);
  if (!s.empty()) net.evaluate(Branch::Lower, sites.lower, s);
}

void require_kind(const LossSpec& spec, LossKind kind, const char* op) {
  if (spec.kind != kind) {
    throw std::invalid_argument(std::string(op) + ": loss spec is for '" + to_string(spec.kind) + "'");
  }
}

}  // namespace

DiscreteLoss::DiscreteLoss(const ProblemSpec& problem, const Partition& partition, const LossSpec& spec) {
  validate(problem);
  if (!(spec.alpha_d >= 0.0) || !(spec.alpha_n >= 0.0)) {
    throw std::invalid_argument("loss weights alpha_d and alpha_n must be non-negative");
  }
  if (spec.kind == LossKind::Energy && problem.has_convection()) {
    throw std::invalid_argument("energy loss requires b = 0 (self-adjoint problem)");
  }
  if (partition.left() != problem.left || partition.right() != problem.right) {
    throw std::invalid_argument("partition does not cover the problem interval");
  }
  auto d = std::make_shared<Data>();
  d->spec = spec;
  d->partition = partition;
  const std::size_t n = partition.size();
  d->n = n;
  d->h.resize(n);
  d->tau.resize(n);
  d->a.resize(n);
  d->sqrt_a.resize(n);
  d->b.resize(n);
  d->c.resize(n);
  d->f.resize(n);
  std::vector<double> xk(n), xm(n), xp;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = partition.midpoint(i);
    d->h[i] = partition.measure(i);
    d->tau[i] = 0.5 * d->h[i];
    xk[i] = x;
    xm[i] = x - d->tau[i];
    d->a[i] = problem.coeff_a(x);
    if (!(d->a[i] > 0.0)) throw std::invalid_argument("diffusion coefficient must be positive");
    d->sqrt_a[i] = std::sqrt(d->a[i]);
    d->b[i] = problem.b(x);
    d->c[i] = problem.coeff_c(x);
    d->f[i] = problem.rhs_f(x);
  }
  if (spec.kind == LossKind::LS) {
    xp.resize(n);
    d->a_minus.resize(n);
    d->a_plus.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      xp[i] = xk[i] + d->tau[i];
      d->a_minus[i] = problem.coeff_a(xk[i] - 0.5 * d->tau[i]);
      d->a_plus[i] = problem.coeff_a(xk[i] + 0.5 * d->tau[i]);
    }
  }

  auto& up = d->sites.upper;
  auto& lo = d->sites.lower;
  up.insert(up.end(), xk.begin(), xk.end());
  up.insert(up.end(), xm.begin(), xm.end());
  up.insert(up.end(), xp.begin(), xp.end());
  if (spec.kind == LossKind::FOSLS) {
    lo.insert(lo.end(), xk.begin(), xk.end());
    lo.insert(lo.end(), xm.begin(), xm.end());
  }

  const bool unit_scale = resolve_boundary_scale(spec.boundary_scale, spec.kind) == BoundaryScale::Unit;
  for (const auto& [element, bc] : {std::pair{partition.left_boundary(), problem.bc_left},
                                    std::pair{partition.right_boundary(), problem.bc_right}}) {
    BoundarySite site;
    site.element = element;
    site.scale = unit_scale ? 1.0 : element.h;
    site.bc = bc;
    site.a = problem.coeff_a(element.x);
    const bool on_flux = spec.kind == LossKind::FOSLS && !bc.is_dirichlet();
    auto& branch = on_flux ? lo : up;
    site.site = branch.size();
    branch.push_back(element.x);
    if (spec.kind == LossKind::LS && !bc.is_dirichlet()) {
      site.inner_site = up.size();
      up.push_back(element.x - element.normal * 0.5 * element.h);
    }
    d->boundary.push_back(site);
  }
  data_ = std::move(d);
}

LossKind DiscreteLoss::kind() const { return data_->spec.kind; }
const LossSpec& DiscreteLoss::spec() const { return data_->spec; }
const Partition& DiscreteLoss::partition() const { return data_->partition; }
const SampleSites& DiscreteLoss::sites() const { return data_->sites; }

double DiscreteLoss::assemble(std::span<const double> u, std::span<const double> sigma,
                              std::span<double> du, std::span<double> dsigma,
                              LossBreakdown* parts) const {
  const Data& d = *data_;
  if (u.size() != d.sites.upper.size() || sigma.size() != d.sites.lower.size()) {
    throw std::invalid_argument("assemble: branch values do not match the loss sites");
  }
  if (parts != nullptr) parts->interior.assign(d.n, 0.0);
  double value = 0.0;
  switch (d.spec.kind) {
    case LossKind::FOSLS:
      value = assemble_fosls(d, u, sigma, du, dsigma, parts);
      break;
    case LossKind::Energy:
      value = assemble_energy(d, u, du, parts);
      break;
    case LossKind::LS:
      value = assemble_ls(d, u, du, parts);
      break;
  }
  if (parts != nullptr) parts->total = value;
  return value;
}

SampledObjective DiscreteLoss::objective() const {
  SampledObjective obj;
  obj.sites = data_->sites;
  obj.assemble = [self = *this](std::span<const double> u, std::span<const double> s,
                                std::span<double> du, std::span<double> ds) {
    return self.assemble(u, s, du, ds);
  };
  return obj;
}

void DiscreteLoss::check_compatible(const TwoBranchNet& net) const {
  if (data_->spec.kind == LossKind::LS && net.hidden_activation() == Activation::LeakyReLU) {
    throw std::invalid_argument("LS loss needs a smooth activation; leaky ReLU networks are only H^1");
  }
}

double DiscreteLoss::evaluate(const TwoBranchNet& net) const { return breakdown(net).total; }

double DiscreteLoss::evaluate(const CandidatePair& candidate) const { return breakdown(candidate).total; }

LossBreakdown DiscreteLoss::breakdown(const TwoBranchNet& net) const {
  check_compatible(net);
  std::vector<double> u, s;
  eval_net(net, data_->sites, u, s);
  LossBreakdown parts;
  assemble(u, s, {}, {}, &parts);
  if (!std::isfinite(parts.total)) throw NonFiniteError("loss value is not finite");
  return parts;
}

LossBreakdown DiscreteLoss::breakdown(const CandidatePair& candidate) const {
  const std::vector<double> u = data_->sites.upper.empty() ? std::vector<double>{}
                                                           : eval_fn(candidate.u, data_->sites.upper);
  const std::vector<double> s = data_->sites.lower.empty() ? std::vector<double>{}
                                                           : eval_fn(candidate.sigma, data_->sites.lower);
  LossBreakdown parts;
  assemble(u, s, {}, {}, &parts);
  if (!std::isfinite(parts.total)) throw NonFiniteError("loss value is not finite");
  return parts;
}

double fosls_loss(const TwoBranchNet& net, const ProblemSpec& problem, const Partition& partition,
                  const LossSpec& spec) {
  require_kind(spec, LossKind::FOSLS, "fosls_loss");
  return DiscreteLoss(problem, partition, spec).evaluate(net);
}

double fosls_loss(const CandidatePair& candidate, const ProblemSpec& problem, const Partition& partition,
                  const LossSpec& spec) {
  require_kind(spec, LossKind::FOSLS, "fosls_loss");
  return DiscreteLoss(problem, partition, spec).evaluate(candidate);
}

double energy_loss(const TwoBranchNet& net, const ProblemSpec& problem, const Partition& partition,
                   const LossSpec& spec) {
  require_kind(spec, LossKind::Energy, "energy_loss");
  return DiscreteLoss(problem, partition, spec).evaluate(net);
}

double energy_loss(const CandidatePair& candidate, const ProblemSpec& problem, const Partition& partition,
                   const LossSpec& spec) {
  require_kind(spec, LossKind::Energy, "energy_loss");
  return DiscreteLoss(problem, partition, spec).evaluate(candidate);
}

double ls_loss(const TwoBranchNet& net, const ProblemSpec& problem, const Partition& partition,
               const LossSpec& spec) {
  require_kind(spec, LossKind::LS, "ls_loss");
  return DiscreteLoss(problem, partition, spec).evaluate(net);
}

double ls_loss(const CandidatePair& candidate, const ProblemSpec& problem, const Partition& partition,
               const LossSpec& spec) {
  require_kind(spec, LossKind::LS, "ls_loss");
  return DiscreteLoss(problem, partition, spec).evaluate(candidate);
}

std::vector<double> fosls_indicators(const TwoBranchNet& net, const ProblemSpec& problem,
                                     const Partition& partition) {
  return DiscreteLoss(problem, partition, LossSpec{}).breakdown(net).interior;
}

std::vector<double> fosls_indicators(const CandidatePair& candidate, const ProblemSpec& problem,
                                     const Partition& partition) {
  return DiscreteLoss(problem, partition, LossSpec{}).breakdown(candidate).interior;
}

}  // namespace deepls
