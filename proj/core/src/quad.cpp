#include "deepls/quad.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace deepls {

Partition::Partition(std::vector<double> breakpoints) : breakpoints_(std::move(breakpoints)) {
  if (breakpoints_.size() < 2) throw std::invalid_argument("partition needs at least one element");
  for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i) {
    if (!std::isfinite(breakpoints_[i]) || !(breakpoints_[i] < breakpoints_[i + 1])) {
      throw std::invalid_argument("partition breakpoints must be finite and strictly increasing");
    }
  }
}

double Partition::midpoint(std::size_t i) const {
  if (uniform_h_ > 0.0) {
    return breakpoints_.front() + uniform_h_ * static_cast<double>(2 * i + 1) / 2.0;
  }
  return 0.5 * (breakpoints_[i] + breakpoints_[i + 1]);
}

std::vector<double> Partition::midpoints() const {
  std::vector<double> m(size());
  for (std::size_t i = 0; i < size(); ++i) m[i] = midpoint(i);
  return m;
}

std::vector<double> Partition::measures() const {
  std::vector<double> h(size());
  for (std::size_t i = 0; i < size(); ++i) h[i] = measure(i);
  return h;
}

BoundaryElement Partition::left_boundary() const {
  return {left(), 1.0, measure(0), -1.0};
}

BoundaryElement Partition::right_boundary() const {
  return {right(), 1.0, measure(size() - 1), 1.0};
}

Partition uniform_partition(double a, double b, std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_partition: n must be at least 1");
  if (!(a < b)) throw std::invalid_argument("uniform_partition: need a < b");
  const double h = (b - a) / static_cast<double>(n);
  std::vector<double> x(n + 1);
  for (std::size_t i = 0; i < n; ++i) x[i] = a + static_cast<double>(i) * h;
  x[n] = b;
  Partition p(std::move(x));
  p.uniform_h_ = h;
  return p;
}

Partition uniform_partition_h(double a, double b, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("uniform_partition_h: h must be positive");
  const double n = std::round((b - a) / h);
  if (n < 1.0) throw std::invalid_argument("uniform_partition_h: h larger than the interval");
  return uniform_partition(a, b, static_cast<std::size_t>(n));
}

std::vector<std::size_t> mark_largest(std::span<const double> indicators, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("mark_largest: fraction must lie in (0, 1]");
  }
  const std::size_t n = indicators.size();
  if (n == 0) return {};
  // Nudge before flooring so fractions such as 0.1 * 220 count as 22.
  const auto count = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(n) * (1.0 + 4.0 * std::numeric_limits<double>::epsilon())));
  const std::size_t k = std::clamp<std::size_t>(count, 1, n);
  std::vector<double> sorted(indicators.begin(), indicators.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k - 1), sorted.end(),
                   std::greater<>());
  const double threshold = sorted[k - 1];
  std::vector<std::size_t> marked;
  for (std::size_t i = 0; i < n; ++i) {
    if (indicators[i] >= threshold) marked.push_back(i);
  }
  return marked;
}

Partition refine_local(const Partition& p, std::span<const double> indicators, double fraction) {
  if (indicators.size() != p.size()) {
    throw std::invalid_argument("refine_local: indicator count does not match element count");
  }
  const std::vector<std::size_t> marked = mark_largest(indicators, fraction);
  std::vector<char> bisect(p.size(), 0);
  for (std::size_t i : marked) bisect[i] = 1;
  std::vector<double> x;
  x.reserve(p.breakpoints().size() + marked.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    x.push_back(p.element_left(i));
    if (bisect[i]) x.push_back(p.midpoint(i));
  }
  x.push_back(p.right());
  return Partition(std::move(x));
}

Partition refine_global(const Partition& p) {
  std::vector<double> x;
  x.reserve(2 * p.size() + 1);
  for (std::size_t i = 0; i < p.size(); ++i) {
    x.push_back(p.element_left(i));
    x.push_back(p.midpoint(i));
  }
  x.push_back(p.right());
  return Partition(std::move(x));
}

void write_csv(std::ostream& os, const Partition& p) {
  std::ostringstream buf;
  buf.precision(std::numeric_limits<double>::max_digits10);
  buf << "x\n";
  for (double x : p.breakpoints()) buf << x << '\n';
  os << buf.str();
}

Partition read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "x") throw std::runtime_error("partition csv: missing 'x' header");
  std::vector<double> x;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      x.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw std::runtime_error("partition csv: bad value '" + line + "'");
    }
  }
  return Partition(std::move(x));
}

}  // namespace deepls
