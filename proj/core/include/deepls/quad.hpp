#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace deepls {

// Endpoint of the interval seen as a boundary "element". In one dimension
// |E| = 1 and h_E is the length of the adjacent element.
struct BoundaryElement {
  double x = 0.0;
  double measure = 1.0;
  double h = 0.0;
  double normal = 0.0;  // outward normal, -1 on the left, +1 on the right
};

// Ordered subintervals [x_{i-1}, x_i] of [x_0, x_n] with midpoint quadrature.
class Partition {
 public:
  // Breakpoints must be strictly increasing with at least two entries.
  explicit Partition(std::vector<double> breakpoints);

  std::size_t size() const { return breakpoints_.size() - 1; }
  double left() const { return breakpoints_.front(); }
  double right() const { return breakpoints_.back(); }

  double element_left(std::size_t i) const { return breakpoints_[i]; }
  double element_right(std::size_t i) const { return breakpoints_[i + 1]; }
  double measure(std::size_t i) const { return breakpoints_[i + 1] - breakpoints_[i]; }
  double midpoint(std::size_t i) const;

  std::vector<double> midpoints() const;
  std::vector<double> measures() const;
  const std::vector<double>& breakpoints() const { return breakpoints_; }

  BoundaryElement left_boundary() const;
  BoundaryElement right_boundary() const;

  // Composite midpoint rule: sum_K g(x_K) |K|, summed left to right.
  template <class F>
  double integrate(F&& g) const {
    double sum = 0.0;
    for (std::size_t i = 0; i < size(); ++i) sum += g(midpoint(i)) * measure(i);
    return sum;
  }

  bool operator==(const Partition& other) const { return breakpoints_ == other.breakpoints_; }

 private:
  std::vector<double> breakpoints_;
  double uniform_h_ = 0.0;  // > 0 for partitions built by uniform_partition
  friend Partition uniform_partition(double, double, std::size_t);
};

// x_i = a + i h, midpoints a + h (2i - 1) / 2.
Partition uniform_partition(double a, double b, std::size_t n);

// n = round((b - a) / h) elements.
Partition uniform_partition_h(double a, double b, double h);

// Indices of the elements whose indicator is at least the k-th largest value,
// k = max(1, floor(fraction * n)). Ties at the threshold are all marked.
std::vector<std::size_t> mark_largest(std::span<const double> indicators, double fraction);

// Bisects the marked elements.
Partition refine_local(const Partition& p, std::span<const double> indicators, double fraction);

// Bisects every element.
Partition refine_global(const Partition& p);

// One breakpoint per line under an "x" header, written with round-trip precision.
void write_csv(std::ostream& os, const Partition& p);
Partition read_csv(std::istream& is);

}  // namespace deepls
