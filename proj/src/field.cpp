#include "libmlab/field.hpp"

#include <numeric>
#include <utility>

#include "libmlab/errors.hpp"

namespace libmlab {

std::vector<double> Grid1D::centers() const {
  std::vector<double> xs(static_cast<std::size_t>(cells));
  for (int i = 0; i < cells; ++i) xs[static_cast<std::size_t>(i)] = center(i);
  return xs;
}

void Grid1D::validate() const {
  if (cells < 8) throw InvalidArgument("grid needs at least 8 cells");
}

DensityField::DensityField(std::vector<double> r1, std::vector<double> r2,
                           double t)
    : rho1(std::move(r1)), rho2(std::move(r2)), time(t) {
  if (rho1.size() != rho2.size())
    throw InvalidArgument("species fields must have the same length");
}

namespace {
double cell_sum(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}
}  // namespace

double DensityField::mass1() const noexcept { return cell_sum(rho1); }
double DensityField::mass2() const noexcept { return cell_sum(rho2); }

}  // namespace libmlab
