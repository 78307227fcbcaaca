#pragma once

#include <cstddef>
#include <vector>

namespace libmlab {

// M equal cells on the unit torus; cell M wraps to cell 0.
struct Grid1D {
  int cells = 256;

  double dx() const noexcept { return 1.0 / cells; }
  double center(int i) const noexcept { return (i + 0.5) / cells; }
  int wrap(int i) const noexcept { return ((i % cells) + cells) % cells; }
  std::vector<double> centers() const;

  // Throws InvalidArgument for fewer than 8 cells.
  void validate() const;
};

// Per-species grid functions (PDE cell values or smoothed empirical
// densities) at one time.
struct DensityField {
  std::vector<double> rho1;
  std::vector<double> rho2;
  double time = 0.0;

  DensityField() = default;
  DensityField(std::vector<double> r1, std::vector<double> r2, double t = 0.0);

  std::size_t size() const noexcept { return rho1.size(); }
  // Sum of cell values times dx.
  double mass1() const noexcept;
  double mass2() const noexcept;
};

}  // namespace libmlab
