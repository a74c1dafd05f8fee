#pragma once

#include "aads/geometry.hpp"

namespace aads {

struct LaplaceOptions {
    double tolerance = 1e-6;
    int max_iterations = 10000;
};

struct LaplaceReport {
    int iterations = 0;
    double max_residual = 0.0;
};

/// Solves sum_{n in N(i)} (u_i - u_n) = rhs_i for every pixel with unknown(i) != 0,
/// holding the remaining pixels fixed. N(i) is the in-raster 4-neighbourhood, so the
/// raster border acts as a zero-flux (Neumann) boundary. `rhs` may be null (pure Laplace).
///
/// Red-black ordered over-relaxed Gauss-Seidel; the sweep order is fixed, so results are
/// bit-reproducible. Unknowns are seeded by breadth-first averaging from the known set.
/// Throws NumericalError if a connected unknown region touches no known pixel or the
/// residual does not reach the tolerance.
LaplaceReport solve_laplace(Raster<double>& values, const Mask& unknown, const LaplaceOptions& options,
                            const Raster<double>* rhs = nullptr);

/// max |residual| over unknown pixels for the system above.
double laplace_residual(const Raster<double>& values, const Mask& unknown, const Raster<double>* rhs = nullptr);

/// 4-connected components of the nonzero pixels of `mask`; returns a label raster
/// (0 = background, 1..n) and writes n.
Raster<int> connected_components(const Mask& mask, int& count);

} // namespace aads
