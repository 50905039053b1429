#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lrm {

struct SolveResult {
    std::vector<double> x;
    /// Smallest pivot of the diagonally rescaled (unit-diagonal) matrix;
    /// for d = 2 this is 1 - rho^2.
    double relative_pivot = 1.0;
    /// Diagonal shift added when relative_pivot < tolerance, else 0.
    double ridge = 0.0;
    /// Zero matrix: x set to 0.
    bool zero_matrix = false;
};

/// Solves F x = b for a small symmetric F given row-major. d = 1 divides,
/// d = 2 uses the closed-form inverse, d >= 3 Gaussian elimination with
/// partial pivoting. If the relative pivot falls below `pd_tolerance`,
/// tolerance * trace(F) / d is added to the diagonal before solving.
/// Throws ParameterError on non-finite input or size mismatch.
SolveResult solve_symmetric(std::span<const double> f, std::span<const double> b,
                            double pd_tolerance);

/// Plain Gaussian elimination with partial pivoting; returns the pivots in
/// elimination order. `a` and `b` are overwritten.
std::vector<double> gauss_solve(std::vector<double>& a, std::vector<double>& b, std::size_t d);

/// Determinant via elimination with partial pivoting.
double determinant(std::span<const double> a, std::size_t d);

}  // namespace lrm
