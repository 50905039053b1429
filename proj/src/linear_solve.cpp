#include "lrm/linear_solve.hpp"

#include <algorithm>
#include <cmath>

#include "lrm/levy_driver.hpp"

namespace lrm {

std::vector<double> gauss_solve(std::vector<double>& a, std::vector<double>& b, std::size_t d) {
    std::vector<double> pivots(d);
    for (std::size_t c = 0; c < d; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < d; ++r) {
            if (std::abs(a[r * d + c]) > std::abs(a[piv * d + c])) {
                piv = r;
            }
        }
        if (piv != c) {
            for (std::size_t q = 0; q < d; ++q) {
                std::swap(a[c * d + q], a[piv * d + q]);
            }
            std::swap(b[c], b[piv]);
        }
        pivots[c] = a[c * d + c];
        if (pivots[c] == 0.0) {
            continue;
        }
        for (std::size_t r = c + 1; r < d; ++r) {
            const double m = a[r * d + c] / a[c * d + c];
            if (m == 0.0) {
                continue;
            }
            for (std::size_t q = c; q < d; ++q) {
                a[r * d + q] -= m * a[c * d + q];
            }
            b[r] -= m * b[c];
        }
    }
    for (std::size_t i = d; i-- > 0;) {
        double s = b[i];
        for (std::size_t q = i + 1; q < d; ++q) {
            s -= a[i * d + q] * b[q];
        }
        b[i] = a[i * d + i] != 0.0 ? s / a[i * d + i] : 0.0;
    }
    return pivots;
}

double determinant(std::span<const double> a, std::size_t d) {
    if (a.size() != d * d) {
        throw ParameterError("determinant: matrix size mismatch");
    }
    if (d == 0) {
        return 1.0;
    }
    if (d == 1) {
        return a[0];
    }
    if (d == 2) {
        return a[0] * a[3] - a[1] * a[2];
    }
    std::vector<double> m(a.begin(), a.end());
    double det = 1.0;
    for (std::size_t c = 0; c < d; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < d; ++r) {
            if (std::abs(m[r * d + c]) > std::abs(m[piv * d + c])) {
                piv = r;
            }
        }
        if (m[piv * d + c] == 0.0) {
            return 0.0;
        }
        if (piv != c) {
            for (std::size_t q = 0; q < d; ++q) {
                std::swap(m[c * d + q], m[piv * d + q]);
            }
            det = -det;
        }
        det *= m[c * d + c];
        for (std::size_t r = c + 1; r < d; ++r) {
            const double f = m[r * d + c] / m[c * d + c];
            for (std::size_t q = c; q < d; ++q) {
                m[r * d + q] -= f * m[c * d + q];
            }
        }
    }
    return det;
}

namespace {

std::vector<double> direct_solve(std::span<const double> f, std::span<const double> b,
                                 std::size_t d, double shift) {
    if (d == 1) {
        return {b[0] / (f[0] + shift)};
    }
    if (d == 2) {
        const double a1 = f[0] + shift;
        const double a2 = f[3] + shift;
        const double dd = f[1];
        const double det = a1 * a2 - dd * dd;
        return {(a2 * b[0] - dd * b[1]) / det, (a1 * b[1] - dd * b[0]) / det};
    }
    std::vector<double> a(f.begin(), f.end());
    for (std::size_t i = 0; i < d; ++i) {
        a[i * d + i] += shift;
    }
    std::vector<double> x(b.begin(), b.end());
    gauss_solve(a, x, d);
    return x;
}

double scaled_min_pivot(std::span<const double> f, std::size_t d) {
    for (std::size_t i = 0; i < d; ++i) {
        if (!(f[i * d + i] > 0.0)) {
            return 0.0;
        }
    }
    if (d == 1) {
        return 1.0;
    }
    if (d == 2) {
        return (f[0] * f[3] - f[1] * f[2]) / (f[0] * f[3]);
    }
    std::vector<double> a(d * d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            a[i * d + j] = f[i * d + j] / std::sqrt(f[i * d + i] * f[j * d + j]);
        }
    }
    std::vector<double> rhs(d, 0.0);
    const auto piv = gauss_solve(a, rhs, d);
    double m = std::abs(piv[0]);
    for (double p : piv) {
        m = std::min(m, std::abs(p));
    }
    return m;
}

}  // namespace

SolveResult solve_symmetric(std::span<const double> f, std::span<const double> b,
                            double pd_tolerance) {
    const std::size_t d = b.size();
    if (d == 0 || f.size() != d * d) {
        throw ParameterError("solve_symmetric: size mismatch");
    }
    for (double v : f) {
        if (!std::isfinite(v)) {
            throw ParameterError("solve_symmetric: non-finite matrix entry");
        }
    }
    for (double v : b) {
        if (!std::isfinite(v)) {
            throw ParameterError("solve_symmetric: non-finite right-hand side");
        }
    }
    SolveResult r;
    double trace = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        trace += f[i * d + i];
    }
    if (!(trace > 0.0)) {
        r.zero_matrix = true;
        r.relative_pivot = 0.0;
        r.x.assign(d, 0.0);
        return r;
    }
    r.relative_pivot = scaled_min_pivot(f, d);
    if (r.relative_pivot < pd_tolerance) {
        r.ridge = pd_tolerance * trace / static_cast<double>(d);
    }
    r.x = direct_solve(f, b, d, r.ridge);
    return r;
}

}  // namespace lrm
