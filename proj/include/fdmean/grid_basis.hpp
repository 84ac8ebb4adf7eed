#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace fdmean {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/**
 * Equispaced midpoint design t_j = (j - 1/2) / m, j = 1..m.
 *
 * The midpoint convention makes the discrete Fourier and Haar systems
 * exactly orthonormal in the empirical measure that puts mass 1/m on
 * each design point.
 */
struct Grid
{
    std::size_t m = 0;
    Vector points;

    std::size_t size() const { return m; }
    double spacing() const { return 1.0 / static_cast<double>(m); }
};

inline Grid make_grid(std::size_t m)
{
    if (m < 2) {
        throw std::invalid_argument("make_grid: need m >= 2, got " + std::to_string(m));
    }
    Grid grid;
    grid.m = m;
    grid.points.resize(static_cast<Eigen::Index>(m));
    const double md = static_cast<double>(m);
    for (std::size_t j = 0; j < m; ++j) {
        grid.points[static_cast<Eigen::Index>(j)] = (static_cast<double>(j) + 0.5) / md;
    }
    return grid;
}

/// Index of a grid point equal to t (within 1e-12), or throws.
inline std::size_t grid_index(const Grid& grid, double t)
{
    const double pos = t * static_cast<double>(grid.m) - 0.5;
    const double rounded = std::round(pos);
    if (rounded < 0 || rounded >= static_cast<double>(grid.m)
        || std::abs(pos - rounded) > 1e-9) {
        throw std::invalid_argument("grid_index: " + std::to_string(t) + " is not a design point");
    }
    return static_cast<std::size_t>(rounded);
}

enum class BasisFamily { Fourier, Haar };

inline std::string_view to_string(BasisFamily family)
{
    return family == BasisFamily::Fourier ? "fourier" : "haar";
}

inline BasisFamily parse_basis_family(std::string_view name)
{
    if (name == "fourier" || name == "Fourier") return BasisFamily::Fourier;
    if (name == "haar" || name == "Haar") return BasisFamily::Haar;
    throw std::invalid_argument("unknown basis family '" + std::string(name) + "'");
}

inline bool is_power_of_two(std::size_t m) { return m >= 1 && (m & (m - 1)) == 0; }

/**
 * m basis functions evaluated on the grid. Column k holds phi_{k+1}(t_j)
 * for j = 1..m (documentation indexes functions from 1, storage from 0).
 */
struct BasisMatrix
{
    BasisFamily family = BasisFamily::Fourier;
    Matrix values;     // (m, m): values(j, k) = phi_k(t_j)
    Vector sup_norms;  // max_j |phi_k(t_j)|

    std::size_t size() const { return static_cast<std::size_t>(values.cols()); }
};

namespace detail {

inline void fill_sup_norms(BasisMatrix& basis)
{
    basis.sup_norms = basis.values.cwiseAbs().colwise().maxCoeff().transpose();
}

} // namespace detail

/**
 * Trigonometric system phi_1 = 1, phi_{2l} = sqrt2 cos(2 pi l t),
 * phi_{2l+1} = sqrt2 sin(2 pi l t). For even m the last column is the
 * alternating Nyquist function (-1)^{j-1}.
 */
inline BasisMatrix fourier_basis(const Grid& grid)
{
    const std::size_t m = grid.m;
    if (m < 2) throw std::invalid_argument("fourier_basis: need m >= 2");
    const auto mi = static_cast<Eigen::Index>(m);

    BasisMatrix basis;
    basis.family = BasisFamily::Fourier;
    basis.values.resize(mi, mi);
    basis.values.col(0).setOnes();

    const double root2 = std::numbers::sqrt2;
    const double two_pi = 2.0 * std::numbers::pi;
    const std::size_t pairs = (m - 1) / 2;
    for (std::size_t l = 1; l <= pairs; ++l) {
        const auto cos_col = static_cast<Eigen::Index>(2 * l - 1);
        for (Eigen::Index j = 0; j < mi; ++j) {
            const double arg = two_pi * static_cast<double>(l) * grid.points[j];
            basis.values(j, cos_col) = root2 * std::cos(arg);
            basis.values(j, cos_col + 1) = root2 * std::sin(arg);
        }
    }
    if (m % 2 == 0) {
        for (Eigen::Index j = 0; j < mi; ++j) {
            basis.values(j, mi - 1) = (j % 2 == 0) ? 1.0 : -1.0;
        }
    }
    detail::fill_sup_norms(basis);
    return basis;
}

/**
 * Haar system on m = 2^J midpoints: the constant followed by wavelets
 * psi_{l,q} = 2^{l/2} (1[q/2^l, (q+1/2)/2^l) - 1[(q+1/2)/2^l, (q+1)/2^l))
 * ordered by level l, then shift q.
 */
inline BasisMatrix haar_basis(const Grid& grid)
{
    const std::size_t m = grid.m;
    if (m < 2 || !is_power_of_two(m)) {
        throw std::invalid_argument("haar_basis: m must be a power of two >= 2, got "
                                    + std::to_string(m));
    }
    const auto mi = static_cast<Eigen::Index>(m);

    BasisMatrix basis;
    basis.family = BasisFamily::Haar;
    basis.values = Matrix::Zero(mi, mi);
    basis.values.col(0).setOnes();

    // Breakpoints q/2^l fall exactly between midpoints, so support is a
    // contiguous block of m / 2^l grid indices.
    Eigen::Index col = 1;
    for (std::size_t blocks = 1; blocks < m; blocks *= 2) {
        const std::size_t width = m / blocks;
        const double height = std::sqrt(static_cast<double>(blocks));
        for (std::size_t q = 0; q < blocks; ++q, ++col) {
            const std::size_t start = q * width;
            for (std::size_t j = 0; j < width; ++j) {
                basis.values(static_cast<Eigen::Index>(start + j), col)
                    = (j < width / 2) ? height : -height;
            }
        }
    }
    detail::fill_sup_norms(basis);
    return basis;
}

inline BasisMatrix make_basis(BasisFamily family, const Grid& grid)
{
    return family == BasisFamily::Fourier ? fourier_basis(grid) : haar_basis(grid);
}

/// Whether `family` can be built on a grid with m points.
inline bool basis_supports(BasisFamily family, std::size_t m)
{
    return m >= 2 && (family == BasisFamily::Fourier || is_power_of_two(m));
}

/// Empirical coefficients mu_k = (1/m) sum_j values_j phi_k(t_j).
inline Vector analyze(const Vector& values, const BasisMatrix& basis)
{
    if (static_cast<std::size_t>(values.size()) != basis.size()) {
        throw std::invalid_argument("analyze: expected " + std::to_string(basis.size())
                                    + " values, got " + std::to_string(values.size()));
    }
    return basis.values.transpose() * values / static_cast<double>(basis.size());
}

/// g(t_j) = sum_k coeffs_k phi_k(t_j).
inline Vector synthesize(const Vector& coeffs, const BasisMatrix& basis)
{
    if (static_cast<std::size_t>(coeffs.size()) != basis.size()) {
        throw std::invalid_argument("synthesize: expected " + std::to_string(basis.size())
                                    + " coefficients, got " + std::to_string(coeffs.size()));
    }
    return basis.values * coeffs;
}

/// max_{k,k'} |(1/m) sum_j phi_k phi_k' - 1{k = k'}|
inline double check_orthonormality(const BasisMatrix& basis)
{
    const auto m = static_cast<double>(basis.values.rows());
    const Matrix gram = basis.values.transpose() * basis.values / m;
    return (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

/// Empirical grid norms ||g||_{m,inf} and ||g||_{m,2}.
inline double sup_norm(const Vector& g) { return g.size() == 0 ? 0.0 : g.cwiseAbs().maxCoeff(); }
inline double l2_norm(const Vector& g)
{
    return g.size() == 0 ? 0.0 : std::sqrt(g.squaredNorm() / static_cast<double>(g.size()));
}

/// m rows, m columns, no header; 17 significant digits.
inline void write_basis_csv(std::ostream& out, const BasisMatrix& basis)
{
    const auto precision = out.precision(17);
    for (Eigen::Index j = 0; j < basis.values.rows(); ++j) {
        for (Eigen::Index k = 0; k < basis.values.cols(); ++k) {
            if (k) out << ',';
            out << basis.values(j, k);
        }
        out << '\n';
    }
    out.precision(precision);
}

} // namespace fdmean
