#pragma once

#include <Eigen/Dense>
#include <vector>

namespace gtvc {

// Clamped B-spline basis on [0,1] with equally spaced interior knots.
// num_basis = (#interior knots) + degree + 1, so the knot vector is fully
// determined by (num_basis, degree).
class SplineBasis {
  public:
    SplineBasis(int num_basis, int degree);

    int num_basis() const { return num_basis_; }
    int degree() const { return degree_; }
    const std::vector<double>& knots() const { return knots_; }

    // Basis values at tau; nonnegative, sum to one. tau must lie in [0,1].
    Eigen::VectorXd evaluate(double tau) const;

    // Rows = grid points, columns = basis functions.
    Eigen::MatrixXd evaluate_grid(const std::vector<double>& taus) const;

    std::string describe() const;

  private:
    int num_basis_;
    int degree_;
    std::vector<double> knots_;  // full boundary multiplicity
};

// order-th difference penalty D'D (J x J, symmetric PSD). Its null space has
// dimension `order`: for order 2, constant and linear coefficient sequences
// are unpenalized.
Eigen::MatrixXd penalty_matrix(const SplineBasis& basis, int order);

// Column-centered basis evaluation table over a dense grid, used to impose a
// zero grid-mean on any spline built from the centered columns. The grid must
// have at least 100 points covering [0,1].
struct CenteredBasis {
    Eigen::MatrixXd table;    // centered evaluations, grid x J
    Eigen::VectorXd offsets;  // column means of the raw table
    std::vector<double> grid;
};

CenteredBasis center_basis(const SplineBasis& basis, const std::vector<double>& grid);

// Centered basis values at an arbitrary tau: B(tau) - offsets.
Eigen::VectorXd centered_values(const SplineBasis& basis, const CenteredBasis& cb, double tau);

// Equally spaced grid of n points on [0,1].
std::vector<double> unit_grid(int n);

}  // namespace gtvc
