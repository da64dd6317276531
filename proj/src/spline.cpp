#include "gtvc/spline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gtvc/errors.hpp"

namespace gtvc {

SplineBasis::SplineBasis(int num_basis, int degree) : num_basis_(num_basis), degree_(degree) {
    if (degree < 1) throw ConfigError("spline degree must be >= 1, got " + std::to_string(degree));
    if (num_basis < degree + 1) {
        throw ConfigError("num_basis must be >= degree+1, got J=" + std::to_string(num_basis) +
                          " with degree " + std::to_string(degree));
    }
    // J = interior + degree + 1 equally spaced interior knots; boundary knots
    // repeated degree+1 times.
    const int interior = num_basis - degree - 1;
    const int spans = interior + 1;
    knots_.reserve(static_cast<size_t>(num_basis + degree + 1));
    for (int i = 0; i <= degree; ++i) knots_.push_back(0.0);
    for (int i = 1; i <= interior; ++i) knots_.push_back(static_cast<double>(i) / spans);
    for (int i = 0; i <= degree; ++i) knots_.push_back(1.0);
}

Eigen::VectorXd SplineBasis::evaluate(double tau) const {
    if (tau < 0.0 || tau > 1.0) {
        throw DataError("spline evaluation point outside [0,1]: " + std::to_string(tau));
    }
    const int J = num_basis_;
    const int p = degree_;
    Eigen::VectorXd values = Eigen::VectorXd::Zero(J);

    // Knot span containing tau; the last basis function owns tau == 1.
    if (tau >= 1.0) {
        values[J - 1] = 1.0;
        return values;
    }
    int span = p;
    while (span + 1 < J && knots_[span + 1] <= tau) ++span;

    // Cox-de Boor, local triangular scheme over the p+1 active functions.
    std::vector<double> left(p + 1), right(p + 1), ndu(p + 1);
    ndu[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = tau - knots_[span + 1 - j];
        right[j] = knots_[span + j] - tau;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double denom = right[r + 1] + left[j - r];
            const double temp = ndu[r] / denom;
            ndu[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j] = saved;
    }
    for (int j = 0; j <= p; ++j) values[span - p + j] = ndu[j];
    return values;
}

Eigen::MatrixXd SplineBasis::evaluate_grid(const std::vector<double>& taus) const {
    Eigen::MatrixXd table(static_cast<Eigen::Index>(taus.size()), num_basis_);
    for (size_t i = 0; i < taus.size(); ++i) table.row(static_cast<Eigen::Index>(i)) = evaluate(taus[i]).transpose();
    return table;
}

std::string SplineBasis::describe() const {
    std::ostringstream os;
    os << "B-spline basis: J=" << num_basis_ << " degree=" << degree_ << " knots=[";
    for (size_t i = 0; i < knots_.size(); ++i) {
        if (i) os << ",";
        os << knots_[i];
    }
    os << "]";
    return os.str();
}

Eigen::MatrixXd penalty_matrix(const SplineBasis& basis, int order) {
    const int J = basis.num_basis();
    if (order < 1 || order >= J) {
        throw ConfigError("penalty order must satisfy 1 <= order < J, got order=" +
                          std::to_string(order) + " with J=" + std::to_string(J));
    }
    // D is the order-th difference operator on coefficient sequences.
    Eigen::MatrixXd D = Eigen::MatrixXd::Identity(J, J);
    for (int k = 0; k < order; ++k) {
        const Eigen::Index rows = D.rows() - 1;
        Eigen::MatrixXd Dk(rows, J);
        for (Eigen::Index r = 0; r < rows; ++r) Dk.row(r) = D.row(r + 1) - D.row(r);
        D = Dk;
    }
    return D.transpose() * D;
}

CenteredBasis center_basis(const SplineBasis& basis, const std::vector<double>& grid) {
    if (grid.size() < 100) {
        throw ConfigError("centering grid too coarse: need >= 100 points, got " +
                          std::to_string(grid.size()));
    }
    if (grid.front() != 0.0 || grid.back() != 1.0) {
        throw ConfigError("centering grid must cover [0,1]");
    }
    CenteredBasis cb;
    cb.grid = grid;
    Eigen::MatrixXd raw = basis.evaluate_grid(grid);
    cb.offsets = raw.colwise().mean();
    cb.table = raw.rowwise() - cb.offsets.transpose();
    return cb;
}

Eigen::VectorXd centered_values(const SplineBasis& basis, const CenteredBasis& cb, double tau) {
    return basis.evaluate(tau) - cb.offsets;
}

std::vector<double> unit_grid(int n) {
    std::vector<double> g(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) g[static_cast<size_t>(i)] = static_cast<double>(i) / (n - 1);
    return g;
}

}  // namespace gtvc
