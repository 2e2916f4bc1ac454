#pragma once

#include <Eigen/Dense>
#include <vector>

namespace cam {

// Clamped cubic B-spline basis with quantile interior knots and per-column
// centering offsets measured on the fitting sample.
class SplineBasis {
  public:
    int degree() const { return 3; }
    int num_basis() const { return num_basis_; }
    // Full clamped knot vector, size num_basis + 4, boundary multiplicity 4.
    const std::vector<double>& knots() const { return knots_; }
    const Eigen::VectorXd& centering_offsets() const { return offsets_; }

    // Raw basis row at x (clamped to the knot range); entries sum to 1.
    Eigen::RowVectorXd evaluate(double x) const;
    Eigen::MatrixXd design_matrix_raw(const Eigen::VectorXd& x) const;
    // Raw columns minus centering offsets; mean-zero over the fitting sample.
    Eigen::MatrixXd design_matrix(const Eigen::VectorXd& x) const;

  private:
    friend SplineBasis make_basis(const Eigen::VectorXd& x, int num_basis);
    std::vector<double> knots_;
    Eigen::VectorXd offsets_;
    int num_basis_ = 0;
};

// Interior knots at equally spaced empirical quantiles of the distinct values
// of x; throws DegenerateColumn when x has fewer than num_basis distinct
// values or fewer than num_basis + 2 observations.
SplineBasis make_basis(const Eigen::VectorXd& x, int num_basis);

// D'D for the (m-2) x m second-order difference matrix D.
Eigen::MatrixXd second_difference_penalty(int m);

}  // namespace cam
