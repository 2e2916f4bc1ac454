#include "cam/spline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cam/errors.hpp"

namespace cam {

namespace {

// Linearly interpolated empirical quantile of a sorted vector.
double quantile_sorted(const std::vector<double>& v, double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    if (lo + 1 >= v.size()) return v.back();
    const double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[lo + 1] * frac;
}

}  // namespace

Eigen::RowVectorXd SplineBasis::evaluate(double x) const {
    const int nb = num_basis_;
    const double lo = knots_[3];
    const double hi = knots_[nb];
    x = std::min(std::max(x, lo), hi);

    // Span mu with knots[mu] <= x < knots[mu+1]; last span closed at hi.
    int mu;
    if (x >= hi) {
        mu = nb - 1;
    } else {
        auto it = std::upper_bound(knots_.begin() + 3, knots_.begin() + nb + 1, x);
        mu = static_cast<int>(it - knots_.begin()) - 1;
    }

    double vals[4] = {1.0, 0.0, 0.0, 0.0};
    double left[4], right[4];
    for (int j = 1; j <= 3; ++j) {
        left[j] = x - knots_[mu + 1 - j];
        right[j] = knots_[mu + j] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = vals[r] / (right[r + 1] + left[j - r]);
            vals[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        vals[j] = saved;
    }

    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(nb);
    for (int r = 0; r <= 3; ++r) row(mu - 3 + r) = vals[r];
    return row;
}

Eigen::MatrixXd SplineBasis::design_matrix_raw(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd out(x.size(), num_basis_);
    for (Eigen::Index i = 0; i < x.size(); ++i) out.row(i) = evaluate(x(i));
    return out;
}

Eigen::MatrixXd SplineBasis::design_matrix(const Eigen::VectorXd& x) const {
    Eigen::MatrixXd out = design_matrix_raw(x);
    out.rowwise() -= offsets_.transpose();
    return out;
}

SplineBasis make_basis(const Eigen::VectorXd& x, int num_basis) {
    if (num_basis < 4) throw InvalidData("num_basis must be at least 4 for cubic splines");
    if (!x.allFinite()) throw InvalidData("non-finite values in spline input");
    const auto n = static_cast<std::size_t>(x.size());
    if (n < static_cast<std::size_t>(num_basis) + 2) {
        throw DegenerateColumn("need at least num_basis + 2 observations, got " +
                               std::to_string(n));
    }

    std::vector<double> uniq(x.data(), x.data() + x.size());
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    if (uniq.size() < static_cast<std::size_t>(num_basis)) {
        throw DegenerateColumn("column has " + std::to_string(uniq.size()) +
                               " distinct values, need " + std::to_string(num_basis));
    }

    SplineBasis basis;
    basis.num_basis_ = num_basis;
    auto& t = basis.knots_;
    t.assign(static_cast<std::size_t>(num_basis) + 4, 0.0);
    const double lo = uniq.front();
    const double hi = uniq.back();
    for (int i = 0; i < 4; ++i) {
        t[i] = lo;
        t[num_basis + i] = hi;
    }
    const int interior = num_basis - 4;
    for (int i = 1; i <= interior; ++i) {
        t[3 + i] = quantile_sorted(uniq, static_cast<double>(i) / (interior + 1));
    }
    for (int i = 1; i <= interior; ++i) {
        if (!(t[3 + i] > t[2 + i]) || !(t[3 + i] < hi)) {
            throw DegenerateColumn("interior knots not strictly increasing");
        }
    }

    basis.offsets_ = basis.design_matrix_raw(x).colwise().mean();
    return basis;
}

Eigen::MatrixXd second_difference_penalty(int m) {
    if (m < 3) throw InvalidData("penalty needs at least 3 coefficients");
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m - 2, m);
    for (int i = 0; i < m - 2; ++i) {
        d(i, i) = 1.0;
        d(i, i + 1) = -2.0;
        d(i, i + 2) = 1.0;
    }
    return d.transpose() * d;
}

}  // namespace cam
