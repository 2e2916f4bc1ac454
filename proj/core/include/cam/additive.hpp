#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "cam/dataset.hpp"
#include "cam/spline.hpp"

namespace cam {

// Per-column building blocks shared by every regression in the pipeline.
// bc maps the centered basis through the sum-to-zero basis z, removing the
// constant direction the partition of unity would otherwise leave singular.
// With G = bc'bc and Pz the reduced penalty, t and s satisfy
// (G + lambda*Pz)^{-1} = t diag(1/(1+lambda*s)) t' for every lambda >= 0.
struct ColumnDesign {
    SplineBasis basis;
    Eigen::MatrixXd bc;    // n x (num_basis - 1)
    Eigen::MatrixXd t;
    Eigen::VectorXd s;     // >= 0; zeros span the unpenalized linear part
    double lambda4 = 0.0;  // smoothing giving ~4 effective df (boosting learner)
};

class DesignCache {
  public:
    DesignCache(const Dataset& data, int num_basis, int threads = 1);

    int n() const { return n_; }
    int p() const { return p_; }
    int num_basis() const { return num_basis_; }
    const Dataset& data() const { return *data_; }

    bool column_ok(int k) const;
    // Empty when ok; otherwise the message of the deferred error.
    const std::string& column_error(int k) const;
    // Rethrows the column's build error (DegenerateColumn or InvalidData).
    const ColumnDesign& column(int k) const;

    const Eigen::MatrixXd& reduced_penalty() const { return pz_; }
    const Eigen::MatrixXd& sum_to_zero() const { return z_; }

    // bc_k' bc_l; precomputed when p is small, otherwise computed per call.
    Eigen::MatrixXd cross_gram(int k, int l) const;

  private:
    const Dataset* data_;
    int n_ = 0;
    int p_ = 0;
    int num_basis_ = 0;
    Eigen::MatrixXd z_;
    Eigen::MatrixXd pz_;
    std::vector<ColumnDesign> columns_;
    std::vector<int> error_kind_;  // 0 ok, 1 degenerate, 2 invalid
    std::vector<std::string> errors_;
    std::vector<Eigen::MatrixXd> cross_;  // row-major pair table when small
    bool cross_built_ = false;
};

struct AdditiveFit {
    std::vector<int> predictors;               // ascending column indices
    std::vector<Eigen::VectorXd> coef_blocks;  // full-space, length num_basis
    double intercept = 0.0;
    double sigma2_hat = 0.0;                   // ||y - yhat||^2 / n
    std::vector<double> smoothing;             // lambda per predictor
    std::vector<double> edf;                   // per-predictor hat-matrix trace
    int n = 0;
    int num_basis = 0;
};

// Joint penalized least squares over the stacked centered blocks with a
// second-order difference penalty; each lambda_k picked by univariate GCV of
// y on block k over the fixed grid. Empty predictors give an intercept-only
// fit with sigma2_hat the biased sample variance.
AdditiveFit fit_additive(const Eigen::VectorXd& y, const Dataset& data,
                         const std::vector<int>& predictors, int num_basis);
AdditiveFit fit_additive(const Eigen::VectorXd& y, const DesignCache& cache,
                         const std::vector<int>& predictors);
// Same solve with caller-supplied smoothing (nested refits share lambdas).
AdditiveFit fit_additive_fixed(const Eigen::VectorXd& y, const DesignCache& cache,
                               const std::vector<int>& predictors,
                               const std::vector<double>& lambdas);

// Residual sum of squares of the joint penalized solve at fixed smoothing;
// cheaper than fit_additive when coefficients and edf are not needed.
double penalized_rss(const Eigen::VectorXd& y, const DesignCache& cache,
                     const std::vector<int>& predictors,
                     const std::vector<double>& lambdas);

// Approximate F-test for dropping block k from fit: refit without k at the
// same smoothing, F = ((RSS0-RSS1)/edf_k) / (RSS1/(n - sum(edf) - 1)).
double term_significance(const AdditiveFit& fit, const Dataset& data,
                         const Eigen::VectorXd& y, int k);
double term_significance(const AdditiveFit& fit, const DesignCache& cache,
                         const Eigen::VectorXd& y, int k);

// Fixed 20-point logarithmic grid on [1e-6, 1e4] used by every GCV search.
const std::vector<double>& gcv_grid();

// Univariate GCV smoothing of y on one column; argmin over gcv_grid with
// lowest-index tie-break.
double marginal_gcv_lambda(const Eigen::VectorXd& y, const ColumnDesign& cd);

}  // namespace cam
