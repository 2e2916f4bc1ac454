#include "cam/additive.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/fisher_f.hpp>

#include "cam/errors.hpp"
#include "cam/parallel.hpp"

namespace cam {

namespace {

constexpr double kLambdaFloor = 1e-10;
constexpr double kLambdaCeil = 1e12;

std::vector<int> checked_predictors(std::vector<int> predictors, int p) {
    std::sort(predictors.begin(), predictors.end());
    predictors.erase(std::unique(predictors.begin(), predictors.end()), predictors.end());
    for (int k : predictors) {
        if (k < 0 || k >= p) throw InvalidData("predictor index out of range");
    }
    return predictors;
}

double edf_of_lambda(const Eigen::VectorXd& s, double lambda) {
    return (1.0 / (1.0 + lambda * s.array())).sum();
}

// Smoothing level whose effective df hits the target; edf is monotone
// decreasing in lambda so plain bisection on log10(lambda) suffices.
double lambda_for_edf(const Eigen::VectorXd& s, double target) {
    if (edf_of_lambda(s, kLambdaFloor) <= target) return kLambdaFloor;
    if (edf_of_lambda(s, kLambdaCeil) >= target) return kLambdaCeil;
    double lo = std::log10(kLambdaFloor);
    double hi = std::log10(kLambdaCeil);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (edf_of_lambda(s, std::pow(10.0, mid)) > target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return std::pow(10.0, 0.5 * (lo + hi));
}

}  // namespace

const std::vector<double>& gcv_grid() {
    static const std::vector<double> grid = [] {
        std::vector<double> g(20);
        for (int i = 0; i < 20; ++i) g[i] = std::pow(10.0, -6.0 + 10.0 * i / 19.0);
        return g;
    }();
    return grid;
}

DesignCache::DesignCache(const Dataset& data, int num_basis, int threads)
    : data_(&data), n_(data.n()), p_(data.p()), num_basis_(num_basis) {
    if (num_basis < 4) throw InvalidData("num_basis must be at least 4");
    const int q = num_basis - 1;

    // Orthonormal complement of the ones direction; coefficients live in the
    // sum-to-zero subspace where the Gram matrices are nonsingular.
    Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(num_basis, 1);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(ones);
    Eigen::MatrixXd qfull = qr.householderQ() * Eigen::MatrixXd::Identity(num_basis, num_basis);
    z_ = qfull.rightCols(q);
    Eigen::MatrixXd pfull = second_difference_penalty(num_basis);
    pz_ = z_.transpose() * pfull * z_;
    pz_ = 0.5 * (pz_ + pz_.transpose()).eval();

    columns_.resize(p_);
    error_kind_.assign(p_, 0);
    errors_.assign(p_, std::string());

    parallel_for(static_cast<std::size_t>(p_), threads, [&](std::size_t kk) {
        const int k = static_cast<int>(kk);
        const Eigen::VectorXd col = data.column(k);
        if (!col.allFinite()) {
            error_kind_[k] = 2;
            errors_[k] = "column " + std::to_string(k) + " has non-finite values";
            return;
        }
        ColumnDesign cd;
        try {
            cd.basis = make_basis(col, num_basis_);
        } catch (const DegenerateColumn& e) {
            error_kind_[k] = 1;
            errors_[k] = "column " + std::to_string(k) + ": " + e.what();
            return;
        }
        cd.bc = cd.basis.design_matrix(col) * z_;
        Eigen::MatrixXd g = cd.bc.transpose() * cd.bc;
        Eigen::LLT<Eigen::MatrixXd> llt(g);
        if (llt.info() != Eigen::Success) {
            error_kind_[k] = 1;
            errors_[k] = "column " + std::to_string(k) + ": basis Gram matrix not positive definite";
            return;
        }
        const Eigen::MatrixXd l = llt.matrixL();
        Eigen::MatrixXd a1 = l.triangularView<Eigen::Lower>().solve(pz_);
        Eigen::MatrixXd m = l.triangularView<Eigen::Lower>().solve(a1.transpose());
        m = 0.5 * (m + m.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
        if (es.info() != Eigen::Success) {
            error_kind_[k] = 1;
            errors_[k] = "column " + std::to_string(k) + ": penalty eigendecomposition failed";
            return;
        }
        cd.s = es.eigenvalues().cwiseMax(0.0);
        cd.t = l.transpose().triangularView<Eigen::Upper>().solve(es.eigenvectors());
        cd.lambda4 = lambda_for_edf(cd.s, std::min(4.0, static_cast<double>(q)));
        columns_[k] = std::move(cd);
    });

    // Pairwise Gram blocks are reused heavily by the greedy search; the table
    // is only worth the memory at small p.
    if (p_ <= 64) {
        cross_.resize(static_cast<std::size_t>(p_) * p_);
        std::vector<std::pair<int, int>> pairs;
        for (int k = 0; k < p_; ++k) {
            for (int l = k; l < p_; ++l) {
                if (error_kind_[k] == 0 && error_kind_[l] == 0) pairs.emplace_back(k, l);
            }
        }
        parallel_for(pairs.size(), threads, [&](std::size_t i) {
            const auto [k, l] = pairs[i];
            cross_[static_cast<std::size_t>(k) * p_ + l] =
                columns_[k].bc.transpose() * columns_[l].bc;
        });
        cross_built_ = true;
    }
}

bool DesignCache::column_ok(int k) const {
    if (k < 0 || k >= p_) throw InvalidData("column index out of range");
    return error_kind_[k] == 0;
}

const std::string& DesignCache::column_error(int k) const {
    if (k < 0 || k >= p_) throw InvalidData("column index out of range");
    return errors_[k];
}

const ColumnDesign& DesignCache::column(int k) const {
    if (k < 0 || k >= p_) throw InvalidData("column index out of range");
    if (error_kind_[k] == 1) throw DegenerateColumn(errors_[k]);
    if (error_kind_[k] == 2) throw InvalidData(errors_[k]);
    return columns_[k];
}

Eigen::MatrixXd DesignCache::cross_gram(int k, int l) const {
    const ColumnDesign& ck = column(k);
    const ColumnDesign& cl = column(l);
    if (cross_built_) {
        if (k <= l) return cross_[static_cast<std::size_t>(k) * p_ + l];
        return cross_[static_cast<std::size_t>(l) * p_ + k].transpose();
    }
    return ck.bc.transpose() * cl.bc;
}

double marginal_gcv_lambda(const Eigen::VectorXd& y, const ColumnDesign& cd) {
    const auto n = cd.bc.rows();
    if (y.size() != n) throw InvalidData("response length mismatch");
    if (!y.allFinite()) throw InvalidData("non-finite response");
    const Eigen::VectorXd yc = y.array() - y.mean();
    const double yty = yc.squaredNorm();
    const Eigen::VectorXd d = cd.t.transpose() * (cd.bc.transpose() * yc);
    const Eigen::ArrayXd d2 = d.array().square();
    const Eigen::ArrayXd s = cd.s.array();

    double best = std::numeric_limits<double>::infinity();
    double best_lambda = gcv_grid().front();
    for (double lambda : gcv_grid()) {
        const Eigen::ArrayXd w = 1.0 / (1.0 + lambda * s);
        const double rss = std::max(0.0, yty - (d2 * (2.0 * w - w.square())).sum());
        const double edf = w.sum();
        const double denom = std::max(1.0, static_cast<double>(n) - 1.0 - edf);
        const double gcv = static_cast<double>(n) * rss / (denom * denom);
        if (gcv < best) {
            best = gcv;
            best_lambda = lambda;
        }
    }
    return best_lambda;
}

namespace {

struct Stacked {
    Eigen::MatrixXd xtx;  // cross-Gram blocks, no penalty
    Eigen::MatrixXd a;    // xtx plus block-diagonal penalty
    Eigen::VectorXd rhs;
    Eigen::VectorXd yc;
    double ymean = 0.0;
};

Stacked assemble(const Eigen::VectorXd& y, const DesignCache& cache,
                 const std::vector<int>& predictors, const std::vector<double>& lambdas) {
    const int n = cache.n();
    if (y.size() != n) throw InvalidData("response length mismatch");
    if (!y.allFinite()) throw InvalidData("non-finite response");
    const int m = static_cast<int>(predictors.size());
    const int q = cache.num_basis() - 1;
    Stacked st;
    st.ymean = y.mean();
    st.yc = y.array() - st.ymean;
    st.xtx.resize(m * q, m * q);
    st.rhs.resize(m * q);
    for (int i = 0; i < m; ++i) {
        const ColumnDesign& ci = cache.column(predictors[i]);
        st.rhs.segment(i * q, q) = ci.bc.transpose() * st.yc;
        for (int j = i; j < m; ++j) {
            const Eigen::MatrixXd blk = cache.cross_gram(predictors[i], predictors[j]);
            st.xtx.block(i * q, j * q, q, q) = blk;
            if (j > i) st.xtx.block(j * q, i * q, q, q) = blk.transpose();
        }
    }
    st.a = st.xtx;
    for (int i = 0; i < m; ++i) {
        if (!(lambdas[i] >= 0.0) || !std::isfinite(lambdas[i])) {
            throw InvalidData("smoothing parameter must be finite and nonnegative");
        }
        st.a.block(i * q, i * q, q, q) += lambdas[i] * cache.reduced_penalty();
    }
    return st;
}

Eigen::LDLT<Eigen::MatrixXd> factor_or_throw(const Eigen::MatrixXd& a) {
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success) {
        throw SingularFit("penalized system factorization failed");
    }
    const Eigen::VectorXd d = ldlt.vectorD();
    const double dmax = d.maxCoeff();
    if (!(dmax > 0.0) || d.minCoeff() <= dmax * 1e-14) {
        throw SingularFit("stacked design is rank-deficient after penalty");
    }
    return ldlt;
}

}  // namespace

AdditiveFit fit_additive_fixed(const Eigen::VectorXd& y, const DesignCache& cache,
                               const std::vector<int>& predictors,
                               const std::vector<double>& lambdas) {
    const std::vector<int> pred = checked_predictors(predictors, cache.p());
    if (pred.size() != lambdas.size()) {
        throw InvalidData("one smoothing parameter per predictor required");
    }
    AdditiveFit fit;
    fit.predictors = pred;
    fit.n = cache.n();
    fit.num_basis = cache.num_basis();
    const int m = static_cast<int>(pred.size());
    if (m == 0) {
        if (y.size() != cache.n()) throw InvalidData("response length mismatch");
        if (!y.allFinite()) throw InvalidData("non-finite response");
        fit.intercept = y.mean();
        fit.sigma2_hat = (y.array() - fit.intercept).matrix().squaredNorm() / cache.n();
        return fit;
    }
    const int q = cache.num_basis() - 1;
    Stacked st = assemble(y, cache, pred, lambdas);
    const auto ldlt = factor_or_throw(st.a);
    const Eigen::VectorXd theta = ldlt.solve(st.rhs);

    Eigen::VectorXd yhat = Eigen::VectorXd::Zero(cache.n());
    for (int i = 0; i < m; ++i) {
        yhat += cache.column(pred[i]).bc * theta.segment(i * q, q);
    }
    fit.intercept = st.ymean;
    fit.sigma2_hat = (st.yc - yhat).squaredNorm() / cache.n();
    fit.smoothing = lambdas;

    const Eigen::MatrixXd w = ldlt.solve(st.xtx);
    fit.edf.resize(m);
    fit.coef_blocks.resize(m);
    for (int i = 0; i < m; ++i) {
        fit.edf[i] = w.block(i * q, i * q, q, q).trace();
        fit.coef_blocks[i] = cache.sum_to_zero() * theta.segment(i * q, q);
    }
    return fit;
}

AdditiveFit fit_additive(const Eigen::VectorXd& y, const DesignCache& cache,
                         const std::vector<int>& predictors) {
    const std::vector<int> pred = checked_predictors(predictors, cache.p());
    std::vector<double> lambdas(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        lambdas[i] = marginal_gcv_lambda(y, cache.column(pred[i]));
    }
    return fit_additive_fixed(y, cache, pred, lambdas);
}

AdditiveFit fit_additive(const Eigen::VectorXd& y, const Dataset& data,
                         const std::vector<int>& predictors, int num_basis) {
    DesignCache cache(data, num_basis);
    return fit_additive(y, cache, predictors);
}

double penalized_rss(const Eigen::VectorXd& y, const DesignCache& cache,
                     const std::vector<int>& predictors, const std::vector<double>& lambdas) {
    const std::vector<int> pred = checked_predictors(predictors, cache.p());
    if (pred.size() != lambdas.size()) {
        throw InvalidData("one smoothing parameter per predictor required");
    }
    if (y.size() != cache.n()) throw InvalidData("response length mismatch");
    if (!y.allFinite()) throw InvalidData("non-finite response");
    if (pred.empty()) {
        return (y.array() - y.mean()).matrix().squaredNorm();
    }
    if (pred.size() == 1) {
        const ColumnDesign& cd = cache.column(pred[0]);
        const Eigen::VectorXd yc = y.array() - y.mean();
        const double yty = yc.squaredNorm();
        const Eigen::VectorXd d = cd.t.transpose() * (cd.bc.transpose() * yc);
        const Eigen::ArrayXd w = 1.0 / (1.0 + lambdas[0] * cd.s.array());
        return std::max(0.0, yty - (d.array().square() * (2.0 * w - w.square())).sum());
    }
    const int q = cache.num_basis() - 1;
    Stacked st = assemble(y, cache, pred, lambdas);
    const auto ldlt = factor_or_throw(st.a);
    const Eigen::VectorXd theta = ldlt.solve(st.rhs);
    Eigen::VectorXd resid = st.yc;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        resid -= cache.column(pred[i]).bc * theta.segment(static_cast<Eigen::Index>(i) * q, q);
    }
    return resid.squaredNorm();
}

double term_significance(const AdditiveFit& fit, const DesignCache& cache,
                         const Eigen::VectorXd& y, int k) {
    const auto it = std::find(fit.predictors.begin(), fit.predictors.end(), k);
    if (it == fit.predictors.end()) throw InvalidData("k is not a predictor of this fit");
    const auto pos = static_cast<std::size_t>(it - fit.predictors.begin());

    std::vector<int> reduced = fit.predictors;
    std::vector<double> reduced_lambdas = fit.smoothing;
    reduced.erase(reduced.begin() + static_cast<std::ptrdiff_t>(pos));
    reduced_lambdas.erase(reduced_lambdas.begin() + static_cast<std::ptrdiff_t>(pos));

    const double n = fit.n;
    const double rss1 = fit.sigma2_hat * n;
    double rss0;
    if (reduced.empty()) {
        rss0 = (y.array() - y.mean()).matrix().squaredNorm();
    } else {
        rss0 = penalized_rss(y, cache, reduced, reduced_lambdas);
    }

    double edf_total = 0.0;
    for (double e : fit.edf) edf_total += e;
    const double df1 = fit.edf[pos];
    const double df2 = n - edf_total - 1.0;
    if (df2 <= 0.0) throw SingularFit("no residual degrees of freedom for the F-test");
    if (df1 <= 1e-12) return 1.0;

    if (rss1 <= 0.0) return rss0 > 0.0 ? 0.0 : 1.0;
    const double f = ((rss0 - rss1) / df1) / (rss1 / df2);
    if (!(f > 0.0)) return 1.0;
    const boost::math::fisher_f_distribution<double> dist(df1, df2);
    return boost::math::cdf(boost::math::complement(dist, f));
}

double term_significance(const AdditiveFit& fit, const Dataset& data,
                         const Eigen::VectorXd& y, int k) {
    DesignCache cache(data, fit.num_basis);
    return term_significance(fit, cache, y, k);
}

}  // namespace cam
