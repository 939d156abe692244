#pragma once

// Scaled sigma points and the unscented transform.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace windest {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

/// Raised when a covariance cannot be factorized even after jitter.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct UtParams {
    double alpha = 1e-1;
    double beta = 2.0;
    double kappa = 0.0;
};

inline constexpr double kCovarianceJitter = 1e-12;

/// Lower Cholesky factor of cov. On failure adds kCovarianceJitter * I and retries once.
inline MatX robust_cholesky(const MatX& cov)
{
    Eigen::LLT<MatX> llt(cov);
    if (llt.info() == Eigen::Success) {
        return llt.matrixL();
    }
    llt.compute(cov + kCovarianceJitter * MatX::Identity(cov.rows(), cov.cols()));
    if (llt.info() != Eigen::Success) {
        throw NumericalError("covariance is not positive semi-definite");
    }
    return llt.matrixL();
}

/// 2n+1 sigma points (columns) with their mean and covariance weights.
struct SigmaPointSet {
    MatX points;
    VecX mean_weights;
    VecX cov_weights;
    UtParams params;

    Eigen::Index size() const { return points.cols(); }
    Eigen::Index dim() const { return points.rows(); }
};

inline SigmaPointSet make_sigma_points(const VecX& mean, const MatX& cov, const UtParams& params = {})
{
    const Eigen::Index n = mean.size();
    if (cov.rows() != n || cov.cols() != n) {
        throw std::invalid_argument("make_sigma_points: covariance shape mismatch");
    }
    const double nd = static_cast<double>(n);
    const double lambda = params.alpha * params.alpha * (nd + params.kappa) - nd;
    const double spread = nd + lambda;
    if (!(spread > 0.0)) {
        throw std::invalid_argument("make_sigma_points: n + lambda must be positive");
    }

    const MatX scaled = std::sqrt(spread) * robust_cholesky(cov);

    SigmaPointSet s;
    s.params = params;
    s.points.resize(n, 2 * n + 1);
    s.points.col(0) = mean;
    for (Eigen::Index i = 0; i < n; ++i) {
        s.points.col(1 + i) = mean + scaled.col(i);
        s.points.col(1 + n + i) = mean - scaled.col(i);
    }
    s.mean_weights = VecX::Constant(2 * n + 1, 0.5 / spread);
    s.cov_weights = s.mean_weights;
    s.mean_weights(0) = lambda / spread;
    s.cov_weights(0) = lambda / spread + (1.0 - params.alpha * params.alpha + params.beta);
    return s;
}

inline VecX weighted_mean(const MatX& points, const VecX& weights)
{
    return points * weights;
}

/// Sum_i w_i (a_i - a_mean)(b_i - b_mean)^T.
inline MatX weighted_cross_covariance(const MatX& a, const VecX& a_mean, const MatX& b, const VecX& b_mean,
                                      const VecX& weights)
{
    const MatX da = a.colwise() - a_mean;
    const MatX db = b.colwise() - b_mean;
    return da * weights.asDiagonal() * db.transpose();
}

inline MatX symmetrized(const MatX& m)
{
    return 0.5 * (m + m.transpose());
}

struct UtResult {
    VecX mean;
    MatX cov;
    MatX cross_cov;  // Cov(x, y), n x m
};

/// Propagates N(mean, cov) through f: R^n -> R^m.
template <class F>
UtResult unscented_transform(const VecX& mean, const MatX& cov, F&& f, const UtParams& params = {})
{
    const SigmaPointSet s = make_sigma_points(mean, cov, params);
    VecX y0 = f(VecX(s.points.col(0)));
    MatX ys(y0.size(), s.size());
    ys.col(0) = y0;
    for (Eigen::Index i = 1; i < s.size(); ++i) {
        ys.col(i) = f(VecX(s.points.col(i)));
    }
    UtResult r;
    r.mean = weighted_mean(ys, s.mean_weights);
    r.cov = symmetrized(weighted_cross_covariance(ys, r.mean, ys, r.mean, s.cov_weights));
    r.cross_cov = weighted_cross_covariance(s.points, mean, ys, r.mean, s.cov_weights);
    return r;
}

}  // namespace windest
