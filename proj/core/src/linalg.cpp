#include "drls/linalg.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace drls::linalg {

Mat symmetrize(const Mat& m) { return 0.5 * (m + m.transpose()); }

double spectral_norm(const Mat& m) {
    if (m.size() == 0) {
        return 0.0;
    }
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(0);
}

double condition_number(const Mat& m) {
    Eigen::JacobiSVD<Mat> svd(m);
    const auto& s = svd.singularValues();
    const double smin = s(s.size() - 1);
    if (smin == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    return s(0) / smin;
}

double min_eigenvalue(const Mat& m) {
    Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

bool is_spd(const Mat& m) {
    if (m.rows() != m.cols() || !m.allFinite()) {
        return false;
    }
    Eigen::LLT<Mat> llt(symmetrize(m));
    if (llt.info() != Eigen::Success) {
        return false;
    }
    return min_eigenvalue(m) > 0.0;
}

Mat spd_inverse(const Mat& m, const char* what) {
    const Mat s = symmetrize(m);
    Eigen::SelfAdjointEigenSolver<Mat> es(s, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues()(0);
    const double hi = es.eigenvalues()(s.rows() - 1);
    if (!(lo > 0.0)) {
        throw NumericalError(std::string(what) + " is not positive definite",
                             std::numeric_limits<double>::infinity());
    }
    const double cond = hi / lo;
    if (cond > kMaxCondition) {
        throw NumericalError(std::string(what) + " is ill-conditioned", cond);
    }
    Eigen::LLT<Mat> llt(s);
    if (llt.info() != Eigen::Success) {
        throw NumericalError(std::string(what) + " Cholesky factorization failed", cond);
    }
    return symmetrize(llt.solve(Mat::Identity(s.rows(), s.cols())));
}

Mat inverse(const Mat& m, const char* what) {
    const double cond = condition_number(m);
    if (!(cond <= kMaxCondition)) {
        throw NumericalError(std::string(what) + " is singular or ill-conditioned", cond);
    }
    return m.fullPivLu().inverse();
}

Mat cholesky_factor(const Mat& m, const char* what) {
    Eigen::LLT<Mat> llt(symmetrize(m));
    if (llt.info() != Eigen::Success || !is_spd(m)) {
        throw NumericalError(std::string(what) + " is not positive definite");
    }
    return llt.matrixL();
}

Mat block_diag(const std::vector<Mat>& blocks) {
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    for (const auto& b : blocks) {
        rows += b.rows();
        cols += b.cols();
    }
    Mat out = Mat::Zero(rows, cols);
    Eigen::Index r = 0;
    Eigen::Index c = 0;
    for (const auto& b : blocks) {
        out.block(r, c, b.rows(), b.cols()) = b;
        r += b.rows();
        c += b.cols();
    }
    return out;
}

}  // namespace drls::linalg
