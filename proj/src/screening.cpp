#include "fbmreg/screening.hpp"

#include "fbmreg/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <vector>

namespace fbmreg {

std::string_view to_string(ScreeningGroup g) noexcept {
    switch (g) {
        case ScreeningGroup::I: return "I";
        case ScreeningGroup::II: return "II";
        case ScreeningGroup::III: return "III";
        case ScreeningGroup::IV: return "IV";
    }
    return "?";
}

ScreeningGroup group_of(bool isotropic, bool normal) noexcept {
    if (normal) {
        return isotropic ? ScreeningGroup::I : ScreeningGroup::II;
    }
    return isotropic ? ScreeningGroup::III : ScreeningGroup::IV;
}

Matrix sample_autocorrelation(const Fragment& fragment, int max_lag) {
    const int n = fragment.size();
    if (max_lag < 1 || max_lag >= n) {
        throw Error(ErrorCode::InvalidArgument, "autocorrelation lag window does not fit the fragment");
    }
    const Matrix x = fragment.pixels().array() - fragment.pixels().mean();
    const int w = 2 * max_lag + 1;
    Matrix r(w, w);
    for (int dj = -max_lag; dj <= max_lag; ++dj) {
        for (int di = -max_lag; di <= max_lag; ++di) {
            double acc = 0.0;
            for (int j = std::max(0, -dj); j < std::min(n, n - dj); ++j) {
                for (int i = std::max(0, -di); i < std::min(n, n - di); ++i) {
                    acc += x(i, j) * x(i + di, j + dj);
                }
            }
            // Biased normalization (divide by the full pixel count).
            r(di + max_lag, dj + max_lag) = acc / (n * n);
        }
    }
    const double r0 = r(max_lag, max_lag);
    if (!(r0 > 0.0)) {
        throw Error(ErrorCode::DegenerateFit, "constant fragment has no autocorrelation structure");
    }
    return r / r0;
}

IsotropyResult isotropy_from_autocorrelation(const Matrix& acf) {
    if (acf.rows() != acf.cols() || acf.rows() % 2 == 0 || acf.rows() < 3) {
        throw Error(ErrorCode::InvalidArgument, "autocorrelation grid must be square with odd size >= 3");
    }
    const int lag = static_cast<int>(acf.rows() - 1) / 2;
    const int m = static_cast<int>(acf.size());
    Matrix design(m, 6);
    Vector rhs(m);
    int row = 0;
    for (int dj = -lag; dj <= lag; ++dj) {
        for (int di = -lag; di <= lag; ++di, ++row) {
            design.row(row) << di * di, dj * dj, 2.0 * di * dj, di, dj, 1.0;
            rhs[row] = acf(di + lag, dj + lag);
        }
    }
    const Eigen::ColPivHouseholderQR<Matrix> qr(design);
    if (qr.rank() < 6) {
        throw Error(ErrorCode::DegenerateFit, "quadratic autocorrelation fit is rank deficient");
    }
    const Vector coef = qr.solve(rhs);
    IsotropyResult out;
    out.fit = {coef[0], coef[1], coef[2], coef[3], coef[4], coef[5]};
    Eigen::Matrix2d curv;
    curv << out.fit.a, out.fit.c, out.fit.c, out.fit.b;
    const Eigen::Vector2d lambda = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(curv).eigenvalues().cwiseAbs();
    const double lo = lambda.minCoeff();
    const double hi = lambda.maxCoeff();
    if (!(lo > 1e-12 * std::max(hi, 1e-300))) {
        throw Error(ErrorCode::DegenerateFit, "autocorrelation curvature matrix is singular");
    }
    out.eigen_ratio = hi / lo;
    out.isotropic = out.eigen_ratio < kIsotropyRatioLimit;
    return out;
}

IsotropyResult isotropy_test(const Fragment& fragment) {
    if (fragment.size() < 7) {
        throw Error(ErrorCode::InvalidArgument, "isotropy test needs a fragment of size >= 7");
    }
    return isotropy_from_autocorrelation(sample_autocorrelation(fragment));
}

NormalityResult normality_test(const Fragment& fragment, double alpha) {
    if (fragment.size() < 5) {
        throw Error(ErrorCode::InvalidArgument, "normality test needs a fragment of size >= 5");
    }
    const Matrix& p = fragment.pixels();
    const Eigen::Index n = p.rows();
    const Matrix dv = p.bottomRows(n - 1) - p.topRows(n - 1);
    const Matrix dh = p.rightCols(n - 1) - p.leftCols(n - 1);
    NormalityResult out;
    out.vertical = lilliefors_test(std::span<const double>(dv.data(), static_cast<std::size_t>(dv.size())), alpha);
    out.horizontal = lilliefors_test(std::span<const double>(dh.data(), static_cast<std::size_t>(dh.size())), alpha);
    out.normal = !out.vertical.reject && !out.horizontal.reject;
    return out;
}

ScreeningReport classify(const FragmentPair& pair) {
    const IsotropyResult iso = isotropy_test(pair.tmpl);
    const NormalityResult nrm = normality_test(pair.tmpl);
    ScreeningReport r;
    r.isotropic = iso.isotropic;
    r.eigen_ratio = iso.eigen_ratio;
    r.normal = nrm.normal;
    r.lilliefors_vertical = nrm.vertical;
    r.lilliefors_horizontal = nrm.horizontal;
    r.group = group_of(r.isotropic, r.normal);
    return r;
}

}  // namespace fbmreg
