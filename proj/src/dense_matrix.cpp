#include "irsai/dense_matrix.hpp"

#include <cmath>
#include <stdexcept>

namespace irsai {

void DenseMatrix::resize(Index rows, Index cols) {
    if (rows == rows_ && cols == cols_) return;
    DenseMatrix grown(rows, cols);
    const Index keep_r = std::min(rows, rows_);
    const Index keep_c = std::min(cols, cols_);
    for (Index j = 0; j < keep_c; ++j)
        for (Index i = 0; i < keep_r; ++i) grown(i, j) = (*this)(i, j);
    *this = std::move(grown);
}

double DenseMatrix::frobenius_norm() const { return norm2(data_); }

DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("multiply: inner dimension mismatch");
    DenseMatrix c(a.rows(), b.cols());
    for (Index j = 0; j < b.cols(); ++j)
        for (Index l = 0; l < a.cols(); ++l) {
            const double blj = b(l, j);
            if (blj == 0.0) continue;
            for (Index i = 0; i < a.rows(); ++i) c(i, j) += a(i, l) * blj;
        }
    return c;
}

DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix t(a.cols(), a.rows());
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i) t(j, i) = a(i, j);
    return t;
}

DenseMatrix subtract(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw std::invalid_argument("subtract: shape mismatch");
    DenseMatrix c = a;
    auto cd = c.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < cd.size(); ++i) cd[i] -= bd[i];
    return c;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(std::span<const double> a) {
    // scaled accumulation avoids overflow on large dense columns
    double scale = 0.0, ssq = 1.0;
    for (double v : a) {
        if (v == 0.0) continue;
        const double av = std::fabs(v);
        if (scale < av) {
            ssq = 1.0 + ssq * (scale / av) * (scale / av);
            scale = av;
        } else {
            ssq += (av / scale) * (av / scale);
        }
    }
    return scale * std::sqrt(ssq);
}

} // namespace irsai
