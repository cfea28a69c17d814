#include "compmod/matrix.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include "compmod/errors.hpp"

namespace compmod {

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                             " != " + std::to_string(rows_) + "x" + std::to_string(cols_));
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r == 0 ? 0 : rows.begin()->size();
    Matrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw DimensionError("Matrix::from_rows: ragged rows");
        std::size_t j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

std::string Matrix::shape_str() const {
    std::ostringstream os;
    os << rows_ << "x" << cols_;
    return os.str();
}

double Matrix::scalar() const {
    if (rows_ != 1 || cols_ != 1) {
        throw ContractError("scalar() on non-1x1 matrix " + shape_str());
    }
    return data_[0];
}

bool Matrix::all_finite() const {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() +
                             " vs " + b.shape_str());
    }
}

void check_square(const Matrix& a, const char* op) {
    if (a.rows() != a.cols()) {
        throw DimensionError(std::string(op) + ": expected square matrix, got " +
                             a.shape_str());
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw DimensionError("matmul: inner dimensions differ, " + a.shape_str() +
                             " x " + b.shape_str());
    }
    Matrix c(a.rows(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    // ikj order keeps both B and C accesses sequential.
    for (std::size_t i = 0; i < n; ++i) {
        double* ci = c.data() + i * m;
        const double* ai = a.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            const double* bp = b.data() + p * m;
            for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
        }
    }
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) {
        throw DimensionError("matmul_tn: row counts differ, " + a.shape_str() + " vs " +
                             b.shape_str());
    }
    Matrix c(a.cols(), b.cols());
    const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
    for (std::size_t p = 0; p < n; ++p) {
        const double* ap = a.data() + p * k;
        const double* bp = b.data() + p * m;
        for (std::size_t i = 0; i < k; ++i) {
            double* ci = c.data() + i * m;
            const double av = ap[i];
            for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
        }
    }
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) {
        throw DimensionError("matmul_nt: column counts differ, " + a.shape_str() +
                             " vs " + b.shape_str());
    }
    Matrix c(a.rows(), b.rows());
    const std::size_t n = a.rows(), k = a.cols(), m = b.rows();
    for (std::size_t i = 0; i < n; ++i) {
        const double* ai = a.data() + i * k;
        double* ci = c.data() + i * m;
        for (std::size_t j = 0; j < m; ++j) {
            const double* bj = b.data() + j * k;
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p) s += ai[p] * bj[p];
            ci[j] = s;
        }
    }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    }
    return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "add");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.vec()[i] += b.vec()[i];
    return c;
}

Matrix sub(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "sub");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.vec()[i] -= b.vec()[i];
    return c;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "hadamard");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.vec()[i] *= b.vec()[i];
    return c;
}

Matrix scale(const Matrix& a, double c) {
    Matrix r = a;
    for (double& v : r.vec()) v *= c;
    return r;
}

void add_in_place(Matrix& acc, const Matrix& m) {
    check_same_shape(acc, m, "add_in_place");
    for (std::size_t i = 0; i < acc.size(); ++i) acc.vec()[i] += m.vec()[i];
}

void axpy_in_place(Matrix& acc, double c, const Matrix& m) {
    check_same_shape(acc, m, "axpy_in_place");
    for (std::size_t i = 0; i < acc.size(); ++i) acc.vec()[i] += c * m.vec()[i];
}

double trace(const Matrix& a) {
    check_square(a, "trace");
    double t = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
    return t;
}

double dot(const Matrix& a, const Matrix& b) {
    check_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.vec()[i] * b.vec()[i];
    return s;
}

double frobenius_norm(const Matrix& a) { return std::sqrt(dot(a, a)); }

double row_norm(const Matrix& a, std::size_t r) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(r, j) * a(r, j);
    return std::sqrt(s);
}

}  // namespace compmod
