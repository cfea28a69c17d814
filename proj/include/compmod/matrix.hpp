#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace compmod {

// Dense real matrix, double precision, row-major. Immutable by convention
// once handed to the graph; plain helpers below never alias their inputs.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);
    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    std::string shape_str() const;

    // 1x1 convenience.
    double scalar() const;

    bool all_finite() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// Shape guards; throw DimensionError with both shapes reported.
void check_same_shape(const Matrix& a, const Matrix& b, const char* op);
void check_square(const Matrix& a, const char* op);

// Plain (non-differentiable) matrix arithmetic. These back the graph ops and
// are reused directly by evaluation code and test oracles.
Matrix matmul(const Matrix& a, const Matrix& b);        // a * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);     // a^T * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);     // a * b^T
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double c);
void add_in_place(Matrix& acc, const Matrix& m);
void axpy_in_place(Matrix& acc, double c, const Matrix& m);  // acc += c*m
double trace(const Matrix& a);
double dot(const Matrix& a, const Matrix& b);  // Frobenius inner product
double frobenius_norm(const Matrix& a);
double row_norm(const Matrix& a, std::size_t r);

}  // namespace compmod
