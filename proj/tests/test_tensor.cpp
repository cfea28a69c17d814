#include <Eigen/Dense>
#include <cmath>

#include "compmod/errors.hpp"
#include "compmod/ops.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace compmod;
using testsup::bitwise_equal;
using testsup::random_matrix;

TEST_CASE("matmul forward basics") {
    Matrix a = Matrix::from_rows({{1, 2}, {3, 4}});
    Tape t;
    Value va = t.leaf(a, false);
    Value vi = t.leaf(Matrix::identity(2), false);
    CHECK(bitwise_equal(matmul(va, vi).val(), a));

    Tape t2;
    Value row = t2.leaf(Matrix::from_rows({{1, 0}}), false);
    Value col = t2.leaf(Matrix::from_rows({{0}, {1}}), false);
    CHECK(matmul(row, col).val().scalar() == 0.0);
}

TEST_CASE("matmul shape mismatch reports both shapes") {
    Tape t;
    Value a = t.leaf(Matrix(2, 3), false);
    Value b = t.leaf(Matrix(2, 2), false);
    CHECK_THROWS_WITH_AS(matmul(a, b), doctest::Contains("2x3"), DimensionError);
}

TEST_CASE("matmul gradient vs finite differences") {
    const Matrix a0 = random_matrix(3, 4, 11);
    const Matrix b0 = random_matrix(4, 2, 12);
    // Check grad wrt a with b fixed, then wrt b.
    const double err_a = grad_check(
        [&](Tape& t, Value x) { return sum_all(matmul(x, t.constant(b0))); }, a0);
    const double err_b = grad_check(
        [&](Tape& t, Value x) { return sum_all(matmul(t.constant(a0), x)); }, b0);
    CHECK(err_a < 1e-6);
    CHECK(err_b < 1e-6);
}

TEST_CASE("row_normalize basics") {
    Tape t;
    Value v = t.leaf(Matrix::from_rows({{3, 4}}), false);
    const Matrix out = row_normalize(v).val();
    CHECK(out(0, 0) == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(out(0, 1) == doctest::Approx(0.8).epsilon(1e-12));

    Tape t2;
    Value zero = t2.leaf(Matrix(1, 2), false);
    CHECK(bitwise_equal(row_normalize(zero, 1e-12).val(), Matrix(1, 2)));
}

TEST_CASE("row_normalize gradient vs finite differences") {
    const Matrix x0 = random_matrix(5, 3, 13);
    const double err =
        grad_check([](Tape&, Value x) { return sum_all(mul(row_normalize(x), x)); }, x0);
    CHECK(err < 1e-6);
}

TEST_CASE("backward quadratic and trace") {
    Tape t;
    Value x = t.leaf(Matrix::from_rows({{1, 2, 3}}), true);
    t.backward(sum_all(mul(x, x)));
    CHECK(bitwise_equal(t.grad(x), Matrix::from_rows({{2, 4, 6}})));

    Tape t2;
    Value a = t2.leaf(random_matrix(3, 3, 14), true);
    t2.backward(trace(a));
    CHECK(bitwise_equal(t2.grad(a), Matrix::identity(3)));
}

TEST_CASE("backward rejects non-scalar root") {
    Tape t;
    Value x = t.leaf(Matrix(2, 2), true);
    CHECK_THROWS_AS(t.backward(mul(x, x)), ContractError);
}

TEST_CASE("composed graph gradient vs finite differences") {
    const Matrix x0 = random_matrix(4, 3, 15);
    const Matrix w0 = random_matrix(3, 3, 16);
    const double err = grad_check(
        [&](Tape& t, Value x) {
            Value h = relu(matmul(x, t.constant(w0)));
            return sum_all(mul(row_normalize(h, 1e-9), h));
        },
        x0);
    CHECK(err < 1e-6);
}

TEST_CASE("gradients accumulate across fan-out") {
    Tape t;
    Value x = t.leaf(Matrix::from_rows({{2.0}}), true);
    // L = x*x + 3x -> dL/dx = 2x + 3 = 7.
    Value loss = add(mul(x, x), scale(x, 3.0));
    t.backward(loss);
    CHECK(t.grad(x)(0, 0) == doctest::Approx(7.0).epsilon(1e-15));
}

TEST_CASE("power_series_trace partial sums") {
    Tape t;
    Value zero = t.leaf(Matrix(3, 3), false);
    CHECK(power_series_trace(zero, 4, 0.5).val().scalar() == 0.0);

    Tape t2;
    Value one = t2.leaf(Matrix::from_rows({{1.0}}), false);
    // 0.5 - 0.125 + 0.0416667 - 0.015625
    CHECK(power_series_trace(one, 4, 0.5).val().scalar() ==
          doctest::Approx(0.4010416666666667).epsilon(1e-12));

    Tape t3;
    Value one3 = t3.leaf(Matrix::from_rows({{1.0}}), false);
    CHECK(power_series_trace(one3, 64, 0.5).val().scalar() ==
          doctest::Approx(std::log(1.5)).epsilon(1e-9));
}

TEST_CASE("power_series_trace rejects non-square") {
    Tape t;
    Value a = t.leaf(Matrix(2, 3), false);
    CHECK_THROWS_AS(power_series_trace(a, 4, 0.5), DimensionError);
}

TEST_CASE("power_series_trace converges to log det against eigen oracle") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        compmod::Rng shape_rng(seed * 7 + 1);
        const std::size_t n = 2 + shape_rng.bounded(7);  // n, d <= 8
        const std::size_t d = 2 + shape_rng.bounded(7);
        Matrix z = random_matrix(n, d, 100 + seed);
        Matrix gram = matmul_nt(z, z);

        // Scale so lambda * ||G||_2 <= 0.5 with lambda = 1.
        Eigen::MatrixXd eg(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) eg(i, j) = gram(i, j);
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(eg);
        const double top = eig.eigenvalues().maxCoeff();
        const double scale_factor = 0.5 / std::max(top, 1e-12);
        gram = scale(gram, scale_factor);

        double logdet = 0.0;
        for (int i = 0; i < eig.eigenvalues().size(); ++i) {
            logdet += std::log1p(scale_factor * eig.eigenvalues()[i]);
        }

        Tape t;
        Value g = t.leaf(gram, false);
        const double series = power_series_trace(g, 32, 1.0).val().scalar();
        CHECK(std::abs(series - logdet) < 1e-6);
    }
}

TEST_CASE("power_series_trace gradient vs finite differences") {
    const Matrix z0 = random_matrix(4, 3, 17, 0.4);
    const double err = grad_check(
        [](Tape&, Value z) {
            return power_series_trace(matmul(z, transpose(z)), 4, 0.3);
        },
        z0);
    CHECK(err < 1e-6);
}

TEST_CASE("forward ops are pure: same input, same bits") {
    const Matrix x0 = random_matrix(5, 4, 18);
    const Matrix w0 = random_matrix(4, 4, 19);
    auto run = [&]() {
        Tape t;
        Value x = t.leaf(x0, true);
        Value h = row_normalize(relu(matmul(x, t.constant(w0))), 1e-9);
        Value loss = mean_all(mul(h, h));
        t.backward(loss);
        return std::pair<Matrix, Matrix>(loss.val(), t.grad(x));
    };
    const auto [l1, g1] = run();
    const auto [l2, g2] = run();
    CHECK(bitwise_equal(l1, l2));
    CHECK(bitwise_equal(g1, g2));
}

TEST_CASE("grad_check quadratic is exact to roundoff") {
    const Matrix x0 = Matrix::from_rows({{1, 2}});
    const double err =
        grad_check([](Tape&, Value x) { return sum_all(mul(x, x)); }, x0);
    CHECK(err < 1e-8);
}

TEST_CASE("grad_check rejects eps outside [1e-7, 1e-4]") {
    const Matrix x0 = Matrix::from_rows({{1.0}});
    auto f = [](Tape&, Value x) { return sum_all(x); };
    CHECK_THROWS_AS(grad_check(f, x0, 1e-2), ContractError);
    CHECK_THROWS_AS(grad_check(f, x0, 1e-8), ContractError);
}

TEST_CASE("grad_check names the non-finite coordinate") {
    // Coordinate 1 sits so close to zero that the downward probe crosses into
    // log's invalid domain and the loss turns NaN.
    const Matrix x0 = Matrix::from_rows({{1.0, 1e-6}});
    auto f = [](Tape&, Value x) { return sum_all(log_elem(x)); };
    CHECK_THROWS_WITH_AS(grad_check(f, x0), doctest::Contains("coordinate 1"),
                         NumericError);
}

TEST_CASE("slice and concat round-trip with gradients") {
    const Matrix x0 = random_matrix(6, 3, 20);
    const double err = grad_check(
        [](Tape&, Value x) {
            Value top = slice_rows(x, 0, 3);
            Value bottom = slice_rows(x, 3, 6);
            return sum_all(mul(concat_rows(bottom, top), concat_rows(bottom, top)));
        },
        x0);
    CHECK(err < 1e-8);

    const double err2 = grad_check(
        [](Tape&, Value x) {
            Value c = concat_cols(slice_rows(x, 0, 3), slice_rows(x, 3, 6));
            return mean_all(mul(c, c));
        },
        x0);
    CHECK(err2 < 1e-8);
}

TEST_CASE("broadcast and reduction ops match finite differences") {
    const Matrix x0 = random_matrix(5, 4, 21);
    const double err = grad_check(
        [](Tape&, Value x) {
            Value centered = sub_row(x, col_mean(x));
            Value var = col_mean(mul(centered, centered));
            Value inv_std = recip(sqrt_elem(add_scalar(var, 1e-6)));
            Value standardized = mul_row(centered, inv_std);
            return mean_all(mul(standardized, standardized));
        },
        x0);
    CHECK(err < 1e-6);
}

TEST_CASE("masked logsumexp matches dense evaluation and gradients") {
    const Matrix x0 = random_matrix(4, 4, 22);
    Matrix mask(4, 4);
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) mask(i, j) = i == j ? 0.0 : 1.0;
    }
    Tape t;
    Value x = t.leaf(x0, false);
    const Matrix lse = masked_row_logsumexp(x, mask).val();
    for (std::size_t i = 0; i < 4; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 4; ++j) {
            if (i != j) s += std::exp(x0(i, j));
        }
        CHECK(lse(i, 0) == doctest::Approx(std::log(s)).epsilon(1e-12));
    }
    const double err = grad_check(
        [&mask](Tape&, Value v) { return sum_all(masked_row_logsumexp(v, mask)); }, x0);
    CHECK(err < 1e-6);
}
