#pragma once

#include <cstddef>
#include <functional>

#include "compmod/matrix.hpp"
#include "compmod/tape.hpp"

namespace compmod {

// Differentiable operations. Every op is pure: same inputs, same bits out.
// Backward rules accumulate into parents (fan-out adds).

Value add(Value a, Value b);
Value sub(Value a, Value b);
Value mul(Value a, Value b);  // elementwise
Value scale(Value a, double c);
Value add_scalar(Value a, double c);
Value matmul(Value a, Value b);
Value transpose(Value a);
Value relu(Value a);
Value sqrt_elem(Value a);   // entries must be > 0
Value recip(Value a);       // entries must be != 0
Value log_elem(Value a);    // NaN/-inf pass through for non-positive entries

// Each row divided by max(||row||_2, eps); rows shorter than eps are scaled
// by 1/eps, which keeps the zero row at zero and the map differentiable.
Value row_normalize(Value z, double eps = 1e-12);

Value row_sum(Value a);    // n x d -> n x 1
Value col_sum(Value a);    // n x d -> 1 x d
Value col_mean(Value a);   // n x d -> 1 x d
Value sum_all(Value a);    // -> 1 x 1
Value mean_all(Value a);   // -> 1 x 1
Value trace(Value a);      // square -> 1 x 1

// Broadcast a 1 x d row vector across the rows of x.
Value add_row(Value x, Value r);
Value sub_row(Value x, Value r);
Value mul_row(Value x, Value r);

Value concat_rows(Value a, Value b);  // (na+nb) x d
Value concat_cols(Value a, Value b);  // n x (da+db)
Value slice_rows(Value a, std::size_t begin, std::size_t end);  // rows [begin, end)

Value add_const(Value a, const Matrix& c);
Value mul_const(Value a, const Matrix& c);

// Row-wise log(sum(exp .)) over entries where mask != 0, computed with the
// max-shift. Every row needs at least one active entry.
Value masked_row_logsumexp(Value a, const Matrix& mask);

// Copies the payload onto the tape as a constant: no gradient flows back.
Value detach(Value a);

// Tr( sum_{k=1}^m ((-1)^{k+1}/k) (lambda*A)^k ) for square A, built from
// iterated matmuls so the whole series is differentiable. Truncation of the
// log-det series; convergence is the caller's concern, the partial sum is
// evaluated literally.
Value power_series_trace(Value a, std::size_t m, double lambda);

// Central-difference gradient check.
// build: constructs the scalar loss on the given tape from a leaf holding x.
// Returns max over coordinates of |g_ad - g_fd| / max(1, |g_ad|, |g_fd|).
// Throws NumericError naming the coordinate if f is non-finite at a
// perturbed point.
double grad_check(const std::function<Value(Tape&, Value)>& build, const Matrix& x0,
                  double eps = 1e-5);

}  // namespace compmod
