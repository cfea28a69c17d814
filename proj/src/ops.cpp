#include "compmod/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "compmod/errors.hpp"

namespace compmod {

namespace {

Tape& same_tape(Value a, Value b, const char* op) {
    if (a.tape != b.tape) {
        throw ContractError(std::string(op) + ": operands live on different tapes");
    }
    return *a.tape;
}

}  // namespace

Value add(Value a, Value b) {
    Tape& t = same_tape(a, b, "add");
    Matrix out = compmod::add(a.val(), b.val());
    const int ia = a.id, ib = b.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ia, ib}, [ia, ib, self](Tape& tp) {
        const Matrix& g = tp.raw_grad(self);
        tp.accumulate(ia, g);
        tp.accumulate(ib, g);
    });
}

Value sub(Value a, Value b) {
    Tape& t = same_tape(a, b, "sub");
    Matrix out = compmod::sub(a.val(), b.val());
    const int ia = a.id, ib = b.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ia, ib}, [ia, ib, self](Tape& tp) {
        const Matrix& g = tp.raw_grad(self);
        tp.accumulate(ia, g);
        tp.accumulate(ib, scale(g, -1.0));
    });
}

Value mul(Value a, Value b) {
    Tape& t = same_tape(a, b, "mul");
    Matrix out = hadamard(a.val(), b.val());
    const int ia = a.id, ib = b.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ia, ib}, [ia, ib, self](Tape& tp) {
        const Matrix& g = tp.raw_grad(self);
        tp.accumulate(ia, hadamard(g, tp.value(ib)));
        tp.accumulate(ib, hadamard(g, tp.value(ia)));
    });
}

Value scale(Value a, double c) {
    Tape& t = *a.tape;
    Matrix out = compmod::scale(a.val(), c);
    const int ia = a.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ia}, [ia, c, self](Tape& tp) {
        tp.accumulate(ia, compmod::scale(tp.raw_grad(self), c));
    });
}

Value add_scalar(Value a, double c) {
    Tape& t = *a.tape;
    Matrix out = a.val();
    for (double& v : out.vec()) v += c;
    const int ia = a.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ia},
                       [ia, self](Tape& tp) { tp.accumulate(ia, tp.raw_grad(self)); });
}

Value matmul(Value a, Value b) {
    Tape& t = same_tape(a, b, "matmul");
    Matrix out = compmod::matmul(a.val(), b.val());
    const int ia = a.id, ib = b.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ia, ib}, [ia, ib, self](Tape& tp) {
        const Matrix& g = tp.raw_grad(self);
        tp.accumulate(ia, matmul_nt(g, tp.value(ib)));  // g * b^T
        tp.accumulate(ib, matmul_tn(tp.value(ia), g));  // a^T * g
    });
}

Value transpose(Value a) {
    Tape& t = *a.tape;
    Matrix out = compmod::transpose(a.val());
    const int ia = a.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ia}, [ia, self](Tape& tp) {
        tp.accumulate(ia, compmod::transpose(tp.raw_grad(self)));
    });
}

Value relu(Value a) {
    Tape& t = *a.tape;
    Matrix out = a.val();
    for (double& v : out.vec()) v = v > 0.0 ? v : 0.0;
    const int ia = a.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ia}, [ia, self](Tape& tp) {
        const Matrix& g = tp.raw_grad(self);
        const Matrix& x = tp.value(ia);
        Matrix dx(g.rows(), g.cols());
        for (std::size_t i = 0; i < dx.size(); ++i) {
            dx.vec()[i] = x.vec()[i] > 0.0 ? g.vec()[i] : 0.0;
        }
        tp.accumulate(ia, dx);
    });
}

Value sqrt_elem(Value a) {
    Tape& t = *a.tape;
    Matrix out = a.val();
    for (double& v : out.vec()) {
        if (v <= 0.0) throw NumericError("sqrt_elem: non-positive entry");
        v = std::sqrt(v);
    }
    const int ia = a.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ia}, [ia, self](Tape& tp) {
        const Matrix& g = tp.raw_grad(self);
        const Matrix& y = tp.value(self);
        Matrix dx(g.rows(), g.cols());
        for (std::size_t i = 0; i < dx.size(); ++i) {
            dx.vec()[i] = 0.5 * g.vec()[i] / y.vec()[i];
        }
        tp.accumulate(ia, dx);
    });
}

Value recip(Value a) {
    Tape& t = *a.tape;
    Matrix out = a.val();
    for (double& v : out.vec()) {
        if (v == 0.0) throw NumericError("recip: zero entry");
        v = 1.0 / v;
    }
    const int ia = a.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ia}, [ia, self](Tape& tp) {
        const Matrix& g = tp.raw_grad(self);
        const Matrix& y = tp.value(self);
        Matrix dx(g.rows(), g.cols());
        for (std::size_t i = 0; i < dx.size(); ++i) {
            dx.vec()[i] = -g.vec()[i] * y.vec()[i] * y.vec()[i];
        }
        tp.accumulate(ia, dx);
    });
}

Value log_elem(Value a) {
    Tape& t = *a.tape;
    Matrix out = a.val();
    for (double& v : out.vec()) v = std::log(v);
    const int ia = a.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ia}, [ia, self](Tape& tp) {
        const Matrix& g = tp.raw_grad(self);
        const Matrix& x = tp.value(ia);
        Matrix dx(g.rows(), g.cols());
        for (std::size_t i = 0; i < dx.size(); ++i) {
            dx.vec()[i] = g.vec()[i] / x.vec()[i];
        }
        tp.accumulate(ia, dx);
    });
}

Value row_normalize(Value z, double eps) {
    if (eps <= 0.0) throw ContractError("row_normalize: eps must be > 0");
    Tape& t = *z.tape;
    const Matrix& x = z.val();
    Matrix out(x.rows(), x.cols());
    std::vector<double> denom(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        denom[i] = std::max(row_norm(x, i), eps);
        for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(i, j) / denom[i];
    }
    const int iz = z.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {iz}, [iz, eps, self](Tape& tp) {
        const Matrix& g = tp.raw_grad(self);
        const Matrix& x = tp.value(iz);
        const Matrix& y = tp.value(self);
        Matrix dx(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            const double nrm = row_norm(x, i);
            if (nrm >= eps) {
                // d/dx (x/||x||) = (I - y y^T)/||x||
                double gy = 0.0;
                for (std::size_t j = 0; j < x.cols(); ++j) gy += g(i, j) * y(i, j);
                for (std::size_t j = 0; j < x.cols(); ++j) {
                    dx(i, j) = (g(i, j) - gy * y(i, j)) / nrm;
                }
            } else {
                for (std::size_t j = 0; j < x.cols(); ++j) dx(i, j) = g(i, j) / eps;
            }
        }
        tp.accumulate(iz, dx);
    });
}

Value row_sum(Value a) {
    Tape& t = *a.tape;
    const Matrix& x = a.val();
    Matrix out(x.rows(), 1);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) s += x(i, j);
        out(i, 0) = s;
    }
    const int ia = a.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ia}, [ia, self](Tape& tp) {
        const Matrix& g = tp.raw_grad(self);
        const Matrix& x = tp.value(ia);
        Matrix dx(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < x.cols(); ++j) dx(i, j) = g(i, 0);
        }
        tp.accumulate(ia, dx);
    });
}

Value col_sum(Value a) {
    Tape& t = *a.tape;
    const Matrix& x = a.val();
    Matrix out(1, x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) out(0, j) += x(i, j);
    }
    const int ia = a.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ia}, [ia, self](Tape& tp) {
        const Matrix& g = tp.raw_grad(self);
        const Matrix& x = tp.value(ia);
        Matrix dx(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < x.cols(); ++j) dx(i, j) = g(0, j);
        }
        tp.accumulate(ia, dx);
    });
}

Value col_mean(Value a) { return scale(col_sum(a), 1.0 / static_cast<double>(a.rows())); }

Value sum_all(Value a) {
    Tape& t = *a.tape;
    const Matrix& x = a.val();
    Matrix out(1, 1);
    double s = 0.0;
    for (double v : x.vec()) s += v;
    out(0, 0) = s;
    const int ia = a.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ia}, [ia, self](Tape& tp) {
        const double g = tp.raw_grad(self)(0, 0);
        const Matrix& x = tp.value(ia);
        Matrix dx(x.rows(), x.cols());
        for (double& v : dx.vec()) v = g;
        tp.accumulate(ia, dx);
    });
}

Value mean_all(Value a) {
    return scale(sum_all(a), 1.0 / static_cast<double>(a.val().size()));
}

Value trace(Value a) {
    Tape& t = *a.tape;
    check_square(a.val(), "trace");
    Matrix out(1, 1);
    out(0, 0) = compmod::trace(a.val());
    const int ia = a.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ia}, [ia, self](Tape& tp) {
        const double g = tp.raw_grad(self)(0, 0);
        const std::size_t n = tp.value(ia).rows();
        Matrix dx(n, n);
        for (std::size_t i = 0; i < n; ++i) dx(i, i) = g;
        tp.accumulate(ia, dx);
    });
}

namespace {

void check_row_broadcast(const Matrix& x, const Matrix& r, const char* op) {
    if (r.rows() != 1 || r.cols() != x.cols()) {
        throw DimensionError(std::string(op) + ": cannot broadcast " + r.shape_str() +
                             " across " + x.shape_str());
    }
}

}  // namespace

Value add_row(Value x, Value r) {
    Tape& t = same_tape(x, r, "add_row");
    check_row_broadcast(x.val(), r.val(), "add_row");
    Matrix out = x.val();
    for (std::size_t i = 0; i < out.rows(); ++i) {
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += r.val()(0, j);
    }
    const int ix = x.id, ir = r.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ix, ir}, [ix, ir, self](Tape& tp) {
        const Matrix& g = tp.raw_grad(self);
        tp.accumulate(ix, g);
        Matrix dr(1, g.cols());
        for (std::size_t i = 0; i < g.rows(); ++i) {
            for (std::size_t j = 0; j < g.cols(); ++j) dr(0, j) += g(i, j);
        }
        tp.accumulate(ir, dr);
    });
}

Value sub_row(Value x, Value r) {
    Tape& t = same_tape(x, r, "sub_row");
    check_row_broadcast(x.val(), r.val(), "sub_row");
    Matrix out = x.val();
    for (std::size_t i = 0; i < out.rows(); ++i) {
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) -= r.val()(0, j);
    }
    const int ix = x.id, ir = r.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ix, ir}, [ix, ir, self](Tape& tp) {
        const Matrix& g = tp.raw_grad(self);
        tp.accumulate(ix, g);
        Matrix dr(1, g.cols());
        for (std::size_t i = 0; i < g.rows(); ++i) {
            for (std::size_t j = 0; j < g.cols(); ++j) dr(0, j) -= g(i, j);
        }
        tp.accumulate(ir, dr);
    });
}

Value mul_row(Value x, Value r) {
    Tape& t = same_tape(x, r, "mul_row");
    check_row_broadcast(x.val(), r.val(), "mul_row");
    Matrix out = x.val();
    for (std::size_t i = 0; i < out.rows(); ++i) {
        for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= r.val()(0, j);
    }
    const int ix = x.id, ir = r.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ix, ir}, [ix, ir, self](Tape& tp) {
        const Matrix& g = tp.raw_grad(self);
        const Matrix& xv = tp.value(ix);
        const Matrix& rv = tp.value(ir);
        Matrix dx(xv.rows(), xv.cols());
        Matrix dr(1, xv.cols());
        for (std::size_t i = 0; i < xv.rows(); ++i) {
            for (std::size_t j = 0; j < xv.cols(); ++j) {
                dx(i, j) = g(i, j) * rv(0, j);
                dr(0, j) += g(i, j) * xv(i, j);
            }
        }
        tp.accumulate(ix, dx);
        tp.accumulate(ir, dr);
    });
}

Value concat_rows(Value a, Value b) {
    Tape& t = same_tape(a, b, "concat_rows");
    const Matrix& xa = a.val();
    const Matrix& xb = b.val();
    if (xa.cols() != xb.cols()) {
        throw DimensionError("concat_rows: column counts differ, " + xa.shape_str() +
                             " vs " + xb.shape_str());
    }
    Matrix out(xa.rows() + xb.rows(), xa.cols());
    std::copy(xa.vec().begin(), xa.vec().end(), out.vec().begin());
    std::copy(xb.vec().begin(), xb.vec().end(), out.vec().begin() + xa.size());
    const int ia = a.id, ib = b.id, self = static_cast<int>(t.num_nodes());
    const std::size_t na = xa.rows();
    return t.make_node(std::move(out), {ia, ib}, [ia, ib, na, self](Tape& tp) {
        const Matrix& g = tp.raw_grad(self);
        Matrix ga(na, g.cols());
        Matrix gb(g.rows() - na, g.cols());
        std::copy(g.vec().begin(), g.vec().begin() + ga.size(), ga.vec().begin());
        std::copy(g.vec().begin() + ga.size(), g.vec().end(), gb.vec().begin());
        tp.accumulate(ia, ga);
        tp.accumulate(ib, gb);
    });
}

Value concat_cols(Value a, Value b) {
    Tape& t = same_tape(a, b, "concat_cols");
    const Matrix& xa = a.val();
    const Matrix& xb = b.val();
    if (xa.rows() != xb.rows()) {
        throw DimensionError("concat_cols: row counts differ, " + xa.shape_str() +
                             " vs " + xb.shape_str());
    }
    Matrix out(xa.rows(), xa.cols() + xb.cols());
    for (std::size_t i = 0; i < xa.rows(); ++i) {
        for (std::size_t j = 0; j < xa.cols(); ++j) out(i, j) = xa(i, j);
        for (std::size_t j = 0; j < xb.cols(); ++j) out(i, xa.cols() + j) = xb(i, j);
    }
    const int ia = a.id, ib = b.id, self = static_cast<int>(t.num_nodes());
    const std::size_t ca = xa.cols();
    return t.make_node(std::move(out), {ia, ib}, [ia, ib, ca, self](Tape& tp) {
        const Matrix& g = tp.raw_grad(self);
        Matrix ga(g.rows(), ca);
        Matrix gb(g.rows(), g.cols() - ca);
        for (std::size_t i = 0; i < g.rows(); ++i) {
            for (std::size_t j = 0; j < ca; ++j) ga(i, j) = g(i, j);
            for (std::size_t j = ca; j < g.cols(); ++j) gb(i, j - ca) = g(i, j);
        }
        tp.accumulate(ia, ga);
        tp.accumulate(ib, gb);
    });
}

Value slice_rows(Value a, std::size_t begin, std::size_t end) {
    Tape& t = *a.tape;
    const Matrix& x = a.val();
    if (begin >= end || end > x.rows()) {
        throw DimensionError("slice_rows: bad range [" + std::to_string(begin) + ", " +
                             std::to_string(end) + ") for " + x.shape_str());
    }
    Matrix out(end - begin, x.cols());
    std::copy(x.vec().begin() + static_cast<std::ptrdiff_t>(begin * x.cols()),
              x.vec().begin() + static_cast<std::ptrdiff_t>(end * x.cols()),
              out.vec().begin());
    const int ia = a.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ia}, [ia, begin, self](Tape& tp) {
        const Matrix& g = tp.raw_grad(self);
        const Matrix& x = tp.value(ia);
        Matrix dx(x.rows(), x.cols());
        std::copy(g.vec().begin(), g.vec().end(),
                  dx.vec().begin() + static_cast<std::ptrdiff_t>(begin * x.cols()));
        tp.accumulate(ia, dx);
    });
}

Value add_const(Value a, const Matrix& c) {
    Tape& t = *a.tape;
    Matrix out = compmod::add(a.val(), c);
    const int ia = a.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ia},
                       [ia, self](Tape& tp) { tp.accumulate(ia, tp.raw_grad(self)); });
}

Value mul_const(Value a, const Matrix& c) {
    Tape& t = *a.tape;
    Matrix out = hadamard(a.val(), c);
    const int ia = a.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ia}, [ia, c, self](Tape& tp) {
        tp.accumulate(ia, hadamard(tp.raw_grad(self), c));
    });
}

Value masked_row_logsumexp(Value a, const Matrix& mask) {
    Tape& t = *a.tape;
    const Matrix& x = a.val();
    check_same_shape(x, mask, "masked_row_logsumexp");
    Matrix out(x.rows(), 1);
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < x.cols(); ++j) {
            if (mask(i, j) != 0.0) mx = std::max(mx, x(i, j));
        }
        if (!std::isfinite(mx)) {
            throw ContractError("masked_row_logsumexp: row " + std::to_string(i) +
                                " has no active entries");
        }
        double s = 0.0;
        for (std::size_t j = 0; j < x.cols(); ++j) {
            if (mask(i, j) != 0.0) s += std::exp(x(i, j) - mx);
        }
        out(i, 0) = mx + std::log(s);
    }
    const int ia = a.id, self = static_cast<int>(t.num_nodes());
    return t.make_node(std::move(out), {ia}, [ia, mask, self](Tape& tp) {
        const Matrix& g = tp.raw_grad(self);
        const Matrix& x = tp.value(ia);
        const Matrix& lse = tp.value(self);
        Matrix dx(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i) {
            for (std::size_t j = 0; j < x.cols(); ++j) {
                if (mask(i, j) != 0.0) {
                    dx(i, j) = g(i, 0) * std::exp(x(i, j) - lse(i, 0));
                }
            }
        }
        tp.accumulate(ia, dx);
    });
}

Value detach(Value a) { return a.tape->constant(a.val()); }

Value power_series_trace(Value a, std::size_t m, double lambda) {
    check_square(a.val(), "power_series_trace");
    if (m < 1) throw ContractError("power_series_trace: order m must be >= 1");
    if (lambda <= 0.0) throw ContractError("power_series_trace: lambda must be > 0");
    Value b = scale(a, lambda);
    Value power = b;
    Value total = trace(b);
    for (std::size_t k = 2; k <= m; ++k) {
        power = matmul(power, b);
        const double coeff = (k % 2 == 1 ? 1.0 : -1.0) / static_cast<double>(k);
        total = add(total, scale(trace(power), coeff));
    }
    return total;
}

double grad_check(const std::function<Value(Tape&, Value)>& build, const Matrix& x0,
                  double eps) {
    if (eps < 1e-7 || eps > 1e-4) {
        throw ContractError("grad_check: eps must lie in [1e-7, 1e-4]");
    }
    Tape t;
    Value x = t.leaf(x0, true);
    Value loss = build(t, x);
    t.backward(loss);
    Matrix g_ad = t.grad(x);

    auto eval = [&](const Matrix& xp, std::size_t coord) {
        Tape ft;
        Value fx = ft.leaf(xp, false);
        const double v = build(ft, fx).val().scalar();
        if (!std::isfinite(v)) {
            throw NumericError("grad_check: non-finite value at perturbed coordinate " +
                               std::to_string(coord));
        }
        return v;
    };

    double worst = 0.0;
    for (std::size_t i = 0; i < x0.size(); ++i) {
        Matrix xp = x0;
        xp.vec()[i] += eps;
        const double fp = eval(xp, i);
        xp.vec()[i] = x0.vec()[i] - eps;
        const double fm = eval(xp, i);
        const double g_fd = (fp - fm) / (2.0 * eps);
        const double g = g_ad.vec()[i];
        const double rel =
            std::abs(g - g_fd) / std::max({1.0, std::abs(g), std::abs(g_fd)});
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace compmod
