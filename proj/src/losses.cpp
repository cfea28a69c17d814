#include "compmod/losses.hpp"

#include <algorithm>
#include <cmath>

#include "compmod/errors.hpp"

namespace compmod {

std::string to_string(BaseObjective b) {
    switch (b) {
        case BaseObjective::kSimclr: return "simclr";
        case BaseObjective::kByol: return "byol";
        case BaseObjective::kBarlowTwins: return "barlow_twins";
    }
    return "simclr";
}

BaseObjective base_objective_from_string(const std::string& s) {
    if (s == "simclr") return BaseObjective::kSimclr;
    if (s == "byol") return BaseObjective::kByol;
    if (s == "barlow_twins") return BaseObjective::kBarlowTwins;
    throw ConfigError("unknown base objective '" + s +
                      "' (expected simclr|byol|barlow_twins)");
}

void LossConfig::validate() const {
    auto bad = [](const std::string& field) {
        throw ConfigError("LossConfig: invalid value for " + field);
    };
    if (!(tau > 0.0) || !std::isfinite(tau)) bad("tau");
    if (lambda1 < 0.0 || !std::isfinite(lambda1)) bad("lambda1");
    if (lambda2 < 0.0 || !std::isfinite(lambda2)) bad("lambda2");
    if (mu && (!(*mu > 0.0) || !std::isfinite(*mu))) bad("mu");
    if (lambda_code && (!(*lambda_code > 0.0) || !std::isfinite(*lambda_code))) {
        bad("lambda_code");
    }
    if (!(eps_sq > 0.0)) bad("eps_sq");
    if (taylor_m < 1) bad("taylor_m");
    if (bt_offdiag < 0.0 || !std::isfinite(bt_offdiag)) bad("bt_offdiag");
    if (counterfactual_weight < 0.0 || !std::isfinite(counterfactual_weight)) {
        bad("counterfactual_weight");
    }
}

double LossConfig::resolve_mu(std::size_t n, std::size_t d) const {
    if (mu) return *mu;
    return 0.5 * static_cast<double>(n + d);
}

double LossConfig::resolve_lambda(std::size_t n, std::size_t d) const {
    if (lambda_code) return *lambda_code;
    return static_cast<double>(d) / (static_cast<double>(n) * eps_sq);
}

Value info_nce(Value z1, Value z2, double tau) {
    check_same_shape(z1.val(), z2.val(), "info_nce");
    const std::size_t n = z1.rows();
    if (n < 2) throw ContractError("info_nce: need n >= 2 samples, no negatives exist");
    if (!(tau > 0.0)) throw ContractError("info_nce: tau must be > 0");

    Value s = concat_rows(row_normalize(z1), row_normalize(z2));  // 2n x d
    Value sims = scale(matmul(s, transpose(s)), 1.0 / tau);       // 2n x 2n

    const std::size_t n2 = 2 * n;
    // Anchor i excludes only itself from the denominator: the positive plus
    // the 2n-2 negatives remain.
    Matrix offdiag(n2, n2);
    for (std::size_t i = 0; i < n2; ++i) {
        for (std::size_t j = 0; j < n2; ++j) offdiag(i, j) = i == j ? 0.0 : 1.0;
    }
    // Selector of each anchor's positive partner.
    Matrix pos_sel(n2, n2);
    for (std::size_t i = 0; i < n; ++i) {
        pos_sel(i, n + i) = 1.0;
        pos_sel(n + i, i) = 1.0;
    }

    Value lse = masked_row_logsumexp(sims, offdiag);     // 2n x 1
    Value pos = row_sum(mul_const(sims, pos_sel));       // 2n x 1
    return mean_all(sub(lse, pos));
}

Value comp_loss(Value zhat, const LossConfig& cfg) {
    const Matrix& z = zhat.val();
    if (z.empty()) throw ContractError("comp_loss: empty embedding matrix");
    const std::size_t n = z.rows(), d = z.cols();
    Value zn = row_normalize(zhat);
    Value gram = matmul(zn, transpose(zn));
    Value pst = power_series_trace(gram, cfg.taylor_m, cfg.resolve_lambda(n, d));
    return scale(pst, -cfg.resolve_mu(n, d));
}

Value mcr_loss(Value z1, Value z2, Value zhat, const LossConfig& cfg) {
    check_same_shape(z1.val(), z2.val(), "mcr_loss");
    check_same_shape(z1.val(), zhat.val(), "mcr_loss");
    const std::size_t n = z1.rows(), d = z1.cols();
    const double lambda = cfg.resolve_lambda(n, d);
    Value zh = cfg.mcr_through_zhat ? zhat : detach(zhat);
    Value zhn = row_normalize(zh);
    Value t1 = power_series_trace(matmul(zhn, transpose(row_normalize(z1))),
                                  cfg.taylor_m, lambda);
    Value t2 = power_series_trace(matmul(zhn, transpose(row_normalize(z2))),
                                  cfg.taylor_m, lambda);
    return scale(add(t1, t2), -cfg.resolve_mu(n, d));
}

Value barlow_twins_loss(Value z1, Value z2, double bt_offdiag) {
    check_same_shape(z1.val(), z2.val(), "barlow_twins_loss");
    const std::size_t n = z1.rows(), d = z1.cols();
    if (n < 2) throw ContractError("barlow_twins_loss: need n >= 2 for standardization");
    constexpr double kVarEps = 1e-12;

    auto standardize = [&](Value z) {
        Value centered = sub_row(z, col_mean(z));
        Value var = col_mean(mul(centered, centered));
        Value inv_std = recip(sqrt_elem(add_scalar(var, kVarEps)));
        return mul_row(centered, inv_std);
    };

    Value c = scale(matmul(transpose(standardize(z1)), standardize(z2)),
                    1.0 / static_cast<double>(n));  // d x d

    Matrix diag_sel(d, d), offdiag_sel(d, d);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            diag_sel(i, j) = i == j ? 1.0 : 0.0;
            offdiag_sel(i, j) = i == j ? 0.0 : 1.0;
        }
    }
    Value dev = add_const(c, scale(Matrix::identity(d), -1.0));  // C - I
    Value on_diag = sum_all(mul(mul_const(dev, diag_sel), mul_const(dev, diag_sel)));
    Value off = sum_all(mul(mul_const(c, offdiag_sel), mul_const(c, offdiag_sel)));
    return add(on_diag, scale(off, bt_offdiag));
}

Value byol_loss(Value pred, const Matrix& target) {
    check_same_shape(pred.val(), target, "byol_loss");
    Tape& t = *pred.tape;
    Value pn = row_normalize(pred);
    Value tn = row_normalize(t.constant(target));
    Value cos = row_sum(mul(pn, tn));  // n x 1
    return add_scalar(scale(mean_all(cos), -2.0), 2.0);
}

Value counterfactual_loss(Value z1, Value z2, const LossConfig& cfg) {
    check_same_shape(z1.val(), z2.val(), "counterfactual_loss");
    const std::size_t n = z1.rows(), d = z1.cols();
    const double mu = cfg.resolve_mu(n, d);
    const double lambda = cfg.resolve_lambda(n, d);

    // Distance on raw embeddings per the objective; the entropy proxy uses
    // row-normalized views like the other coding-length losses.
    Value diff = sub(z1, z2);
    Value dist = scale(sum_all(mul(diff, diff)), 1.0 / static_cast<double>(n));

    auto entropy = [&](Value z) {
        Value zn = row_normalize(z);
        return scale(power_series_trace(matmul(zn, transpose(zn)), cfg.taylor_m, lambda),
                     mu);
    };
    Value h1 = entropy(z1);
    Value h2 = entropy(z2);
    Value h_min = h1.val().scalar() <= h2.val().scalar() ? h1 : h2;
    return sub(dist, h_min);
}

double coding_entropy(const Matrix& z, const LossConfig& cfg) {
    if (z.empty()) return 0.0;
    const std::size_t n = z.rows(), d = z.cols();
    const double mu = cfg.resolve_mu(n, d);
    const double lambda = cfg.resolve_lambda(n, d);

    Matrix zn = z;
    for (std::size_t i = 0; i < n; ++i) {
        const double nrm = std::max(row_norm(z, i), 1e-12);
        for (std::size_t j = 0; j < d; ++j) zn(i, j) = z(i, j) / nrm;
    }
    const Matrix gram = matmul_nt(zn, zn);
    Matrix b = scale(gram, lambda);
    Matrix power = b;
    double total = trace(b);
    for (std::size_t k = 2; k <= cfg.taylor_m; ++k) {
        power = matmul(power, b);
        const double coeff = (k % 2 == 1 ? 1.0 : -1.0) / static_cast<double>(k);
        total += coeff * trace(power);
    }
    return mu * total;
}

}  // namespace compmod
