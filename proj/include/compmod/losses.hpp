#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "compmod/ops.hpp"

namespace compmod {

enum class BaseObjective { kSimclr, kByol, kBarlowTwins };

std::string to_string(BaseObjective b);
BaseObjective base_objective_from_string(const std::string& s);

// Scalar hyperparameters of every loss. mu/lambda_code left unset mean
// "derive from the batch": mu = (n+d)/2 and lambda_code = d/(n*eps_sq) with
// eps_sq = 0.5, the conventional coding-length coefficients.
struct LossConfig {
    double tau = 0.5;
    double lambda1 = 0.1;
    double lambda2 = 0.01;
    std::optional<double> mu;           // unset -> (n+d)/2
    std::optional<double> lambda_code;  // unset -> d/(n*eps_sq)
    double eps_sq = 0.5;
    std::size_t taylor_m = 4;
    double bt_offdiag = 0.005;
    BaseObjective base = BaseObjective::kSimclr;
    bool mcr_through_zhat = false;
    double counterfactual_weight = 0.0;

    void validate() const;  // throws ConfigError naming the bad field
    double resolve_mu(std::size_t n, std::size_t d) const;
    double resolve_lambda(std::size_t n, std::size_t d) const;
};

// NT-Xent: symmetrized mean over all 2n anchors; negatives are everything in
// Z1 u Z2 except the anchor and its positive. Rows are unit-normalized
// internally, so inputs need not be.
Value info_nce(Value z1, Value z2, double tau);

// -mu * Tr( sum_k ((-1)^{k+1}/k) (lambda * Zh Zh^T)^k ) on row-normalized Zh.
// Minimizing it pushes the coding-length entropy proxy up.
Value comp_loss(Value zhat, const LossConfig& cfg);

// -mu * sum_{t=1,2} Tr( sum_k ((-1)^{k+1}/k) (lambda * Zh Zt^T)^k ).
// When cfg.mcr_through_zhat is false, zhat enters as a constant and no
// gradient reaches it; gradient always flows to z1 and z2.
Value mcr_loss(Value z1, Value z2, Value zhat, const LossConfig& cfg);

// Cross-correlation of per-column standardized views pushed toward identity.
Value barlow_twins_loss(Value z1, Value z2, double bt_offdiag);

// Mean over rows of 2 - 2*cos(pred_i, target_i); target carries no gradient.
// Callers symmetrize over the two view assignments.
Value byol_loss(Value pred, const Matrix& target);

// E||z1_i - z2_i||^2 - min_t mu*pst(Zt Zt^T). The minimum entropy term is
// interpreted as the smaller coding-length entropy of the two views.
Value counterfactual_loss(Value z1, Value z2, const LossConfig& cfg);

// Coding-length entropy H_code(Z) = mu * pst(Z Z^T, m, lambda) on
// row-normalized Z, as a plain number (no gradients); shared by the
// counterfactual loss oracle and the spectrum diagnostics.
double coding_entropy(const Matrix& z, const LossConfig& cfg);

}  // namespace compmod
