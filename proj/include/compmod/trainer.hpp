#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "compmod/data.hpp"
#include "compmod/losses.hpp"
#include "compmod/models.hpp"

namespace compmod {

using NamedGrads = std::map<std::string, Matrix>;

struct HypergradMode {
    enum class Kind { kFdHvp, kExactOracle };
    Kind kind = Kind::kFdHvp;
    double fd_eps = 1e-4;

    void validate() const;
};

std::string to_string(HypergradMode::Kind k);
HypergradMode::Kind hypergrad_kind_from_string(const std::string& s);

struct TrainState {
    ModelParams params;
    std::size_t epoch = 0;
    double lr = 0.05;
    std::uint64_t seed = 1;
    LossConfig loss;
    FusionStrategy fusion;
    bool compmod_enabled = true;
    bool bilevel = true;
    double ema_momentum = 0.99;
    HypergradMode hypergrad;

    void validate() const;
    bool comp_active() const {
        return compmod_enabled && (loss.lambda1 > 0.0 || loss.lambda2 > 0.0);
    }
};

struct StepLosses {
    double ssl = 0.0;
    double mcr = 0.0;
    double comp = 0.0;
};

struct EpochStats {
    double ssl = 0.0;
    double mcr = 0.0;
    double comp = 0.0;
    std::size_t batches = 0;
    Matrix last_z1;    // final-params embedding of the last batch, view 1
    Matrix last_zhat;  // empty when the comprehensive head is inactive
};

// Inner gradient of Eq. 8's objective, L_ssl + lambda1*L_mcr, w.r.t. the
// inner groups (theta, phi, and the predictor for BYOL) at the given
// parameter values; the head is held fixed. Shared by inner_step and the
// hypergradient oracle.
struct InnerEval {
    NamedGrads grads;
    StepLosses losses;
};
InnerEval inner_gradient(const ModelParams& params, const ViewBatch& batch,
                         const TrainState& cfg, const FusionStrategy& resolved);

// One SGD step on {theta, phi (, predictor)}; xi/zeta bytes untouched.
StepLosses inner_step(TrainState& state, const ViewBatch& batch,
                      const FusionStrategy& resolved);

// Outer gradient of Eq. 9: grad_xi [ L_ssl(theta_xi, phi_xi)
// + lambda2 * L_comp(Zhat(theta_pre, xi)) ].
// pre holds the inner parameters before the inner step; updated holds them
// after. fd_hvp assembles the L_ssl term from central-difference
// Hessian-vector probes of the inner gradient; exact_oracle differentiates
// the composed objective coordinate by coordinate (tiny heads only).
NamedGrads outer_gradient(const ModelParams& pre, const ModelParams& updated,
                          const ViewBatch& batch, const TrainState& cfg,
                          const FusionStrategy& resolved, const HypergradMode& mode);

// Applies xi <- xi - r * outer_gradient; returns the logged L_comp value
// (evaluated at pre-step theta).
double outer_step(TrainState& state, const ModelParams& pre, const ViewBatch& batch,
                  const FusionStrategy& resolved);

// target <- m*target + (1-m)*online, elementwise.
Matrix ema_update(const Matrix& target, const Matrix& online, double momentum);
// Applies the rule to target_theta/target_phi from theta/phi.
void ema_update(ModelParams& params, double momentum);

// One pass over the stream: per batch inner step, BYOL EMA, then outer step,
// in that order. Dispatches to the plain baseline loop when CompMod is
// inactive and to a joint single-level step when bilevel is off.
EpochStats train_epoch(TrainState& state, BatchStream& stream);

// L_comp of the comprehensive embedding built from `params`, as a plain
// number. Used for logging and by the outer oracle.
double comp_value(const ModelParams& params, const ViewBatch& batch,
                  const TrainState& cfg, const FusionStrategy& resolved);

// Forward-only L_ssl at the given parameters. For BYOL the target embeddings
// are taken from target_src (stop-gradient: targets are constants).
double ssl_value(const ModelParams& params, const ViewBatch& batch,
                 const TrainState& cfg, const ModelParams& target_src);

}  // namespace compmod
