#include "compmod/trainer.hpp"

#include <cmath>

#include "compmod/errors.hpp"
#include "compmod/rng.hpp"

namespace compmod {

void HypergradMode::validate() const {
    if (kind == Kind::kFdHvp && (fd_eps < 1e-6 || fd_eps > 1e-3)) {
        throw ConfigError("hypergrad: fd_eps must lie in [1e-6, 1e-3]");
    }
}

std::string to_string(HypergradMode::Kind k) {
    return k == HypergradMode::Kind::kFdHvp ? "fd_hvp" : "exact_oracle";
}

HypergradMode::Kind hypergrad_kind_from_string(const std::string& s) {
    if (s == "fd_hvp") return HypergradMode::Kind::kFdHvp;
    if (s == "exact_oracle") return HypergradMode::Kind::kExactOracle;
    throw ConfigError("unknown hypergrad kind '" + s + "' (expected fd_hvp|exact_oracle)");
}

void TrainState::validate() const {
    if (!(lr > 0.0)) throw ConfigError("train: learning rate must be > 0");
    if (ema_momentum < 0.0 || ema_momentum > 1.0) {
        throw ConfigError("train: ema_momentum must lie in [0, 1]");
    }
    loss.validate();
    fusion.validate();
    hypergrad.validate();
}

namespace {

std::vector<ParamGroup> inner_groups(const TrainState& cfg) {
    std::vector<ParamGroup> groups{ParamGroup::kTheta, ParamGroup::kPhi};
    if (cfg.loss.base == BaseObjective::kByol) groups.push_back(ParamGroup::kPredictor);
    return groups;
}

struct Embeddings {
    Value h1, h2, z1, z2;
};

Embeddings embed_views(Tape& tape, const ModelParams& params,
                       const std::map<std::string, Value>& leaves,
                       const ViewBatch& batch) {
    Embeddings e;
    Value x1 = tape.constant(batch.x1);
    Value x2 = tape.constant(batch.x2);
    e.h1 = mlp_forward(params, leaves, "theta", x1);
    e.h2 = mlp_forward(params, leaves, "theta", x2);
    e.z1 = mlp_forward(params, leaves, "phi", e.h1);
    e.z2 = mlp_forward(params, leaves, "phi", e.h2);
    return e;
}

struct ByolTargets {
    Matrix t1, t2;
};

ByolTargets byol_targets(const ModelParams& target_src, const ViewBatch& batch) {
    ByolTargets t;
    t.t1 = mlp_forward_plain(target_src, "target_phi",
                             mlp_forward_plain(target_src, "target_theta", batch.x1));
    t.t2 = mlp_forward_plain(target_src, "target_phi",
                             mlp_forward_plain(target_src, "target_theta", batch.x2));
    return t;
}

Value build_ssl(Tape&, const ModelParams& params,
                const std::map<std::string, Value>& leaves, const Embeddings& emb,
                const ViewBatch& batch, const TrainState& cfg,
                const ModelParams& target_src) {
    switch (cfg.loss.base) {
        case BaseObjective::kSimclr:
            return info_nce(emb.z1, emb.z2, cfg.loss.tau);
        case BaseObjective::kBarlowTwins:
            return barlow_twins_loss(emb.z1, emb.z2, cfg.loss.bt_offdiag);
        case BaseObjective::kByol: {
            const ByolTargets t = byol_targets(target_src, batch);
            Value p1 = mlp_forward(params, leaves, "predictor", emb.z1);
            Value p2 = mlp_forward(params, leaves, "predictor", emb.z2);
            return add(byol_loss(p1, t.t2), byol_loss(p2, t.t1));
        }
    }
    throw ConfigError("build_ssl: bad base objective");
}

// Comprehensive embedding on this tape. For concat_repr/mixup the head eats
// representations, for concat_embed it eats projector embeddings.
Value build_zhat(const ModelParams& params, const std::map<std::string, Value>& leaves,
                 const Embeddings& emb, const FusionStrategy& strategy) {
    if (strategy.kind == FusionKind::kConcatEmbed) {
        return fuse(emb.z1, emb.z2, strategy, params, leaves);
    }
    return fuse(emb.h1, emb.h2, strategy, params, leaves);
}

NamedGrads collect_grads(Tape& tape, const ModelParams& params,
                         const std::map<std::string, Value>& leaves,
                         const std::vector<ParamGroup>& groups) {
    NamedGrads grads;
    for (const auto& [name, entry] : params.entries) {
        for (ParamGroup g : groups) {
            if (entry.group == g) {
                grads[name] = tape.grad(leaves.at(name));
                break;
            }
        }
    }
    return grads;
}

void apply_sgd(ModelParams& params, const NamedGrads& grads, double lr) {
    for (const auto& [name, g] : grads) {
        axpy_in_place(params.entries.at(name).value, -lr, g);
    }
}

double grads_norm(const NamedGrads& grads) {
    double sq = 0.0;
    for (const auto& [name, g] : grads) sq += dot(g, g);
    return std::sqrt(sq);
}

void check_grads_finite(const NamedGrads& grads, const char* what) {
    for (const auto& [name, g] : grads) {
        if (!g.all_finite()) {
            throw NumericError(std::string(what) + ": non-finite gradient for " + name);
        }
    }
}

ModelParams perturbed(const ModelParams& base, const NamedGrads& direction, double step) {
    ModelParams out = base;
    for (const auto& [name, dir] : direction) {
        axpy_in_place(out.entries.at(name).value, step, dir);
    }
    return out;
}

// grad_head L_mcr with the view branch at z_params and the comprehensive
// branch's encoder inputs at zhat_params. The head leaves are live, so the
// gradient flows through the value of Zhat even when the inner step treats
// Zhat as a constant (the probe realizes d/dxi of the detached inner
// gradient through the constant's value).
NamedGrads mcr_head_gradient(const ModelParams& z_params, const ModelParams& zhat_params,
                             const ViewBatch& batch, const TrainState& cfg,
                             const FusionStrategy& resolved) {
    Tape tape;
    auto z_leaves = make_param_leaves(tape, z_params, {});
    const Embeddings emb = embed_views(tape, z_params, z_leaves, batch);

    auto head_leaves = make_param_leaves(tape, zhat_params, {resolved.head_group()});
    const Embeddings emb_zhat = embed_views(tape, zhat_params, head_leaves, batch);
    Value zhat = build_zhat(zhat_params, head_leaves, emb_zhat, resolved);

    LossConfig probe_cfg = cfg.loss;
    probe_cfg.mcr_through_zhat = true;  // flag semantics already encoded above
    Value mcr = mcr_loss(emb.z1, emb.z2, zhat, probe_cfg);
    tape.backward(mcr);
    return collect_grads(tape, zhat_params, head_leaves, {resolved.head_group()});
}

NamedGrads zero_like_group(const ModelParams& params, ParamGroup group) {
    NamedGrads grads;
    for (const auto& [name, entry] : params.entries) {
        if (entry.group == group) {
            grads[name] = Matrix(entry.value.rows(), entry.value.cols());
        }
    }
    return grads;
}

void add_grads(NamedGrads& acc, const NamedGrads& g, double coeff) {
    for (const auto& [name, m] : g) axpy_in_place(acc.at(name), coeff, m);
}

}  // namespace

InnerEval inner_gradient(const ModelParams& params, const ViewBatch& batch,
                         const TrainState& cfg, const FusionStrategy& resolved) {
    Tape tape;
    const std::vector<ParamGroup> groups = inner_groups(cfg);
    auto leaves = make_param_leaves(tape, params, groups);
    const Embeddings emb = embed_views(tape, params, leaves, batch);

    Value total = build_ssl(tape, params, leaves, emb, batch, cfg, params);
    InnerEval out;
    out.losses.ssl = total.val().scalar();
    if (!std::isfinite(out.losses.ssl)) {
        throw NumericError("inner step: non-finite L_ssl (base=" +
                           to_string(cfg.loss.base) + ")");
    }

    const bool mcr_active = cfg.compmod_enabled && cfg.loss.lambda1 > 0.0;
    if (mcr_active) {
        Value zhat = build_zhat(params, leaves, emb, resolved);
        Value mcr = mcr_loss(emb.z1, emb.z2, zhat, cfg.loss);
        out.losses.mcr = mcr.val().scalar();
        if (!std::isfinite(out.losses.mcr)) {
            throw NumericError("inner step: non-finite L_mcr");
        }
        total = add(total, scale(mcr, cfg.loss.lambda1));
    }
    if (cfg.loss.counterfactual_weight > 0.0) {
        total = add(total, scale(counterfactual_loss(emb.z1, emb.z2, cfg.loss),
                                 cfg.loss.counterfactual_weight));
    }

    tape.backward(total);
    out.grads = collect_grads(tape, params, leaves, groups);
    check_grads_finite(out.grads, "inner step");
    return out;
}

StepLosses inner_step(TrainState& state, const ViewBatch& batch,
                      const FusionStrategy& resolved) {
    InnerEval eval = inner_gradient(state.params, batch, state, resolved);
    apply_sgd(state.params, eval.grads, state.lr);
    return eval.losses;
}

double ssl_value(const ModelParams& params, const ViewBatch& batch,
                 const TrainState& cfg, const ModelParams& target_src) {
    Tape tape;
    auto leaves = make_param_leaves(tape, params, {});
    const Embeddings emb = embed_views(tape, params, leaves, batch);
    return build_ssl(tape, params, leaves, emb, batch, cfg, target_src).val().scalar();
}

double comp_value(const ModelParams& params, const ViewBatch& batch,
                  const TrainState& cfg, const FusionStrategy& resolved) {
    Tape tape;
    auto leaves = make_param_leaves(tape, params, {});
    const Embeddings emb = embed_views(tape, params, leaves, batch);
    Value zhat = build_zhat(params, leaves, emb, resolved);
    return comp_loss(zhat, cfg.loss).val().scalar();
}

NamedGrads outer_gradient(const ModelParams& pre, const ModelParams& updated,
                          const ViewBatch& batch, const TrainState& cfg,
                          const FusionStrategy& resolved, const HypergradMode& mode) {
    mode.validate();
    const ParamGroup head = resolved.head_group();
    NamedGrads total = zero_like_group(pre, head);

    if (mode.kind == HypergradMode::Kind::kExactOracle) {
        std::size_t head_size = 0;
        for (const auto& [name, g] : total) head_size += g.size();
        if (head_size > 4096) {
            throw ContractError("exact_oracle: head has " + std::to_string(head_size) +
                                " parameters; the oracle is for tiny networks");
        }
        const double delta = 1e-5;
        auto composed = [&](const ModelParams& probe_params) {
            InnerEval inner = inner_gradient(probe_params, batch, cfg, resolved);
            ModelParams u = probe_params;
            apply_sgd(u, inner.grads, cfg.lr);
            // Targets stay fixed at `updated`'s (post-EMA) values: the BYOL
            // target branch is never differentiated through.
            double phi_val = ssl_value(u, batch, cfg, updated);
            if (cfg.loss.lambda2 > 0.0) {
                // probe_params holds pre-step inner values plus the perturbed
                // head, exactly what L_comp(Zhat(theta_pre, xi)) wants.
                phi_val += cfg.loss.lambda2 * comp_value(probe_params, batch, cfg, resolved);
            }
            return phi_val;
        };
        for (auto& [name, grad] : total) {
            for (std::size_t i = 0; i < grad.size(); ++i) {
                ModelParams probe = pre;
                probe.entries.at(name).value.vec()[i] += delta;
                const double fp = composed(probe);
                probe.entries.at(name).value.vec()[i] -= 2.0 * delta;
                const double fm = composed(probe);
                grad.vec()[i] = (fp - fm) / (2.0 * delta);
            }
        }
        check_grads_finite(total, "outer step (oracle)");
        return total;
    }

    // fd_hvp: direct term by reverse mode, hypergradient term by a central
    // difference along the updated-loss gradient direction.
    if (cfg.loss.lambda2 > 0.0) {
        Tape tape;
        auto const_leaves = make_param_leaves(tape, pre, {head});
        const Embeddings emb = embed_views(tape, pre, const_leaves, batch);
        Value comp = comp_loss(build_zhat(pre, const_leaves, emb, resolved), cfg.loss);
        tape.backward(comp);
        add_grads(total, collect_grads(tape, pre, const_leaves, {head}),
                  cfg.loss.lambda2);
    }

    if (cfg.loss.lambda1 > 0.0) {
        // v = grad_{theta,phi} L_ssl at the updated parameters.
        Tape tape;
        const std::vector<ParamGroup> groups = inner_groups(cfg);
        auto leaves = make_param_leaves(tape, updated, groups);
        const Embeddings emb = embed_views(tape, updated, leaves, batch);
        Value ssl = build_ssl(tape, updated, leaves, emb, batch, cfg, updated);
        tape.backward(ssl);
        NamedGrads v = collect_grads(tape, updated, leaves, groups);
        const double vnorm = grads_norm(v);

        if (vnorm > 0.0) {
            for (auto& [name, g] : v) g = compmod::scale(g, 1.0 / vnorm);
            const double eps = mode.fd_eps;
            const ModelParams plus = perturbed(pre, v, eps);
            const ModelParams minus = perturbed(pre, v, -eps);
            const ModelParams& zhat_plus = cfg.loss.mcr_through_zhat ? plus : pre;
            const ModelParams& zhat_minus = cfg.loss.mcr_through_zhat ? minus : pre;
            NamedGrads gp = mcr_head_gradient(plus, zhat_plus, batch, cfg, resolved);
            NamedGrads gm = mcr_head_gradient(minus, zhat_minus, batch, cfg, resolved);
            const double coeff = -cfg.lr * cfg.loss.lambda1 * vnorm / (2.0 * eps);
            add_grads(total, gp, coeff);
            add_grads(total, gm, -coeff);
        }
    }
    check_grads_finite(total, "outer step");
    return total;
}

double outer_step(TrainState& state, const ModelParams& pre, const ViewBatch& batch,
                  const FusionStrategy& resolved) {
    // L_comp is logged from the pre-step parameters, the same values Eq. 9
    // holds fixed.
    const double comp = comp_value(pre, batch, state, resolved);
    NamedGrads g = outer_gradient(pre, state.params, batch, state, resolved,
                                  state.hypergrad);
    apply_sgd(state.params, g, state.lr);
    return comp;
}

Matrix ema_update(const Matrix& target, const Matrix& online, double momentum) {
    if (momentum < 0.0 || momentum > 1.0) {
        throw ContractError("ema_update: momentum must lie in [0, 1]");
    }
    check_same_shape(target, online, "ema_update");
    Matrix out = target;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.vec()[i] = momentum * target.vec()[i] + (1.0 - momentum) * online.vec()[i];
    }
    return out;
}

void ema_update(ModelParams& params, double momentum) {
    for (const char* net : {"theta", "phi"}) {
        const MlpSpec& spec = params.specs.at(net);
        for (std::size_t layer = 0; layer + 1 < spec.widths.size(); ++layer) {
            for (const char* kind : {".w", ".b"}) {
                const std::string online = std::string(net) + kind + std::to_string(layer);
                const std::string target = "target_" + online;
                Matrix& tgt = params.entries.at(target).value;
                tgt = ema_update(tgt, params.entries.at(online).value, momentum);
            }
        }
    }
}

namespace {

// Joint single-level step for the "No bi-level" ablation: theta, phi (and
// the head) descend L_ssl + lambda1*L_mcr + lambda2*L_comp together.
StepLosses joint_step(TrainState& state, const ViewBatch& batch,
                      const FusionStrategy& resolved) {
    Tape tape;
    std::vector<ParamGroup> groups = inner_groups(state);
    groups.push_back(resolved.head_group());
    auto leaves = make_param_leaves(tape, state.params, groups);
    const Embeddings emb = embed_views(tape, state.params, leaves, batch);

    Value total = build_ssl(tape, state.params, leaves, emb, batch, state, state.params);
    StepLosses losses;
    losses.ssl = total.val().scalar();
    Value zhat = build_zhat(state.params, leaves, emb, resolved);
    if (state.loss.lambda1 > 0.0) {
        Value mcr = mcr_loss(emb.z1, emb.z2, zhat, state.loss);
        losses.mcr = mcr.val().scalar();
        total = add(total, scale(mcr, state.loss.lambda1));
    }
    Value comp = comp_loss(zhat, state.loss);
    losses.comp = comp.val().scalar();
    if (state.loss.lambda2 > 0.0) {
        total = add(total, scale(comp, state.loss.lambda2));
    }
    if (!std::isfinite(total.val().scalar())) {
        throw NumericError("joint step: non-finite loss");
    }
    tape.backward(total);
    NamedGrads grads = collect_grads(tape, state.params, leaves, groups);
    check_grads_finite(grads, "joint step");
    apply_sgd(state.params, grads, state.lr);
    return losses;
}

}  // namespace

EpochStats train_epoch(TrainState& state, BatchStream& stream) {
    state.validate();
    EpochStats stats;
    Rng alpha_rng(derive_seed(state.seed, "mixup_alpha", state.epoch));
    ViewBatch last_batch;

    while (!stream.done()) {
        const ViewBatch batch = stream.next();
        FusionStrategy resolved = state.fusion;
        if (state.comp_active() && resolved.kind == FusionKind::kMixup &&
            resolved.sample_alpha) {
            resolved.alpha = alpha_rng.uniform();
        }

        StepLosses losses;
        if (!state.comp_active()) {
            losses = inner_step(state, batch, resolved);
            if (state.loss.base == BaseObjective::kByol) {
                ema_update(state.params, state.ema_momentum);
            }
        } else if (!state.bilevel) {
            losses = joint_step(state, batch, resolved);
            if (state.loss.base == BaseObjective::kByol) {
                ema_update(state.params, state.ema_momentum);
            }
        } else {
            const ModelParams pre = state.params;
            losses = inner_step(state, batch, resolved);
            if (state.loss.base == BaseObjective::kByol) {
                ema_update(state.params, state.ema_momentum);
            }
            losses.comp = outer_step(state, pre, batch, resolved);
        }

        stats.ssl += losses.ssl;
        stats.mcr += losses.mcr;
        stats.comp += losses.comp;
        ++stats.batches;
        last_batch = batch;
    }

    if (stats.batches > 0) {
        stats.ssl /= static_cast<double>(stats.batches);
        stats.mcr /= static_cast<double>(stats.batches);
        stats.comp /= static_cast<double>(stats.batches);
        // Spectrum diagnostics of the last batch at the final parameters.
        const Matrix h1 = mlp_forward_plain(state.params, "theta", last_batch.x1);
        stats.last_z1 = mlp_forward_plain(state.params, "phi", h1);
        if (state.comp_active()) {
            Tape tape;
            auto leaves = make_param_leaves(tape, state.params, {});
            const Embeddings emb = embed_views(tape, state.params, leaves, last_batch);
            FusionStrategy resolved = state.fusion;  // fixed alpha for diagnostics
            stats.last_zhat = build_zhat(state.params, leaves, emb, resolved).val();
        }
    }
    ++state.epoch;
    return stats;
}

}  // namespace compmod
