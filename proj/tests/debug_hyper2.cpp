#include <cstdio>

#include "compmod/trainer.hpp"
#include "test_support.hpp"

using namespace compmod;

int main() {
    ModelDims dims;
    dims.input = 1;
    dims.encoder_hidden = 1;
    dims.repr = 1;
    dims.proj_hidden = 1;
    dims.embed = 2;

    TrainState state;
    state.fusion.kind = FusionKind::kMixup;
    state.fusion.alpha = 0.6;
    state.lr = 0.1;
    state.seed = 3000;
    state.loss.mu = 1.0;
    state.loss.lambda_code = 0.2;
    state.loss.lambda1 = 0.0;
    state.loss.lambda2 = 0.3;
    state.params = init_params(dims, state.fusion, true, false, 3000);

    ViewBatch batch;
    batch.x1 = testsup::random_matrix(4, 1, 5000);
    batch.x2 = testsup::random_matrix(4, 1, 5001);
    batch.labels.assign(4, 0);
    batch.indices.resize(4);

    // Head hidden activations.
    const Matrix h1 = mlp_forward_plain(state.params, "theta", batch.x1);
    const Matrix h2 = mlp_forward_plain(state.params, "theta", batch.x2);
    std::printf("h1: ");
    for (double v : h1.vec()) std::printf("% .6f ", v);
    std::printf("\nh2: ");
    for (double v : h2.vec()) std::printf("% .6f ", v);
    std::printf("\nxi.w0=%.6f xi.b0=%.6f\n",
                state.params.entries.at("xi.w0").value(0, 0),
                state.params.entries.at("xi.b0").value(0, 0));

    const double base = comp_value(state.params, batch, state, state.fusion);
    std::printf("comp(base) = %.12f\n", base);
    for (const char* name : {"xi.w0", "xi.b0", "xi.w1", "xi.b1"}) {
        ModelParams p = state.params;
        for (std::size_t i = 0; i < p.entries.at(name).value.size(); ++i) {
            p.entries.at(name).value.vec()[i] += 1e-5;
            TrainState s2 = state;
            s2.params = p;
            const double vp = comp_value(p, batch, state, state.fusion);
            std::printf("  comp(%s[%zu]+1e-5) - base = % .3e\n", name, i, vp - base);
            p.entries.at(name).value.vec()[i] -= 1e-5;
        }
    }

    // ssl at u(xi +- delta) with lambda1 = 0: should be identical.
    const ModelParams pre = state.params;
    inner_step(state, batch, state.fusion);
    ModelParams probe = pre;
    probe.entries.at("xi.b1").value(0, 0) += 1e-5;
    InnerEval ev = inner_gradient(probe, batch, state, state.fusion);
    ModelParams u = probe;
    for (const auto& [name, g] : ev.grads) {
        axpy_in_place(u.entries.at(name).value, -state.lr, g);
    }
    const double ssl_plus = ssl_value(u, batch, state, state.params);
    probe.entries.at("xi.b1").value(0, 0) -= 2e-5;
    ev = inner_gradient(probe, batch, state, state.fusion);
    u = probe;
    for (const auto& [name, g] : ev.grads) {
        axpy_in_place(u.entries.at(name).value, -state.lr, g);
    }
    const double ssl_minus = ssl_value(u, batch, state, state.params);
    std::printf("ssl(u+) - ssl(u-) = % .3e\n", ssl_plus - ssl_minus);
    return 0;
}
