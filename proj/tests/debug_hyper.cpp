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

    for (int mode = 0; mode < 4; ++mode) {
        const bool through = mode & 1;
        const bool lambda2_only = mode & 2;
        TrainState state;
        state.fusion.kind = FusionKind::kMixup;
        state.fusion.alpha = 0.6;
        state.lr = 0.1;
        state.seed = 3000;
        state.loss.mu = 1.0;
        state.loss.lambda_code = 0.2;
        state.loss.lambda1 = lambda2_only ? 0.0 : 0.5;
        state.loss.lambda2 = lambda2_only ? 0.3 : 0.0;
        state.loss.mcr_through_zhat = through;
        state.params = init_params(dims, state.fusion, true, false, 3000);

        ViewBatch batch;
        batch.x1 = testsup::random_matrix(4, 1, 5000);
        batch.x2 = testsup::random_matrix(4, 1, 5001);
        batch.labels.assign(4, 0);
        batch.indices.resize(4);

        const ModelParams pre = state.params;
        inner_step(state, batch, state.fusion);
        const NamedGrads fd = outer_gradient(pre, state.params, batch, state,
                                             state.fusion,
                                             {HypergradMode::Kind::kFdHvp, 1e-4});
        const NamedGrads oracle = outer_gradient(pre, state.params, batch, state,
                                                 state.fusion,
                                                 {HypergradMode::Kind::kExactOracle, 1e-4});
        std::printf("mode through=%d lambda2_only=%d\n", through, lambda2_only);
        for (const auto& [name, g] : fd) {
            for (std::size_t i = 0; i < g.size(); ++i) {
                std::printf("  %-8s[%zu] fd=% .10f oracle=% .10f\n", name.c_str(), i,
                            g.vec()[i], oracle.at(name).vec()[i]);
            }
        }
    }
    return 0;
}
