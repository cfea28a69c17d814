#include <cmath>

#include "compmod/errors.hpp"
#include "compmod/trainer.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace compmod;
using testsup::bitwise_equal;
using testsup::random_matrix;

namespace {

ModelDims tiny_dims() {
    ModelDims dims;
    dims.input = 4;
    dims.encoder_hidden = 3;
    dims.repr = 3;
    dims.proj_hidden = 3;
    dims.embed = 2;
    return dims;
}

TrainState make_state(BaseObjective base, double lambda1, double lambda2,
                      std::uint64_t seed = 21, bool with_head = true) {
    TrainState state;
    state.loss.base = base;
    state.loss.lambda1 = lambda1;
    state.loss.lambda2 = lambda2;
    state.loss.mu = 1.0;
    state.loss.lambda_code = 0.3;
    state.lr = 0.05;
    state.seed = seed;
    state.compmod_enabled = with_head;
    state.params = init_params(tiny_dims(), state.fusion, with_head,
                               base == BaseObjective::kByol, seed);
    return state;
}

ViewBatch make_batch(std::uint64_t seed, std::size_t n = 6, std::size_t dim = 4) {
    ViewBatch batch;
    batch.x1 = random_matrix(n, dim, seed);
    batch.x2 = random_matrix(n, dim, seed + 1);
    batch.labels.assign(n, 0);
    batch.indices.resize(n);
    return batch;
}

bool group_bytes_equal(const ModelParams& a, const ModelParams& b, ParamGroup g) {
    for (const auto& [name, entry] : a.entries) {
        if (entry.group != g) continue;
        if (!bitwise_equal(entry.value, b.entries.at(name).value)) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("inner step matches a hand-rolled SGD application") {
    TrainState state = make_state(BaseObjective::kSimclr, 0.2, 0.0);
    const ViewBatch batch = make_batch(100);
    const ModelParams before = state.params;

    const InnerEval eval = inner_gradient(before, batch, state, state.fusion);
    inner_step(state, batch, state.fusion);
    for (const auto& [name, grad] : eval.grads) {
        Matrix expected = before.entries.at(name).value;
        axpy_in_place(expected, -state.lr, grad);
        CHECK(bitwise_equal(expected, state.params.entries.at(name).value));
    }
}

TEST_CASE("inner step leaves the head untouched and outer leaves theta/phi") {
    TrainState state = make_state(BaseObjective::kSimclr, 0.4, 0.2);
    const ViewBatch batch = make_batch(101);
    const ModelParams pre = state.params;

    inner_step(state, batch, state.fusion);
    CHECK(group_bytes_equal(state.params, pre, ParamGroup::kXi));
    CHECK_FALSE(group_bytes_equal(state.params, pre, ParamGroup::kTheta));

    const ModelParams after_inner = state.params;
    outer_step(state, pre, batch, state.fusion);
    CHECK(group_bytes_equal(state.params, after_inner, ParamGroup::kTheta));
    CHECK(group_bytes_equal(state.params, after_inner, ParamGroup::kPhi));
    CHECK_FALSE(group_bytes_equal(state.params, after_inner, ParamGroup::kXi));
}

TEST_CASE("lambda1 zero reduces the inner step to the plain base step") {
    const ViewBatch batch = make_batch(102);
    TrainState with_head = make_state(BaseObjective::kSimclr, 0.0, 0.5);
    TrainState plain = make_state(BaseObjective::kSimclr, 0.0, 0.0, 21, false);
    inner_step(with_head, batch, with_head.fusion);
    inner_step(plain, batch, plain.fusion);
    CHECK(group_bytes_equal(with_head.params, plain.params, ParamGroup::kTheta));
    CHECK(group_bytes_equal(with_head.params, plain.params, ParamGroup::kPhi));
}

TEST_CASE("outer hypergradient term is bitwise zero when lambda1 is zero") {
    TrainState state = make_state(BaseObjective::kSimclr, 0.0, 0.0);
    const ViewBatch batch = make_batch(103);
    const ModelParams pre = state.params;
    inner_step(state, batch, state.fusion);
    const NamedGrads g = outer_gradient(pre, state.params, batch, state, state.fusion,
                                        state.hypergrad);
    for (const auto& [name, grad] : g) {
        for (double v : grad.vec()) CHECK(v == 0.0);
    }
}

TEST_CASE("outer step is a no-op when both lambdas vanish") {
    TrainState state = make_state(BaseObjective::kSimclr, 0.0, 0.0);
    const ViewBatch batch = make_batch(104);
    const ModelParams pre = state.params;
    inner_step(state, batch, state.fusion);
    const ModelParams after_inner = state.params;
    outer_step(state, pre, batch, state.fusion);
    CHECK(group_bytes_equal(state.params, after_inner, ParamGroup::kXi));
}

TEST_CASE("fd_hvp agrees with the brute-force oracle on tiny instances") {
    // Smoke-sized version of the acceptance sweep: a few seeds across both
    // zhat readings. All parameters are re-drawn, biases included; the
    // zero-bias init leaves the outer objective exactly flat.
    ModelDims dims;
    dims.input = 2;
    dims.encoder_hidden = 1;
    dims.repr = 1;
    dims.proj_hidden = 1;
    dims.embed = 2;

    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        TrainState state;
        state.fusion.kind = FusionKind::kMixup;
        state.fusion.alpha = 0.6;
        state.lr = 0.1;
        state.seed = 3000 + seed;
        state.loss.mu = 1.0;
        state.loss.lambda_code = 0.2;
        state.loss.lambda1 = 0.5;
        state.loss.lambda2 = 0.3;
        state.loss.mcr_through_zhat = seed % 2 == 0;
        state.params = init_params(dims, state.fusion, true, false, 3000 + seed);
        Rng prng(derive_seed(3000 + seed, "tiny_params"));
        for (auto& [name, entry] : state.params.entries) {
            for (double& v : entry.value.vec()) v = prng.uniform(-0.8, 0.8);
        }

        const ViewBatch batch = make_batch(5000 + seed, 5, 2);
        const ModelParams pre = state.params;
        inner_step(state, batch, state.fusion);

        const NamedGrads fd = outer_gradient(
            pre, state.params, batch, state, state.fusion,
            HypergradMode{HypergradMode::Kind::kFdHvp, 1e-4});
        const NamedGrads oracle = outer_gradient(
            pre, state.params, batch, state, state.fusion,
            HypergradMode{HypergradMode::Kind::kExactOracle, 1e-4});

        double diff = 0.0, norm_fd = 0.0, norm_oracle = 0.0;
        for (const auto& [name, g] : fd) {
            const Matrix delta = sub(g, oracle.at(name));
            diff += dot(delta, delta);
            norm_fd += dot(g, g);
            norm_oracle += dot(oracle.at(name), oracle.at(name));
        }
        const double rel = std::sqrt(diff) /
                           std::max({1e-6, std::sqrt(norm_fd), std::sqrt(norm_oracle)});
        CHECK(rel <= 1e-3);
    }
}

TEST_CASE("exact oracle refuses oversized heads") {
    TrainState state = make_state(BaseObjective::kSimclr, 0.1, 0.1);
    // Inflate the head so its parameter count exceeds the oracle cap.
    ModelDims dims = tiny_dims();
    dims.repr = 64;
    dims.embed = 64;
    state.params = init_params(dims, state.fusion, true, false, 2);
    ViewBatch batch = make_batch(105, 6, 4);
    const ModelParams pre = state.params;
    CHECK_THROWS_AS(outer_gradient(pre, state.params, batch, state, state.fusion,
                                   HypergradMode{HypergradMode::Kind::kExactOracle, 1e-4}),
                    ContractError);
}

TEST_CASE("ema update rules") {
    const Matrix target = Matrix::from_rows({{1.0, 2.0}});
    const Matrix online = Matrix::from_rows({{0.0, 4.0}});
    CHECK(bitwise_equal(ema_update(target, online, 1.0), target));
    CHECK(bitwise_equal(ema_update(target, online, 0.0), online));
    const Matrix mixed = ema_update(Matrix::from_rows({{1.0}}),
                                    Matrix::from_rows({{0.0}}), 0.9);
    CHECK(mixed(0, 0) == doctest::Approx(0.9).epsilon(1e-15));

    // Convexity: every entry lies between the old target and online values.
    const Matrix t0 = random_matrix(3, 4, 106);
    const Matrix o0 = random_matrix(3, 4, 107);
    const Matrix out = ema_update(t0, o0, 0.37);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double lo = std::min(t0.vec()[i], o0.vec()[i]);
        const double hi = std::max(t0.vec()[i], o0.vec()[i]);
        CHECK(out.vec()[i] >= lo - 1e-15);
        CHECK(out.vec()[i] <= hi + 1e-15);
    }

    CHECK_THROWS_AS(ema_update(t0, Matrix(2, 2), 0.5), DimensionError);
    CHECK_THROWS_AS(ema_update(t0, o0, 1.5), ContractError);
}

TEST_CASE("train epoch: determinism and the plain-loop equivalence") {
    SplitSemanticsSpec spec;
    spec.num_classes = 3;
    spec.dim = 4;
    spec.samples_per_class = 8;
    spec.seed = 17;
    const Dataset data = gen_split_semantics(spec);
    AugmentPipeline pipeline;
    pipeline.complementary_mask = true;
    pipeline.mask_width = 0.5;
    pipeline.view_ops = {AugmentOp{AugKind::kGaussianJitter, 0.05}};

    auto run_trainer = [&](bool with_head) {
        TrainState state = make_state(BaseObjective::kSimclr, 0.0, 0.0, 77, with_head);
        BatchStream stream(data, 6, pipeline, derive_seed(77, "epoch", 0));
        train_epoch(state, stream);
        return state.params;
    };

    const ModelParams run1 = run_trainer(true);
    const ModelParams run2 = run_trainer(true);
    for (const auto& [name, entry] : run1.entries) {
        CHECK(bitwise_equal(entry.value, run2.entries.at(name).value));
    }

    // Independent plain SimCLR loop against the op layer, no trainer
    // machinery: must produce the same bytes as the disabled trainer.
    TrainState reference = make_state(BaseObjective::kSimclr, 0.0, 0.0, 77, false);
    ModelParams params = reference.params;
    BatchStream stream(data, 6, pipeline, derive_seed(77, "epoch", 0));
    while (!stream.done()) {
        const ViewBatch batch = stream.next();
        Tape t;
        auto leaves = make_param_leaves(t, params, {ParamGroup::kTheta, ParamGroup::kPhi});
        Value x1 = t.constant(batch.x1);
        Value x2 = t.constant(batch.x2);
        Value h1 = mlp_forward(params, leaves, "theta", x1);
        Value h2 = mlp_forward(params, leaves, "theta", x2);
        Value z1 = mlp_forward(params, leaves, "phi", h1);
        Value z2 = mlp_forward(params, leaves, "phi", h2);
        Value loss = info_nce(z1, z2, reference.loss.tau);
        t.backward(loss);
        for (auto& [name, entry] : params.entries) {
            axpy_in_place(entry.value, -reference.lr, t.grad(leaves.at(name)));
        }
    }
    const ModelParams from_trainer = run_trainer(false);
    for (const auto& [name, entry] : params.entries) {
        CHECK(bitwise_equal(entry.value, from_trainer.entries.at(name).value));
    }
}

TEST_CASE("byol epoch trains online nets, updates targets, keeps them grad-free") {
    SplitSemanticsSpec spec;
    spec.num_classes = 2;
    spec.dim = 4;
    spec.samples_per_class = 6;
    spec.seed = 18;
    const Dataset data = gen_split_semantics(spec);
    AugmentPipeline pipeline;
    pipeline.view_ops = {AugmentOp{AugKind::kGaussianJitter, 0.1}};

    TrainState state = make_state(BaseObjective::kByol, 0.1, 0.05, 23);
    state.ema_momentum = 0.9;
    const ModelParams pre = state.params;
    BatchStream stream(data, 4, pipeline, 3);
    const EpochStats stats = train_epoch(state, stream);
    CHECK(stats.batches == 3);
    CHECK(std::isfinite(stats.ssl));
    // Targets moved via EMA, but only as convex blends.
    CHECK_FALSE(group_bytes_equal(state.params, pre, ParamGroup::kTarget));
    CHECK_FALSE(group_bytes_equal(state.params, pre, ParamGroup::kPredictor));
}

TEST_CASE("joint single-level step moves every trainable group") {
    TrainState state = make_state(BaseObjective::kSimclr, 0.3, 0.2);
    state.bilevel = false;
    SplitSemanticsSpec spec;
    spec.num_classes = 2;
    spec.dim = 4;
    spec.samples_per_class = 8;
    spec.seed = 19;
    const Dataset data = gen_split_semantics(spec);
    AugmentPipeline pipeline;
    pipeline.view_ops = {AugmentOp{AugKind::kGaussianJitter, 0.1}};
    const ModelParams pre = state.params;
    BatchStream stream(data, 4, pipeline, 5);
    train_epoch(state, stream);
    CHECK_FALSE(group_bytes_equal(state.params, pre, ParamGroup::kTheta));
    CHECK_FALSE(group_bytes_equal(state.params, pre, ParamGroup::kXi));
}
