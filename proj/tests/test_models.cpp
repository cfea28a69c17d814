#include <cmath>

#include "compmod/errors.hpp"
#include "compmod/models.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace compmod;
using testsup::bitwise_equal;
using testsup::random_matrix;

namespace {

ModelDims small_dims() {
    ModelDims dims;
    dims.input = 4;
    dims.encoder_hidden = 3;
    dims.repr = 3;
    dims.proj_hidden = 3;
    dims.embed = 2;
    return dims;
}

}  // namespace

TEST_CASE("init_params is deterministic and zero-biased") {
    const FusionStrategy strategy;
    const ModelParams a = init_params(small_dims(), strategy, true, true, 7);
    const ModelParams b = init_params(small_dims(), strategy, true, true, 7);
    REQUIRE(a.entries.size() == b.entries.size());
    for (const auto& [name, entry] : a.entries) {
        CHECK(bitwise_equal(entry.value, b.entries.at(name).value));
        if (name.find(".b") != std::string::npos) {
            CHECK(frobenius_norm(entry.value) == 0.0);
        }
    }
    // Targets start as byte copies of the online nets.
    CHECK(bitwise_equal(a.entries.at("theta.w0").value,
                        a.entries.at("target_theta.w0").value));
}

TEST_CASE("init keeps sibling networks independent of optional nets") {
    const FusionStrategy strategy;
    const ModelParams with = init_params(small_dims(), strategy, true, true, 9);
    const ModelParams without = init_params(small_dims(), strategy, false, false, 9);
    CHECK(bitwise_equal(with.entries.at("theta.w0").value,
                        without.entries.at("theta.w0").value));
    CHECK(bitwise_equal(with.entries.at("phi.w1").value,
                        without.entries.at("phi.w1").value));
}

TEST_CASE("weight sample mean is near zero") {
    // Uniform(-b, b) with b = 1/sqrt(fan_in): the empirical mean over N draws
    // should land within 3*sigma/sqrt(N) of zero.
    ModelDims dims;
    dims.input = 500;
    dims.encoder_hidden = 200;  // 100k draws in theta.w0
    dims.repr = 3;
    dims.proj_hidden = 3;
    dims.embed = 2;
    const ModelParams params = init_params(dims, FusionStrategy{}, false, false, 11);
    const Matrix& w = params.entries.at("theta.w0").value;
    double mean = 0.0;
    for (double v : w.vec()) mean += v;
    mean /= static_cast<double>(w.size());
    const double bound = 1.0 / std::sqrt(500.0);
    const double sigma = bound / std::sqrt(3.0);
    CHECK(std::abs(mean) < 3.0 * sigma / std::sqrt(static_cast<double>(w.size())));
}

TEST_CASE("mlp_forward zero and identity layers") {
    ModelParams params;
    params.specs["net"] = MlpSpec{{2, 2}};
    params.entries["net.w0"] = {Matrix(2, 2), ParamGroup::kTheta};
    params.entries["net.b0"] = {Matrix(1, 2), ParamGroup::kTheta};

    const Matrix x = random_matrix(3, 2, 60);
    CHECK(frobenius_norm(mlp_forward_plain(params, "net", x)) == 0.0);

    params.entries["net.w0"] = {Matrix::identity(2), ParamGroup::kTheta};
    CHECK(bitwise_equal(mlp_forward_plain(params, "net", x), x));
}

TEST_CASE("mlp_forward rejects width mismatch") {
    const ModelParams params = init_params(small_dims(), FusionStrategy{}, false, false, 1);
    CHECK_THROWS_AS(mlp_forward_plain(params, "theta", Matrix(2, 5)), DimensionError);
}

TEST_CASE("mlp weight gradients match finite differences") {
    const ModelParams params = init_params(small_dims(), FusionStrategy{}, false, false, 3);
    const Matrix x = random_matrix(5, 4, 61);
    for (const std::string name : {"theta.w0", "theta.b0", "theta.w1"}) {
        const Matrix w0 = params.entries.at(name).value;
        const double err = grad_check(
            [&](Tape& t, Value wx) {
                ModelParams local = params;
                auto leaves = make_param_leaves(t, local, {});
                leaves[name] = wx;
                Value h = mlp_forward(local, leaves, "theta", t.constant(x));
                return mean_all(mul(h, h));
            },
            w0);
        CHECK(err < 1e-5);
    }
}

TEST_CASE("tape and plain forward agree") {
    const ModelParams params = init_params(small_dims(), FusionStrategy{}, false, false, 5);
    const Matrix x = random_matrix(6, 4, 62);
    Tape t;
    auto leaves = make_param_leaves(t, params, {});
    const Matrix via_tape = mlp_forward(params, leaves, "theta", t.constant(x)).val();
    CHECK(bitwise_equal(via_tape, mlp_forward_plain(params, "theta", x)));
}

TEST_CASE("fusion head widths follow the strategy") {
    ModelDims dims;
    dims.input = 8;
    dims.repr = 512;
    dims.embed = 128;
    FusionStrategy concat{FusionKind::kConcatRepr, 0.5, false};
    const MlpSpec spec = fusion_head_spec(concat, dims);
    CHECK(spec.widths == std::vector<std::size_t>{1024, 512, 128});

    FusionStrategy mixup{FusionKind::kMixup, 0.5, false};
    CHECK(fusion_head_spec(mixup, dims).widths == std::vector<std::size_t>{512, 512, 128});

    FusionStrategy embed{FusionKind::kConcatEmbed, 0.5, false};
    CHECK(fusion_head_spec(embed, dims).widths == std::vector<std::size_t>{256, 128, 128});
}

TEST_CASE("mixup endpoints and symmetry before the head") {
    const Matrix h1 = random_matrix(4, 3, 63);
    const Matrix h2 = random_matrix(4, 3, 64);

    Tape t;
    FusionStrategy one{FusionKind::kMixup, 1.0, false};
    CHECK(bitwise_equal(fuse_pre_head(t.leaf(h1, false), t.leaf(h2, false), one).val(),
                        h1));

    Tape t2;
    FusionStrategy half{FusionKind::kMixup, 0.5, false};
    CHECK(testsup::max_abs_diff(
              fuse_pre_head(t2.leaf(h1, false), t2.leaf(h1, false), half).val(), h1) <
          1e-15);

    Tape t3;
    FusionStrategy a{FusionKind::kMixup, 0.3, false};
    FusionStrategy b{FusionKind::kMixup, 0.7, false};
    const Matrix ab = fuse_pre_head(t3.leaf(h1, false), t3.leaf(h2, false), a).val();
    const Matrix ba = fuse_pre_head(t3.leaf(h2, false), t3.leaf(h1, false), b).val();
    CHECK(testsup::max_abs_diff(ab, ba) < 1e-15);
}

TEST_CASE("fuse is permutation equivariant") {
    const std::size_t n = 5;
    ModelDims dims = small_dims();
    FusionStrategy strategy{FusionKind::kConcatRepr, 0.5, false};
    const ModelParams params = init_params(dims, strategy, true, false, 13);
    const Matrix h1 = random_matrix(n, dims.repr, 65);
    const Matrix h2 = random_matrix(n, dims.repr, 66);

    auto run = [&](const Matrix& a, const Matrix& b) {
        Tape t;
        auto leaves = make_param_leaves(t, params, {});
        return fuse(t.leaf(a, false), t.leaf(b, false), strategy, params, leaves).val();
    };
    const Matrix base = run(h1, h2);

    std::vector<std::size_t> perm{3, 0, 4, 1, 2};
    Matrix p1(n, dims.repr), p2(n, dims.repr);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < dims.repr; ++j) {
            p1(i, j) = h1(perm[i], j);
            p2(i, j) = h2(perm[i], j);
        }
    }
    const Matrix permuted = run(p1, p2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < base.cols(); ++j) {
            CHECK(permuted(i, j) == base(perm[i], j));
        }
    }
}

TEST_CASE("fuse rejects a missing head") {
    const ModelParams params = init_params(small_dims(), FusionStrategy{}, false, false, 1);
    Tape t;
    auto leaves = make_param_leaves(t, params, {});
    Value h = t.leaf(random_matrix(2, 3, 67), false);
    CHECK_THROWS_AS(fuse(h, h, FusionStrategy{}, params, leaves), ConfigError);
}
