#include <algorithm>
#include <filesystem>
#include <fstream>

#include "compmod/checkpoint.hpp"
#include "compmod/cli.hpp"
#include "compmod/config.hpp"
#include "compmod/errors.hpp"
#include "compmod/eval.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace compmod;
using testsup::bitwise_equal;

namespace {

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "compmod_test_config";
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("empty loss section fills the documented defaults") {
    const RunConfig cfg = parse_config_json("{}", "<inline>");
    CHECK(cfg.loss.tau == 0.5);
    CHECK(cfg.loss.lambda1 == 0.1);
    CHECK(cfg.loss.lambda2 == 0.01);
    CHECK(cfg.loss.taylor_m == 4);
    CHECK_FALSE(cfg.loss.mu.has_value());
    CHECK(cfg.compmod_enabled);
    CHECK(cfg.fusion.kind == FusionKind::kConcatRepr);
    CHECK(cfg.train.batch_size == 128);
    CHECK(cfg.train.lr == 0.05);
}

TEST_CASE("out-of-range values are rejected by name") {
    CHECK_THROWS_WITH_AS(parse_config_json(R"({"loss": {"lambda1": -1}})", "<inline>"),
                         doctest::Contains("lambda1"), ConfigError);
}

TEST_CASE("unknown keys are listed together") {
    try {
        parse_config_json(R"({"loss": {"lambdaX": 1}, "mystery": {}, "train": {"epochz": 3}})",
                          "<inline>");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("lambdaX") != std::string::npos);
        CHECK(msg.find("mystery") != std::string::npos);
        CHECK(msg.find("epochz") != std::string::npos);
    }
}

TEST_CASE("parse errors report line and column") {
    try {
        parse_config_json("{\n  \"loss\": {\n  bad\n}}", "<inline>");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("line 3") != std::string::npos);
        CHECK(msg.find("column") != std::string::npos);
    }
}

TEST_CASE("effective config round-trips to an identical RunConfig") {
    const RunConfig cfg = parse_config_json(
        R"({"loss": {"lambda1": 0.25, "mu": 2.5, "base": "barlow_twins"},
            "train": {"epochs": 3, "batch_size": 16},
            "augment": {"complementary_mask": false,
                        "view_ops": [{"kind": "window_mask", "param": 0.4}]}})",
        "<inline>");
    const std::string emitted = effective_config_json(cfg);
    const RunConfig reloaded = parse_config_json(emitted, "<roundtrip>");
    CHECK(effective_config_json(reloaded) == emitted);
    CHECK(reloaded.loss.mu == cfg.loss.mu);
    CHECK_FALSE(reloaded.loss.lambda_code.has_value());
    CHECK(reloaded.augment.view_ops.size() == 1);
    CHECK(reloaded.augment.view_ops[0].kind == AugKind::kWindowMask);
}

TEST_CASE("idx dataset paths must exist at load time") {
    CHECK_THROWS_WITH_AS(
        parse_config_json(R"({"dataset": {"kind": "idx",
                                          "images_path": "/nonexistent/images",
                                          "labels_path": "/nonexistent/labels",
                                          "test_images_path": "/nonexistent/ti",
                                          "test_labels_path": "/nonexistent/tl"}})",
                          "<inline>"),
        doctest::Contains("images_path"), ConfigError);
}

TEST_CASE("checkpoint round-trips parameters and loss config bytes") {
    ModelDims dims;
    dims.input = 4;
    dims.encoder_hidden = 3;
    dims.repr = 3;
    dims.proj_hidden = 2;
    dims.embed = 2;
    FusionStrategy strategy;
    ModelParams params = init_params(dims, strategy, true, true, 5);
    LossConfig loss;
    loss.lambda1 = 0.125;
    loss.mu = 7.0;

    const std::string path = (temp_dir() / "model.ckpt").string();
    save_checkpoint(path, params, loss);
    const Checkpoint ck = load_checkpoint(path);

    REQUIRE(ck.params.entries.size() == params.entries.size());
    for (const auto& [name, entry] : params.entries) {
        CHECK(bitwise_equal(entry.value, ck.params.entries.at(name).value));
        CHECK(entry.group == ck.params.entries.at(name).group);
    }
    CHECK(loss_config_hash(ck.loss) == loss_config_hash(loss));

    // Two saves of the same state are byte-identical.
    const std::string path2 = (temp_dir() / "model2.ckpt").string();
    save_checkpoint(path2, params, loss);
    std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
    std::string bytes_a((std::istreambuf_iterator<char>(a)), {});
    std::string bytes_b((std::istreambuf_iterator<char>(b)), {});
    CHECK(bytes_a == bytes_b);

    // Header layout: magic + version.
    CHECK(bytes_a.substr(0, 4) == "CMPD");
    CHECK(bytes_a[4] == 0x01);
}

TEST_CASE("checkpoint loader rejects foreign files") {
    const std::string path = (temp_dir() / "not_a_checkpoint").string();
    std::ofstream(path) << "PLAINTEXT";
    CHECK_THROWS_AS(load_checkpoint(path), CompatError);
    CHECK_THROWS_AS(load_checkpoint((temp_dir() / "missing").string()), IoError);
}

TEST_CASE("loss config hash tracks any field change") {
    LossConfig a;
    LossConfig b = a;
    CHECK(loss_config_hash(a) == loss_config_hash(b));
    b.lambda2 = 0.011;
    CHECK(loss_config_hash(a) != loss_config_hash(b));
    b = a;
    b.mcr_through_zhat = true;
    CHECK(loss_config_hash(a) != loss_config_hash(b));
}

TEST_CASE("metrics csv schema is fixed") {
    CHECK(cli::metrics_header() ==
          "epoch,loss_ssl,loss_mcr,loss_comp,knn_acc,probe_acc,erank_z1,erank_zhat,"
          "wallclock_s");
    cli::MetricsRow row;
    row.epoch = 3;
    row.loss_ssl = 1.5;
    const std::string line = cli::metrics_to_csv(row);
    CHECK(line.substr(0, 2) == "3,");
    CHECK(std::count(line.begin(), line.end(), ',') == 8);
}

TEST_CASE("eval json validator accepts the emitted schema and rejects gaps") {
    const std::string good = R"({
        "knn": {"accuracy": 0.5, "per_class": [0.5], "sample_count": 10},
        "linear_probe": {"accuracy": 0.6, "per_class": [0.6], "sample_count": 10},
        "spectrum": {"h": {"coding_entropy": 1.0, "effective_rank": 2.0},
                      "z": {"coding_entropy": 1.0, "effective_rank": 2.0}},
        "probed_layer": "h",
        "k": 5
    })";
    CHECK_NOTHROW(cli::validate_eval_json(good));
    CHECK_THROWS_WITH_AS(cli::validate_eval_json(R"({"knn": {}})"),
                         doctest::Contains("linear_probe"), FormatError);
}

TEST_CASE("split data builder keeps train and test aligned with centers") {
    DatasetConfig cfg;
    cfg.kind = DatasetKind::kSplitSemantics;
    cfg.spec.num_classes = 3;
    cfg.spec.dim = 8;
    cfg.spec.samples_per_class = 10;
    cfg.spec.noise_scale = 0.05;
    cfg.spec.center_scale = 2.0;
    cfg.spec.seed = 9;
    cfg.test_samples_per_class = 4;
    const SplitData data = build_datasets(cfg);
    CHECK(data.train.size() == 30);
    CHECK(data.test.size() == 12);
    // Same class centers: a nearest-centroid rule trained on train classifies
    // test perfectly at this noise level.
    const ProbeResult r = linear_probe(data.train.inputs, data.train.labels,
                                       data.test.inputs, data.test.labels, 300, 0.1, 0);
    CHECK(r.accuracy >= 0.99);
}
