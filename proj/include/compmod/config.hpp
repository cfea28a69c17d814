#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "compmod/data.hpp"
#include "compmod/losses.hpp"
#include "compmod/models.hpp"
#include "compmod/trainer.hpp"

namespace compmod {

enum class DatasetKind { kSplitSemantics, kIdx };

std::string to_string(DatasetKind k);

struct DatasetConfig {
    DatasetKind kind = DatasetKind::kSplitSemantics;
    // split_semantics
    SplitSemanticsSpec spec;
    std::size_t test_samples_per_class = 100;
    std::string cache_dir;  // optional: cache generated data here
    // idx
    std::string images_path, labels_path;
    std::string test_images_path, test_labels_path;
    std::size_t limit = 0;       // use only the first N training samples (0 = all)
    std::size_t test_limit = 0;
};

struct ModelConfig {
    std::size_t encoder_hidden = 256;
    std::size_t repr_dim = 64;   // d'
    std::size_t proj_hidden = 64;
    std::size_t embed_dim = 32;  // d
};

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 128;
    double lr = 0.05;
    std::uint64_t seed = 1;
    double ema_momentum = 0.99;
    bool bilevel = true;
    HypergradMode hypergrad;
    std::size_t eval_every = 0;       // 0 = no in-training evaluation
    std::size_t eval_max_samples = 0; // 0 = use full splits
};

struct OutputConfig {
    std::string dir = "out";
    std::string metrics_format = "csv";
};

struct RunConfig {
    DatasetConfig dataset;
    ModelConfig model;
    LossConfig loss;
    FusionStrategy fusion;
    bool compmod_enabled = true;
    AugmentPipeline augment;
    TrainConfig train;
    OutputConfig output;
};

// Parses, validates and fills defaults. Unknown keys are rejected; every
// offending key is listed in one ConfigError. Parse errors report
// line/column. Referenced dataset paths must exist.
RunConfig load_config(const std::string& path);
RunConfig parse_config_json(const std::string& text, const std::string& origin);

// Canonical effective-config serialization (all defaults made explicit).
// Reloading it yields an identical RunConfig.
std::string effective_config_json(const RunConfig& cfg);

// Materializes train/test datasets per the dataset section.
struct SplitData {
    Dataset train;
    Dataset test;
};
SplitData build_datasets(const DatasetConfig& cfg);

}  // namespace compmod
