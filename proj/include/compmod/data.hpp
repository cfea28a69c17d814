#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "compmod/matrix.hpp"
#include "compmod/rng.hpp"

namespace compmod {

struct Dataset {
    Matrix inputs;            // N x D
    std::vector<int> labels;  // evaluation only; never visible to a loss
    int num_classes = 0;

    std::size_t size() const { return inputs.rows(); }
    std::size_t dim() const { return inputs.cols(); }
};

// Synthetic dataset whose label information is split across the two halves
// of the feature vector: class y gets centers mu_A (first D/2 features) and
// mu_B (second D/2). A window mask then destroys one semantic block per
// view, which is exactly the scenario the comprehensive-embedding machinery
// is supposed to fix.
struct SplitSemanticsSpec {
    int num_classes = 10;
    std::size_t dim = 64;  // must be even
    std::size_t samples_per_class = 500;
    double center_scale = 1.0;
    double noise_scale = 0.1;
    double mask_width = 0.5;  // used by the complementary-mask pipeline
    std::uint64_t seed = 1;

    void validate() const;
};

Dataset gen_split_semantics(const SplitSemanticsSpec& spec);

enum class AugKind { kWindowMask, kGaussianJitter, kFeatureDrop, kWindowCrop };

std::string to_string(AugKind k);
AugKind aug_kind_from_string(const std::string& s);

// kind / one scalar parameter: width fraction for window ops, sigma for
// jitter, drop probability for feature_drop.
struct AugmentOp {
    AugKind kind = AugKind::kGaussianJitter;
    double param = 0.1;

    void validate() const;
};

std::size_t window_width(std::size_t dim, double fraction);  // ceil(w*D)

// Applies op to one row in place; never changes the dimension.
void augment(std::vector<double>& row, const AugmentOp& op, Rng& rng);

// Window ops with an explicit offset (the complementary pipeline couples the
// two views' offsets).
void apply_window_mask(std::vector<double>& row, std::size_t offset, std::size_t width);
void apply_window_crop(std::vector<double>& row, std::size_t offset, std::size_t width);

struct AugmentPipeline {
    // When true the pair shares one offset draw: view 1 zeroes the window,
    // view 2 keeps only that window (crop), so the views' surviving feature
    // sets are disjoint.
    bool complementary_mask = false;
    double mask_width = 0.5;
    std::vector<AugmentOp> view_ops;  // applied to each view independently

    void validate() const;
};

struct ViewBatch {
    Matrix x1, x2;                    // n x D
    std::vector<int> labels;          // evaluation only
    std::vector<std::size_t> indices; // source rows, provenance
    std::vector<std::string> descriptors;  // one per sample: what was applied
};

// Deterministic epoch stream: seeded shuffle, two independent augmentation
// draws per sample, last partial batch dropped.
class BatchStream {
public:
    BatchStream(const Dataset& data, std::size_t batch_size,
                const AugmentPipeline& pipeline, std::uint64_t epoch_seed);

    std::size_t num_batches() const { return order_.size() / batch_size_; }
    bool done() const { return next_batch_ >= num_batches(); }
    ViewBatch next();

private:
    const Dataset& data_;
    std::size_t batch_size_;
    AugmentPipeline pipeline_;
    Rng rng_;
    std::vector<std::size_t> order_;
    std::size_t next_batch_ = 0;
};

// IDX (MNIST-format) ingestion: big-endian magic 2051 + (count, rows, cols)
// and unsigned bytes for images, magic 2049 + count for labels. Pixels are
// scaled to [0,1] and flattened row-major.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);

// Writer for the same format (test fixtures and synthetic corpora).
void save_idx(const std::string& images_path, const std::string& labels_path,
              const std::vector<std::vector<std::uint8_t>>& images, std::size_t rows,
              std::size_t cols, const std::vector<std::uint8_t>& labels);

// Synthetic image classes for IDX corpora: each class is a template of a few
// soft blobs, samples add intensity wobble, a small translation and pixel
// noise. Stands in for handwritten-digit files when none are on disk.
struct GlyphImageSpec {
    int num_classes = 10;
    std::size_t rows = 16;
    std::size_t cols = 16;
    std::size_t samples_per_class = 1000;
    double noise = 0.08;
    int max_shift = 2;
    std::uint64_t seed = 1;
};

void gen_glyph_images(const GlyphImageSpec& spec,
                      std::vector<std::vector<std::uint8_t>>& images,
                      std::vector<std::uint8_t>& labels);

// Dataset cache: raw little-endian doubles next to a JSON sidecar recording
// shape, seed and generating spec.
void save_dataset_cache(const std::string& path_prefix, const Dataset& data,
                        const std::string& spec_json);
Dataset load_dataset_cache(const std::string& path_prefix);
bool dataset_cache_exists(const std::string& path_prefix);

}  // namespace compmod
