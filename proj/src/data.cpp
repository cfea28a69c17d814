#include "compmod/data.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "compmod/errors.hpp"
#include "json.hpp"

namespace compmod {

void SplitSemanticsSpec::validate() const {
    if (num_classes < 2) throw ConfigError("split_semantics: num_classes must be >= 2");
    if (dim % 2 != 0 || dim == 0) throw ConfigError("split_semantics: dim must be even");
    if (samples_per_class < 1) {
        throw ConfigError("split_semantics: samples_per_class must be >= 1");
    }
    if (noise_scale < 0.0) throw ConfigError("split_semantics: noise_scale must be >= 0");
    if (!(mask_width > 0.0 && mask_width < 1.0)) {
        throw ConfigError("split_semantics: mask_width must lie in (0, 1)");
    }
}

Dataset gen_split_semantics(const SplitSemanticsSpec& spec) {
    spec.validate();
    const std::size_t n = spec.samples_per_class * static_cast<std::size_t>(spec.num_classes);

    // Per class the row [mu_A, mu_B] holds the two half-width center vectors;
    // centers come from their own stream so adding classes never reshuffles
    // existing noise.
    Rng center_rng(derive_seed(spec.seed, "split_semantics.centers"));
    Matrix centers(static_cast<std::size_t>(spec.num_classes), spec.dim);
    for (std::size_t c = 0; c < centers.rows(); ++c) {
        for (std::size_t j = 0; j < spec.dim; ++j) {
            centers(c, j) = spec.center_scale * center_rng.normal();
        }
    }

    Rng noise_rng(derive_seed(spec.seed, "split_semantics.noise"));
    Dataset data;
    data.inputs = Matrix(n, spec.dim);
    data.labels.resize(n);
    data.num_classes = spec.num_classes;
    std::size_t row = 0;
    for (int c = 0; c < spec.num_classes; ++c) {
        for (std::size_t s = 0; s < spec.samples_per_class; ++s, ++row) {
            data.labels[row] = c;
            for (std::size_t j = 0; j < spec.dim; ++j) {
                data.inputs(row, j) =
                    centers(static_cast<std::size_t>(c), j) +
                    spec.noise_scale * noise_rng.normal();
            }
        }
    }
    return data;
}

std::string to_string(AugKind k) {
    switch (k) {
        case AugKind::kWindowMask: return "window_mask";
        case AugKind::kGaussianJitter: return "gaussian_jitter";
        case AugKind::kFeatureDrop: return "feature_drop";
        case AugKind::kWindowCrop: return "window_crop";
    }
    return "gaussian_jitter";
}

AugKind aug_kind_from_string(const std::string& s) {
    if (s == "window_mask") return AugKind::kWindowMask;
    if (s == "gaussian_jitter") return AugKind::kGaussianJitter;
    if (s == "feature_drop") return AugKind::kFeatureDrop;
    if (s == "window_crop") return AugKind::kWindowCrop;
    throw ConfigError("unknown augmentation kind '" + s + "'");
}

void AugmentOp::validate() const {
    switch (kind) {
        case AugKind::kWindowMask:
        case AugKind::kWindowCrop:
            if (!(param > 0.0 && param <= 1.0)) {
                throw ConfigError(to_string(kind) + ": width fraction must lie in (0, 1]");
            }
            break;
        case AugKind::kGaussianJitter:
            if (param < 0.0) throw ConfigError("gaussian_jitter: sigma must be >= 0");
            break;
        case AugKind::kFeatureDrop:
            if (!(param >= 0.0 && param <= 1.0)) {
                throw ConfigError("feature_drop: probability must lie in [0, 1]");
            }
            break;
    }
}

std::size_t window_width(std::size_t dim, double fraction) {
    const std::size_t w =
        static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(dim)));
    return std::min(std::max<std::size_t>(w, 1), dim);
}

void apply_window_mask(std::vector<double>& row, std::size_t offset, std::size_t width) {
    for (std::size_t j = offset; j < offset + width && j < row.size(); ++j) row[j] = 0.0;
}

void apply_window_crop(std::vector<double>& row, std::size_t offset, std::size_t width) {
    const double gain = static_cast<double>(row.size()) / static_cast<double>(width);
    for (std::size_t j = 0; j < row.size(); ++j) {
        if (j >= offset && j < offset + width) {
            row[j] *= gain;
        } else {
            row[j] = 0.0;
        }
    }
}

void augment(std::vector<double>& row, const AugmentOp& op, Rng& rng) {
    op.validate();
    const std::size_t dim = row.size();
    switch (op.kind) {
        case AugKind::kWindowMask: {
            const std::size_t w = window_width(dim, op.param);
            const std::size_t offset = rng.bounded(dim - w + 1);
            apply_window_mask(row, offset, w);
            break;
        }
        case AugKind::kWindowCrop: {
            const std::size_t w = window_width(dim, op.param);
            const std::size_t offset = rng.bounded(dim - w + 1);
            apply_window_crop(row, offset, w);
            break;
        }
        case AugKind::kGaussianJitter:
            for (double& v : row) v += op.param * rng.normal();
            break;
        case AugKind::kFeatureDrop:
            for (double& v : row) {
                if (rng.uniform() < op.param) v = 0.0;
            }
            break;
    }
}

void AugmentPipeline::validate() const {
    if (complementary_mask && !(mask_width > 0.0 && mask_width < 1.0)) {
        throw ConfigError("augment: mask_width must lie in (0, 1)");
    }
    for (const AugmentOp& op : view_ops) op.validate();
}

BatchStream::BatchStream(const Dataset& data, std::size_t batch_size,
                         const AugmentPipeline& pipeline, std::uint64_t epoch_seed)
    : data_(data), batch_size_(batch_size), pipeline_(pipeline), rng_(epoch_seed) {
    if (batch_size_ < 2) throw ContractError("BatchStream: batch size must be >= 2");
    if (data_.size() < batch_size_) {
        throw ContractError("BatchStream: dataset (" + std::to_string(data_.size()) +
                            ") smaller than batch size (" + std::to_string(batch_size_) +
                            ")");
    }
    pipeline_.validate();
    order_.resize(data_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    rng_.shuffle(order_);
}

ViewBatch BatchStream::next() {
    if (done()) throw ContractError("BatchStream: exhausted");
    const std::size_t dim = data_.dim();
    ViewBatch batch;
    batch.x1 = Matrix(batch_size_, dim);
    batch.x2 = Matrix(batch_size_, dim);
    batch.labels.resize(batch_size_);
    batch.indices.resize(batch_size_);
    batch.descriptors.resize(batch_size_);

    const std::size_t base = next_batch_ * batch_size_;
    for (std::size_t s = 0; s < batch_size_; ++s) {
        const std::size_t idx = order_[base + s];
        batch.indices[s] = idx;
        batch.labels[s] = data_.labels[idx];
        std::vector<double> v1(dim), v2(dim);
        for (std::size_t j = 0; j < dim; ++j) v1[j] = v2[j] = data_.inputs(idx, j);

        std::ostringstream desc;
        if (pipeline_.complementary_mask) {
            const std::size_t w = window_width(dim, pipeline_.mask_width);
            const std::size_t offset = rng_.bounded(dim - w + 1);
            apply_window_mask(v1, offset, w);
            apply_window_crop(v2, offset, w);
            desc << "cmask[o=" << offset << ",w=" << w << "]";
        }
        for (const AugmentOp& op : pipeline_.view_ops) {
            augment(v1, op, rng_);
            desc << " v1:" << to_string(op.kind) << "(" << op.param << ")";
        }
        for (const AugmentOp& op : pipeline_.view_ops) {
            augment(v2, op, rng_);
            desc << " v2:" << to_string(op.kind) << "(" << op.param << ")";
        }
        batch.descriptors[s] = desc.str();
        for (std::size_t j = 0; j < dim; ++j) {
            batch.x1(s, j) = v1[j];
            batch.x2(s, j) = v2[j];
        }
    }
    ++next_batch_;
    return batch;
}

namespace {

std::uint32_t read_be32(std::ifstream& in, const std::string& path) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    if (!in) throw FormatError("idx: truncated header in " + path);
    return (static_cast<std::uint32_t>(bytes[0]) << 24) |
           (static_cast<std::uint32_t>(bytes[1]) << 16) |
           (static_cast<std::uint32_t>(bytes[2]) << 8) |
           static_cast<std::uint32_t>(bytes[3]);
}

void write_be32(std::ofstream& out, std::uint32_t v) {
    unsigned char bytes[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<char*>(bytes), 4);
}

constexpr std::uint32_t kImagesMagic = 2051;
constexpr std::uint32_t kLabelsMagic = 2049;

}  // namespace

Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    std::ifstream img(images_path, std::ios::binary);
    if (!img) throw IoError("idx: cannot open " + images_path);
    std::ifstream lbl(labels_path, std::ios::binary);
    if (!lbl) throw IoError("idx: cannot open " + labels_path);

    const std::uint32_t img_magic = read_be32(img, images_path);
    if (img_magic != kImagesMagic) {
        throw FormatError("idx: bad image magic " + std::to_string(img_magic) +
                          " (expected 2051) in " + images_path);
    }
    const std::uint32_t lbl_magic = read_be32(lbl, labels_path);
    if (lbl_magic != kLabelsMagic) {
        throw FormatError("idx: bad label magic " + std::to_string(lbl_magic) +
                          " (expected 2049) in " + labels_path);
    }
    const std::uint32_t count = read_be32(img, images_path);
    const std::uint32_t rows = read_be32(img, images_path);
    const std::uint32_t cols = read_be32(img, images_path);
    const std::uint32_t label_count = read_be32(lbl, labels_path);
    if (count != label_count) {
        throw FormatError("idx: image count " + std::to_string(count) +
                          " != label count " + std::to_string(label_count));
    }

    const std::size_t dim = static_cast<std::size_t>(rows) * cols;
    Dataset data;
    data.inputs = Matrix(count, dim);
    data.labels.resize(count);
    std::vector<unsigned char> buf(dim);
    int max_label = 0;
    for (std::uint32_t i = 0; i < count; ++i) {
        img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(dim));
        if (!img) throw FormatError("idx: truncated image data in " + images_path);
        for (std::size_t j = 0; j < dim; ++j) {
            data.inputs(i, j) = static_cast<double>(buf[j]) / 255.0;
        }
        unsigned char l;
        lbl.read(reinterpret_cast<char*>(&l), 1);
        if (!lbl) throw FormatError("idx: truncated label data in " + labels_path);
        data.labels[i] = static_cast<int>(l);
        max_label = std::max(max_label, static_cast<int>(l));
    }
    data.num_classes = max_label + 1;
    return data;
}

void save_idx(const std::string& images_path, const std::string& labels_path,
              const std::vector<std::vector<std::uint8_t>>& images, std::size_t rows,
              std::size_t cols, const std::vector<std::uint8_t>& labels) {
    if (images.size() != labels.size()) {
        throw ContractError("save_idx: image/label count mismatch");
    }
    std::ofstream img(images_path, std::ios::binary);
    if (!img) throw IoError("idx: cannot write " + images_path);
    write_be32(img, kImagesMagic);
    write_be32(img, static_cast<std::uint32_t>(images.size()));
    write_be32(img, static_cast<std::uint32_t>(rows));
    write_be32(img, static_cast<std::uint32_t>(cols));
    for (const auto& image : images) {
        if (image.size() != rows * cols) throw ContractError("save_idx: bad image size");
        img.write(reinterpret_cast<const char*>(image.data()),
                  static_cast<std::streamsize>(image.size()));
    }
    std::ofstream lbl(labels_path, std::ios::binary);
    if (!lbl) throw IoError("idx: cannot write " + labels_path);
    write_be32(lbl, kLabelsMagic);
    write_be32(lbl, static_cast<std::uint32_t>(labels.size()));
    lbl.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
}

void gen_glyph_images(const GlyphImageSpec& spec,
                      std::vector<std::vector<std::uint8_t>>& images,
                      std::vector<std::uint8_t>& labels) {
    if (spec.num_classes < 2 || spec.num_classes > 255) {
        throw ConfigError("glyphs: num_classes must lie in [2, 255]");
    }
    const std::size_t h = spec.rows, w = spec.cols;

    // Class templates: four soft blobs each.
    Rng template_rng(derive_seed(spec.seed, "glyphs.templates"));
    std::vector<std::vector<double>> templates(
        static_cast<std::size_t>(spec.num_classes), std::vector<double>(h * w, 0.0));
    for (auto& tpl : templates) {
        for (int bump = 0; bump < 4; ++bump) {
            const double cy = template_rng.uniform(1.0, static_cast<double>(h) - 2.0);
            const double cx = template_rng.uniform(1.0, static_cast<double>(w) - 2.0);
            const double amp = template_rng.uniform(0.5, 1.0);
            const double radius = template_rng.uniform(1.5, 3.5);
            for (std::size_t y = 0; y < h; ++y) {
                for (std::size_t x = 0; x < w; ++x) {
                    const double dy = static_cast<double>(y) - cy;
                    const double dx = static_cast<double>(x) - cx;
                    tpl[y * w + x] +=
                        amp * std::exp(-(dx * dx + dy * dy) / (2.0 * radius * radius));
                }
            }
        }
        for (double& v : tpl) v = std::min(v, 1.0);
    }

    Rng sample_rng(derive_seed(spec.seed, "glyphs.samples"));
    images.clear();
    labels.clear();
    const std::size_t total =
        static_cast<std::size_t>(spec.num_classes) * spec.samples_per_class;
    images.reserve(total);
    labels.reserve(total);
    for (int c = 0; c < spec.num_classes; ++c) {
        const auto& tpl = templates[static_cast<std::size_t>(c)];
        for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
            const int shift_span = 2 * spec.max_shift + 1;
            const int dy = static_cast<int>(sample_rng.bounded(
                               static_cast<std::uint64_t>(shift_span))) -
                           spec.max_shift;
            const int dx = static_cast<int>(sample_rng.bounded(
                               static_cast<std::uint64_t>(shift_span))) -
                           spec.max_shift;
            const double gain = sample_rng.uniform(0.7, 1.3);
            std::vector<std::uint8_t> img(h * w, 0);
            for (std::size_t y = 0; y < h; ++y) {
                for (std::size_t x = 0; x < w; ++x) {
                    const long sy = static_cast<long>(y) - dy;
                    const long sx = static_cast<long>(x) - dx;
                    double v = 0.0;
                    if (sy >= 0 && sy < static_cast<long>(h) && sx >= 0 &&
                        sx < static_cast<long>(w)) {
                        v = gain * tpl[static_cast<std::size_t>(sy) * w +
                                       static_cast<std::size_t>(sx)];
                    }
                    v += spec.noise * sample_rng.normal();
                    v = std::min(std::max(v, 0.0), 1.0);
                    img[y * w + x] = static_cast<std::uint8_t>(std::lround(v * 255.0));
                }
            }
            images.push_back(std::move(img));
            labels.push_back(static_cast<std::uint8_t>(c));
        }
    }
}

namespace {

void write_le_double(std::ofstream& out, double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<char*>(bytes), 8);
}

double read_le_double(std::ifstream& in) {
    unsigned char bytes[8];
    in.read(reinterpret_cast<char*>(bytes), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

}  // namespace

void save_dataset_cache(const std::string& path_prefix, const Dataset& data,
                        const std::string& spec_json) {
    const std::string bin_path = path_prefix + ".bin";
    const std::string tmp_path = bin_path + ".tmp";
    {
        std::ofstream out(tmp_path, std::ios::binary);
        if (!out) throw IoError("cache: cannot write " + tmp_path);
        for (double v : data.inputs.vec()) write_le_double(out, v);
        for (int l : data.labels) write_le_double(out, static_cast<double>(l));
    }
    std::filesystem::rename(tmp_path, bin_path);

    nlohmann::json sidecar;
    sidecar["rows"] = data.inputs.rows();
    sidecar["cols"] = data.inputs.cols();
    sidecar["num_classes"] = data.num_classes;
    sidecar["spec"] = nlohmann::json::parse(spec_json);
    const std::string json_path = path_prefix + ".json";
    const std::string json_tmp = json_path + ".tmp";
    {
        std::ofstream out(json_tmp);
        if (!out) throw IoError("cache: cannot write " + json_tmp);
        out << sidecar.dump(2) << "\n";
    }
    std::filesystem::rename(json_tmp, json_path);
}

bool dataset_cache_exists(const std::string& path_prefix) {
    return std::filesystem::exists(path_prefix + ".bin") &&
           std::filesystem::exists(path_prefix + ".json");
}

Dataset load_dataset_cache(const std::string& path_prefix) {
    std::ifstream meta(path_prefix + ".json");
    if (!meta) throw IoError("cache: cannot open " + path_prefix + ".json");
    nlohmann::json sidecar;
    try {
        meta >> sidecar;
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("cache: bad sidecar JSON: " + std::string(e.what()));
    }
    const std::size_t rows = sidecar.at("rows").get<std::size_t>();
    const std::size_t cols = sidecar.at("cols").get<std::size_t>();

    std::ifstream in(path_prefix + ".bin", std::ios::binary);
    if (!in) throw IoError("cache: cannot open " + path_prefix + ".bin");
    Dataset data;
    data.inputs = Matrix(rows, cols);
    for (double& v : data.inputs.vec()) v = read_le_double(in);
    data.labels.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        data.labels[i] = static_cast<int>(read_le_double(in));
    }
    if (!in) throw FormatError("cache: truncated " + path_prefix + ".bin");
    data.num_classes = sidecar.at("num_classes").get<int>();
    return data;
}

}  // namespace compmod
