#include "compmod/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "compmod/errors.hpp"
#include "json.hpp"

namespace compmod {

namespace {

using nlohmann::json;

// Collects every complaint before throwing, so a bad config reports all of
// its problems at once.
struct Issues {
    std::vector<std::string> items;

    void add(const std::string& msg) { items.push_back(msg); }
    void throw_if_any(const std::string& origin) const {
        if (items.empty()) return;
        std::ostringstream os;
        os << "config " << origin << ": " << items.size() << " problem(s):";
        for (const auto& item : items) os << "\n  - " << item;
        throw ConfigError(os.str());
    }
};

struct Section {
    Section(const json* obj_in, std::string prefix_in, Issues* issues_in)
        : obj(obj_in), prefix(std::move(prefix_in)), issues(issues_in) {}

    const json* obj;
    std::string prefix;
    Issues* issues;
    std::set<std::string> seen;

    bool has(const std::string& key) {
        seen.insert(key);
        return obj != nullptr && obj->contains(key);
    }

    template <typename T>
    T get(const std::string& key, T fallback) {
        if (!has(key)) return fallback;
        try {
            return obj->at(key).get<T>();
        } catch (const json::exception&) {
            issues->add(prefix + key + ": wrong type");
            return fallback;
        }
    }

    const json* child(const std::string& key) {
        if (!has(key)) return nullptr;
        if (!obj->at(key).is_object()) {
            issues->add(prefix + key + ": expected an object");
            return nullptr;
        }
        return &obj->at(key);
    }

    void finish() {
        if (obj == nullptr) return;
        for (const auto& [key, value] : obj->items()) {
            if (seen.find(key) == seen.end()) {
                issues->add(prefix + key + ": unknown key");
            }
        }
    }
};

void check_positive(double v, const std::string& key, Issues& issues) {
    if (!(v > 0.0)) issues.add(key + ": must be > 0");
}

void check_nonnegative(double v, const std::string& key, Issues& issues) {
    if (v < 0.0) issues.add(key + ": must be >= 0");
}

void check_path(const std::string& p, const std::string& key, Issues& issues) {
    if (p.empty()) {
        issues.add(key + ": required path is missing");
    } else if (!std::filesystem::exists(p)) {
        issues.add(key + ": path does not exist: " + p);
    }
}

std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace

std::string to_string(DatasetKind k) {
    return k == DatasetKind::kSplitSemantics ? "split_semantics" : "idx";
}

RunConfig parse_config_json(const std::string& text, const std::string& origin) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col(text, e.byte > 0 ? e.byte - 1 : 0);
        throw ConfigError("config " + origin + ": parse error at line " +
                          std::to_string(line) + ", column " + std::to_string(col) +
                          ": " + e.what());
    }
    if (!root.is_object()) throw ConfigError("config " + origin + ": root must be an object");

    Issues issues;
    RunConfig cfg;
    Section top{&root, "", &issues};

    {
        Section s{top.child("dataset"), "dataset.", &issues};
        const std::string kind = s.get<std::string>("kind", "split_semantics");
        if (kind == "split_semantics") {
            cfg.dataset.kind = DatasetKind::kSplitSemantics;
        } else if (kind == "idx") {
            cfg.dataset.kind = DatasetKind::kIdx;
        } else {
            issues.add("dataset.kind: unknown kind '" + kind + "'");
        }
        cfg.dataset.spec.num_classes = s.get<int>("num_classes", 10);
        cfg.dataset.spec.dim = s.get<std::size_t>("dim", 64);
        cfg.dataset.spec.samples_per_class = s.get<std::size_t>("samples_per_class", 500);
        cfg.dataset.test_samples_per_class =
            s.get<std::size_t>("test_samples_per_class", 100);
        cfg.dataset.spec.center_scale = s.get<double>("center_scale", 1.0);
        cfg.dataset.spec.noise_scale = s.get<double>("noise_scale", 0.1);
        cfg.dataset.spec.mask_width = s.get<double>("mask_width", 0.5);
        cfg.dataset.spec.seed = s.get<std::uint64_t>("seed", 1);
        cfg.dataset.cache_dir = s.get<std::string>("cache_dir", "");
        cfg.dataset.images_path = s.get<std::string>("images_path", "");
        cfg.dataset.labels_path = s.get<std::string>("labels_path", "");
        cfg.dataset.test_images_path = s.get<std::string>("test_images_path", "");
        cfg.dataset.test_labels_path = s.get<std::string>("test_labels_path", "");
        cfg.dataset.limit = s.get<std::size_t>("limit", 0);
        cfg.dataset.test_limit = s.get<std::size_t>("test_limit", 0);
        s.finish();

        if (cfg.dataset.kind == DatasetKind::kSplitSemantics) {
            if (cfg.dataset.spec.num_classes < 2) issues.add("dataset.num_classes: must be >= 2");
            if (cfg.dataset.spec.dim == 0 || cfg.dataset.spec.dim % 2 != 0) {
                issues.add("dataset.dim: must be even and > 0");
            }
            if (!(cfg.dataset.spec.mask_width > 0.0 && cfg.dataset.spec.mask_width < 1.0)) {
                issues.add("dataset.mask_width: must lie in (0, 1)");
            }
            check_nonnegative(cfg.dataset.spec.noise_scale, "dataset.noise_scale", issues);
        } else {
            check_path(cfg.dataset.images_path, "dataset.images_path", issues);
            check_path(cfg.dataset.labels_path, "dataset.labels_path", issues);
            check_path(cfg.dataset.test_images_path, "dataset.test_images_path", issues);
            check_path(cfg.dataset.test_labels_path, "dataset.test_labels_path", issues);
        }
    }

    {
        Section s{top.child("model"), "model.", &issues};
        cfg.model.encoder_hidden = s.get<std::size_t>("encoder_hidden", 256);
        cfg.model.repr_dim = s.get<std::size_t>("repr_dim", 64);
        cfg.model.proj_hidden = s.get<std::size_t>("proj_hidden", 64);
        cfg.model.embed_dim = s.get<std::size_t>("embed_dim", 32);
        s.finish();
        if (cfg.model.encoder_hidden == 0) issues.add("model.encoder_hidden: must be >= 1");
        if (cfg.model.repr_dim == 0) issues.add("model.repr_dim: must be >= 1");
        if (cfg.model.proj_hidden == 0) issues.add("model.proj_hidden: must be >= 1");
        if (cfg.model.embed_dim == 0) issues.add("model.embed_dim: must be >= 1");
    }

    {
        Section s{top.child("loss"), "loss.", &issues};
        try {
            cfg.loss.base = base_objective_from_string(s.get<std::string>("base", "simclr"));
        } catch (const ConfigError& e) {
            issues.add(std::string("loss.base: ") + e.what());
        }
        cfg.loss.tau = s.get<double>("tau", 0.5);
        cfg.loss.lambda1 = s.get<double>("lambda1", 0.1);
        cfg.loss.lambda2 = s.get<double>("lambda2", 0.01);
        if (s.has("mu") && s.obj->at("mu").is_number()) {
            cfg.loss.mu = s.obj->at("mu").get<double>();
        } else if (s.has("mu") && s.obj->at("mu") != json("auto")) {
            issues.add("loss.mu: must be a number or \"auto\"");
        }
        if (s.has("lambda_code") && s.obj->at("lambda_code").is_number()) {
            cfg.loss.lambda_code = s.obj->at("lambda_code").get<double>();
        } else if (s.has("lambda_code") && s.obj->at("lambda_code") != json("auto")) {
            issues.add("loss.lambda_code: must be a number or \"auto\"");
        }
        cfg.loss.eps_sq = s.get<double>("eps_sq", 0.5);
        cfg.loss.taylor_m = s.get<std::size_t>("taylor_m", 4);
        cfg.loss.bt_offdiag = s.get<double>("bt_offdiag", 0.005);
        cfg.loss.mcr_through_zhat = s.get<bool>("mcr_through_zhat", false);
        cfg.loss.counterfactual_weight = s.get<double>("counterfactual_weight", 0.0);
        cfg.compmod_enabled = s.get<bool>("compmod_enabled", true);
        try {
            cfg.fusion.kind =
                fusion_kind_from_string(s.get<std::string>("fusion", "concat_repr"));
        } catch (const ConfigError& e) {
            issues.add(std::string("loss.fusion: ") + e.what());
        }
        cfg.fusion.alpha = s.get<double>("alpha", 0.5);
        cfg.fusion.sample_alpha = s.get<bool>("sample_alpha", false);
        s.finish();

        check_positive(cfg.loss.tau, "loss.tau", issues);
        check_nonnegative(cfg.loss.lambda1, "loss.lambda1", issues);
        check_nonnegative(cfg.loss.lambda2, "loss.lambda2", issues);
        if (cfg.loss.mu) check_positive(*cfg.loss.mu, "loss.mu", issues);
        if (cfg.loss.lambda_code) check_positive(*cfg.loss.lambda_code, "loss.lambda_code", issues);
        check_positive(cfg.loss.eps_sq, "loss.eps_sq", issues);
        if (cfg.loss.taylor_m < 1) issues.add("loss.taylor_m: must be >= 1");
        check_nonnegative(cfg.loss.bt_offdiag, "loss.bt_offdiag", issues);
        check_nonnegative(cfg.loss.counterfactual_weight, "loss.counterfactual_weight",
                          issues);
        if (cfg.fusion.alpha < 0.0 || cfg.fusion.alpha > 1.0) {
            issues.add("loss.alpha: must lie in [0, 1]");
        }
    }

    {
        Section s{top.child("augment"), "augment.", &issues};
        cfg.augment.complementary_mask = s.get<bool>("complementary_mask", true);
        cfg.augment.mask_width = s.get<double>("mask_width", 0.5);
        if (s.has("view_ops")) {
            const json& ops = s.obj->at("view_ops");
            if (!ops.is_array()) {
                issues.add("augment.view_ops: expected an array");
            } else {
                cfg.augment.view_ops.clear();
                for (std::size_t i = 0; i < ops.size(); ++i) {
                    Section op{&ops[i], "augment.view_ops[" + std::to_string(i) + "].",
                               &issues};
                    AugmentOp a;
                    try {
                        a.kind = aug_kind_from_string(
                            op.get<std::string>("kind", "gaussian_jitter"));
                    } catch (const ConfigError& e) {
                        issues.add(op.prefix + "kind: " + e.what());
                    }
                    a.param = op.get<double>("param", 0.1);
                    op.finish();
                    try {
                        a.validate();
                    } catch (const ConfigError& e) {
                        issues.add(op.prefix + "param: " + e.what());
                    }
                    cfg.augment.view_ops.push_back(a);
                }
            }
        } else {
            cfg.augment.view_ops = {AugmentOp{AugKind::kGaussianJitter, 0.1}};
        }
        s.finish();
        if (!(cfg.augment.mask_width > 0.0 && cfg.augment.mask_width < 1.0)) {
            issues.add("augment.mask_width: must lie in (0, 1)");
        }
    }

    {
        Section s{top.child("train"), "train.", &issues};
        cfg.train.epochs = s.get<std::size_t>("epochs", 10);
        cfg.train.batch_size = s.get<std::size_t>("batch_size", 128);
        cfg.train.lr = s.get<double>("lr", 0.05);
        cfg.train.seed = s.get<std::uint64_t>("seed", 1);
        cfg.train.ema_momentum = s.get<double>("ema_momentum", 0.99);
        cfg.train.bilevel = s.get<bool>("bilevel", true);
        {
            Section h{s.child("hypergrad"), "train.hypergrad.", &issues};
            try {
                cfg.train.hypergrad.kind =
                    hypergrad_kind_from_string(h.get<std::string>("kind", "fd_hvp"));
            } catch (const ConfigError& e) {
                issues.add(std::string("train.hypergrad.kind: ") + e.what());
            }
            cfg.train.hypergrad.fd_eps = h.get<double>("fd_eps", 1e-4);
            h.finish();
        }
        cfg.train.eval_every = s.get<std::size_t>("eval_every", 0);
        cfg.train.eval_max_samples = s.get<std::size_t>("eval_max_samples", 0);
        s.finish();

        if (cfg.train.batch_size < 2) issues.add("train.batch_size: must be >= 2");
        check_positive(cfg.train.lr, "train.lr", issues);
        if (cfg.train.ema_momentum < 0.0 || cfg.train.ema_momentum > 1.0) {
            issues.add("train.ema_momentum: must lie in [0, 1]");
        }
        if (cfg.train.hypergrad.kind == HypergradMode::Kind::kFdHvp &&
            (cfg.train.hypergrad.fd_eps < 1e-6 || cfg.train.hypergrad.fd_eps > 1e-3)) {
            issues.add("train.hypergrad.fd_eps: must lie in [1e-6, 1e-3]");
        }
    }

    {
        Section s{top.child("output"), "output.", &issues};
        cfg.output.dir = s.get<std::string>("dir", "out");
        cfg.output.metrics_format = s.get<std::string>("metrics_format", "csv");
        s.finish();
        if (cfg.output.metrics_format != "csv") {
            issues.add("output.metrics_format: only 'csv' is supported");
        }
    }

    top.finish();
    issues.throw_if_any(origin);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_json(buf.str(), path);
}

std::string effective_config_json(const RunConfig& cfg) {
    json root;
    json& d = root["dataset"];
    d["kind"] = to_string(cfg.dataset.kind);
    d["num_classes"] = cfg.dataset.spec.num_classes;
    d["dim"] = cfg.dataset.spec.dim;
    d["samples_per_class"] = cfg.dataset.spec.samples_per_class;
    d["test_samples_per_class"] = cfg.dataset.test_samples_per_class;
    d["center_scale"] = cfg.dataset.spec.center_scale;
    d["noise_scale"] = cfg.dataset.spec.noise_scale;
    d["mask_width"] = cfg.dataset.spec.mask_width;
    d["seed"] = cfg.dataset.spec.seed;
    if (!cfg.dataset.cache_dir.empty()) d["cache_dir"] = cfg.dataset.cache_dir;
    if (cfg.dataset.kind == DatasetKind::kIdx) {
        d["images_path"] = cfg.dataset.images_path;
        d["labels_path"] = cfg.dataset.labels_path;
        d["test_images_path"] = cfg.dataset.test_images_path;
        d["test_labels_path"] = cfg.dataset.test_labels_path;
        d["limit"] = cfg.dataset.limit;
        d["test_limit"] = cfg.dataset.test_limit;
    }

    json& m = root["model"];
    m["encoder_hidden"] = cfg.model.encoder_hidden;
    m["repr_dim"] = cfg.model.repr_dim;
    m["proj_hidden"] = cfg.model.proj_hidden;
    m["embed_dim"] = cfg.model.embed_dim;

    json& l = root["loss"];
    l["base"] = to_string(cfg.loss.base);
    l["tau"] = cfg.loss.tau;
    l["lambda1"] = cfg.loss.lambda1;
    l["lambda2"] = cfg.loss.lambda2;
    if (cfg.loss.mu) {
        l["mu"] = *cfg.loss.mu;
    } else {
        l["mu"] = "auto";
    }
    if (cfg.loss.lambda_code) {
        l["lambda_code"] = *cfg.loss.lambda_code;
    } else {
        l["lambda_code"] = "auto";
    }
    l["eps_sq"] = cfg.loss.eps_sq;
    l["taylor_m"] = cfg.loss.taylor_m;
    l["bt_offdiag"] = cfg.loss.bt_offdiag;
    l["mcr_through_zhat"] = cfg.loss.mcr_through_zhat;
    l["counterfactual_weight"] = cfg.loss.counterfactual_weight;
    l["compmod_enabled"] = cfg.compmod_enabled;
    l["fusion"] = to_string(cfg.fusion.kind);
    l["alpha"] = cfg.fusion.alpha;
    l["sample_alpha"] = cfg.fusion.sample_alpha;

    json& a = root["augment"];
    a["complementary_mask"] = cfg.augment.complementary_mask;
    a["mask_width"] = cfg.augment.mask_width;
    a["view_ops"] = json::array();
    for (const AugmentOp& op : cfg.augment.view_ops) {
        json jop;
        jop["kind"] = to_string(op.kind);
        jop["param"] = op.param;
        a["view_ops"].push_back(jop);
    }

    json& t = root["train"];
    t["epochs"] = cfg.train.epochs;
    t["batch_size"] = cfg.train.batch_size;
    t["lr"] = cfg.train.lr;
    t["seed"] = cfg.train.seed;
    t["ema_momentum"] = cfg.train.ema_momentum;
    t["bilevel"] = cfg.train.bilevel;
    t["hypergrad"]["kind"] = to_string(cfg.train.hypergrad.kind);
    t["hypergrad"]["fd_eps"] = cfg.train.hypergrad.fd_eps;
    t["eval_every"] = cfg.train.eval_every;
    t["eval_max_samples"] = cfg.train.eval_max_samples;

    json& o = root["output"];
    o["dir"] = cfg.output.dir;
    o["metrics_format"] = cfg.output.metrics_format;

    return root.dump(2) + "\n";
}

namespace {

Dataset take_prefix(Dataset&& data, std::size_t limit) {
    if (limit == 0 || limit >= data.size()) return std::move(data);
    Dataset out;
    out.inputs = Matrix(limit, data.dim());
    out.labels.assign(data.labels.begin(),
                      data.labels.begin() + static_cast<std::ptrdiff_t>(limit));
    std::copy(data.inputs.vec().begin(),
              data.inputs.vec().begin() + static_cast<std::ptrdiff_t>(limit * data.dim()),
              out.inputs.vec().begin());
    out.num_classes = data.num_classes;
    return out;
}

}  // namespace

SplitData build_datasets(const DatasetConfig& cfg) {
    SplitData split;
    if (cfg.kind == DatasetKind::kSplitSemantics) {
        // One combined generation so both splits share class centers; the
        // first samples_per_class rows of each class form the train split.
        SplitSemanticsSpec combined = cfg.spec;
        combined.samples_per_class =
            cfg.spec.samples_per_class + cfg.test_samples_per_class;
        Dataset all;
        if (!cfg.cache_dir.empty()) {
            std::filesystem::create_directories(cfg.cache_dir);
            const std::string prefix =
                cfg.cache_dir + "/split_semantics_s" + std::to_string(combined.seed) +
                "_c" + std::to_string(combined.num_classes) + "_d" +
                std::to_string(combined.dim) + "_n" +
                std::to_string(combined.samples_per_class);
            if (dataset_cache_exists(prefix)) {
                all = load_dataset_cache(prefix);
            } else {
                all = gen_split_semantics(combined);
                nlohmann::json sj;
                sj["num_classes"] = combined.num_classes;
                sj["dim"] = combined.dim;
                sj["samples_per_class"] = combined.samples_per_class;
                sj["center_scale"] = combined.center_scale;
                sj["noise_scale"] = combined.noise_scale;
                sj["seed"] = combined.seed;
                save_dataset_cache(prefix, all, sj.dump());
            }
        } else {
            all = gen_split_semantics(combined);
        }

        const std::size_t per_train = cfg.spec.samples_per_class;
        const std::size_t per_test = cfg.test_samples_per_class;
        const auto classes = static_cast<std::size_t>(cfg.spec.num_classes);
        split.train.inputs = Matrix(per_train * classes, all.dim());
        split.test.inputs = Matrix(per_test * classes, all.dim());
        split.train.labels.resize(per_train * classes);
        split.test.labels.resize(per_test * classes);
        split.train.num_classes = split.test.num_classes = all.num_classes;
        for (std::size_t c = 0; c < classes; ++c) {
            const std::size_t base = c * (per_train + per_test);
            for (std::size_t i = 0; i < per_train; ++i) {
                const std::size_t src = base + i, dst = c * per_train + i;
                split.train.labels[dst] = all.labels[src];
                for (std::size_t j = 0; j < all.dim(); ++j) {
                    split.train.inputs(dst, j) = all.inputs(src, j);
                }
            }
            for (std::size_t i = 0; i < per_test; ++i) {
                const std::size_t src = base + per_train + i, dst = c * per_test + i;
                split.test.labels[dst] = all.labels[src];
                for (std::size_t j = 0; j < all.dim(); ++j) {
                    split.test.inputs(dst, j) = all.inputs(src, j);
                }
            }
        }
    } else {
        split.train = take_prefix(load_idx(cfg.images_path, cfg.labels_path), cfg.limit);
        split.test = take_prefix(load_idx(cfg.test_images_path, cfg.test_labels_path),
                                 cfg.test_limit);
    }
    return split;
}

}  // namespace compmod
