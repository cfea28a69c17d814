#include "compmod/models.hpp"

#include <cmath>

#include "compmod/errors.hpp"
#include "compmod/rng.hpp"

namespace compmod {

std::string to_string(ParamGroup g) {
    switch (g) {
        case ParamGroup::kTheta: return "theta";
        case ParamGroup::kPhi: return "phi";
        case ParamGroup::kXi: return "xi";
        case ParamGroup::kZeta: return "zeta";
        case ParamGroup::kPredictor: return "predictor";
        case ParamGroup::kTarget: return "target";
    }
    return "theta";
}

ParamGroup param_group_from_string(const std::string& s) {
    if (s == "theta") return ParamGroup::kTheta;
    if (s == "phi") return ParamGroup::kPhi;
    if (s == "xi") return ParamGroup::kXi;
    if (s == "zeta") return ParamGroup::kZeta;
    if (s == "predictor") return ParamGroup::kPredictor;
    if (s == "target") return ParamGroup::kTarget;
    throw ConfigError("unknown parameter group '" + s + "'");
}

void MlpSpec::validate() const {
    if (widths.size() < 2) {
        throw ConfigError("MlpSpec: need at least input and output widths");
    }
    for (std::size_t w : widths) {
        if (w < 1) throw ConfigError("MlpSpec: all widths must be >= 1");
    }
}

std::vector<std::string> ModelParams::names_in_group(ParamGroup g) const {
    std::vector<std::string> names;
    for (const auto& [name, entry] : entries) {
        if (entry.group == g) names.push_back(name);
    }
    return names;
}

std::size_t ModelParams::count_in_group(ParamGroup g) const {
    std::size_t total = 0;
    for (const auto& [name, entry] : entries) {
        if (entry.group == g) total += entry.value.size();
    }
    return total;
}

std::string to_string(FusionKind k) {
    switch (k) {
        case FusionKind::kConcatRepr: return "concat_repr";
        case FusionKind::kMixup: return "mixup";
        case FusionKind::kConcatEmbed: return "concat_embed";
    }
    return "concat_repr";
}

FusionKind fusion_kind_from_string(const std::string& s) {
    if (s == "concat_repr") return FusionKind::kConcatRepr;
    if (s == "mixup") return FusionKind::kMixup;
    if (s == "concat_embed") return FusionKind::kConcatEmbed;
    throw ConfigError("unknown fusion kind '" + s +
                      "' (expected concat_repr|mixup|concat_embed)");
}

void FusionStrategy::validate() const {
    if (kind == FusionKind::kMixup) {
        if (alpha < 0.0 || alpha > 1.0) {
            throw ConfigError("FusionStrategy: mixup alpha must lie in [0, 1]");
        }
    }
}

std::string FusionStrategy::head_net() const {
    return kind == FusionKind::kConcatEmbed ? "zeta" : "xi";
}

ParamGroup FusionStrategy::head_group() const {
    return kind == FusionKind::kConcatEmbed ? ParamGroup::kZeta : ParamGroup::kXi;
}

MlpSpec fusion_head_spec(const FusionStrategy& strategy, const ModelDims& dims) {
    switch (strategy.kind) {
        case FusionKind::kConcatRepr:
            return MlpSpec{{2 * dims.repr, dims.repr, dims.embed}};
        case FusionKind::kMixup:
            return MlpSpec{{dims.repr, dims.repr, dims.embed}};
        case FusionKind::kConcatEmbed:
            return MlpSpec{{2 * dims.embed, dims.embed, dims.embed}};
    }
    throw ConfigError("fusion_head_spec: bad fusion kind");
}

namespace {

void init_net(ModelParams& params, const std::string& net, const MlpSpec& spec,
              ParamGroup group, std::uint64_t seed) {
    spec.validate();
    params.specs[net] = spec;
    Rng rng(derive_seed(seed, "init." + net));
    for (std::size_t layer = 0; layer + 1 < spec.widths.size(); ++layer) {
        const std::size_t fan_in = spec.widths[layer];
        const std::size_t fan_out = spec.widths[layer + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Matrix w(fan_in, fan_out);
        for (double& v : w.vec()) v = rng.uniform(-bound, bound);
        params.entries[net + ".w" + std::to_string(layer)] = {std::move(w), group};
        params.entries[net + ".b" + std::to_string(layer)] = {Matrix(1, fan_out), group};
    }
}

void copy_net_values(ModelParams& params, const std::string& src, const std::string& dst,
                     ParamGroup group) {
    params.specs[dst] = params.specs.at(src);
    const MlpSpec& spec = params.specs.at(src);
    for (std::size_t layer = 0; layer + 1 < spec.widths.size(); ++layer) {
        const std::string suffix_w = ".w" + std::to_string(layer);
        const std::string suffix_b = ".b" + std::to_string(layer);
        params.entries[dst + suffix_w] = {params.entries.at(src + suffix_w).value, group};
        params.entries[dst + suffix_b] = {params.entries.at(src + suffix_b).value, group};
    }
}

}  // namespace

ModelParams init_params(const ModelDims& dims, const FusionStrategy& strategy,
                        bool with_comp_head, bool with_byol, std::uint64_t seed) {
    ModelParams params;
    init_net(params, "theta",
             MlpSpec{{dims.input, dims.encoder_hidden, dims.repr}}, ParamGroup::kTheta,
             seed);
    init_net(params, "phi", MlpSpec{{dims.repr, dims.proj_hidden, dims.embed}},
             ParamGroup::kPhi, seed);
    if (with_comp_head) {
        init_net(params, strategy.head_net(), fusion_head_spec(strategy, dims),
                 strategy.head_group(), seed);
    }
    if (with_byol) {
        init_net(params, "predictor", MlpSpec{{dims.embed, dims.embed, dims.embed}},
                 ParamGroup::kPredictor, seed);
        // BYOL targets start as copies of the online nets.
        copy_net_values(params, "theta", "target_theta", ParamGroup::kTarget);
        copy_net_values(params, "phi", "target_phi", ParamGroup::kTarget);
    }
    return params;
}

Value mlp_forward(const ModelParams& params,
                  const std::map<std::string, Value>& param_leaves,
                  const std::string& net, Value x) {
    const auto it = params.specs.find(net);
    if (it == params.specs.end()) throw ContractError("mlp_forward: no network '" + net + "'");
    const MlpSpec& spec = it->second;
    if (x.cols() != spec.in_dim()) {
        throw DimensionError("mlp_forward(" + net + "): input width " +
                             std::to_string(x.cols()) + " != spec width " +
                             std::to_string(spec.in_dim()));
    }
    Value h = x;
    for (std::size_t layer = 0; layer < spec.num_layers(); ++layer) {
        const Value w = param_leaves.at(net + ".w" + std::to_string(layer));
        const Value b = param_leaves.at(net + ".b" + std::to_string(layer));
        h = add_row(matmul(h, w), b);
        if (layer + 1 < spec.num_layers()) h = relu(h);
    }
    return h;
}

Matrix mlp_forward_plain(const ModelParams& params, const std::string& net,
                         const Matrix& x) {
    const auto it = params.specs.find(net);
    if (it == params.specs.end()) {
        throw ContractError("mlp_forward_plain: no network '" + net + "'");
    }
    const MlpSpec& spec = it->second;
    if (x.cols() != spec.in_dim()) {
        throw DimensionError("mlp_forward_plain(" + net + "): input width " +
                             std::to_string(x.cols()) + " != spec width " +
                             std::to_string(spec.in_dim()));
    }
    Matrix h = x;
    for (std::size_t layer = 0; layer < spec.num_layers(); ++layer) {
        const Matrix& w = params.entries.at(net + ".w" + std::to_string(layer)).value;
        const Matrix& b = params.entries.at(net + ".b" + std::to_string(layer)).value;
        h = matmul(h, w);
        for (std::size_t i = 0; i < h.rows(); ++i) {
            for (std::size_t j = 0; j < h.cols(); ++j) h(i, j) += b(0, j);
        }
        if (layer + 1 < spec.num_layers()) {
            for (double& v : h.vec()) v = v > 0.0 ? v : 0.0;
        }
    }
    return h;
}

std::map<std::string, Value> make_param_leaves(Tape& tape, const ModelParams& params,
                                               const std::vector<ParamGroup>& trainable) {
    std::map<std::string, Value> leaves;
    for (const auto& [name, entry] : params.entries) {
        bool rg = false;
        for (ParamGroup g : trainable) {
            if (entry.group == g) {
                rg = true;
                break;
            }
        }
        leaves[name] = tape.leaf(entry.value, rg);
    }
    return leaves;
}

Value fuse_pre_head(Value a, Value b, const FusionStrategy& strategy) {
    check_same_shape(a.val(), b.val(), "fuse");
    switch (strategy.kind) {
        case FusionKind::kConcatRepr:
        case FusionKind::kConcatEmbed:
            return concat_cols(a, b);
        case FusionKind::kMixup:
            return add(scale(a, strategy.alpha), scale(b, 1.0 - strategy.alpha));
    }
    throw ConfigError("fuse: bad fusion kind");
}

Value fuse(Value a, Value b, const FusionStrategy& strategy, const ModelParams& params,
           const std::map<std::string, Value>& param_leaves) {
    const std::string net = strategy.head_net();
    if (!params.has_net(net)) {
        throw ConfigError("fuse: strategy " + to_string(strategy.kind) +
                          " needs network '" + net + "' which is not initialized");
    }
    Value fused = fuse_pre_head(a, b, strategy);
    if (fused.cols() != params.specs.at(net).in_dim()) {
        throw ConfigError("fuse: head '" + net + "' expects width " +
                          std::to_string(params.specs.at(net).in_dim()) + ", fused is " +
                          std::to_string(fused.cols()));
    }
    return mlp_forward(params, param_leaves, net, fused);
}

}  // namespace compmod
