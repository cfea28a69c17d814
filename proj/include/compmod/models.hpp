#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "compmod/matrix.hpp"
#include "compmod/ops.hpp"

namespace compmod {

enum class ParamGroup { kTheta, kPhi, kXi, kZeta, kPredictor, kTarget };

std::string to_string(ParamGroup g);
ParamGroup param_group_from_string(const std::string& s);

// Layer widths of a plain rectifier MLP: affine -> relu per hidden layer,
// affine at the output. widths = {in, hidden..., out}.
struct MlpSpec {
    std::vector<std::size_t> widths;

    void validate() const;
    std::size_t in_dim() const { return widths.front(); }
    std::size_t out_dim() const { return widths.back(); }
    std::size_t num_layers() const { return widths.size() - 1; }
};

struct ParamEntry {
    Matrix value;
    ParamGroup group;
};

// Named parameter store. std::map keeps iteration order canonical, which the
// checkpoint format and all byte-level determinism checks rely on.
// Naming scheme: "<net>.w<layer>" / "<net>.b<layer>", where <net> is the
// group name ("theta", "phi", ...) or "target_theta"/"target_phi" for the
// EMA copies.
struct ModelParams {
    std::map<std::string, ParamEntry> entries;
    std::map<std::string, MlpSpec> specs;  // keyed by <net> prefix

    bool has_net(const std::string& net) const { return specs.count(net) > 0; }
    std::vector<std::string> names_in_group(ParamGroup g) const;
    std::size_t count_in_group(ParamGroup g) const;  // total scalars
};

enum class FusionKind { kConcatRepr, kMixup, kConcatEmbed };

std::string to_string(FusionKind k);
FusionKind fusion_kind_from_string(const std::string& s);

struct FusionStrategy {
    FusionKind kind = FusionKind::kConcatRepr;
    double alpha = 0.5;        // mixup only
    bool sample_alpha = false;  // draw alpha ~ U(0,1) per batch

    void validate() const;
    // "xi" for representation-space fusion, "zeta" for embedding-space.
    std::string head_net() const;
    ParamGroup head_group() const;
};

struct ModelDims {
    std::size_t input = 0;        // D
    std::size_t encoder_hidden = 256;
    std::size_t repr = 64;        // d'
    std::size_t proj_hidden = 64;
    std::size_t embed = 32;       // d
};

// Head widths per fusion strategy: concat_repr 2d'-d'-d, mixup d'-d'-d,
// concat_embed 2d-d-d.
MlpSpec fusion_head_spec(const FusionStrategy& strategy, const ModelDims& dims);

// Seeded init: weights Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)), biases
// zero. Each network draws from its own derived stream, so adding or
// removing an optional net never shifts another net's values.
// with_comp_head: allocate g_xi / g_zeta per the fusion strategy.
// with_byol: allocate predictor plus target copies of theta/phi.
ModelParams init_params(const ModelDims& dims, const FusionStrategy& strategy,
                        bool with_comp_head, bool with_byol, std::uint64_t seed);

// Differentiable forward through network <net>; param_leaves maps parameter
// names to tape leaves (see make_param_leaves).
Value mlp_forward(const ModelParams& params,
                  const std::map<std::string, Value>& param_leaves,
                  const std::string& net, Value x);

// Forward pass on frozen parameters, no tape.
Matrix mlp_forward_plain(const ModelParams& params, const std::string& net,
                         const Matrix& x);

// Creates one leaf per parameter; requires_grad iff its group is in
// trainable. Leaves for all entries are created in name order.
std::map<std::string, Value> make_param_leaves(Tape& tape, const ModelParams& params,
                                               const std::vector<ParamGroup>& trainable);

// Fused pre-head combination followed by the comprehensive head.
// concat_repr / mixup expect representations h (n x d'); concat_embed
// expects embeddings z (n x d).
Value fuse(Value a, Value b, const FusionStrategy& strategy, const ModelParams& params,
           const std::map<std::string, Value>& param_leaves);

// The pre-head combination alone (tested separately for the mixup symmetry).
Value fuse_pre_head(Value a, Value b, const FusionStrategy& strategy);

}  // namespace compmod
