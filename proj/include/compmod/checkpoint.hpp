#pragma once

#include <string>

#include "compmod/losses.hpp"
#include "compmod/models.hpp"

namespace compmod {

// Checkpoint layout: magic "CMPD", version byte 0x01, 4-byte little-endian
// manifest length, JSON manifest (parameter names, shapes, groups,
// LossConfig and its hash), then raw little-endian double blocks in manifest
// order. Manifest order is the canonical name order of ModelParams.

struct Checkpoint {
    ModelParams params;
    LossConfig loss;
};

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const LossConfig& loss);

// Throws CompatError on magic/version mismatch, FormatError on a mangled
// manifest or truncated blocks.
Checkpoint load_checkpoint(const std::string& path);

// FNV-1a of the canonical LossConfig serialization; resume compatibility is
// judged by this value.
std::string loss_config_hash(const LossConfig& cfg);

std::string loss_config_to_json(const LossConfig& cfg);
LossConfig loss_config_from_json(const std::string& json_text);

}  // namespace compmod
