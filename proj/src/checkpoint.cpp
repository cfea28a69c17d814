#include "compmod/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "compmod/errors.hpp"
#include "compmod/rng.hpp"
#include "json.hpp"

namespace compmod {

namespace {

constexpr char kMagic[4] = {'C', 'M', 'P', 'D'};
constexpr unsigned char kVersion = 0x01;

void write_le32(std::ofstream& out, std::uint32_t v) {
    unsigned char bytes[4];
    for (int i = 0; i < 4; ++i) bytes[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<char*>(bytes), 4);
}

std::uint32_t read_le32(std::ifstream& in) {
    unsigned char bytes[4];
    in.read(reinterpret_cast<char*>(bytes), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
    return v;
}

void write_block(std::ofstream& out, const Matrix& m) {
    for (double v : m.vec()) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof(bits));
        unsigned char bytes[8];
        for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
        out.write(reinterpret_cast<char*>(bytes), 8);
    }
}

void read_block(std::ifstream& in, Matrix& m) {
    for (double& v : m.vec()) {
        unsigned char bytes[8];
        in.read(reinterpret_cast<char*>(bytes), 8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
        std::memcpy(&v, &bits, sizeof(v));
    }
}

}  // namespace

std::string loss_config_to_json(const LossConfig& cfg) {
    nlohmann::json j;
    j["tau"] = cfg.tau;
    j["lambda1"] = cfg.lambda1;
    j["lambda2"] = cfg.lambda2;
    if (cfg.mu) {
        j["mu"] = *cfg.mu;
    } else {
        j["mu"] = "auto";
    }
    if (cfg.lambda_code) {
        j["lambda_code"] = *cfg.lambda_code;
    } else {
        j["lambda_code"] = "auto";
    }
    j["eps_sq"] = cfg.eps_sq;
    j["taylor_m"] = cfg.taylor_m;
    j["bt_offdiag"] = cfg.bt_offdiag;
    j["base"] = to_string(cfg.base);
    j["mcr_through_zhat"] = cfg.mcr_through_zhat;
    j["counterfactual_weight"] = cfg.counterfactual_weight;
    return j.dump();
}

LossConfig loss_config_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("loss config: bad JSON: " + std::string(e.what()));
    }
    LossConfig cfg;
    cfg.tau = j.at("tau").get<double>();
    cfg.lambda1 = j.at("lambda1").get<double>();
    cfg.lambda2 = j.at("lambda2").get<double>();
    if (j.at("mu").is_number()) cfg.mu = j.at("mu").get<double>();
    if (j.at("lambda_code").is_number()) cfg.lambda_code = j.at("lambda_code").get<double>();
    cfg.eps_sq = j.at("eps_sq").get<double>();
    cfg.taylor_m = j.at("taylor_m").get<std::size_t>();
    cfg.bt_offdiag = j.at("bt_offdiag").get<double>();
    cfg.base = base_objective_from_string(j.at("base").get<std::string>());
    cfg.mcr_through_zhat = j.at("mcr_through_zhat").get<bool>();
    cfg.counterfactual_weight = j.at("counterfactual_weight").get<double>();
    return cfg;
}

std::string loss_config_hash(const LossConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a64(loss_config_to_json(cfg))));
    return buf;
}

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const LossConfig& loss) {
    nlohmann::json manifest;
    manifest["loss_config"] = nlohmann::json::parse(loss_config_to_json(loss));
    manifest["loss_config_hash"] = loss_config_hash(loss);
    nlohmann::json plist = nlohmann::json::array();
    for (const auto& [name, entry] : params.entries) {
        nlohmann::json p;
        p["name"] = name;
        p["group"] = to_string(entry.group);
        p["rows"] = entry.value.rows();
        p["cols"] = entry.value.cols();
        plist.push_back(p);
    }
    manifest["params"] = plist;
    nlohmann::json specs = nlohmann::json::object();
    for (const auto& [net, spec] : params.specs) specs[net] = spec.widths;
    manifest["specs"] = specs;
    const std::string manifest_text = manifest.dump();

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("checkpoint: cannot write " + tmp);
        out.write(kMagic, 4);
        out.put(static_cast<char>(kVersion));
        write_le32(out, static_cast<std::uint32_t>(manifest_text.size()));
        out.write(manifest_text.data(),
                  static_cast<std::streamsize>(manifest_text.size()));
        for (const auto& [name, entry] : params.entries) write_block(out, entry.value);
        if (!out) throw IoError("checkpoint: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("checkpoint: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) {
        throw CompatError("checkpoint: bad magic in " + path);
    }
    const int version = in.get();
    if (version != kVersion) {
        throw CompatError("checkpoint: unsupported version " + std::to_string(version));
    }
    const std::uint32_t manifest_len = read_le32(in);
    std::string manifest_text(manifest_len, '\0');
    in.read(manifest_text.data(), manifest_len);
    if (!in) throw FormatError("checkpoint: truncated manifest in " + path);

    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(manifest_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("checkpoint: bad manifest JSON: " + std::string(e.what()));
    }

    Checkpoint ck;
    ck.loss = loss_config_from_json(manifest.at("loss_config").dump());
    for (const auto& p : manifest.at("params")) {
        const std::string name = p.at("name").get<std::string>();
        ParamEntry entry;
        entry.group = param_group_from_string(p.at("group").get<std::string>());
        entry.value = Matrix(p.at("rows").get<std::size_t>(), p.at("cols").get<std::size_t>());
        ck.params.entries[name] = std::move(entry);
    }
    for (const auto& [net, widths] : manifest.at("specs").items()) {
        MlpSpec spec;
        spec.widths = widths.get<std::vector<std::size_t>>();
        ck.params.specs[net] = spec;
    }
    // Blocks follow in manifest (canonical name) order.
    for (auto& [name, entry] : ck.params.entries) {
        read_block(in, entry.value);
    }
    if (!in) throw FormatError("checkpoint: truncated parameter blocks in " + path);
    return ck;
}

}  // namespace compmod
