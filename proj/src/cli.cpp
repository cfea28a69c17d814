#include "compmod/cli.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include "compmod/checkpoint.hpp"
#include "compmod/errors.hpp"
#include "compmod/rng.hpp"
#include "json.hpp"

namespace compmod::cli {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void write_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp);
        out << content;
        if (!out) throw IoError("write failed for " + tmp);
    }
    fs::rename(tmp, path);
}

ModelDims dims_from(const RunConfig& cfg, std::size_t input_dim) {
    ModelDims dims;
    dims.input = input_dim;
    dims.encoder_hidden = cfg.model.encoder_hidden;
    dims.repr = cfg.model.repr_dim;
    dims.proj_hidden = cfg.model.proj_hidden;
    dims.embed = cfg.model.embed_dim;
    return dims;
}

TrainState make_state(const RunConfig& cfg, std::size_t input_dim) {
    TrainState state;
    state.lr = cfg.train.lr;
    state.seed = cfg.train.seed;
    state.loss = cfg.loss;
    state.fusion = cfg.fusion;
    state.compmod_enabled = cfg.compmod_enabled;
    state.bilevel = cfg.train.bilevel;
    state.ema_momentum = cfg.train.ema_momentum;
    state.hypergrad = cfg.train.hypergrad;
    state.params = init_params(dims_from(cfg, input_dim), cfg.fusion,
                               cfg.compmod_enabled,
                               cfg.loss.base == BaseObjective::kByol, cfg.train.seed);
    state.validate();
    return state;
}

Matrix embed_h(const ModelParams& params, const Matrix& inputs) {
    return mlp_forward_plain(params, "theta", inputs);
}

// Deterministic class-balanced subsample: every k-th row.
void subsample(Matrix& z, std::vector<int>& labels, std::size_t max_samples) {
    if (max_samples == 0 || z.rows() <= max_samples) return;
    const std::size_t stride = (z.rows() + max_samples - 1) / max_samples;
    std::size_t kept = 0;
    Matrix out((z.rows() + stride - 1) / stride, z.cols());
    std::vector<int> out_labels;
    for (std::size_t i = 0; i < z.rows(); i += stride, ++kept) {
        for (std::size_t j = 0; j < z.cols(); ++j) out(kept, j) = z(i, j);
        out_labels.push_back(labels[i]);
    }
    z = std::move(out);
    labels = std::move(out_labels);
}

}  // namespace

std::string metrics_header() {
    return "epoch,loss_ssl,loss_mcr,loss_comp,knn_acc,probe_acc,erank_z1,erank_zhat,"
           "wallclock_s";
}

std::string metrics_to_csv(const MetricsRow& r) {
    std::ostringstream os;
    os << r.epoch << ',' << fmt(r.loss_ssl) << ',' << fmt(r.loss_mcr) << ','
       << fmt(r.loss_comp) << ',' << fmt(r.knn_acc) << ',' << fmt(r.probe_acc) << ','
       << fmt(r.erank_z1) << ',' << fmt(r.erank_zhat) << ',' << fmt(r.wallclock_s);
    return os.str();
}

EvalSummary evaluate_params(const ModelParams& params, const SplitData& data,
                            const RunConfig& cfg) {
    Matrix train_h = embed_h(params, data.train.inputs);
    Matrix test_h = embed_h(params, data.test.inputs);
    std::vector<int> train_labels = data.train.labels;
    std::vector<int> test_labels = data.test.labels;
    subsample(train_h, train_labels, cfg.train.eval_max_samples);
    subsample(test_h, test_labels, cfg.train.eval_max_samples);

    EvalSummary s;
    s.knn = knn_eval(train_h, train_labels, test_h, test_labels, 5);
    s.probe = linear_probe(train_h, train_labels, test_h, test_labels, 500, 0.1,
                           derive_seed(cfg.train.seed, "probe"));
    const Matrix test_z = mlp_forward_plain(params, "phi", test_h);
    s.diag_h = spectrum_diagnostics(test_h, cfg.loss);
    s.diag_z = spectrum_diagnostics(test_z, cfg.loss);
    return s;
}

TrainState train_to_dir(const RunConfig& cfg, const std::string& out_dir) {
    const auto t_start = std::chrono::steady_clock::now();
    fs::create_directories(out_dir);
    write_atomic(out_dir + "/effective_config.json", effective_config_json(cfg));

    const SplitData data = build_datasets(cfg.dataset);
    TrainState state = make_state(cfg, data.train.dim());

    std::ostringstream csv;
    csv << metrics_header() << "\n";
    for (std::size_t epoch = 0; epoch < cfg.train.epochs; ++epoch) {
        BatchStream stream(data.train, cfg.train.batch_size, cfg.augment,
                           derive_seed(cfg.train.seed, "epoch", epoch));
        const EpochStats stats = train_epoch(state, stream);

        MetricsRow row;
        row.epoch = epoch;
        row.loss_ssl = stats.ssl;
        row.loss_mcr = stats.mcr;
        row.loss_comp = stats.comp;
        if (cfg.train.eval_every > 0 && (epoch + 1) % cfg.train.eval_every == 0) {
            const EvalSummary s = evaluate_params(state.params, data, cfg);
            row.knn_acc = s.knn.accuracy;
            row.probe_acc = s.probe.accuracy;
        } else {
            row.knn_acc = std::nan("");
            row.probe_acc = std::nan("");
        }
        row.erank_z1 = stats.last_z1.empty() ? 0.0 : effective_rank(stats.last_z1);
        row.erank_zhat = stats.last_zhat.empty() ? 0.0 : effective_rank(stats.last_zhat);
        csv << metrics_to_csv(row) << "\n";
    }

    write_atomic(out_dir + "/metrics.csv", csv.str());
    save_checkpoint(out_dir + "/final.ckpt", state.params, state.loss);

    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    nlohmann::json summary;
    summary["epochs"] = cfg.train.epochs;
    summary["batches_per_epoch"] =
        data.train.size() / cfg.train.batch_size;
    summary["wallclock_s"] = elapsed;
    summary["out_dir"] = out_dir;
    write_atomic(out_dir + "/run_summary.json", summary.dump(2) + "\n");
    return state;
}

int run_train(const RunConfig& cfg, const std::string& out_dir) {
    train_to_dir(cfg, out_dir);
    std::cout << "train: wrote " << out_dir << "/metrics.csv and final.ckpt\n";
    return kExitOk;
}

namespace {

nlohmann::json probe_result_json(const ProbeResult& r) {
    nlohmann::json j;
    j["accuracy"] = r.accuracy;
    j["per_class"] = r.per_class;
    j["sample_count"] = r.sample_count;
    return j;
}

}  // namespace

void validate_eval_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("eval json: parse error: ") + e.what());
    }
    std::vector<std::string> missing;
    auto need = [&](const char* key, bool ok) {
        if (!ok) missing.push_back(key);
    };
    need("knn", j.contains("knn") && j["knn"].is_object());
    need("linear_probe", j.contains("linear_probe") && j["linear_probe"].is_object());
    for (const char* section : {"knn", "linear_probe"}) {
        if (!j.contains(section) || !j[section].is_object()) continue;
        const auto& s = j[section];
        need((std::string(section) + ".accuracy").c_str(),
             s.contains("accuracy") && s["accuracy"].is_number());
        need((std::string(section) + ".per_class").c_str(),
             s.contains("per_class") && s["per_class"].is_array());
        need((std::string(section) + ".sample_count").c_str(),
             s.contains("sample_count") && s["sample_count"].is_number_unsigned());
    }
    need("spectrum", j.contains("spectrum") && j["spectrum"].is_object());
    if (j.contains("spectrum") && j["spectrum"].is_object()) {
        for (const char* layer : {"h", "z"}) {
            const bool present = j["spectrum"].contains(layer) &&
                                 j["spectrum"][layer].is_object() &&
                                 j["spectrum"][layer].contains("coding_entropy") &&
                                 j["spectrum"][layer].contains("effective_rank");
            need((std::string("spectrum.") + layer).c_str(), present);
        }
    }
    need("probed_layer", j.contains("probed_layer") && j["probed_layer"].is_string());
    need("k", j.contains("k") && j["k"].is_number_unsigned());
    if (!missing.empty()) {
        std::string msg = "eval json: missing or mistyped keys:";
        for (const auto& key : missing) msg += " " + key;
        throw FormatError(msg);
    }
}

int run_eval(const std::string& checkpoint_path, const RunConfig& cfg,
             const std::string& out_dir) {
    const Checkpoint ck = load_checkpoint(checkpoint_path);
    const SplitData data = build_datasets(cfg.dataset);
    if (!ck.params.has_net("theta")) {
        throw CompatError("checkpoint: no encoder parameters");
    }
    const std::size_t expect = ck.params.specs.at("theta").in_dim();
    if (expect != data.train.dim()) {
        throw CompatError("checkpoint expects input width " + std::to_string(expect) +
                          " but dataset has " + std::to_string(data.train.dim()));
    }

    RunConfig eval_cfg = cfg;
    eval_cfg.loss = ck.loss;  // diagnostics use the checkpointed coefficients
    const EvalSummary s = evaluate_params(ck.params, data, eval_cfg);

    nlohmann::json out;
    out["knn"] = probe_result_json(s.knn);
    out["linear_probe"] = probe_result_json(s.probe);
    out["k"] = 5;
    out["probed_layer"] = "h";
    out["spectrum"]["h"]["coding_entropy"] = s.diag_h.coding_entropy;
    out["spectrum"]["h"]["effective_rank"] = s.diag_h.effective_rank;
    out["spectrum"]["z"]["coding_entropy"] = s.diag_z.coding_entropy;
    out["spectrum"]["z"]["effective_rank"] = s.diag_z.effective_rank;
    out["checkpoint"] = checkpoint_path;

    const std::string text = out.dump(2) + "\n";
    validate_eval_json(text);
    fs::create_directories(out_dir);
    write_atomic(out_dir + "/eval.json", text);
    std::cout << "eval: knn_acc=" << fmt(s.knn.accuracy)
              << " probe_acc=" << fmt(s.probe.accuracy) << " -> " << out_dir
              << "/eval.json\n";
    return kExitOk;
}

namespace {

struct GradCheckRow {
    std::string name;
    double max_rel_err = 0.0;
    double tolerance = 1e-5;
    bool pass = false;
};

Matrix random_matrix(std::size_t n, std::size_t d, Rng& rng, double scale = 1.0) {
    Matrix m(n, d);
    for (double& v : m.vec()) v = scale * rng.normal();
    return m;
}

LossConfig gradcheck_loss_config() {
    LossConfig cfg;
    cfg.mu = 1.0;
    cfg.lambda_code = 0.2;
    cfg.taylor_m = 4;
    return cfg;
}

// Tiny model for the hypergradient comparison: 17 parameters total
// (encoder 2-1-1, projector 1-1-2, mixup head 1-1-2). Every parameter is
// re-drawn (biases included) so the instance sits at a generic point; the
// zero-bias init leaves relu units dead and the comprehensive rows parallel,
// where the outer objective is exactly flat.
TrainState tiny_bilevel_state(std::uint64_t seed, bool through_zhat) {
    ModelDims dims;
    dims.input = 2;
    dims.encoder_hidden = 1;
    dims.repr = 1;
    dims.proj_hidden = 1;
    dims.embed = 2;
    TrainState state;
    state.fusion.kind = FusionKind::kMixup;
    state.fusion.alpha = 0.7;
    state.lr = 0.1;
    state.seed = seed;
    state.loss = gradcheck_loss_config();
    state.loss.lambda1 = 0.5;
    state.loss.lambda2 = 0.3;
    state.loss.mcr_through_zhat = through_zhat;
    state.params = init_params(dims, state.fusion, true, false, seed);
    Rng rng(derive_seed(seed, "tiny_params"));
    for (auto& [name, entry] : state.params.entries) {
        for (double& v : entry.value.vec()) v = rng.uniform(-0.8, 0.8);
    }
    return state;
}

ViewBatch tiny_batch(std::uint64_t seed, std::size_t n, std::size_t dim) {
    Rng rng(derive_seed(seed, "tiny_batch"));
    ViewBatch batch;
    batch.x1 = random_matrix(n, dim, rng);
    batch.x2 = random_matrix(n, dim, rng);
    batch.labels.assign(n, 0);
    batch.indices.resize(n);
    return batch;
}

// Relative disagreement between the fd_hvp hypergradient and the brute-force
// oracle on one tiny instance.
double hypergrad_rel_err(std::uint64_t seed, bool through_zhat) {
    TrainState state = tiny_bilevel_state(seed, through_zhat);
    const ViewBatch batch = tiny_batch(seed, 5, 2);
    const ModelParams pre = state.params;
    inner_step(state, batch, state.fusion);

    HypergradMode fd{HypergradMode::Kind::kFdHvp, 1e-4};
    HypergradMode oracle{HypergradMode::Kind::kExactOracle, 1e-4};
    const NamedGrads g_fd =
        outer_gradient(pre, state.params, batch, state, state.fusion, fd);
    const NamedGrads g_oracle =
        outer_gradient(pre, state.params, batch, state, state.fusion, oracle);

    double diff_sq = 0.0, fd_sq = 0.0, oracle_sq = 0.0;
    for (const auto& [name, g] : g_fd) {
        const Matrix d = compmod::sub(g, g_oracle.at(name));
        diff_sq += dot(d, d);
        fd_sq += dot(g, g);
        oracle_sq += dot(g_oracle.at(name), g_oracle.at(name));
    }
    // Hypergradient magnitudes below 1e-6 are at the resolution floor of the
    // double-precision finite differences themselves.
    const double denom = std::max({1e-6, std::sqrt(fd_sq), std::sqrt(oracle_sq)});
    return std::sqrt(diff_sq) / denom;
}

std::vector<GradCheckRow> gradcheck_rows(const std::string& scope) {
    std::vector<GradCheckRow> rows;
    Rng rng(derive_seed(20240901, "gradcheck"));
    const std::size_t n = 4, d = 3;
    const LossConfig cfg = gradcheck_loss_config();

    auto add = [&](const std::string& name, double tolerance, double err) {
        if (scope != "all" && scope != name) return;
        rows.push_back({name, err, tolerance, err < tolerance});
    };
    auto check = [&](const std::function<Value(Tape&, Value)>& build, const Matrix& x0) {
        return grad_check(build, x0, 1e-5);
    };

    if (scope == "all" || scope == "info_nce") {
        add("info_nce", 1e-5,
            check(
                [n, &cfg](Tape&, Value x) {
                    return info_nce(slice_rows(x, 0, n), slice_rows(x, n, 2 * n),
                                    cfg.tau);
                },
                random_matrix(2 * n, d, rng)));
    }
    if (scope == "all" || scope == "comp") {
        add("comp", 1e-5,
            check([&cfg](Tape&, Value x) { return comp_loss(x, cfg); },
                  random_matrix(n, d, rng)));
    }
    if (scope == "all" || scope == "mcr") {
        // Default reading holds Zhat constant; only the views are probed.
        const Matrix zhat_const = random_matrix(n, d, rng);
        add("mcr", 1e-5,
            check(
                [n, &cfg, &zhat_const](Tape& t, Value x) {
                    return mcr_loss(slice_rows(x, 0, n), slice_rows(x, n, 2 * n),
                                    t.constant(zhat_const), cfg);
                },
                random_matrix(2 * n, d, rng)));
    }
    if (scope == "all" || scope == "mcr_through_zhat") {
        LossConfig mcr_cfg = cfg;
        mcr_cfg.mcr_through_zhat = true;
        add("mcr_through_zhat", 1e-5,
            check(
                [n, mcr_cfg](Tape&, Value x) {
                    return mcr_loss(slice_rows(x, 0, n), slice_rows(x, n, 2 * n),
                                    slice_rows(x, 2 * n, 3 * n), mcr_cfg);
                },
                random_matrix(3 * n, d, rng)));
    }
    if (scope == "all" || scope == "barlow_twins") {
        add("barlow_twins", 1e-5,
            check(
                [n](Tape&, Value x) {
                    return barlow_twins_loss(slice_rows(x, 0, n),
                                             slice_rows(x, n, 2 * n), 0.005);
                },
                random_matrix(2 * n, d, rng)));
    }
    if (scope == "all" || scope == "byol") {
        const Matrix target = random_matrix(n, d, rng);
        add("byol", 1e-5,
            check([&target](Tape&, Value x) { return byol_loss(x, target); },
                  random_matrix(n, d, rng)));
    }
    if (scope == "all" || scope == "counterfactual") {
        add("counterfactual", 1e-5,
            check(
                [n, &cfg](Tape&, Value x) {
                    return counterfactual_loss(slice_rows(x, 0, n),
                                               slice_rows(x, n, 2 * n), cfg);
                },
                random_matrix(2 * n, d, rng)));
    }
    if (scope == "all" || scope == "hypergrad") {
        double worst = 0.0;
        for (std::uint64_t s = 0; s < 8; ++s) {
            worst = std::max(worst, hypergrad_rel_err(1000 + s, s % 2 == 1));
        }
        add("hypergrad", 1e-3, worst);
    }
    return rows;
}

}  // namespace

int run_gradcheck(const std::string& scope) {
    const std::vector<GradCheckRow> rows = gradcheck_rows(scope);
    if (rows.empty()) {
        throw ConfigError("gradcheck: unknown scope '" + scope +
                          "' (expected all|info_nce|comp|mcr|mcr_through_zhat|"
                          "barlow_twins|byol|counterfactual|hypergrad)");
    }
    std::printf("%-18s %14s %10s %6s\n", "loss", "max_rel_err", "tol", "status");
    bool all_pass = true;
    for (const GradCheckRow& row : rows) {
        std::printf("%-18s %14.3e %10.0e %6s\n", row.name.c_str(), row.max_rel_err,
                    row.tolerance, row.pass ? "ok" : "FAIL");
        all_pass = all_pass && row.pass;
    }
    if (!all_pass) {
        std::string failures;
        for (const GradCheckRow& row : rows) {
            if (!row.pass) failures += " " + row.name;
        }
        std::cerr << "gradcheck: tolerance breached for:" << failures << "\n";
        return kExitValidation;
    }
    return kExitOk;
}

namespace {

struct SweepCell {
    std::string name;
    RunConfig cfg;
    std::vector<std::string> swept;  // keys changed relative to the base
    double probe_acc = 0.0;
    double knn_acc = 0.0;
};

std::size_t sweep_threads(std::size_t cells) {
    std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("COMPMOD_THREADS")) {
        const long parsed = std::strtol(env, nullptr, 10);
        if (parsed >= 1) threads = std::min<std::size_t>(threads, static_cast<std::size_t>(parsed));
    }
    return std::min(threads, cells);
}

}  // namespace

int run_ablate(const RunConfig& base, const std::string& axis,
               const std::string& out_dir) {
    std::vector<SweepCell> cells;
    if (axis == "lambda_grid") {
        const double grid[4] = {0.001, 0.01, 0.1, 1.0};
        for (double l1 : grid) {
            for (double l2 : grid) {
                SweepCell cell;
                cell.cfg = base;
                cell.cfg.compmod_enabled = true;
                cell.cfg.loss.lambda1 = l1;
                cell.cfg.loss.lambda2 = l2;
                std::ostringstream name;
                name << "l1_" << l1 << "_l2_" << l2;
                cell.name = name.str();
                cell.swept = {"loss.lambda1", "loss.lambda2"};
                cells.push_back(std::move(cell));
            }
        }
    } else if (axis == "fusion") {
        auto make = [&](const std::string& name) {
            SweepCell cell;
            cell.cfg = base;
            cell.cfg.compmod_enabled = true;
            cell.name = name;
            return cell;
        };
        {
            SweepCell cell = make("concat_repr");
            cell.cfg.fusion.kind = FusionKind::kConcatRepr;
            cell.swept = {"loss.fusion"};
            cells.push_back(std::move(cell));
        }
        for (double alpha : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            SweepCell cell = make("mixup_a" + fmt(alpha));
            cell.cfg.fusion.kind = FusionKind::kMixup;
            cell.cfg.fusion.alpha = alpha;
            cell.cfg.fusion.sample_alpha = false;
            cell.swept = {"loss.fusion", "loss.alpha"};
            cells.push_back(std::move(cell));
        }
        {
            SweepCell cell = make("concat_embed");
            cell.cfg.fusion.kind = FusionKind::kConcatEmbed;
            cell.swept = {"loss.fusion"};
            cells.push_back(std::move(cell));
        }
        {
            SweepCell cell = make("no_bilevel");
            cell.cfg.train.bilevel = false;
            cell.swept = {"train.bilevel"};
            cells.push_back(std::move(cell));
        }
    } else {
        throw ConfigError("ablate: unknown axis '" + axis +
                          "' (expected fusion|lambda_grid)");
    }

    fs::create_directories(out_dir);
    std::atomic<std::size_t> next{0};
    std::vector<std::string> errors(cells.size());
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            SweepCell& cell = cells[i];
            try {
                const std::string cell_dir = out_dir + "/cell_" + cell.name;
                const TrainState state = train_to_dir(cell.cfg, cell_dir);
                const SplitData data = build_datasets(cell.cfg.dataset);
                const EvalSummary s = evaluate_params(state.params, data, cell.cfg);
                cell.probe_acc = s.probe.accuracy;
                cell.knn_acc = s.knn.accuracy;
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    const std::size_t num_threads = sweep_threads(cells.size());
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < num_threads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (!errors[i].empty()) {
            throw NumericError("ablate cell " + cells[i].name + ": " + errors[i]);
        }
    }

    std::ostringstream csv;
    if (axis == "lambda_grid") {
        csv << "cell,lambda1,lambda2,probe_acc,knn_acc\n";
        for (const SweepCell& cell : cells) {
            csv << cell.name << ',' << fmt(cell.cfg.loss.lambda1) << ','
                << fmt(cell.cfg.loss.lambda2) << ',' << fmt(cell.probe_acc) << ','
                << fmt(cell.knn_acc) << "\n";
        }
    } else {
        csv << "cell,fusion,alpha,bilevel,probe_acc,knn_acc\n";
        for (const SweepCell& cell : cells) {
            csv << cell.name << ',' << to_string(cell.cfg.fusion.kind) << ','
                << fmt(cell.cfg.fusion.alpha) << ','
                << (cell.cfg.train.bilevel ? "true" : "false") << ','
                << fmt(cell.probe_acc) << ',' << fmt(cell.knn_acc) << "\n";
        }
    }
    write_atomic(out_dir + "/sweep.csv", csv.str());
    std::cout << "ablate: " << cells.size() << " cells -> " << out_dir << "/sweep.csv\n";
    return kExitOk;
}

int guard(const std::function<int()>& fn) {
    try {
        return fn();
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const DimensionError& e) {
        std::cerr << "dimension error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const CompatError& e) {
        std::cerr << "compatibility error: " << e.what() << "\n";
        return kExitCompat;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitCompat;
    } catch (const ConfigError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ContractError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace compmod::cli
