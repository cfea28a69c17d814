#pragma once

#include <string>

#include "compmod/config.hpp"
#include "compmod/eval.hpp"

namespace compmod::cli {

// Stable exit codes: 0 ok, 2 numeric failure, 3 I/O failure,
// 4 compatibility/format failure, 5 validation failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitNumeric = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitCompat = 4;
inline constexpr int kExitValidation = 5;

struct MetricsRow {
    std::size_t epoch = 0;
    double loss_ssl = 0.0;
    double loss_mcr = 0.0;
    double loss_comp = 0.0;
    double knn_acc = 0.0;
    double probe_acc = 0.0;
    double erank_z1 = 0.0;
    double erank_zhat = 0.0;
    // Kept at 0 in the CSV: per-epoch wall time would break the
    // bit-reproducibility contract on metrics.csv, so real timings go to
    // run_summary.json instead.
    double wallclock_s = 0.0;
};

std::string metrics_header();
std::string metrics_to_csv(const MetricsRow& row);

struct EvalSummary {
    ProbeResult knn;
    ProbeResult probe;
    SpectrumDiagnostics diag_h;
    SpectrumDiagnostics diag_z;
};

// Frozen-parameter evaluation used by cmd_eval, per-epoch metrics and the
// sweep driver: embeds both splits with the encoder, probes representations
// h, and reports spectrum diagnostics of the test h and z.
EvalSummary evaluate_params(const ModelParams& params, const SplitData& data,
                            const RunConfig& cfg);

// Training entry point shared by run_train and the sweep driver: runs the
// full loop and leaves artifacts in out_dir. Returns the final state.
TrainState train_to_dir(const RunConfig& cfg, const std::string& out_dir);

int run_train(const RunConfig& cfg, const std::string& out_dir);
int run_eval(const std::string& checkpoint_path, const RunConfig& cfg,
             const std::string& out_dir);
int run_gradcheck(const std::string& scope);
int run_ablate(const RunConfig& base, const std::string& axis,
               const std::string& out_dir);

// Throws FormatError listing every missing/mistyped key.
void validate_eval_json(const std::string& text);

// Maps a thrown exception to the stable exit codes and prints the message.
int guard(const std::function<int()>& fn);

}  // namespace compmod::cli
