#pragma once

#include <cstdint>
#include <vector>

#include "compmod/losses.hpp"
#include "compmod/matrix.hpp"

namespace compmod {

struct ProbeResult {
    double accuracy = 0.0;
    std::vector<double> per_class;  // indexed by class id
    std::size_t sample_count = 0;
};

// Cosine-distance k-nearest-neighbor majority vote over the frozen train
// embeddings. Vote ties break toward the class of the nearest neighbor among
// the tied classes; distance ties break by train index.
ProbeResult knn_eval(const Matrix& train_z, const std::vector<int>& train_labels,
                     const Matrix& test_z, const std::vector<int>& test_labels,
                     std::size_t k);

// Multinomial logistic regression on frozen embeddings, full-batch gradient
// descent with seeded init. Returns test accuracy.
ProbeResult linear_probe(const Matrix& train_z, const std::vector<int>& train_labels,
                         const Matrix& test_z, const std::vector<int>& test_labels,
                         std::size_t epochs = 500, double lr = 0.1,
                         std::uint64_t seed = 0);

struct SpectrumDiagnostics {
    double coding_entropy = 0.0;
    double effective_rank = 0.0;
};

// Coding-length entropy plus effective rank of the singular-value spectrum.
// Evaluation-only; no gradients.
SpectrumDiagnostics spectrum_diagnostics(const Matrix& z, const LossConfig& cfg);

// exp(entropy of the normalized singular-value distribution); 1 for the
// zero/rank-1 matrix, min(n, d) for a flat spectrum.
double effective_rank(const Matrix& z);

// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps, ascending.
// Deterministic; used by the diagnostics, not by any training path.
std::vector<double> sym_eigenvalues(Matrix a);

}  // namespace compmod
