#include "compmod/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "compmod/errors.hpp"
#include "compmod/rng.hpp"

namespace compmod {

namespace {

Matrix normalize_rows(const Matrix& z) {
    Matrix out = z;
    for (std::size_t i = 0; i < z.rows(); ++i) {
        const double nrm = std::max(row_norm(z, i), 1e-12);
        for (std::size_t j = 0; j < z.cols(); ++j) out(i, j) /= nrm;
    }
    return out;
}

ProbeResult score(const std::vector<int>& predicted, const std::vector<int>& labels,
                  int num_classes) {
    ProbeResult r;
    r.sample_count = labels.size();
    r.per_class.assign(static_cast<std::size_t>(num_classes), 0.0);
    std::vector<std::size_t> per_class_total(static_cast<std::size_t>(num_classes), 0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const auto cls = static_cast<std::size_t>(labels[i]);
        ++per_class_total[cls];
        if (predicted[i] == labels[i]) {
            ++correct;
            r.per_class[cls] += 1.0;
        }
    }
    for (std::size_t c = 0; c < r.per_class.size(); ++c) {
        if (per_class_total[c] > 0) r.per_class[c] /= static_cast<double>(per_class_total[c]);
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
    return r;
}

int max_label(const std::vector<int>& labels) {
    int m = 0;
    for (int l : labels) m = std::max(m, l);
    return m;
}

}  // namespace

ProbeResult knn_eval(const Matrix& train_z, const std::vector<int>& train_labels,
                     const Matrix& test_z, const std::vector<int>& test_labels,
                     std::size_t k) {
    if (train_z.rows() == 0) throw ContractError("knn_eval: empty train set");
    if (k < 1) throw ContractError("knn_eval: k must be >= 1");
    if (k > train_z.rows()) {
        throw ContractError("knn_eval: k=" + std::to_string(k) + " exceeds train size " +
                            std::to_string(train_z.rows()));
    }
    if (train_z.cols() != test_z.cols()) {
        throw DimensionError("knn_eval: embedding widths differ, " + train_z.shape_str() +
                             " vs " + test_z.shape_str());
    }

    const Matrix train_n = normalize_rows(train_z);
    const Matrix test_n = normalize_rows(test_z);
    const int num_classes = std::max(max_label(train_labels), max_label(test_labels)) + 1;

    std::vector<int> predicted(test_n.rows());
    std::vector<std::pair<double, std::size_t>> sims(train_n.rows());
    for (std::size_t i = 0; i < test_n.rows(); ++i) {
        for (std::size_t t = 0; t < train_n.rows(); ++t) {
            double s = 0.0;
            for (std::size_t j = 0; j < train_n.cols(); ++j) s += test_n(i, j) * train_n(t, j);
            sims[t] = {s, t};
        }
        // Highest similarity first; equal similarities keep index order.
        std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(k),
                          sims.end(), [](const auto& a, const auto& b) {
                              if (a.first != b.first) return a.first > b.first;
                              return a.second < b.second;
                          });
        std::map<int, std::size_t> votes;
        for (std::size_t t = 0; t < k; ++t) ++votes[train_labels[sims[t].second]];
        std::size_t best_count = 0;
        for (const auto& [cls, count] : votes) best_count = std::max(best_count, count);
        // Tie-break: nearest neighbor whose class is among the tied classes.
        int choice = -1;
        for (std::size_t t = 0; t < k; ++t) {
            const int cls = train_labels[sims[t].second];
            if (votes[cls] == best_count) {
                choice = cls;
                break;
            }
        }
        predicted[i] = choice;
    }
    return score(predicted, test_labels, num_classes);
}

ProbeResult linear_probe(const Matrix& train_z, const std::vector<int>& train_labels,
                         const Matrix& test_z, const std::vector<int>& test_labels,
                         std::size_t epochs, double lr, std::uint64_t seed) {
    const int num_classes = std::max(max_label(train_labels), max_label(test_labels)) + 1;
    {
        std::vector<bool> present(static_cast<std::size_t>(num_classes), false);
        for (int l : train_labels) present[static_cast<std::size_t>(l)] = true;
        if (std::count(present.begin(), present.end(), true) < 2) {
            throw ContractError("linear_probe: training labels contain a single class");
        }
    }
    const std::size_t n = train_z.rows();
    const std::size_t d = train_z.cols();
    const auto c = static_cast<std::size_t>(num_classes);

    // Standardize features with train-split statistics; full-batch GD at a
    // fixed learning rate is otherwise at the mercy of the embedding scale.
    Matrix mean(1, d), inv_std(1, d);
    for (std::size_t j = 0; j < d; ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += train_z(i, j);
        m /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (train_z(i, j) - m) * (train_z(i, j) - m);
        var /= static_cast<double>(n);
        mean(0, j) = m;
        inv_std(0, j) = 1.0 / std::sqrt(var + 1e-12);
    }
    auto standardized = [&](const Matrix& z) {
        Matrix out = z;
        for (std::size_t i = 0; i < z.rows(); ++i) {
            for (std::size_t j = 0; j < d; ++j) out(i, j) = (z(i, j) - mean(0, j)) * inv_std(0, j);
        }
        return out;
    };
    const Matrix train_s = standardized(train_z);
    const Matrix test_s = standardized(test_z);

    Rng rng(derive_seed(seed, "linear_probe.init"));
    const double bound = 1.0 / std::sqrt(static_cast<double>(d));
    Matrix w(d, c);
    for (double& v : w.vec()) v = rng.uniform(-bound, bound);
    Matrix bias(1, c);

    Matrix probs(n, c);
    for (std::size_t step = 0; step < epochs; ++step) {
        // Softmax with max-shift.
        Matrix logits = matmul(train_s, w);
        for (std::size_t i = 0; i < n; ++i) {
            double mx = -1e300;
            for (std::size_t j = 0; j < c; ++j) {
                logits(i, j) += bias(0, j);
                mx = std::max(mx, logits(i, j));
            }
            double sum = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
                probs(i, j) = std::exp(logits(i, j) - mx);
                sum += probs(i, j);
            }
            for (std::size_t j = 0; j < c; ++j) probs(i, j) /= sum;
            probs(i, static_cast<std::size_t>(train_labels[i])) -= 1.0;
        }
        // Mean cross-entropy gradient; duplicating samples leaves it unchanged.
        const Matrix gw = scale(matmul_tn(train_s, probs), 1.0 / static_cast<double>(n));
        Matrix gb(1, c);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < c; ++j) gb(0, j) += probs(i, j);
        }
        axpy_in_place(w, -lr, gw);
        axpy_in_place(bias, -lr / static_cast<double>(n), gb);
    }

    std::vector<int> predicted(test_z.rows());
    const Matrix test_logits = matmul(test_s, w);
    for (std::size_t i = 0; i < test_z.rows(); ++i) {
        std::size_t best = 0;
        double best_v = test_logits(i, 0) + bias(0, 0);
        for (std::size_t j = 1; j < c; ++j) {
            const double v = test_logits(i, j) + bias(0, j);
            if (v > best_v) {
                best_v = v;
                best = j;
            }
        }
        predicted[i] = static_cast<int>(best);
    }
    return score(predicted, test_labels, num_classes);
}

std::vector<double> sym_eigenvalues(Matrix a) {
    check_square(a, "sym_eigenvalues");
    const std::size_t n = a.rows();
    // Cyclic Jacobi: rotate away the largest-magnitude off-diagonal entries
    // sweep by sweep. Plenty for the d <= few-hundred diagnostics sizes.
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        }
        if (off < 1e-24) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double cs = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * cs;
                for (std::size_t i = 0; i < n; ++i) {
                    const double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = cs * aip - sn * aiq;
                    a(i, q) = sn * aip + cs * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double api = a(p, i), aqi = a(q, i);
                    a(p, i) = cs * api - sn * aqi;
                    a(q, i) = sn * api + cs * aqi;
                }
            }
        }
    }
    std::vector<double> eig(n);
    for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

double effective_rank(const Matrix& z) {
    if (z.empty()) return 1.0;
    // Singular values via the smaller Gram matrix.
    const Matrix gram = z.rows() <= z.cols() ? matmul_nt(z, z) : matmul_tn(z, z);
    std::vector<double> eig = sym_eigenvalues(gram);
    double total = 0.0;
    std::vector<double> sv;
    sv.reserve(eig.size());
    for (double e : eig) {
        const double s = std::sqrt(std::max(e, 0.0));
        sv.push_back(s);
        total += s;
    }
    if (total <= 0.0) return 1.0;
    double entropy = 0.0;
    for (double s : sv) {
        const double p = s / total;
        if (p > 0.0) entropy -= p * std::log(p);
    }
    return std::exp(entropy);
}

SpectrumDiagnostics spectrum_diagnostics(const Matrix& z, const LossConfig& cfg) {
    if (z.empty()) throw ContractError("spectrum_diagnostics: empty matrix");
    SpectrumDiagnostics d;
    d.coding_entropy = coding_entropy(z, cfg);
    d.effective_rank = effective_rank(z);
    return d;
}

}  // namespace compmod
