// quantizer.hpp — sampled k-point codebook design (k-means++ / Lloyd) and
// min-of-k squared-error evaluation.
//
// kmeans_fit is the computational stand-in for the optimal k-point posterior
// quantizer: best of cfg.restarts independent runs, each run seeded by
// k-means++ and iterated with Lloyd updates until the relative distortion
// improvement drops below rel_tol.  Empty cells are respawned at the current
// farthest training point so the codebook always holds exactly k centroids
// (the min-of-k objective is defined for exactly k candidates).
//
// Determinism: every random choice comes from the caller's Seed (one child
// per restart), every floating-point reduction has a fixed association
// order (chunk grid + pairwise summation), and all tie-breaks favor the
// lowest index.  Fits are bit-reproducible for any worker count.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "klist/parallel.hpp"
#include "klist/seed.hpp"

namespace klist {

struct Codebook {
    std::size_t k = 0;
    std::size_t dim = 0;
    std::vector<double> centroids;  ///< k×dim, row-major
    double train_distortion = 0.0;  ///< mean min-of-k squared error on the training set

    [[nodiscard]] std::span<const double> centroid(std::size_t i) const {
        return {centroids.data() + i * dim, dim};
    }
};

enum class EmptyCellPolicy {
    respawn_at_farthest_point,
};

struct FitConfig {
    /// Training sample count for estimate_d1; unset means the k-dependent
    /// default max(200·k, 10^5).  kmeans_fit itself takes explicit samples.
    std::optional<std::size_t> n_train;
    std::size_t max_iters = 200;
    double rel_tol = 1e-6; ///< relative distortion-improvement stop threshold
    std::size_t restarts = 8;
    EmptyCellPolicy empty_cell_policy = EmptyCellPolicy::respawn_at_farthest_point;

    void validate() const {
        if (n_train && *n_train == 0)
            throw std::invalid_argument("FitConfig.n_train: must be positive when set");
        if (max_iters == 0)
            throw std::invalid_argument("FitConfig.max_iters: must be positive");
        if (!(rel_tol > 0.0))
            throw std::invalid_argument("FitConfig.rel_tol: must be positive");
        if (restarts == 0)
            throw std::invalid_argument("FitConfig.restarts: must be >= 1");
    }
};

/// min_i ‖x − centroid_i‖², computed directly (no algebraic rearrangement),
/// so the result is exact up to per-term rounding.
[[nodiscard]] inline double min_of_k_sqerr(std::span<const double> x, const Codebook& cb) {
    if (x.size() != cb.dim)
        throw std::invalid_argument("min_of_k_sqerr: x must have length codebook.dim");
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cb.k; ++i) {
        const double* c = cb.centroids.data() + i * cb.dim;
        double s = 0.0;
        for (std::size_t j = 0; j < cb.dim; ++j) {
            const double diff = x[j] - c[j];
            s += diff * diff;
        }
        best = std::min(best, s);
    }
    return best;
}

/// Shift every centroid by `shift`; train_distortion carries over (the
/// distortion is invariant under joint translation of source and codebook).
[[nodiscard]] inline Codebook translate_codebook(const Codebook& cb,
                                                 std::span<const double> shift) {
    if (shift.size() != cb.dim)
        throw std::invalid_argument("translate_codebook: shift must have length codebook.dim");
    Codebook out = cb;
    for (std::size_t i = 0; i < cb.k; ++i)
        for (std::size_t j = 0; j < cb.dim; ++j)
            out.centroids[i * cb.dim + j] += shift[j];
    return out;
}

/// Column-major centroid view for fast nearest-centroid queries: the score
/// ‖c_i‖² − 2·x·c_i is accumulated over contiguous runs of i, which the
/// compiler vectorizes.  dist² = score + ‖x‖², clamped at 0 against
/// cancellation.  Queries against an index and against min_of_k_sqerr agree
/// on the argmin (identical score ordering up to rounding) but may differ in
/// the last ulps of the distance; each consumer picks one path and sticks
/// with it.
class CentroidIndex {
  public:
    CentroidIndex() = default;

    void assign(std::span<const double> centroids, std::size_t k, std::size_t dim) {
        k_ = k;
        dim_ = dim;
        columns_.resize(k * dim);
        norm2_.assign(k, 0.0);
        for (std::size_t i = 0; i < k; ++i) {
            double n2 = 0.0;
            for (std::size_t j = 0; j < dim; ++j) {
                const double v = centroids[i * dim + j];
                columns_[j * k + i] = v;
                n2 += v * v;
            }
            norm2_[i] = n2;
        }
    }

    struct Hit {
        std::size_t index;
        double dist2;
    };

    /// Nearest centroid to x; ties go to the lowest index.  `scores` is
    /// caller-owned scratch (resized to k) so concurrent queries don't race.
    [[nodiscard]] Hit nearest(std::span<const double> x, std::vector<double>& scores) const {
        scores.resize(k_);
        std::copy(norm2_.begin(), norm2_.end(), scores.begin());
        double xn2 = 0.0;
        for (std::size_t j = 0; j < dim_; ++j) {
            const double xj = x[j];
            xn2 += xj * xj;
            const double* col = columns_.data() + j * k_;
            double* s = scores.data();
            for (std::size_t i = 0; i < k_; ++i)
                s[i] -= 2.0 * xj * col[i];
        }
        std::size_t best = 0;
        double best_score = scores[0];
        for (std::size_t i = 1; i < k_; ++i) {
            if (scores[i] < best_score) {
                best_score = scores[i];
                best = i;
            }
        }
        return Hit{best, std::max(0.0, best_score + xn2)};
    }

    [[nodiscard]] std::size_t k() const noexcept { return k_; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }

  private:
    std::size_t k_ = 0, dim_ = 0;
    std::vector<double> columns_; ///< dim×k: columns_[j*k + i] = centroid i, coord j
    std::vector<double> norm2_;
};

namespace detail {

inline constexpr std::size_t kmeans_chunk = 8192;

// One Lloyd run on a fixed training set.  Owns all per-run buffers.
class LloydRun {
  public:
    LloydRun(std::span<const double> samples, std::size_t dim, std::size_t k)
        : samples_(samples), dim_(dim), k_(k), n_(samples.size() / dim),
          centroids_(k * dim), dists_(n_) {}

    /// k-means++ seeding: first center uniform, subsequent centers sampled
    /// proportionally to the current squared distance to the chosen set.
    void seed_kmeanspp(RandomStream& stream) {
        std::vector<char> used(n_, 0);
        std::vector<double> mind(n_, std::numeric_limits<double>::infinity());
        const std::size_t first = static_cast<std::size_t>(stream.next_below(n_));
        copy_sample_to_centroid(first, 0);
        used[first] = 1;
        for (std::size_t c = 1; c < k_; ++c) {
            update_min_dists(c - 1, mind);
            const double total = pairwise_sum(mind);
            std::size_t pick = n_;
            if (total > 0.0) {
                const double target = stream.next_unit() * total;
                double acc = 0.0;
                std::size_t last_positive = n_;
                for (std::size_t i = 0; i < n_; ++i) {
                    if (mind[i] > 0.0)
                        last_positive = i;
                    acc += mind[i];
                    if (acc >= target && mind[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
                if (pick == n_) // sequential-scan rounding drift past total
                    pick = last_positive;
            }
            if (pick == n_) {
                // All residual distances are zero (fewer distinct points
                // than k): fall back to the first unused index.
                const auto it = std::find(used.begin(), used.end(), 0);
                pick = it == used.end() ? 0 : static_cast<std::size_t>(it - used.begin());
            }
            copy_sample_to_centroid(pick, c);
            used[pick] = 1;
        }
    }

    void seed_warm(const Codebook& warm) {
        for (std::size_t i = 0; i < k_; ++i) {
            const auto src = warm.centroid(i % warm.k);
            std::copy(src.begin(), src.end(), centroids_.begin() + i * dim_);
        }
    }

    /// Lloyd iterations until relative improvement < rel_tol or max_iters
    /// assignment passes; returns the final (centroids, distortion) pair,
    /// always mutually consistent.
    [[nodiscard]] Codebook iterate(const FitConfig& cfg) {
        double prev = std::numeric_limits<double>::infinity();
        std::vector<double> sums(k_ * dim_);
        std::vector<std::uint64_t> counts(k_);
        for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
            const double distortion = assign_pass(sums, counts);
            if (distortion > prev * (1.0 + 1e-9))
                throw std::logic_error("kmeans_fit: Lloyd distortion increased (" +
                                       std::to_string(prev) + " -> " +
                                       std::to_string(distortion) + ")");
            if (prev - distortion < cfg.rel_tol * prev || distortion == 0.0)
                return finish(distortion);
            prev = distortion;
            update_centroids(sums, counts);
        }
        // Budget exhausted after an update: score the final centroids.
        return finish(assign_pass(sums, counts));
    }

  private:
    [[nodiscard]] Codebook finish(double distortion) const {
        return Codebook{k_, dim_, centroids_, distortion};
    }

    void copy_sample_to_centroid(std::size_t sample, std::size_t centroid) {
        std::copy_n(samples_.begin() + sample * dim_, dim_, centroids_.begin() + centroid * dim_);
    }

    void update_min_dists(std::size_t new_center, std::vector<double>& mind) const {
        const double* c = centroids_.data() + new_center * dim_;
        for_each_chunk(n_, kmeans_chunk, [&](std::size_t, std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                const double* x = samples_.data() + i * dim_;
                double s = 0.0;
                for (std::size_t j = 0; j < dim_; ++j) {
                    const double diff = x[j] - c[j];
                    s += diff * diff;
                }
                mind[i] = std::min(mind[i], s);
            }
        });
    }

    /// Assignment pass: nearest centroid per sample, per-cell sums/counts
    /// accumulated per chunk and merged in chunk order.  Returns the mean
    /// min-of-k squared error of the current centroids.
    [[nodiscard]] double assign_pass(std::vector<double>& sums, std::vector<std::uint64_t>& counts) {
        index_.assign(centroids_, k_, dim_);
        const std::size_t n_chunks = (n_ + kmeans_chunk - 1) / kmeans_chunk;
        std::vector<std::vector<double>> chunk_sums(n_chunks);
        std::vector<std::vector<std::uint64_t>> chunk_counts(n_chunks);
        for_each_chunk(n_, kmeans_chunk, [&](std::size_t c, std::size_t begin, std::size_t end) {
            auto& local_sums = chunk_sums[c];
            auto& local_counts = chunk_counts[c];
            local_sums.assign(k_ * dim_, 0.0);
            local_counts.assign(k_, 0);
            std::vector<double> scratch;
            for (std::size_t i = begin; i < end; ++i) {
                const std::span<const double> x{samples_.data() + i * dim_, dim_};
                const auto hit = index_.nearest(x, scratch);
                dists_[i] = hit.dist2;
                local_counts[hit.index] += 1;
                double* dst = local_sums.data() + hit.index * dim_;
                for (std::size_t j = 0; j < dim_; ++j)
                    dst[j] += x[j];
            }
        });
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t c = 0; c < n_chunks; ++c) {
            for (std::size_t i = 0; i < k_ * dim_; ++i)
                sums[i] += chunk_sums[c][i];
            for (std::size_t i = 0; i < k_; ++i)
                counts[i] += chunk_counts[c][i];
        }
        return pairwise_sum(dists_) / static_cast<double>(n_);
    }

    /// Means for populated cells; empty cells respawn at the farthest
    /// training points (descending distance, lowest index on ties), which
    /// never increases the training distortion.
    void update_centroids(const std::vector<double>& sums,
                          const std::vector<std::uint64_t>& counts) {
        std::vector<std::size_t> empty;
        for (std::size_t i = 0; i < k_; ++i) {
            if (counts[i] == 0) {
                empty.push_back(i);
                continue;
            }
            const double inv = 1.0 / static_cast<double>(counts[i]);
            for (std::size_t j = 0; j < dim_; ++j)
                centroids_[i * dim_ + j] = sums[i * dim_ + j] * inv;
        }
        if (empty.empty())
            return;
        std::vector<std::size_t> order(n_);
        std::iota(order.begin(), order.end(), std::size_t{0});
        const std::size_t m = std::min(empty.size(), n_);
        std::partial_sort(order.begin(), order.begin() + m, order.end(),
                          [&](std::size_t a, std::size_t b) {
                              if (dists_[a] != dists_[b])
                                  return dists_[a] > dists_[b];
                              return a < b;
                          });
        for (std::size_t e = 0; e < empty.size(); ++e)
            copy_sample_to_centroid(order[e % m], empty[e]);
    }

    std::span<const double> samples_;
    std::size_t dim_, k_, n_;
    std::vector<double> centroids_;
    std::vector<double> dists_;
    CentroidIndex index_;
};

} // namespace detail

/// Fit a k-point codebook to `samples` (n×dim, row-major).  Returns the
/// lowest-train_distortion codebook over cfg.restarts runs.  When
/// `warm_start` is given, the first run is initialized from it (centroids
/// repeated cyclically if warm_start->k < k; the duplicates land in empty
/// cells on the first pass and respawn), which guarantees the fit never ends
/// worse than the warm codebook on the same training set.
[[nodiscard]] inline Codebook kmeans_fit(std::span<const double> samples, std::size_t dim,
                                         std::size_t k, const FitConfig& cfg, const Seed& seed,
                                         const Codebook* warm_start = nullptr) {
    cfg.validate();
    if (dim == 0)
        throw std::invalid_argument("kmeans_fit: dim must be >= 1");
    if (samples.empty() || samples.size() % dim != 0)
        throw std::invalid_argument("kmeans_fit: samples must be a nonempty multiple of dim");
    const std::size_t n = samples.size() / dim;
    if (k == 0 || k > n)
        throw std::invalid_argument("kmeans_fit: need 1 <= k <= sample count (got k=" +
                                    std::to_string(k) + ", n=" + std::to_string(n) + ")");
    for (const double v : samples)
        if (!std::isfinite(v))
            throw std::invalid_argument("kmeans_fit: non-finite sample coordinate");
    if (warm_start) {
        if (warm_start->dim != dim)
            throw std::invalid_argument("kmeans_fit: warm_start dimension mismatch");
        if (warm_start->k == 0 || warm_start->k > k)
            throw std::invalid_argument("kmeans_fit: warm_start must have 1 <= k' <= k");
    }

    Codebook best;
    bool have_best = false;
    for (std::size_t r = 0; r < cfg.restarts; ++r) {
        detail::LloydRun run(samples, dim, k);
        if (r == 0 && warm_start) {
            run.seed_warm(*warm_start);
        } else {
            RandomStream stream(seed.child(r));
            run.seed_kmeanspp(stream);
        }
        Codebook candidate = run.iterate(cfg);
        if (!have_best || candidate.train_distortion < best.train_distortion) {
            best = std::move(candidate);
            have_best = true;
        }
    }
    return best;
}

} // namespace klist
