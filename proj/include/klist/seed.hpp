// seed.hpp — deterministic, splittable random streams.
//
// Every stochastic routine in this library takes a Seed, never a stateful
// engine.  A Seed is a 64-bit root plus a path of child indices; folding the
// path into the root yields a 64-bit stream key, and the stream itself is a
// counter construction: output n is a bijective mix of (key + n·golden).
// Consequences we rely on everywhere:
//
//   * identical (root, path) → bit-identical draws on every platform,
//   * child streams are independent for all practical purposes and may be
//     consumed in any order, which is what makes trial-level parallelism
//     reproducible regardless of the worker count.
//
// The Gaussian sampler is Box–Muller in trigonometric form and is part of
// the reproducibility contract: fill_normal consumes two uniforms per pair
// of outputs (cosine then sine branch), and a trailing odd element or a
// scalar next_normal() takes the cosine branch alone.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace klist {

namespace detail {

inline constexpr std::uint64_t golden64 = 0x9E3779B97F4A7C15ull;

// Finalizer from the splitmix64 generator (Steele, Lea, Flood); bijective on
// 64-bit words with full avalanche.
[[nodiscard]] inline constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Fold one path element into a stream key.  The element is mixed before the
// xor so that small indices (0, 1, 2, ...) land far apart.
[[nodiscard]] inline constexpr std::uint64_t fold_key(std::uint64_t key,
                                                      std::uint64_t element) noexcept {
    return mix64(key ^ (mix64(element + golden64) + 0x94D049BB133111EBull));
}

[[nodiscard]] inline constexpr std::uint64_t root_key(std::uint64_t root) noexcept {
    return mix64(root + golden64);
}

} // namespace detail

/// Identity of a random stream: a root seed plus a hierarchy of child
/// indices.  Seeds are value types; child() never mutates the parent.
class Seed {
  public:
    explicit Seed(std::uint64_t root)
        : root_(root), key_(detail::root_key(root)) {}

    /// Derive the child seed with the given index.  Children with distinct
    /// indices, and seeds with distinct paths generally, produce unrelated
    /// streams.
    [[nodiscard]] Seed child(std::uint64_t index) const {
        Seed c(*this);
        c.path_.push_back(index);
        c.key_ = detail::fold_key(key_, index);
        return c;
    }

    /// Stream key of child(index), without materialising the path vector.
    /// Hot loops that spawn one stream per trial use this.
    [[nodiscard]] std::uint64_t child_key(std::uint64_t index) const noexcept {
        return detail::fold_key(key_, index);
    }

    [[nodiscard]] std::uint64_t root() const noexcept { return root_; }
    [[nodiscard]] const std::vector<std::uint64_t>& path() const noexcept { return path_; }
    [[nodiscard]] std::uint64_t key() const noexcept { return key_; }

  private:
    std::uint64_t root_;
    std::vector<std::uint64_t> path_;
    std::uint64_t key_;
};

/// Counter-based uniform/Gaussian stream over a fixed key.  Copy-cheap; a
/// copy continues from the same counter, so share by reference when a single
/// consumption order is intended.
class RandomStream {
  public:
    explicit RandomStream(const Seed& seed) noexcept : key_(seed.key()) {}
    explicit RandomStream(std::uint64_t raw_key) noexcept : key_(raw_key) {}

    /// n-th output of splitmix64 seeded with the stream key.
    [[nodiscard]] std::uint64_t next_u64() noexcept {
        counter_ += detail::golden64;
        return detail::mix64(key_ + counter_);
    }

    /// Uniform on the open interval (0, 1): 53-bit mantissa, offset by half
    /// an ulp so 0 and 1 are unreachable (Box–Muller needs log(u) finite).
    [[nodiscard]] double next_unit() noexcept {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n) via the multiply-high reduction.  The bias
    /// is < n / 2^64, irrelevant at our sizes, and the draw cost is fixed,
    /// which keeps stream consumption deterministic.
    [[nodiscard]] std::uint64_t next_below(std::uint64_t n) {
        if (n == 0)
            throw std::invalid_argument("RandomStream::next_below: n must be positive");
        const auto wide = static_cast<unsigned __int128>(next_u64());
        return static_cast<std::uint64_t>((wide * n) >> 64);
    }

    /// Standard normal via Box–Muller, cosine branch (its sine twin is
    /// discarded).  Prefer fill_normal for vectors.
    [[nodiscard]] double next_normal() noexcept {
        const double u1 = next_unit();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Fill `out` with i.i.d. N(0, 1) variates, two per Box–Muller pair; an
    /// odd final element takes the cosine branch alone.
    void fill_normal(std::span<double> out) noexcept {
        std::size_t i = 0;
        for (; i + 2 <= out.size(); i += 2) {
            const double u1 = next_unit();
            const double u2 = next_unit();
            const double r = std::sqrt(-2.0 * std::log(u1));
            const double t = 2.0 * std::numbers::pi * u2;
            out[i] = r * std::cos(t);
            out[i + 1] = r * std::sin(t);
        }
        if (i < out.size())
            out[i] = next_normal();
    }

    [[nodiscard]] std::uint64_t key() const noexcept { return key_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace klist
