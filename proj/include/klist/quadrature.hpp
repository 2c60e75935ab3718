// quadrature.hpp — globally adaptive Gauss–Kronrod integration on [a, b].
//
// Each segment is scored with the 7-point Gauss / 15-point Kronrod pair; the
// segment with the largest error estimate is bisected until the summed
// estimate meets tolerance or the segment budget is exhausted.  Everything
// is deterministic: fixed node tables, fixed splitting order, no randomness.

#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace klist {

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0; ///< summed |K15 − G7| over final segments
    std::size_t segments = 0;
};

class QuadratureError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

// Nodes/weights of the (G7, K15) pair on [-1, 1]; positive half, symmetric.
// Odd Kronrod indices are the embedded Gauss-7 nodes.
inline constexpr std::array<double, 8> k15_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
inline constexpr std::array<double, 8> k15_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> g7_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
    double a, b;
    double value;
    double error;
};

struct SegmentWorse {
    bool operator()(const Segment& lhs, const Segment& rhs) const noexcept {
        return lhs.error < rhs.error;
    }
};

template <typename F>
Segment evaluate_segment(F&& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    auto sample = [&](double node) {
        const double lo = f(center - half * node);
        const double hi = f(center + half * node);
        if (!std::isfinite(lo) || !std::isfinite(hi))
            throw QuadratureError("integrate_adaptive: non-finite integrand value near x = " +
                                  std::to_string(center));
        return lo + hi;
    };
    double kronrod = k15_weights[7] * f(center);
    if (!std::isfinite(kronrod))
        throw QuadratureError("integrate_adaptive: non-finite integrand value near x = " +
                              std::to_string(center));
    double gauss = g7_weights[3] * kronrod / k15_weights[7];
    for (std::size_t i = 0; i < 7; ++i) {
        const double pair_sum = sample(k15_nodes[i]);
        kronrod += k15_weights[i] * pair_sum;
        if (i % 2 == 1)
            gauss += g7_weights[i / 2] * pair_sum;
    }
    return Segment{a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

} // namespace detail

/// Integrate f over [a, b] until the summed Kronrod error estimate drops
/// below max(abs_tol, rel_tol·|value|).  Throws QuadratureError if the
/// segment budget is reached first or the integrand is non-finite.
template <typename F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, double rel_tol = 1e-10,
                                    double abs_tol = 0.0, std::size_t max_segments = 2000) {
    if (!std::isfinite(a) || !std::isfinite(b) || !(a < b))
        throw std::invalid_argument("integrate_adaptive: need finite bounds with a < b");
    if (!(rel_tol > 0.0) && !(abs_tol > 0.0))
        throw std::invalid_argument("integrate_adaptive: need a positive tolerance");
    if (max_segments == 0)
        throw std::invalid_argument("integrate_adaptive: max_segments must be >= 1");

    std::priority_queue<detail::Segment, std::vector<detail::Segment>, detail::SegmentWorse> queue;
    queue.push(detail::evaluate_segment(f, a, b));
    double total_value = queue.top().value;
    double total_error = queue.top().error;

    while (true) {
        const double goal = std::max(abs_tol, rel_tol * std::abs(total_value));
        if (total_error <= goal)
            break;
        if (queue.size() >= max_segments)
            throw QuadratureError(
                "integrate_adaptive: tolerance not reached within " +
                std::to_string(max_segments) + " segments (residual error estimate " +
                std::to_string(total_error) + ")");
        const detail::Segment worst = queue.top();
        queue.pop();
        total_value -= worst.value;
        total_error -= worst.error;
        const double mid = 0.5 * (worst.a + worst.b);
        for (const auto& half : {detail::evaluate_segment(f, worst.a, mid),
                                 detail::evaluate_segment(f, mid, worst.b)}) {
            total_value += half.value;
            total_error += half.error;
            queue.push(half);
        }
    }
    return QuadratureResult{total_value, total_error, queue.size()};
}

} // namespace klist
