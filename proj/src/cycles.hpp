#ifndef AUSCULT_CYCLES_HPP
#define AUSCULT_CYCLES_HPP

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "rng.hpp"
#include "signal.hpp"

namespace auscult {

// Correlation-aware crossfade pair on t in [-1, 1].  With
//   o(t) = (9/16) sin(pi t / 2) + (1/16) sin(3 pi t / 2)
//   e(t) = sqrt(1/(2(1+r)) - ((1-r)/(1+r)) o(t)^2)
// the fade-in f(t) = o(t) + e(t) and fade-out f(-t) satisfy
//   f(t)^2 + f(-t)^2 + 2 r f(t) f(-t) = 1
// identically, so mixing signals of correlation r holds power flat.
double crossfade_in(double t, double r);

// Degenerate fade for near-silent overlap: f(t) = 1/2 + t/2.
double crossfade_in_linear(double t);

// Natural cubic spline data: knots, values, second derivatives (zero at the
// ends).  Linear extension outside the knot range.
struct CubicSpline {
    std::vector<double> x;
    std::vector<double> g;
    std::vector<double> m2;

    double operator()(double u) const;
};

// Reinsch-style natural smoothing spline: minimizes curvature subject to
// sum of squared residuals <= s.  s = 0 interpolates; s at or above the
// straight-line residual returns the least-squares line.
CubicSpline smoothing_spline(std::span<const double> x, std::span<const double> y, double s);

constexpr size_t kSpliceOverlap = 40;

// Joins two segments over a 40-sample overlap: correlation-matched crossfade,
// then a smoothing spline over the crossfaded samples evaluated at twice the
// density.  Output length is len(first) + len(second); the seam center sits
// at len(first).
Signal splice(const Signal& first, const Signal& second);

enum class RearrangeMode : int {
    half_groups = 0,  // two half-size groups, order shuffled
    random_groups = 1, // runs of 1..4 cycles, order shuffled
    every_cycle = 2,   // every cycle its own group
};

// Groups of consecutive cycles, listed in output order as [first, last)
// cycle-index ranges.
struct RearrangePlan {
    std::vector<std::pair<size_t, size_t>> groups;
};

RearrangePlan draw_rearrange_plan(size_t n_cycles, RearrangeMode mode, RandomStream& rng);

struct RearrangeResult {
    Signal signal;
    std::vector<size_t> boundaries; // interior cycle boundaries of the output
    bool rearranged = false;
    RearrangeMode mode = RearrangeMode::half_groups;
};

// Applies a plan to a signal segmented by interior boundaries (k boundaries
// give k+1 cycles).  Total length and cycle count are preserved; new
// boundaries are the cumulative group lengths plus intra-group boundaries.
RearrangeResult rearrange_with_plan(const Signal& x, const std::vector<size_t>& boundaries,
                                    const RearrangePlan& plan);

// Gated rearrangement: fires with the given probability, picks one of the
// three modes equiprobably.  Fewer than two cycles (or cycles too short to
// splice) passes the input through with rearranged = false.
RearrangeResult rearrange_cycles(const Signal& x, const std::vector<size_t>& boundaries,
                                 RandomStream& rng, double probability = 0.75);

// Forced-mode variant, no gate.
RearrangeResult rearrange_cycles_mode(const Signal& x, const std::vector<size_t>& boundaries,
                                      RearrangeMode mode, RandomStream& rng);

} // namespace auscult

#endif
