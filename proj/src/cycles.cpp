#include "cycles.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "errors.hpp"

namespace auscult {

double crossfade_in_linear(double t) { return 0.5 + 0.5 * t; }

double crossfade_in(double t, double r) {
    const double o = (9.0 / 16.0) * std::sin(M_PI * t / 2.0) +
                     (1.0 / 16.0) * std::sin(3.0 * M_PI * t / 2.0);
    const double rad = 1.0 / (2.0 * (1.0 + r)) - ((1.0 - r) / (1.0 + r)) * o * o;
    // |o| <= 1/2 keeps the radicand non-negative; clamp guards roundoff only.
    return o + std::sqrt(std::max(rad, 0.0));
}

double CubicSpline::operator()(double u) const {
    const size_t n = x.size();
    if (n == 1) return g[0];
    if (u <= x.front()) {
        const double h = x[1] - x[0];
        const double d = (g[1] - g[0]) / h - h * (2.0 * m2[0] + m2[1]) / 6.0;
        return g[0] + d * (u - x[0]);
    }
    if (u >= x.back()) {
        const double h = x[n - 1] - x[n - 2];
        const double d = (g[n - 1] - g[n - 2]) / h + h * (m2[n - 2] + 2.0 * m2[n - 1]) / 6.0;
        return g[n - 1] + d * (u - x[n - 1]);
    }
    const size_t j =
        static_cast<size_t>(std::upper_bound(x.begin(), x.end(), u) - x.begin()) - 1;
    const double h = x[j + 1] - x[j];
    const double a = x[j + 1] - u, b = u - x[j];
    return (a * a * a * m2[j] + b * b * b * m2[j + 1]) / (6.0 * h) +
           (g[j] / h - m2[j] * h / 6.0) * a + (g[j + 1] / h - m2[j + 1] * h / 6.0) * b;
}

CubicSpline smoothing_spline(std::span<const double> xs, std::span<const double> ys, double s) {
    const size_t n = xs.size();
    if (n != ys.size() || n < 2) fail(Errc::invalid_argument, "smoothing_spline: need >= 2 points");
    for (size_t i = 1; i < n; ++i)
        if (!(xs[i] > xs[i - 1]))
            fail(Errc::invalid_argument, "smoothing_spline: knots must strictly increase");
    if (s < 0.0) fail(Errc::invalid_argument, "smoothing_spline: s must be >= 0");

    CubicSpline sp;
    sp.x.assign(xs.begin(), xs.end());
    sp.m2.assign(n, 0.0);

    // Least-squares line and its residual: the infinite-smoothing limit.
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    double sse_line = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double r = ys[i] - (my + slope * (xs[i] - mx));
        sse_line += r * r;
    }
    if (sse_line <= s || n == 2) {
        sp.g.resize(n);
        for (size_t i = 0; i < n; ++i) sp.g[i] = my + slope * (xs[i] - mx);
        return sp;
    }

    // Reinsch system: (R + alpha Q^T Q) gamma = Q^T y, fitted values
    // g = y - alpha Q gamma, residual rho(alpha) = alpha^2 |Q gamma|^2,
    // monotone from 0 (interpolation) to the line residual.
    const size_t m = n - 2;
    std::vector<double> h(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) h[i] = xs[i + 1] - xs[i];

    std::vector<double> q0(m), q1(m), q2(m); // column j hits rows j, j+1, j+2
    for (size_t j = 0; j < m; ++j) {
        q0[j] = 1.0 / h[j];
        q1[j] = -1.0 / h[j] - 1.0 / h[j + 1];
        q2[j] = 1.0 / h[j + 1];
    }
    std::vector<double> r_d(m), r_e(m > 1 ? m - 1 : 0);
    for (size_t j = 0; j < m; ++j) r_d[j] = (h[j] + h[j + 1]) / 3.0;
    for (size_t j = 0; j + 1 < m; ++j) r_e[j] = h[j + 1] / 6.0;

    std::vector<double> qq_d(m), qq_e1(m > 1 ? m - 1 : 0), qq_e2(m > 2 ? m - 2 : 0);
    for (size_t j = 0; j < m; ++j) qq_d[j] = q0[j] * q0[j] + q1[j] * q1[j] + q2[j] * q2[j];
    for (size_t j = 0; j + 1 < m; ++j) qq_e1[j] = q1[j] * q0[j + 1] + q2[j] * q1[j + 1];
    for (size_t j = 0; j + 2 < m; ++j) qq_e2[j] = q2[j] * q0[j + 2];

    std::vector<double> qty(m);
    for (size_t j = 0; j < m; ++j) qty[j] = q0[j] * ys[j] + q1[j] * ys[j + 1] + q2[j] * ys[j + 2];

    // Banded LDL^T solve of (R + alpha Q^T Q) gamma = qty.
    auto solve_for = [&](double alpha, std::vector<double>& gamma) {
        std::vector<double> d(m), e1(m > 1 ? m - 1 : 0), e2(m > 2 ? m - 2 : 0);
        for (size_t j = 0; j < m; ++j) d[j] = r_d[j] + alpha * qq_d[j];
        for (size_t j = 0; j + 1 < m; ++j) e1[j] = r_e[j] + alpha * qq_e1[j];
        for (size_t j = 0; j + 2 < m; ++j) e2[j] = alpha * qq_e2[j];

        std::vector<double> l1(e1.size(), 0.0), l2(e2.size(), 0.0), D(m, 0.0);
        for (size_t i = 0; i < m; ++i) {
            double di = d[i];
            if (i >= 1) di -= l1[i - 1] * l1[i - 1] * D[i - 1];
            if (i >= 2) di -= l2[i - 2] * l2[i - 2] * D[i - 2];
            D[i] = di;
            if (i + 1 < m) {
                double v = e1[i];
                if (i >= 1) v -= l2[i - 1] * l1[i - 1] * D[i - 1];
                l1[i] = v / D[i];
            }
            if (i + 2 < m) l2[i] = e2[i] / D[i];
        }
        gamma = qty;
        for (size_t i = 0; i < m; ++i) {
            if (i >= 1) gamma[i] -= l1[i - 1] * gamma[i - 1];
            if (i >= 2) gamma[i] -= l2[i - 2] * gamma[i - 2];
        }
        for (size_t i = 0; i < m; ++i) gamma[i] /= D[i];
        for (size_t i = m; i-- > 0;) {
            if (i + 1 < m) gamma[i] -= l1[i] * gamma[i + 1];
            if (i + 2 < m) gamma[i] -= l2[i] * gamma[i + 2];
        }
    };

    auto residual = [&](double alpha, std::vector<double>& gamma) {
        solve_for(alpha, gamma);
        double rho = 0.0;
        std::vector<double> qg(n, 0.0);
        for (size_t j = 0; j < m; ++j) {
            qg[j] += q0[j] * gamma[j];
            qg[j + 1] += q1[j] * gamma[j];
            qg[j + 2] += q2[j] * gamma[j];
        }
        for (double v : qg) rho += v * v;
        return alpha * alpha * rho;
    };

    std::vector<double> gamma;
    double alpha = 0.0;
    if (s > 0.0) {
        double lo = 0.0, hi = 1.0;
        while (residual(hi, gamma) < s && hi < 1e18) hi *= 16.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (residual(mid, gamma) < s)
                lo = mid;
            else
                hi = mid;
            if (hi - lo <= 1e-12 * std::max(1.0, hi)) break;
        }
        alpha = 0.5 * (lo + hi);
    }
    solve_for(alpha, gamma);

    sp.g.assign(ys.begin(), ys.end());
    for (size_t j = 0; j < m; ++j) {
        sp.g[j] -= alpha * q0[j] * gamma[j];
        sp.g[j + 1] -= alpha * q1[j] * gamma[j];
        sp.g[j + 2] -= alpha * q2[j] * gamma[j];
    }
    for (size_t j = 0; j < m; ++j) sp.m2[j + 1] = gamma[j];
    return sp;
}

Signal splice(const Signal& first, const Signal& second) {
    const size_t k = kSpliceOverlap;
    if (first.size() < k || second.size() < k)
        fail(Errc::invalid_argument, "splice: segment shorter than the overlap");
    if (first.sample_rate_hz != second.sample_rate_hz)
        fail(Errc::invalid_argument, "splice: sample rates differ");

    const double* xt = first.samples.data() + (first.size() - k);  // outgoing tail
    const double* yh = second.samples.data();                      // incoming head

    // Zero-lag correlation of the overlapping stretches decides the fade
    // shape; degenerate variance falls back to the linear fade.
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < k; ++i) {
        mx += xt[i];
        my += yh[i];
    }
    mx /= k;
    my /= k;
    double vxx = 0.0, vyy = 0.0, vxy = 0.0;
    for (size_t i = 0; i < k; ++i) {
        vxx += (xt[i] - mx) * (xt[i] - mx);
        vyy += (yh[i] - my) * (yh[i] - my);
        vxy += (xt[i] - mx) * (yh[i] - my);
    }
    vxx /= k;
    vyy /= k;
    vxy /= k;

    const bool degenerate = vxx < 1e-6 || vyy < 1e-6;
    const double r = degenerate ? 0.0 : std::clamp(vxy / std::sqrt(vxx * vyy), 0.0, 1.0);

    std::vector<double> mixed(k), knots(k);
    for (size_t i = 0; i < k; ++i) {
        const double t = (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(k) - 1.0;
        const double fin = degenerate ? crossfade_in_linear(t) : crossfade_in(t, r);
        const double fout = degenerate ? crossfade_in_linear(-t) : crossfade_in(-t, r);
        mixed[i] = fin * yh[i] + fout * xt[i];
        knots[i] = static_cast<double>(i);
    }

    const CubicSpline sp = smoothing_spline(knots, mixed, static_cast<double>(k));
    std::vector<double> seam(2 * k);
    for (size_t j = 0; j < 2 * k; ++j)
        seam[j] = sp(static_cast<double>(k - 1) * static_cast<double>(j) /
                     static_cast<double>(2 * k - 1));

    Signal out;
    out.sample_rate_hz = first.sample_rate_hz;
    out.samples.reserve(first.size() + second.size());
    out.samples.insert(out.samples.end(), first.samples.begin(), first.samples.end() - k);
    out.samples.insert(out.samples.end(), seam.begin(), seam.end());
    out.samples.insert(out.samples.end(), second.samples.begin() + k, second.samples.end());
    return out;
}

namespace {

void fisher_yates(std::vector<std::pair<size_t, size_t>>& v, RandomStream& rng) {
    for (size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[rng.choice(i)]);
}

} // namespace

RearrangePlan draw_rearrange_plan(size_t n_cycles, RearrangeMode mode, RandomStream& rng) {
    if (n_cycles < 2) fail(Errc::invalid_argument, "rearrange: need at least 2 cycles");
    RearrangePlan plan;
    switch (mode) {
    case RearrangeMode::half_groups: {
        const size_t g = n_cycles / 2;
        plan.groups = {{0, g}, {g, n_cycles}};
        break;
    }
    case RearrangeMode::random_groups: {
        size_t i = 0;
        while (i < n_cycles) {
            const size_t sz = static_cast<size_t>(rng.randint(1, 4));
            plan.groups.emplace_back(i, std::min(i + sz, n_cycles));
            i += sz;
        }
        break;
    }
    case RearrangeMode::every_cycle:
        for (size_t i = 0; i < n_cycles; ++i) plan.groups.emplace_back(i, i + 1);
        break;
    }
    fisher_yates(plan.groups, rng);
    return plan;
}

RearrangeResult rearrange_with_plan(const Signal& x, const std::vector<size_t>& boundaries,
                                    const RearrangePlan& plan) {
    for (size_t i = 0; i < boundaries.size(); ++i) {
        const bool increasing = i == 0 || boundaries[i] > boundaries[i - 1];
        if (!increasing || boundaries[i] == 0 || boundaries[i] >= x.size())
            fail(Errc::invalid_argument, "rearrange: boundaries must strictly increase inside the signal");
    }

    // Cycle sample ranges: [0,b0), [b0,b1), ..., [b_last, len).
    std::vector<size_t> starts{0};
    starts.insert(starts.end(), boundaries.begin(), boundaries.end());
    std::vector<size_t> ends(boundaries.begin(), boundaries.end());
    ends.push_back(x.size());

    RearrangeResult res;
    res.rearranged = true;

    Signal acc;
    acc.sample_rate_hz = x.sample_rate_hz;
    std::vector<size_t> out_bounds;
    std::vector<size_t> out_cycle_lens;

    for (const auto& [c0, c1] : plan.groups) {
        if (c1 <= c0 || c1 > ends.size())
            fail(Errc::invalid_argument, "rearrange: plan does not fit the cycle count");
        Signal seg;
        seg.sample_rate_hz = x.sample_rate_hz;
        seg.samples.assign(x.samples.begin() + static_cast<long>(starts[c0]),
                           x.samples.begin() + static_cast<long>(ends[c1 - 1]));
        for (size_t c = c0; c < c1; ++c) out_cycle_lens.push_back(ends[c] - starts[c]);
        acc = acc.samples.empty() ? std::move(seg) : splice(acc, seg);
    }

    size_t pos = 0;
    for (size_t i = 0; i + 1 < out_cycle_lens.size(); ++i) {
        pos += out_cycle_lens[i];
        out_bounds.push_back(pos);
    }

    res.signal = std::move(acc);
    res.boundaries = std::move(out_bounds);
    return res;
}

namespace {

bool plan_spliceable(const RearrangePlan& plan, const std::vector<size_t>& starts,
                     const std::vector<size_t>& ends) {
    if (plan.groups.size() < 2) return true;
    for (const auto& [c0, c1] : plan.groups)
        if (ends[c1 - 1] - starts[c0] < kSpliceOverlap) return false;
    return true;
}

RearrangeResult identity_result(const Signal& x, const std::vector<size_t>& boundaries) {
    RearrangeResult res;
    res.signal = x;
    res.boundaries = boundaries;
    res.rearranged = false;
    return res;
}

RearrangeResult run_mode(const Signal& x, const std::vector<size_t>& boundaries,
                         RearrangeMode mode, RandomStream& rng) {
    const size_t n_cycles = boundaries.size() + 1;
    const RearrangePlan plan = draw_rearrange_plan(n_cycles, mode, rng);

    std::vector<size_t> starts{0};
    starts.insert(starts.end(), boundaries.begin(), boundaries.end());
    std::vector<size_t> ends(boundaries.begin(), boundaries.end());
    ends.push_back(x.size());
    if (!plan_spliceable(plan, starts, ends)) return identity_result(x, boundaries);

    RearrangeResult res = rearrange_with_plan(x, boundaries, plan);
    res.mode = mode;
    return res;
}

} // namespace

RearrangeResult rearrange_cycles_mode(const Signal& x, const std::vector<size_t>& boundaries,
                                      RearrangeMode mode, RandomStream& rng) {
    if (boundaries.empty()) return identity_result(x, boundaries);
    return run_mode(x, boundaries, mode, rng);
}

RearrangeResult rearrange_cycles(const Signal& x, const std::vector<size_t>& boundaries,
                                 RandomStream& rng, double probability) {
    if (!rng.bernoulli(probability)) return identity_result(x, boundaries);
    if (boundaries.empty()) return identity_result(x, boundaries);
    const auto mode = static_cast<RearrangeMode>(rng.choice(3));
    RearrangeResult res = run_mode(x, boundaries, mode, rng);
    res.mode = mode;
    return res;
}

} // namespace auscult
