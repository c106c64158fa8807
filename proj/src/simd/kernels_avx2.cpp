#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "tables.hpp"

namespace xpf::simd::detail {
namespace {

struct Axis {
    __m256d hi;        // n - 1, clamp bound
    __m256d base_max;  // max(n - 2, 0), as double
    __m128i next_max;  // n - 1, as int
    __m256d first;
    __m256d step;
};

inline Axis make_axis(int n, double first, double step) {
    return {_mm256_set1_pd(n - 1), _mm256_set1_pd(std::max(n - 2, 0)), _mm_set1_epi32(n - 1),
            _mm256_set1_pd(first), _mm256_set1_pd(step)};
}

struct Lanes {
    __m128i i0;
    __m128i i1;
    __m256d f;
};

inline Lanes locate(const Axis& a, __m256d t) {
    __m256d p = _mm256_fmadd_pd(t, a.step, a.first);
    p = _mm256_max_pd(_mm256_setzero_pd(), _mm256_min_pd(p, a.hi));
    const __m256d base = _mm256_min_pd(_mm256_floor_pd(p), a.base_max);
    const __m128i i0 = _mm256_cvttpd_epi32(base);
    const __m128i i1 = _mm_min_epi32(_mm_add_epi32(i0, _mm_set1_epi32(1)), a.next_max);
    return {i0, i1, _mm256_sub_pd(p, base)};
}

inline __m256d gather(const float* v, __m128i idx) {
    return _mm256_cvtps_pd(_mm_i32gather_ps(v, idx, 4));
}

inline __m256d lerp(__m256d a, __m256d b, __m256d g, __m256d f) {
    return _mm256_fmadd_pd(f, b, _mm256_mul_pd(g, a));
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Scalar tail, same clamping rules as the vector body.
struct Corner1D {
    int i0;
    int i1;
    double f;
};

inline Corner1D locate1(double p, int n) {
    const double q = std::clamp(p, 0.0, static_cast<double>(n - 1));
    const int i0 = std::min(static_cast<int>(std::floor(q)), std::max(n - 2, 0));
    return {i0, std::min(i0 + 1, n - 1), q - i0};
}

double sum_samples(const GridRef& grid, const SampleRun& run) {
    const auto [nx, ny, nz] = grid.dims;
    const float* v = grid.values;
    const Axis ax = make_axis(nx, run.first[0], run.step[0]);
    const Axis ay = make_axis(ny, run.first[1], run.step[1]);
    const Axis az = make_axis(nz, run.first[2], run.step[2]);
    const __m128i sy = _mm_set1_epi32(nx);
    const __m128i sz = _mm_set1_epi32(nx * ny);
    const __m256d one = _mm256_set1_pd(1.0);

    __m256d acc = _mm256_setzero_pd();
    __m256d t = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
    const __m256d four = _mm256_set1_pd(4.0);
    int i = 0;
    for (; i + 4 <= run.count; i += 4, t = _mm256_add_pd(t, four)) {
        const Lanes cx = locate(ax, t), cy = locate(ay, t), cz = locate(az, t);
        const __m128i y0 = _mm_mullo_epi32(cy.i0, sy), y1 = _mm_mullo_epi32(cy.i1, sy);
        const __m128i z0 = _mm_mullo_epi32(cz.i0, sz), z1 = _mm_mullo_epi32(cz.i1, sz);
        const __m128i b00 = _mm_add_epi32(y0, z0), b10 = _mm_add_epi32(y1, z0);
        const __m128i b01 = _mm_add_epi32(y0, z1), b11 = _mm_add_epi32(y1, z1);
        const __m256d gx = _mm256_sub_pd(one, cx.f), gy = _mm256_sub_pd(one, cy.f), gz = _mm256_sub_pd(one, cz.f);
        const __m256d c00 = lerp(gather(v, _mm_add_epi32(b00, cx.i0)), gather(v, _mm_add_epi32(b00, cx.i1)), gx, cx.f);
        const __m256d c10 = lerp(gather(v, _mm_add_epi32(b10, cx.i0)), gather(v, _mm_add_epi32(b10, cx.i1)), gx, cx.f);
        const __m256d c01 = lerp(gather(v, _mm_add_epi32(b01, cx.i0)), gather(v, _mm_add_epi32(b01, cx.i1)), gx, cx.f);
        const __m256d c11 = lerp(gather(v, _mm_add_epi32(b11, cx.i0)), gather(v, _mm_add_epi32(b11, cx.i1)), gx, cx.f);
        const __m256d c0 = lerp(c00, c10, gy, cy.f);
        const __m256d c1 = lerp(c01, c11, gy, cy.f);
        acc = _mm256_add_pd(acc, lerp(c0, c1, gz, cz.f));
    }
    double total = hsum(acc);

    const std::size_t syy = static_cast<std::size_t>(nx), szz = static_cast<std::size_t>(nx) * ny;
    for (; i < run.count; ++i) {
        const Corner1D cx = locate1(run.first[0] + i * run.step[0], nx);
        const Corner1D cy = locate1(run.first[1] + i * run.step[1], ny);
        const Corner1D cz = locate1(run.first[2] + i * run.step[2], nz);
        const std::size_t b00 = cy.i0 * syy + cz.i0 * szz, b10 = cy.i1 * syy + cz.i0 * szz;
        const std::size_t b01 = cy.i0 * syy + cz.i1 * szz, b11 = cy.i1 * syy + cz.i1 * szz;
        const double gx = 1.0 - cx.f, gy = 1.0 - cy.f, gz = 1.0 - cz.f;
        const double c00 = gx * v[b00 + cx.i0] + cx.f * v[b00 + cx.i1];
        const double c10 = gx * v[b10 + cx.i0] + cx.f * v[b10 + cx.i1];
        const double c01 = gx * v[b01 + cx.i0] + cx.f * v[b01 + cx.i1];
        const double c11 = gx * v[b11 + cx.i0] + cx.f * v[b11 + cx.i1];
        total += gz * (gy * c00 + cy.f * c10) + cz.f * (gy * c01 + cy.f * c11);
    }
    return total;
}

void sum_material_samples(const MaterialGridRef& grid, const SampleRun& run, std::array<double, 8>& out) {
    const auto [nx, ny, nz] = grid.dims;
    const Axis ax = make_axis(nx, run.first[0], run.step[0]);
    const Axis ay = make_axis(ny, run.first[1], run.step[1]);
    const Axis az = make_axis(nz, run.first[2], run.step[2]);
    const __m128i sy = _mm_set1_epi32(nx);
    const __m128i sz = _mm_set1_epi32(nx * ny);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m128i byte_mask = _mm_set1_epi32(0x3);
    const auto* label_base = reinterpret_cast<const int*>(grid.labels);

    __m256d ind[4], den[4];
    for (int m = 0; m < 4; ++m) {
        ind[m] = _mm256_setzero_pd();
        den[m] = _mm256_setzero_pd();
    }
    __m256d t = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
    const __m256d four = _mm256_set1_pd(4.0);
    int i = 0;
    for (; i + 4 <= run.count; i += 4, t = _mm256_add_pd(t, four)) {
        const Lanes cx = locate(ax, t), cy = locate(ay, t), cz = locate(az, t);
        const __m128i xs[2] = {cx.i0, cx.i1};
        const __m128i ys[2] = {_mm_mullo_epi32(cy.i0, sy), _mm_mullo_epi32(cy.i1, sy)};
        const __m128i zs[2] = {_mm_mullo_epi32(cz.i0, sz), _mm_mullo_epi32(cz.i1, sz)};
        const __m256d wx[2] = {_mm256_sub_pd(one, cx.f), cx.f};
        const __m256d wy[2] = {_mm256_sub_pd(one, cy.f), cy.f};
        const __m256d wz[2] = {_mm256_sub_pd(one, cz.f), cz.f};
        for (int c = 0; c < 8; ++c) {
            const int bx = c & 1, by = (c >> 1) & 1, bz = (c >> 2) & 1;
            const __m128i idx = _mm_add_epi32(xs[bx], _mm_add_epi32(ys[by], zs[bz]));
            const __m256d w = _mm256_mul_pd(_mm256_mul_pd(wx[bx], wy[by]), wz[bz]);
            const __m256d wd = _mm256_mul_pd(w, gather(grid.density, idx));
            const __m128i lab = _mm_and_si128(_mm_i32gather_epi32(label_base, idx, 1), byte_mask);
            for (int m = 0; m < 4; ++m) {
                const __m256d sel = _mm256_castsi256_pd(_mm256_cvtepi32_epi64(_mm_cmpeq_epi32(lab, _mm_set1_epi32(m))));
                ind[m] = _mm256_add_pd(ind[m], _mm256_and_pd(w, sel));
                den[m] = _mm256_add_pd(den[m], _mm256_and_pd(wd, sel));
            }
        }
    }
    std::array<double, 8> acc{};
    for (int m = 0; m < 4; ++m) {
        acc[m] = hsum(ind[m]);
        acc[4 + m] = hsum(den[m]);
    }

    const std::size_t syy = static_cast<std::size_t>(nx), szz = static_cast<std::size_t>(nx) * ny;
    for (; i < run.count; ++i) {
        const Corner1D cx = locate1(run.first[0] + i * run.step[0], nx);
        const Corner1D cy = locate1(run.first[1] + i * run.step[1], ny);
        const Corner1D cz = locate1(run.first[2] + i * run.step[2], nz);
        const std::size_t xi[2] = {static_cast<std::size_t>(cx.i0), static_cast<std::size_t>(cx.i1)};
        const std::size_t yi[2] = {cy.i0 * syy, cy.i1 * syy};
        const std::size_t zi[2] = {cz.i0 * szz, cz.i1 * szz};
        const double wx[2] = {1.0 - cx.f, cx.f}, wy[2] = {1.0 - cy.f, cy.f}, wz[2] = {1.0 - cz.f, cz.f};
        for (int c = 0; c < 8; ++c) {
            const int bx = c & 1, by = (c >> 1) & 1, bz = (c >> 2) & 1;
            const std::size_t idx = xi[bx] + yi[by] + zi[bz];
            const double w = wx[bx] * wy[by] * wz[bz];
            const int m = grid.labels[idx] & 3;
            acc[m] += w;
            acc[4 + m] += w * grid.density[idx];
        }
    }
    out = acc;
}

void hu_to_mu(const float* hu, float* mu, std::size_t n, float mu_water) {
    const __m256 one = _mm256_set1_ps(1.0f), k = _mm256_set1_ps(1000.0f), vw = _mm256_set1_ps(mu_water);
    const __m256 zero = _mm256_setzero_ps();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256 h = _mm256_loadu_ps(hu + i);
        _mm256_storeu_ps(mu + i, _mm256_max_ps(zero, _mm256_mul_ps(_mm256_add_ps(one, _mm256_div_ps(h, k)), vw)));
    }
    for (; i < n; ++i) {
        mu[i] = std::max(0.0f, (1.0f + hu[i] / 1000.0f) * mu_water);
    }
}

MinMax min_max(const float* x, std::size_t n) {
    std::size_t i = 0;
    MinMax r{x[0], x[0]};
    if (n >= 8) {
        __m256 lo = _mm256_loadu_ps(x), hi = lo;
        for (i = 8; i + 8 <= n; i += 8) {
            const __m256 v = _mm256_loadu_ps(x + i);
            lo = _mm256_min_ps(lo, v);
            hi = _mm256_max_ps(hi, v);
        }
        alignas(32) float l[8], h[8];
        _mm256_store_ps(l, lo);
        _mm256_store_ps(h, hi);
        r = {l[0], h[0]};
        for (int k = 1; k < 8; ++k) {
            r.min = std::min(r.min, l[k]);
            r.max = std::max(r.max, h[k]);
        }
    }
    for (; i < n; ++i) {
        r.min = std::min(r.min, x[i]);
        r.max = std::max(r.max, x[i]);
    }
    return r;
}

Counts confusion(const std::uint8_t* pred, const std::uint8_t* gt, std::size_t n) {
    Counts c;
    const __m256i zero = _mm256_setzero_si256();
    std::size_t i = 0;
    for (; i + 32 <= n; i += 32) {
        const __m256i p = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(pred + i));
        const __m256i g = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(gt + i));
        const auto pm = ~static_cast<std::uint32_t>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(p, zero)));
        const auto gm = ~static_cast<std::uint32_t>(_mm256_movemask_epi8(_mm256_cmpeq_epi8(g, zero)));
        c.tp += _mm_popcnt_u32(pm & gm);
        c.fp += _mm_popcnt_u32(pm & ~gm);
        c.fn += _mm_popcnt_u32(~pm & gm);
        c.tn += _mm_popcnt_u32(~pm & ~gm);
    }
    for (; i < n; ++i) {
        const bool p = pred[i] != 0, g = gt[i] != 0;
        c.tp += p && g;
        c.fp += p && !g;
        c.fn += !p && g;
        c.tn += !p && !g;
    }
    return c;
}

} // namespace

const KernelTable avx2_table{Isa::avx2, sum_samples, sum_material_samples, hu_to_mu, min_max, confusion};

} // namespace xpf::simd::detail
