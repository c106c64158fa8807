#include <algorithm>
#include <cmath>

#include "tables.hpp"

namespace xpf::simd::detail {
namespace {

struct Corner1D {
    int i0;
    int i1;
    double f;
};

inline Corner1D locate(double p, int n) {
    const double q = std::clamp(p, 0.0, static_cast<double>(n - 1));
    const int i0 = std::min(static_cast<int>(std::floor(q)), std::max(n - 2, 0));
    return {i0, std::min(i0 + 1, n - 1), q - i0};
}

double sum_samples(const GridRef& grid, const SampleRun& run) {
    const auto [nx, ny, nz] = grid.dims;
    const std::size_t sx = 1, sy = static_cast<std::size_t>(nx),
                      sz = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    const float* v = grid.values;
    double acc = 0.0;
    for (int i = 0; i < run.count; ++i) {
        const Corner1D cx = locate(run.first[0] + i * run.step[0], nx);
        const Corner1D cy = locate(run.first[1] + i * run.step[1], ny);
        const Corner1D cz = locate(run.first[2] + i * run.step[2], nz);
        const std::size_t b00 = cy.i0 * sy + cz.i0 * sz, b10 = cy.i1 * sy + cz.i0 * sz;
        const std::size_t b01 = cy.i0 * sy + cz.i1 * sz, b11 = cy.i1 * sy + cz.i1 * sz;
        const std::size_t x0 = cx.i0 * sx, x1 = cx.i1 * sx;
        const double gx = 1.0 - cx.f, gy = 1.0 - cy.f, gz = 1.0 - cz.f;
        const double c00 = gx * v[b00 + x0] + cx.f * v[b00 + x1];
        const double c10 = gx * v[b10 + x0] + cx.f * v[b10 + x1];
        const double c01 = gx * v[b01 + x0] + cx.f * v[b01 + x1];
        const double c11 = gx * v[b11 + x0] + cx.f * v[b11 + x1];
        const double c0 = gy * c00 + cy.f * c10;
        const double c1 = gy * c01 + cy.f * c11;
        acc += gz * c0 + cz.f * c1;
    }
    return acc;
}

void sum_material_samples(const MaterialGridRef& grid, const SampleRun& run, std::array<double, 8>& out) {
    const auto [nx, ny, nz] = grid.dims;
    const std::size_t sy = static_cast<std::size_t>(nx),
                      sz = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    std::array<double, 8> acc{};
    for (int i = 0; i < run.count; ++i) {
        const Corner1D cx = locate(run.first[0] + i * run.step[0], nx);
        const Corner1D cy = locate(run.first[1] + i * run.step[1], ny);
        const Corner1D cz = locate(run.first[2] + i * run.step[2], nz);
        const std::array<std::size_t, 2> xi{static_cast<std::size_t>(cx.i0), static_cast<std::size_t>(cx.i1)};
        const std::array<std::size_t, 2> yi{cy.i0 * sy, cy.i1 * sy};
        const std::array<std::size_t, 2> zi{cz.i0 * sz, cz.i1 * sz};
        const std::array<double, 2> wx{1.0 - cx.f, cx.f};
        const std::array<double, 2> wy{1.0 - cy.f, cy.f};
        const std::array<double, 2> wz{1.0 - cz.f, cz.f};
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
    for (std::size_t i = 0; i < n; ++i) {
        mu[i] = std::max(0.0f, (1.0f + hu[i] / 1000.0f) * mu_water);
    }
}

MinMax min_max(const float* x, std::size_t n) {
    MinMax r{x[0], x[0]};
    for (std::size_t i = 1; i < n; ++i) {
        r.min = std::min(r.min, x[i]);
        r.max = std::max(r.max, x[i]);
    }
    return r;
}

Counts confusion(const std::uint8_t* pred, const std::uint8_t* gt, std::size_t n) {
    Counts c;
    for (std::size_t i = 0; i < n; ++i) {
        const bool p = pred[i] != 0, g = gt[i] != 0;
        c.tp += p && g;
        c.fp += p && !g;
        c.fn += !p && g;
        c.tn += !p && !g;
    }
    return c;
}

} // namespace

const KernelTable scalar_table{Isa::scalar, sum_samples, sum_material_samples, hu_to_mu, min_max, confusion};

} // namespace xpf::simd::detail
