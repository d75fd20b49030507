#pragma once

// Lengths and geodesic distances of the plane with line element rho |dz|:
// adaptive quadrature of rho along segments, Dijkstra over a 16-neighbour
// grid stencil (king + knight moves, anisotropy overshoot < 1.03), local
// path refinement, farthest-point diameter estimation, and the
// crossing-growth experiment.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

#include "liouville/developing_map.hpp"
#include "liouville/quadrature.hpp"

namespace liouville {

struct GridWindow {
    complex center{0.0};
    double rx = 1.0, ry = 1.0;
    double h = 0.1;
    size_t node_budget = 4'000'000;

    GridWindow() = default;
    GridWindow(complex c, double rx_, double ry_, double h_, size_t budget = 4'000'000)
        : center(c), rx(rx_), ry(ry_), h(h_), node_budget(budget) {
        if (!(rx > 0.0) || !(ry > 0.0) || !(h > 0.0))
            throw std::invalid_argument("GridWindow: half-widths and spacing must be positive");
        nx_ = static_cast<int>(std::llround(rx / h));
        ny_ = static_cast<int>(std::llround(ry / h));
        if (nx_ < 1 || ny_ < 1)
            throw std::invalid_argument("GridWindow: spacing too coarse for the window");
        if (node_count() > node_budget)
            throw std::invalid_argument("GridWindow: node budget exceeded");
    }

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int cols() const { return 2 * nx_ + 1; }
    int rows() const { return 2 * ny_ + 1; }
    size_t node_count() const {
        return static_cast<size_t>(cols()) * static_cast<size_t>(rows());
    }

    int node_id(int i, int j) const { return (j + ny_) * cols() + (i + nx_); }
    std::pair<int, int> node_ij(int id) const {
        return {id % cols() - nx_, id / cols() - ny_};
    }
    complex node_z(int i, int j) const { return center + complex(i * h, j * h); }
    complex node_z(int id) const {
        const auto [i, j] = node_ij(id);
        return node_z(i, j);
    }
    bool in_range(int i, int j) const {
        return i >= -nx_ && i <= nx_ && j >= -ny_ && j <= ny_;
    }
    bool contains(complex z, double slack = 1e-9) const {
        const complex d = z - center;
        return std::abs(d.real()) <= nx_ * h + slack && std::abs(d.imag()) <= ny_ * h + slack;
    }
    int nearest_node(complex z) const {
        const complex d = (z - center) / h;
        const int i = std::clamp(static_cast<int>(std::llround(d.real())), -nx_, nx_);
        const int j = std::clamp(static_cast<int>(std::llround(d.imag())), -ny_, ny_);
        return node_id(i, j);
    }
    complex clamp_to_window(complex z) const {
        const complex d = z - center;
        return center + complex(std::clamp(d.real(), -nx_ * h, nx_ * h),
                                std::clamp(d.imag(), -ny_ * h, ny_ * h));
    }
    bool is_boundary(int id) const {
        const auto [i, j] = node_ij(id);
        return std::abs(i) == nx_ || std::abs(j) == ny_;
    }

  private:
    int nx_ = 1, ny_ = 1;
};

struct PathPolyline {
    std::vector<complex> vertices;
    double length = 0.0;  // sigma-length, maintained by the producing ops
};

/// sigma-length of the straight segment [z1, z2]: adaptive Simpson of
/// rho = e^u, relative tolerance 1e-8, depth cap 40.
inline double segment_length(const DevelopingMap& map, complex z1, complex z2,
                             const QuadratureOptions& opt = {}) {
    if (z1 == z2) return 0.0;
    const complex mid = 0.5 * (z1 + z2);
    const complex dz = z2 - z1;
    const double scale = std::abs(dz);
    return adaptive_simpson(
        [&](double t) { return std::exp(u_field_near(map, mid, z1 + t * dz)) * scale; },
        0.0, 1.0, opt);
}

inline double polyline_length(const DevelopingMap& map, std::span<const complex> verts,
                              const QuadratureOptions& opt = {}) {
    double total = 0.0;
    for (size_t i = 0; i + 1 < verts.size(); ++i)
        total += segment_length(map, verts[i], verts[i + 1], opt);
    return total;
}

// Half of the 16-neighbour stencil; the other half is the negation. The
// largest angular gap between directions is atan(2) - pi/4, giving a worst
// anisotropy overshoot of 1/cos(13.3 deg) ~ 1.028, budgeted as 1.03.
inline constexpr std::array<std::pair<int, int>, 8> kHalfStencil = {
    {{1, 0}, {0, 1}, {1, 1}, {1, -1}, {2, 1}, {1, 2}, {2, -1}, {1, -2}}};

/// Lazily filled sigma-weights of grid edges, keyed by (node, direction) in
/// the canonical half-stencil; shared across Dijkstra runs on one window.
class EdgeWeightCache {
  public:
    explicit EdgeWeightCache(const GridWindow& w)
        : window_(w), weights_(w.node_count() * 8, std::numeric_limits<double>::quiet_NaN()) {}

    const GridWindow& window() const { return window_; }

    double weight(const DevelopingMap& map, int from_id, int di, int dj) {
        int id = from_id;
        int k = half_index(di, dj);
        if (k < 0) {
            const auto [i, j] = window_.node_ij(from_id);
            id = window_.node_id(i + di, j + dj);
            k = half_index(-di, -dj);
        }
        double& slot = weights_[static_cast<size_t>(id) * 8 + static_cast<size_t>(k)];
        if (std::isnan(slot)) {
            const auto [i, j] = window_.node_ij(id);
            const auto [ci, cj] = kHalfStencil[static_cast<size_t>(k)];
            slot = segment_length(map, window_.node_z(i, j), window_.node_z(i + ci, j + cj));
        }
        return slot;
    }

  private:
    static int half_index(int di, int dj) {
        for (size_t k = 0; k < kHalfStencil.size(); ++k)
            if (kHalfStencil[k].first == di && kHalfStencil[k].second == dj)
                return static_cast<int>(k);
        return -1;
    }

    GridWindow window_;
    std::vector<double> weights_;
};

struct DistanceField {
    GridWindow window;
    int source = 0;
    std::vector<double> d;
    std::vector<int32_t> predecessor;
};

/// Dijkstra over the 16-neighbour stencil from the node nearest to `source`.
/// The result is an upper bound on the window-restricted sigma-distance,
/// deterministic under lexicographic tie-breaking.
inline DistanceField distance_field(const DevelopingMap& map, const GridWindow& window,
                                    complex source, EdgeWeightCache* shared = nullptr) {
    if (!window.contains(source))
        throw std::invalid_argument("distance_field: source outside the window");
    EdgeWeightCache local(window);
    EdgeWeightCache& cache = shared ? *shared : local;

    DistanceField out;
    out.window = window;
    out.source = window.nearest_node(source);
    const size_t n = window.node_count();
    out.d.assign(n, std::numeric_limits<double>::infinity());
    out.predecessor.assign(n, -1);

    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
    out.d[static_cast<size_t>(out.source)] = 0.0;
    pq.emplace(0.0, out.source);
    std::vector<char> settled(n, 0);
    while (!pq.empty()) {
        const auto [dist, id] = pq.top();
        pq.pop();
        if (settled[static_cast<size_t>(id)]) continue;
        settled[static_cast<size_t>(id)] = 1;
        const auto [i, j] = window.node_ij(id);
        for (const auto& [di, dj] : kHalfStencil) {
            for (const int sgn : {1, -1}) {
                const int ti = i + sgn * di, tj = j + sgn * dj;
                if (!window.in_range(ti, tj)) continue;
                const int tid = window.node_id(ti, tj);
                if (settled[static_cast<size_t>(tid)]) continue;
                const double w = cache.weight(map, id, sgn * di, sgn * dj);
                const double nd = dist + w;
                if (nd < out.d[static_cast<size_t>(tid)]) {
                    out.d[static_cast<size_t>(tid)] = nd;
                    out.predecessor[static_cast<size_t>(tid)] = id;
                    pq.emplace(nd, tid);
                }
            }
        }
    }
    return out;
}

/// Predecessor chain from the field source to `target`, as grid vertices.
inline PathPolyline extract_path(const DistanceField& field, int target) {
    PathPolyline p;
    int cur = target;
    while (cur != -1) {
        p.vertices.push_back(field.window.node_z(cur));
        if (cur == field.source) break;
        cur = field.predecessor[static_cast<size_t>(cur)];
    }
    std::reverse(p.vertices.begin(), p.vertices.end());
    p.length = field.d[static_cast<size_t>(target)];
    return p;
}

struct RefineOptions {
    int iterations = 60;
    int target_vertices = 0;       // 0: keep as produced by resampling rule
    double initial_step = 0.45;    // in units of local vertex spacing
    double stop_improvement = 0.0; // early stop once a sweep gains less
    QuadratureOptions quad{};
};

namespace detail {

inline std::vector<complex> resample_by_length(const DevelopingMap& map,
                                               std::span<const complex> verts, int m,
                                               const QuadratureOptions& quad) {
    std::vector<double> cum(verts.size(), 0.0);
    for (size_t i = 1; i < verts.size(); ++i)
        cum[i] = cum[i - 1] + segment_length(map, verts[i - 1], verts[i], quad);
    const double total = cum.back();
    std::vector<complex> out;
    out.reserve(static_cast<size_t>(m));
    out.push_back(verts.front());
    size_t seg = 1;
    for (int k = 1; k + 1 < m; ++k) {
        const double s = total * k / (m - 1);
        while (seg + 1 < verts.size() && cum[seg] < s) ++seg;
        const double s0 = cum[seg - 1], s1 = cum[seg];
        const double t = s1 > s0 ? (s - s0) / (s1 - s0) : 0.5;
        out.push_back(verts[seg - 1] + t * (verts[seg] - verts[seg - 1]));
    }
    out.push_back(verts.back());
    return out;
}

}  // namespace detail

/// Local improvement of a polyline: sigma-length never increases (candidate
/// moves are accepted only when they shorten), endpoints stay fixed, and
/// vertices stay inside `clamp` when given. iterations = 0 returns the path
/// unchanged.
inline PathPolyline refine_path(const DevelopingMap& map, const PathPolyline& in,
                                int iterations, const GridWindow* clamp = nullptr,
                                const RefineOptions& opt = {}) {
    PathPolyline out = in;
    if (out.vertices.size() < 2) return out;
    if (out.length == 0.0)
        out.length = polyline_length(map, out.vertices, opt.quad);
    if (iterations == 0) return out;

    std::vector<complex> v = out.vertices;
    auto seg = [&](complex a, complex b) { return segment_length(map, a, b, opt.quad); };

    // Optional arclength resampling; keep only if it does not lengthen.
    if (opt.target_vertices >= 2 && static_cast<int>(v.size()) != opt.target_vertices) {
        std::vector<complex> cand =
            detail::resample_by_length(map, v, opt.target_vertices, opt.quad);
        const double cl = polyline_length(map, cand, opt.quad);
        if (cl <= out.length) {
            v = std::move(cand);
            out.length = cl;
        }
    }

    const size_t n = v.size();
    if (n < 3) {
        out.vertices = v;
        return out;
    }
    std::vector<double> lens(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) lens[i] = seg(v[i], v[i + 1]);

    double step = opt.initial_step;
    for (int it = 0; it < iterations; ++it) {
        double gained = 0.0;
        for (const size_t parity : {size_t{1}, size_t{2}}) {
            for (size_t i = parity; i + 1 < n; i += 2) {
                const complex a = v[i - 1], b = v[i + 1];
                const double local = lens[i - 1] + lens[i];
                const complex chord = b - a;
                const double spacing =
                    0.5 * (std::abs(v[i] - a) + std::abs(b - v[i])) + 1e-300;
                const complex nrm =
                    std::abs(chord) > 0.0
                        ? complex(0, 1) * chord / std::abs(chord)
                        : complex(1, 0);
                const double s = step * spacing;
                std::array<complex, 4> cand = {0.5 * (a + b), v[i] + s * nrm,
                                               v[i] - s * nrm,
                                               0.5 * (0.5 * (a + b) + v[i])};
                double best = local;
                complex best_v = v[i];
                double best_l1 = lens[i - 1], best_l2 = lens[i];
                for (complex c : cand) {
                    if (clamp) c = clamp->clamp_to_window(c);
                    const double l1 = seg(a, c), l2 = seg(c, b);
                    if (l1 + l2 < best) {
                        best = l1 + l2;
                        best_v = c;
                        best_l1 = l1;
                        best_l2 = l2;
                    }
                }
                if (best < local) {
                    gained += local - best;
                    v[i] = best_v;
                    lens[i - 1] = best_l1;
                    lens[i] = best_l2;
                }
            }
        }
        out.length -= gained;
        if (gained <= 0.0) {
            step *= 0.5;
            if (step < 1e-4) break;
        }
        if (opt.stop_improvement > 0.0 && gained < opt.stop_improvement) break;
    }
    out.vertices = std::move(v);
    out.length = polyline_length(map, out.vertices, opt.quad);
    return out;
}

/// Upper bound on the sigma-distance between p and q within the window:
/// Dijkstra followed by path refinement.
inline double point_distance(const DevelopingMap& map, const GridWindow& window,
                             complex p, complex q, EdgeWeightCache* shared = nullptr,
                             PathPolyline* witness = nullptr,
                             const RefineOptions& refine = {}) {
    if (!window.contains(p) || !window.contains(q))
        throw std::invalid_argument("point_distance: endpoints must lie in the window");
    if (p == q) {
        if (witness) *witness = PathPolyline{{p, q}, 0.0};
        return 0.0;
    }
    const DistanceField field = distance_field(map, window, p, shared);
    PathPolyline path = extract_path(field, window.nearest_node(q));
    if (path.vertices.front() != p) path.vertices.insert(path.vertices.begin(), p);
    if (path.vertices.back() != q) path.vertices.push_back(q);
    path.length = polyline_length(map, path.vertices, refine.quad);

    RefineOptions opt = refine;
    if (opt.target_vertices == 0) {
        double euclid = 0.0;
        for (size_t i = 0; i + 1 < path.vertices.size(); ++i)
            euclid += std::abs(path.vertices[i + 1] - path.vertices[i]);
        opt.target_vertices = static_cast<int>(
            std::clamp(euclid / window.h, 17.0, 401.0));
    }
    PathPolyline refined = refine_path(map, path, opt.iterations, &window, opt);
    if (witness) *witness = refined;
    return refined.length;
}

struct DiameterEstimate {
    double value = 0.0;        // refined sigma-length of the witness path
    double dijkstra_value = 0.0;
    complex p{0.0}, q{0.0};    // witness pair
    PathPolyline witness;
};

/// Farthest-point sweeps from boundary seeds; reports the refined distance
/// of the best pair found. The estimate approaches the window diameter from
/// within, and grows with nested windows.
inline DiameterEstimate diameter_estimate(const DevelopingMap& map,
                                          const GridWindow& window, int sweeps = 3,
                                          const RefineOptions& refine = {120}) {
    if (sweeps < 2) throw std::invalid_argument("diameter_estimate: need sweeps >= 2");
    EdgeWeightCache cache(window);
    const int nx = window.nx(), ny = window.ny();
    std::vector<int> seeds = {window.node_id(-nx, -ny), window.node_id(nx, -ny),
                              window.node_id(-nx, ny),  window.node_id(nx, ny),
                              window.node_id(-nx, 0),   window.node_id(nx, 0),
                              window.node_id(0, -ny),   window.node_id(0, ny)};
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());

    double best = -1.0;
    int best_src = seeds.front(), best_tgt = seeds.front();
    PathPolyline best_path;
    std::vector<char> used(window.node_count(), 0);
    for (const int seed : seeds) {
        int cur = seed;
        for (int s = 0; s < sweeps; ++s) {
            if (used[static_cast<size_t>(cur)]) break;
            used[static_cast<size_t>(cur)] = 1;
            const DistanceField field = distance_field(map, window, window.node_z(cur), &cache);
            int far = cur;
            double dmax = 0.0;
            for (size_t id = 0; id < field.d.size(); ++id) {
                if (std::isfinite(field.d[id]) && field.d[id] > dmax) {
                    dmax = field.d[id];
                    far = static_cast<int>(id);
                }
            }
            if (dmax > best) {
                best = dmax;
                best_src = cur;
                best_tgt = far;
                best_path = extract_path(field, far);
            }
            cur = far;
        }
    }
    DiameterEstimate out;
    out.dijkstra_value = best;
    out.p = window.node_z(best_src);
    out.q = window.node_z(best_tgt);
    RefineOptions opt = refine;
    if (opt.target_vertices == 0) {
        double euclid = 0.0;
        for (size_t i = 0; i + 1 < best_path.vertices.size(); ++i)
            euclid += std::abs(best_path.vertices[i + 1] - best_path.vertices[i]);
        opt.target_vertices =
            static_cast<int>(std::clamp(euclid / window.h, 33.0, 601.0));
    }
    out.witness = refine_path(map, best_path, opt.iterations, &window, opt);
    out.value = out.witness.length;
    return out;
}

struct GrowthReport {
    std::vector<complex> anchors;
    std::vector<double> distances;  // d(x_0, x_k), k = 1..K
    double slope = 0.0;             // least-squares slope of d vs k
};

/// Distances from the first anchor to each subsequent one, with the
/// least-squares growth slope; a bounded metric yields slope ~ 0.
inline GrowthReport crossing_growth_experiment(const DevelopingMap& map,
                                               std::span<const complex> anchors,
                                               const GridWindow& window,
                                               const RefineOptions& refine = {30}) {
    if (anchors.size() < 2)
        throw std::invalid_argument("crossing_growth_experiment: need at least two anchors");
    GrowthReport out;
    out.anchors.assign(anchors.begin(), anchors.end());
    EdgeWeightCache cache(window);
    const DistanceField field = distance_field(map, window, anchors[0], &cache);
    for (size_t k = 1; k < anchors.size(); ++k) {
        if (!window.contains(anchors[k]))
            throw std::invalid_argument("crossing_growth_experiment: anchor outside window");
        PathPolyline path = extract_path(field, window.nearest_node(anchors[k]));
        path.length = polyline_length(map, path.vertices, refine.quad);
        RefineOptions opt = refine;
        if (opt.target_vertices == 0)
            opt.target_vertices = static_cast<int>(std::clamp(
                static_cast<double>(path.vertices.size()), 9.0, 201.0));
        const PathPolyline refined = refine_path(map, path, opt.iterations, &window, opt);
        out.distances.push_back(refined.length);
    }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (size_t k = 0; k < out.distances.size(); ++k) {
        const double x = static_cast<double>(k + 1);
        sx += x;
        sy += out.distances[k];
        sxx += x * x;
        sxy += x * out.distances[k];
    }
    const double n = static_cast<double>(out.distances.size());
    const double denom = n * sxx - sx * sx;
    out.slope = denom != 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
    return out;
}

}  // namespace liouville
