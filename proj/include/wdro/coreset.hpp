#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wdro/dataset.hpp"
#include "wdro/errors.hpp"
#include "wdro/losses.hpp"
#include "wdro/parallel.hpp"
#include "wdro/random.hpp"

namespace wdro {

// Everything the grid construction needs: the parameter ball B(theta_anc, l_p),
// the dual anchor lambda_anc with radius l_d, and the reference point xi0 with
// the data radius rho = max_i d(xi_i, xi0).
struct Anchors {
    Vector theta_anc;
    double l_p = 10.0;
    double lambda_anc = 0.0;
    double l_d = 0.0;
    LabeledSample xi0;
    double rho = 0.0;
};

// Floor for lambda_anc when the anchor formula degenerates to zero.
inline constexpr double kLambdaFloor = 1e-6;

// xi0 = (feature centroid, majority label | median label); rho = max distance to it.
inline std::pair<LabeledSample, double> compute_xi0_rho(const Dataset& ds, const MetricSpec& metric) {
    const std::size_t n = ds.size();
    LabeledSample xi0{Vector(ds.dim(), 0.0), 0.0};
    for (const auto& s : ds)
        for (std::size_t k = 0; k < ds.dim(); ++k) xi0.x[k] += s.x[k];
    for (double& v : xi0.x) v /= static_cast<double>(n);

    if (ds.task() == Task::Classification) {
        std::size_t positives = 0;
        for (const auto& s : ds) positives += s.y > 0;
        xi0.y = (2 * positives >= n) ? 1.0 : -1.0;
    } else {
        std::vector<double> labels;
        labels.reserve(n);
        for (const auto& s : ds) labels.push_back(s.y);
        std::sort(labels.begin(), labels.end());
        xi0.y = (n % 2 == 1) ? labels[n / 2] : 0.5 * (labels[n / 2 - 1] + labels[n / 2]);
    }

    double rho = 0.0;
    for (const auto& s : ds) rho = std::max(rho, metric.distance(s.x, s.y, xi0.x, xi0.y));
    return {std::move(xi0), rho};
}

// Upper bound on the optimal dual multiplier for growth rate `growth`:
//   growth * (2^{p-1} + (1 + 2^{p-1} rho^p) / sigma^p).
inline double tau_from_growth(double growth, double sigma, double rho, int p) {
    if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
    const double two_p = std::pow(2.0, p - 1);
    return growth * (two_p + (1.0 + two_p * std::pow(rho, p)) / std::pow(sigma, p));
}

inline double tau(const LossModel& model, std::span<const double> theta, double sigma, double rho) {
    return tau_from_growth(growth_c(model, theta), sigma, rho, model.metric.p);
}

// lambda_anc = max{kappa(theta_anc), max_{theta in ball} tau(theta) / 2}, l_d = lambda_anc.
inline Anchors compute_anchors(const Dataset& ds, const LossModel& model, double sigma, Vector theta_anc,
                               double l_p) {
    if (!(sigma > 0.0)) throw DomainError("sigma must be positive");
    if (l_p < 0.0) throw DomainError("l_p must be nonnegative");
    if (theta_anc.empty()) theta_anc.assign(ds.dim(), 0.0);
    if (theta_anc.size() != ds.dim()) throw DomainError("theta_anc dimension does not match the data");

    Anchors a;
    auto [xi0, rho] = compute_xi0_rho(ds, model.metric);
    a.xi0 = std::move(xi0);
    a.rho = rho;
    a.l_p = l_p;
    const double c_max = max_growth_c_over_ball(model, theta_anc, l_p);
    const double half_tau = 0.5 * tau_from_growth(c_max, sigma, rho, model.metric.p);
    a.lambda_anc = std::max(kappa(model, theta_anc), half_tau);
    if (a.lambda_anc <= 0.0) a.lambda_anc = kLambdaFloor;
    a.l_d = a.lambda_anc;
    a.theta_anc = std::move(theta_anc);
    return a;
}

// FNV-1a over the 17-digit rendering of every anchor field.
inline std::string anchors_digest(const Anchors& a) {
    std::ostringstream os;
    for (double v : a.theta_anc) os << detail::format_real(v) << ',';
    os << detail::format_real(a.l_p) << ',' << detail::format_real(a.lambda_anc) << ','
       << detail::format_real(a.l_d) << ',' << detail::format_real(a.rho) << ',';
    for (double v : a.xi0.x) os << detail::format_real(v) << ',';
    os << detail::format_real(a.xi0.y);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : os.str()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct GridCell {
    std::size_t i = 0;  // lower-bound layer
    std::size_t j = 0;  // upper-bound layer
    std::vector<std::size_t> members;
};

// Two-sided layering of the samples by their lower bounds a_k and upper bounds
// b_k at the anchor. Only nonempty cells are stored, ordered by (i, j).
struct GridPartition {
    double A = 0.0;
    double B = 0.0;
    std::size_t N = 0;
    std::size_t n = 0;
    std::vector<GridCell> cells;
    Vector lower;
    Vector upper;

    const GridCell* find(std::size_t i, std::size_t j) const {
        for (const auto& c : cells)
            if (c.i == i && c.j == j) return &c;
        return nullptr;
    }
};

// ceil(log2 n), with N = 0 for n = 1.
inline std::size_t layer_count(std::size_t n) {
    std::size_t N = 0;
    while ((std::size_t{1} << N) < n) ++N;
    return N;
}

// Layer 0 holds values <= mean; layer j >= 1 holds 2^{j-1} mean < v <= 2^j mean.
// A zero mean puts everything in layer 0; overflow past layer N is clamped.
inline std::size_t layer_of(double value, double mean, std::size_t N) {
    if (mean <= 0.0 || value <= mean) return 0;
    std::size_t j = 1;
    double upper = 2.0 * mean;
    while (value > upper && j < N) {
        ++j;
        upper *= 2.0;
    }
    return std::min(j, N);
}

inline GridPartition build_grid_from_bounds(Vector lower, Vector upper) {
    if (lower.size() != upper.size() || lower.empty())
        throw DomainError("grid needs matching, nonempty lower and upper bound vectors");
    GridPartition g;
    g.n = lower.size();
    g.N = layer_count(g.n);
    const double inv_n = 1.0 / static_cast<double>(g.n);
    for (std::size_t k = 0; k < g.n; ++k) {
        g.A += lower[k] * inv_n;
        g.B += upper[k] * inv_n;
    }
    const std::size_t side = g.N + 1;
    std::vector<std::vector<std::size_t>> buckets(side * side);
    for (std::size_t k = 0; k < g.n; ++k) {
        const std::size_t i = layer_of(lower[k], g.A, g.N);
        const std::size_t j = layer_of(upper[k], g.B, g.N);
        buckets[i * side + j].push_back(k);
    }
    for (std::size_t i = 0; i < side; ++i)
        for (std::size_t j = 0; j < side; ++j)
            if (!buckets[i * side + j].empty()) g.cells.push_back({i, j, std::move(buckets[i * side + j])});
    g.lower = std::move(lower);
    g.upper = std::move(upper);
    return g;
}

// Evaluates a_k and b_k at (theta_anc, lambda_anc) for every sample.
inline GridPartition build_grid(const Dataset& ds, const LossModel& model, const Anchors& anchors,
                                std::size_t threads = 1) {
    Vector lower(ds.size()), upper(ds.size());
    parallel_for(ds.size(), threads, [&](std::size_t k) {
        lower[k] = h_lower(model, anchors.theta_anc, anchors.lambda_anc, ds[k]);
        upper[k] = h_upper(model, anchors.theta_anc, anchors.lambda_anc, ds[k]);
    });
    return build_grid_from_bounds(std::move(lower), std::move(upper));
}

// Constants entering the per-cell sample-size shape.
struct AllocationConstants {
    double lipschitz = 0.0;  // empirical L
    double r = 0.0;          // R
    double l_p = 0.0;
    double l_d = 0.0;
};

// Relative demand of each cell: the squared ratio of the cell's value range
// (widened by the Lipschitz/R slack) to its tolerated deviation.
inline Vector allocation_weights(const GridPartition& grid, const AllocationConstants& k) {
    const double eps_a = std::max(1e-12 * grid.B, 1e-300);
    const double a = std::max(grid.A, eps_a);
    const double slack = 2.0 * k.lipschitz * k.l_p + 2.0 * k.r * k.l_d;
    Vector w;
    w.reserve(grid.cells.size());
    for (const auto& c : grid.cells) {
        const double mu = c.i == 0 ? 0.0 : 1.0;
        const double range = std::ldexp(grid.B, static_cast<int>(c.j)) -
                             mu * std::ldexp(grid.A, static_cast<int>(c.i) - 1) + slack;
        const double tol = (std::ldexp(1.0, static_cast<int>(c.j) - 1) + std::ldexp(1.0, static_cast<int>(c.i) - 1)) * a;
        const double ratio = range / tol;
        w.push_back(ratio * ratio);
    }
    return w;
}

// Splits budget s over the nonempty cells in proportion to allocation_weights,
// with at least one and at most |C_ij| per cell; the total is min(s, n).
inline std::vector<std::size_t> allocate_budget(const GridPartition& grid, std::size_t s,
                                                const AllocationConstants& constants) {
    const std::size_t cells = grid.cells.size();
    if (s < cells)
        throw BudgetError("budget " + std::to_string(s) + " is below the number of nonempty cells; need s >= " +
                              std::to_string(cells),
                          cells);
    Vector w = allocation_weights(grid, constants);
    double total = 0.0;
    for (double v : w) total += v;
    if (!(total > 0.0) || !std::isfinite(total)) {
        std::fill(w.begin(), w.end(), 1.0);
        total = static_cast<double>(cells);
    }

    std::vector<std::size_t> q(cells);
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < cells; ++c) {
        const double share = std::round(static_cast<double>(s) * w[c] / total);
        q[c] = std::min(grid.cells[c].members.size(), std::max<std::size_t>(1, static_cast<std::size_t>(share)));
        assigned += q[c];
    }

    const std::size_t target = std::min(s, grid.n);
    std::vector<std::size_t> order(cells);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });

    while (assigned < target) {
        for (std::size_t c : order) {
            if (assigned == target) break;
            if (q[c] < grid.cells[c].members.size()) {
                ++q[c];
                ++assigned;
            }
        }
    }
    while (assigned > target) {
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            if (assigned == target) break;
            if (q[*it] > 1) {
                --q[*it];
                --assigned;
            }
        }
    }
    return q;
}

struct CoresetMeta {
    std::string method = "dualcore";
    double sigma = 0.0;
    int p = 1;
    double gamma = 0.0;
    std::string norm = "l2";
    std::string loss;
    std::uint64_t seed = 0;
    std::size_t budget = 0;
    std::size_t n = 0;
    std::string digest;
};

// Sparse nonnegative mass vector over sample indices (sorted ascending).
struct Coreset {
    std::vector<std::size_t> indices;
    Vector weights;
    CoresetMeta meta;

    std::size_t size() const noexcept { return indices.size(); }

    double total_mass() const {
        double acc = 0.0;
        for (double w : weights) acc += w;
        return acc;
    }

    Vector dense(std::size_t n) const {
        Vector out(n, 0.0);
        for (std::size_t k = 0; k < indices.size(); ++k) out.at(indices[k]) = weights[k];
        return out;
    }

    friend bool operator==(const Coreset& a, const Coreset& b) {
        return a.indices == b.indices && a.weights == b.weights;
    }
};

namespace detail {

inline Coreset sorted_coreset(std::vector<std::pair<std::size_t, double>> entries) {
    std::sort(entries.begin(), entries.end());
    Coreset c;
    c.indices.reserve(entries.size());
    c.weights.reserve(entries.size());
    for (auto [i, w] : entries) {
        c.indices.push_back(i);
        c.weights.push_back(w);
    }
    return c;
}

}  // namespace detail

// Uniform sample of counts[c] members from every cell c, each weighted
// |C|/(n |Q|). Cell (i, j) draws from its own substream of `seed`.
inline Coreset sample_cells(const GridPartition& grid, const std::vector<std::size_t>& counts, std::uint64_t seed) {
    if (counts.size() != grid.cells.size()) throw DomainError("allocation does not match the grid");
    std::vector<std::pair<std::size_t, double>> entries;
    for (std::size_t c = 0; c < grid.cells.size(); ++c) {
        const auto& cell = grid.cells[c];
        const std::size_t q = counts[c];
        if (q == 0 || q > cell.members.size()) throw DomainError("cell sample size out of range");
        Rng rng = make_rng(seed, {cell.i, cell.j});
        const double w = static_cast<double>(cell.members.size()) /
                         (static_cast<double>(grid.n) * static_cast<double>(q));
        for (std::size_t pick : sample_without_replacement(cell.members.size(), q, rng))
            entries.emplace_back(cell.members[pick], w);
    }
    return detail::sorted_coreset(std::move(entries));
}

inline CoresetMeta make_meta(const std::string& method, const LossModel& model, double sigma, std::uint64_t seed,
                             std::size_t budget, std::size_t n, const std::string& digest) {
    CoresetMeta m;
    m.method = method;
    m.sigma = sigma;
    m.p = model.metric.p;
    m.gamma = model.metric.gamma;
    m.norm = to_string(model.metric.feature_norm);
    m.loss = to_string(model);
    m.seed = seed;
    m.budget = budget;
    m.n = n;
    m.digest = digest;
    return m;
}

// Grid-sampling dual coreset of support size min(s, n).
inline Coreset sample_coreset(const Dataset& ds, const LossModel& model, double sigma, const Anchors& anchors,
                              std::size_t s, std::uint64_t seed, std::size_t threads = 1) {
    if (s < 1 || s > ds.size()) throw BudgetError("budget must lie in [1, n]", 1);
    const GridPartition grid = build_grid(ds, model, anchors, threads);
    const AllocationConstants k{lipschitz_estimate(model, ds), r_bound(model, ds.dim()), anchors.l_p, anchors.l_d};
    Coreset c = sample_cells(grid, allocate_budget(grid, s, k), seed);
    c.meta = make_meta("dualcore", model, sigma, seed, s, ds.size(), anchors_digest(anchors));
    return c;
}

// UniSamp baseline: s indices without replacement, weight 1/s each.
inline Coreset uniform_coreset(std::size_t n, std::size_t s, std::uint64_t seed) {
    if (s < 1 || s > n) throw BudgetError("budget must lie in [1, n]", 1);
    Rng rng = make_rng(seed, {0x756e69ULL});
    std::vector<std::pair<std::size_t, double>> entries;
    for (std::size_t i : sample_without_replacement(n, s, rng)) entries.emplace_back(i, 1.0 / static_cast<double>(s));
    Coreset c = detail::sorted_coreset(std::move(entries));
    c.meta.method = "uniform";
    c.meta.seed = seed;
    c.meta.budget = s;
    c.meta.n = n;
    return c;
}

inline Coreset uniform_coreset(const Dataset& ds, std::size_t s, std::uint64_t seed) {
    return uniform_coreset(ds.size(), s, seed);
}

// Budget given as a fraction of n (value <= 1) or an absolute count (> 1).
inline std::size_t resolve_budget(double budget, std::size_t n) {
    if (!(budget > 0.0)) throw BudgetError("budget must be positive", 1);
    const double count = budget <= 1.0 ? std::round(budget * static_cast<double>(n)) : std::round(budget);
    return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(count, 1.0)), 1, n);
}

inline std::string serialize(const Coreset& c) {
    std::ostringstream os;
    os << "{\n  \"indices\": [";
    for (std::size_t k = 0; k < c.indices.size(); ++k) os << (k ? ", " : "") << c.indices[k];
    os << "],\n  \"weights\": [";
    for (std::size_t k = 0; k < c.weights.size(); ++k) os << (k ? ", " : "") << detail::format_real(c.weights[k]);
    const auto& m = c.meta;
    os << "],\n  \"meta\": {\"method\": \"" << m.method << "\", \"sigma\": " << detail::format_real(m.sigma)
       << ", \"p\": " << m.p << ", \"gamma\": " << detail::format_real(m.gamma) << ", \"norm\": \"" << m.norm
       << "\", \"loss\": \"" << m.loss << "\", \"seed\": " << m.seed << ", \"budget\": " << m.budget
       << ", \"n\": " << m.n << ", \"digest\": \"" << m.digest << "\"}\n}\n";
    return os.str();
}

inline Coreset parse_coreset(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("coreset document is not valid JSON: ") + e.what(), 0);
    }
    try {
        Coreset c;
        c.indices = doc.at("indices").get<std::vector<std::size_t>>();
        c.weights = doc.at("weights").get<Vector>();
        if (c.indices.size() != c.weights.size()) throw ParseError("coreset indices and weights differ in length", 0);
        if (doc.contains("meta")) {
            const auto& m = doc.at("meta");
            c.meta.method = m.value("method", std::string("dualcore"));
            c.meta.sigma = m.value("sigma", 0.0);
            c.meta.p = m.value("p", 1);
            c.meta.gamma = m.value("gamma", 0.0);
            c.meta.norm = m.value("norm", std::string("l2"));
            c.meta.loss = m.value("loss", std::string());
            c.meta.seed = m.value("seed", std::uint64_t{0});
            c.meta.budget = m.value("budget", std::size_t{0});
            c.meta.n = m.value("n", std::size_t{0});
            c.meta.digest = m.value("digest", std::string());
        }
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed coreset document: ") + e.what(), 0);
    }
}

}  // namespace wdro
