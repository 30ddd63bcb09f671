#pragma once

// Exact t-SNE for small point sets, plus the two layouts built on it: the
// 1-D canvas x-axis and the 2-D recommendation scatter.

#include "promptaid/embedding.hpp"
#include "promptaid/random.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace promptaid {

struct TsneParams {
    double perplexity = 5.0;
    int iterations = 500;
    double learning_rate = 100.0;
    double momentum = 0.5;
    double final_momentum = 0.8;
    int momentum_switch = 250;
    double exaggeration = 4.0;
    int exaggeration_iters = 100;
    double init_sigma = 1e-4;
    double bandwidth_tol = 1e-5;
    int bandwidth_iters = 50;
};

struct ProjectionLayout {
    std::vector<std::string> ids;
    /// coords[i] has `dims` entries
    std::vector<std::vector<double>> coords;
    double kl_initial = 0.0;
    double kl_final = 0.0;
    std::uint64_t seed = 0;
    bool operator==(const ProjectionLayout&) const = default;
};

inline void to_json(json& j, const ProjectionLayout& l) {
    j = json{{"ids", l.ids}, {"coords", l.coords}, {"kl_initial", l.kl_initial}, {"kl_final", l.kl_final},
             {"seed", l.seed}};
}

namespace detail {

/// Row i of the conditional affinities with the bandwidth found by binary
/// search on the entropy. `d2` holds squared distances from i.
inline void conditional_row(const std::vector<double>& d2, std::size_t i, double perplexity, const TsneParams& p,
                            std::vector<double>& row) {
    const std::size_t n = d2.size();
    const double target = std::log(perplexity);
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
        if (j != i) dmin = std::min(dmin, d2[j]);
    double beta = 1.0, lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
    for (int it = 0; it < p.bandwidth_iters; ++it) {
        double sum = 0.0, weighted = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            row[j] = j == i ? 0.0 : std::exp(-beta * (d2[j] - dmin));
            sum += row[j];
            weighted += (d2[j] - dmin) * row[j];
        }
        const double h = std::log(sum) + beta * weighted / sum;
        const double diff = h - target;
        if (std::abs(diff) < p.bandwidth_tol) break;
        if (diff > 0) {
            lo = beta;
            beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
        } else {
            hi = beta;
            beta = std::isinf(lo) ? beta / 2.0 : (beta + lo) / 2.0;
        }
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        row[j] = j == i ? 0.0 : std::exp(-beta * (d2[j] - dmin));
        sum += row[j];
    }
    for (auto& v : row) v /= sum;
}

inline double kl_divergence(const std::vector<double>& P, const std::vector<double>& Y, std::size_t n, std::size_t dims) {
    std::vector<double> num(n * n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t d = 0; d < dims; ++d) {
                const double diff = Y[i * dims + d] - Y[j * dims + d];
                s += diff * diff;
            }
            num[i * n + j] = num[j * n + i] = 1.0 / (1.0 + s);
            total += 2.0 * num[i * n + j];
        }
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double q = std::max(num[i * n + j] / total, 1e-12);
            kl += P[i * n + j] * std::log(P[i * n + j] / q);
        }
    return kl;
}

inline void recenter(std::vector<double>& Y, std::size_t n, std::size_t dims) {
    for (std::size_t d = 0; d < dims; ++d) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += Y[i * dims + d];
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) Y[i * dims + d] -= mean;
    }
}

} // namespace detail

/// Exact t-SNE. Inputs are processed in a canonical order (by content hash,
/// ties by position) and initial coordinates are keyed by content, so the
/// layout does not depend on input order; the returned coords follow the
/// input order.
inline ProjectionLayout project(const std::vector<std::vector<double>>& vectors, std::size_t dims, std::uint64_t seed,
                                const TsneParams& params = {}) {
    if (vectors.empty()) fail(ErrorCode::InvalidArgument, "project needs at least one vector");
    if (dims != 1 && dims != 2) fail(ErrorCode::InvalidArgument, "dims must be 1 or 2", std::to_string(dims));
    const std::size_t n = vectors.size();
    const std::size_t d_in = vectors.front().size();
    for (const auto& v : vectors) {
        if (v.size() != d_in) fail(ErrorCode::DimensionMismatch, "input vectors differ in dimension");
        for (double x : v)
            if (!std::isfinite(x)) fail(ErrorCode::DegenerateInput, "non-finite input vector");
    }
    ProjectionLayout out;
    out.seed = seed;
    out.coords.assign(n, std::vector<double>(dims, 0.0));
    for (std::size_t i = 0; i < n; ++i) out.ids.push_back(std::to_string(i));
    if (n == 1) return out;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::uint64_t> hashes(n);
    for (std::size_t i = 0; i < n; ++i) hashes[i] = fnv1a64(std::span<const double>(vectors[i]));
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return hashes[a] < hashes[b] || (hashes[a] == hashes[b] && a < b);
    });

    // affinities in canonical order
    std::vector<double> P(n * n, 0.0);
    {
        const double perplexity = std::min(params.perplexity, static_cast<double>(n - 1));
        std::vector<double> d2(n), row(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& vi = vectors[order[i]];
            for (std::size_t j = 0; j < n; ++j) {
                const auto& vj = vectors[order[j]];
                double s = 0.0;
                for (std::size_t k = 0; k < d_in; ++k) {
                    const double diff = vi[k] - vj[k];
                    s += diff * diff;
                }
                d2[j] = s;
            }
            detail::conditional_row(d2, i, perplexity, params, row);
            for (std::size_t j = 0; j < n; ++j) P[i * n + j] = row[j];
        }
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double s = P[i * n + j] + P[j * n + i];
                P[i * n + j] = P[j * n + i] = s;
                total += 2.0 * s;
            }
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                P[i * n + j] = i == j ? 0.0 : std::max(P[i * n + j] / total, 1e-12);
    }

    std::vector<double> Y(n * dims);
    // One stream per distinct input: identical vectors start (and, having
    // identical affinities, stay) at the same point.
    const SplitMix64 root(seed);
    for (std::size_t i = 0; i < n; ++i) {
        auto rng = root.fork(hashes[order[i]]);
        for (std::size_t d = 0; d < dims; ++d) Y[i * dims + d] = params.init_sigma * rng.gaussian();
    }
    detail::recenter(Y, n, dims);
    out.kl_initial = detail::kl_divergence(P, Y, n, dims);

    // Steps that would raise the (unexaggerated) KL are rejected and the
    // rate halved; with lr 100 and only tens of points a plain step
    // overshoots badly, and this keeps kl_final <= kl_initial.
    std::vector<double> grad(n * dims), step(n * dims, 0.0), gains(n * dims, 1.0), num(n * n), trial(n * dims);
    double kl = out.kl_initial;
    double rate = params.learning_rate;
    for (int it = 0; it < params.iterations; ++it) {
        if (it == params.exaggeration_iters) rate = params.learning_rate;
        const double exag = it < params.exaggeration_iters ? params.exaggeration : 1.0;
        const double momentum = it < params.momentum_switch ? params.momentum : params.final_momentum;
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                double s = 0.0;
                for (std::size_t d = 0; d < dims; ++d) {
                    const double diff = Y[i * dims + d] - Y[j * dims + d];
                    s += diff * diff;
                }
                num[i * n + j] = num[j * n + i] = 1.0 / (1.0 + s);
                total += 2.0 * num[i * n + j];
            }
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double w = (exag * P[i * n + j] - num[i * n + j] / total) * num[i * n + j];
                for (std::size_t d = 0; d < dims; ++d) grad[i * dims + d] += 4.0 * w * (Y[i * dims + d] - Y[j * dims + d]);
            }
        auto next_gains = gains;
        auto next_step = step;
        for (std::size_t k = 0; k < Y.size(); ++k) {
            next_gains[k] = (grad[k] > 0) != (step[k] > 0) ? gains[k] + 0.2 : gains[k] * 0.8;
            next_gains[k] = std::max(next_gains[k], 0.01);
            next_step[k] = momentum * step[k] - rate * next_gains[k] * grad[k];
            trial[k] = Y[k] + next_step[k];
        }
        detail::recenter(trial, n, dims);
        const double trial_kl = detail::kl_divergence(P, trial, n, dims);
        if (std::isfinite(trial_kl) && trial_kl <= kl) {
            Y.swap(trial);
            gains.swap(next_gains);
            step.swap(next_step);
            kl = trial_kl;
        } else {
            rate *= 0.5;
            std::fill(step.begin(), step.end(), 0.0);
            std::fill(gains.begin(), gains.end(), 1.0);
        }
    }
    out.kl_final = detail::kl_divergence(P, Y, n, dims);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t d = 0; d < dims; ++d) {
            const double y = Y[i * dims + d];
            if (!std::isfinite(y)) fail(ErrorCode::Internal, "t-SNE diverged");
            out.coords[order[i]][d] = y;
        }
    return out;
}

inline ProjectionLayout project(const std::vector<EmbeddingVector>& vectors, std::size_t dims, std::uint64_t seed) {
    std::vector<std::vector<double>> raw;
    raw.reserve(vectors.size());
    for (const auto& v : vectors) raw.push_back(v.values);
    return project(raw, dims, seed);
}

/// Max pairwise euclidean distance between layout points.
inline double layout_diameter(const ProjectionLayout& l) {
    double best = 0.0;
    for (std::size_t i = 0; i < l.coords.size(); ++i)
        for (std::size_t j = i + 1; j < l.coords.size(); ++j) {
            double s = 0.0;
            for (std::size_t d = 0; d < l.coords[i].size(); ++d) {
                const double diff = l.coords[i][d] - l.coords[j][d];
                s += diff * diff;
            }
            best = std::max(best, std::sqrt(s));
        }
    return best;
}

struct CanvasPoint {
    std::string id;
    double x = 0.0;
    double y = 0.0;
    bool text_prefixed = false;
    bool operator==(const CanvasPoint&) const = default;
};

inline void to_json(json& j, const CanvasPoint& p) {
    j = json{{"id", p.id}, {"x", p.x}, {"y", p.y}, {"text_prefixed", p.text_prefixed}};
}

/// x: 1-D t-SNE of the template texts (placeholder removed) rescaled to
/// [0, 1], or 0.5 when all coordinates coincide; y: cached accuracy.
inline std::vector<CanvasPoint> canvas_positions(const std::vector<PromptTemplate>& templates, const Embedder& embedder,
                                                 std::uint64_t seed) {
    if (templates.empty()) return {};
    std::vector<std::string> texts;
    for (const auto& t : templates) {
        if (!t.cached_eval) fail(ErrorCode::NotEvaluated, "template has no evaluation", t.id);
        texts.push_back(strip_placeholder(t.text));
    }
    const auto layout = project(embedder.embed(texts), 1, seed);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& c : layout.coords) {
        lo = std::min(lo, c[0]);
        hi = std::max(hi, c[0]);
    }
    std::vector<CanvasPoint> out;
    for (std::size_t i = 0; i < templates.size(); ++i) {
        const double x = hi > lo ? (layout.coords[i][0] - lo) / (hi - lo) : 0.5;
        out.push_back({templates[i].id, x, templates[i].cached_eval->accuracy, is_text_prefixed(templates[i])});
    }
    return out;
}

/// 2-D layout of the anchor (index 0) followed by the suggestions.
inline ProjectionLayout recommendation_layout(const std::string& anchor, const std::vector<std::string>& suggestions,
                                              const Embedder& embedder, std::uint64_t seed,
                                              const std::optional<std::string>& context_tag = std::nullopt) {
    if (suggestions.empty()) fail(ErrorCode::InvalidArgument, "recommendation layout needs suggestions");
    std::vector<std::string> texts{anchor};
    texts.insert(texts.end(), suggestions.begin(), suggestions.end());
    auto layout = project(embedder.embed(texts, context_tag), 2, seed);
    layout.ids = texts;
    return layout;
}

} // namespace promptaid
