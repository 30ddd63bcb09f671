#pragma once

// Exact k-nearest-neighbour search over a balanced K-D tree.
//
// Results are ordered by (distance, key). Pruning only discards a subtree
// when its lower bound is strictly worse than the current k-th candidate, so
// equal-distance entries with smaller keys are never lost and the output is
// identical to an exhaustive scan using the same metric functions.

#include "promptaid/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <queue>

namespace promptaid {

enum class Metric { Euclidean, Cosine };

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) fail(ErrorCode::DimensionMismatch, "vectors differ in dimension");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

/// 1 - cos(a, b), clamped to [0, 2].
inline double cosine_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) fail(ErrorCode::DimensionMismatch, "vectors differ in dimension");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) fail(ErrorCode::ZeroVector, "cosine distance of a zero vector");
    return std::clamp(1.0 - dot / std::sqrt(na * nb), 0.0, 2.0);
}

inline double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
    return cosine_distance(a.values, b.values);
}

inline double distance(Metric m, std::span<const double> a, std::span<const double> b) {
    return m == Metric::Euclidean ? euclidean_distance(a, b) : cosine_distance(a, b);
}

struct IndexEntry {
    std::string key;
    EmbeddingVector vector;
};

struct Neighbor {
    std::string key;
    double distance = 0.0;
    bool operator==(const Neighbor&) const = default;
};

/// Immutable after build; concurrent queries are safe.
class VectorIndex {
public:
    static VectorIndex build(std::vector<IndexEntry> entries) {
        if (entries.empty()) fail(ErrorCode::EmptyIndex, "cannot index zero entries");
        VectorIndex idx;
        idx.dim_ = entries.front().vector.dimension();
        if (idx.dim_ == 0) fail(ErrorCode::DimensionMismatch, "zero-dimensional vectors");
        bool all_nonzero = true;
        for (const auto& e : entries) {
            if (e.vector.dimension() != idx.dim_)
                fail(ErrorCode::DimensionMismatch, "entry dimension differs from the first entry", e.key);
            for (double x : e.vector.values)
                if (!std::isfinite(x)) fail(ErrorCode::DegenerateInput, "non-finite vector entry", e.key);
            if (l2_norm(e.vector.values) == 0.0) all_nonzero = false;
        }
        idx.entries_ = std::move(entries);
        idx.euclid_ = Tree::build(idx.entries_, idx.dim_, false);
        if (all_nonzero) idx.unit_ = Tree::build(idx.entries_, idx.dim_, true);
        return idx;
    }

    std::size_t size() const noexcept { return entries_.size(); }
    std::size_t dimension() const noexcept { return dim_; }
    const std::vector<IndexEntry>& entries() const noexcept { return entries_; }
    /// Height of the euclidean tree (a single node has depth 1).
    std::size_t depth() const noexcept { return euclid_.depth(); }

    /// The min(k, n) nearest entries, ascending by distance then key.
    std::vector<Neighbor> query_knn(const EmbeddingVector& q, std::size_t k, Metric metric = Metric::Euclidean) const {
        if (q.dimension() != dim_)
            fail(ErrorCode::DimensionMismatch,
                 "query has dimension " + std::to_string(q.dimension()) + ", index has " + std::to_string(dim_));
        if (k == 0) return {};
        k = std::min(k, entries_.size());
        if (metric == Metric::Euclidean) return search(euclid_, q.values, q.values, k, metric);
        if (unit_.empty()) fail(ErrorCode::ZeroVector, "index holds a zero vector; cosine queries are undefined");
        const double n = l2_norm(q.values);
        if (n == 0.0) fail(ErrorCode::ZeroVector, "cosine query with a zero vector");
        std::vector<double> qn(q.values);
        for (auto& x : qn) x /= n;
        return search(unit_, q.values, qn, k, metric);
    }

private:
    class Tree {
    public:
        static constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

        struct Node {
            std::uint32_t entry;
            std::uint32_t left = kNone;
            std::uint32_t right = kNone;
            std::uint32_t dim = 0;
            double split = 0.0;
        };

        static Tree build(const std::vector<IndexEntry>& entries, std::size_t dim, bool unit) {
            Tree t;
            t.dim_ = dim;
            t.coords_.resize(entries.size() * dim);
            for (std::size_t i = 0; i < entries.size(); ++i) {
                const auto& v = entries[i].vector.values;
                const double n = unit ? l2_norm(v) : 1.0;
                for (std::size_t d = 0; d < dim; ++d) t.coords_[i * dim + d] = v[d] / n;
            }
            std::vector<std::uint32_t> order(entries.size());
            std::iota(order.begin(), order.end(), 0u);
            t.nodes_.reserve(entries.size());
            t.root_ = t.build_range(order, 0, order.size());
            return t;
        }

        bool empty() const noexcept { return nodes_.empty(); }
        std::uint32_t root() const noexcept { return root_; }
        const Node& node(std::uint32_t i) const { return nodes_[i]; }
        double coord(std::uint32_t entry, std::size_t d) const { return coords_[entry * dim_ + d]; }

        std::size_t depth() const { return empty() ? 0 : depth_of(root_); }

    private:
        std::uint32_t build_range(std::vector<std::uint32_t>& order, std::size_t lo, std::size_t hi) {
            if (lo >= hi) return kNone;
            // split on the dimension of widest spread
            std::size_t best_dim = 0;
            double best_spread = -1.0;
            for (std::size_t d = 0; d < dim_; ++d) {
                double mn = std::numeric_limits<double>::infinity(), mx = -mn;
                for (std::size_t i = lo; i < hi; ++i) {
                    const double c = coord(order[i], d);
                    mn = std::min(mn, c);
                    mx = std::max(mx, c);
                }
                if (mx - mn > best_spread) {
                    best_spread = mx - mn;
                    best_dim = d;
                }
            }
            const std::size_t mid = lo + (hi - lo) / 2;
            std::nth_element(order.begin() + static_cast<std::ptrdiff_t>(lo), order.begin() + static_cast<std::ptrdiff_t>(mid),
                             order.begin() + static_cast<std::ptrdiff_t>(hi), [&](std::uint32_t a, std::uint32_t b) {
                                 const double ca = coord(a, best_dim), cb = coord(b, best_dim);
                                 return ca < cb || (ca == cb && a < b);
                             });
            const auto self = static_cast<std::uint32_t>(nodes_.size());
            nodes_.push_back(Node{order[mid], kNone, kNone, static_cast<std::uint32_t>(best_dim),
                                  coord(order[mid], best_dim)});
            const auto left = build_range(order, lo, mid);
            const auto right = build_range(order, mid + 1, hi);
            nodes_[self].left = left;
            nodes_[self].right = right;
            return self;
        }

        std::size_t depth_of(std::uint32_t n) const {
            if (n == kNone) return 0;
            return 1 + std::max(depth_of(nodes_[n].left), depth_of(nodes_[n].right));
        }

        std::size_t dim_ = 0;
        std::vector<double> coords_;
        std::vector<Node> nodes_;
        std::uint32_t root_ = kNone;
    };

    struct Candidate {
        double distance;
        std::uint32_t entry;
    };

    std::vector<Neighbor> search(const Tree& tree, std::span<const double> q_metric, std::span<const double> q_tree,
                                 std::size_t k, Metric metric) const {
        // max-heap on (distance, key): top is the current k-th best
        auto worse = [this](const Candidate& a, const Candidate& b) {
            return a.distance < b.distance || (a.distance == b.distance && entries_[a.entry].key < entries_[b.entry].key);
        };
        std::priority_queue<Candidate, std::vector<Candidate>, decltype(worse)> heap(worse);

        auto visit = [&](auto&& self, std::uint32_t n) -> void {
            if (n == Tree::kNone) return;
            const auto& node = tree.node(n);
            const Candidate c{distance(metric, q_metric, entries_[node.entry].vector.values), node.entry};
            if (heap.size() < k) {
                heap.push(c);
            } else if (worse(c, heap.top())) {
                heap.pop();
                heap.push(c);
            }
            const double diff = q_tree[node.dim] - node.split;
            const auto near = diff < 0 ? node.left : node.right;
            const auto far = diff < 0 ? node.right : node.left;
            self(self, near);
            // lower bound on any distance across the split plane; for unit
            // vectors 1 - cos = |u - v|^2 / 2 >= diff^2 / 2
            double bound = metric == Metric::Euclidean ? std::abs(diff) : 0.5 * diff * diff;
            bound = std::max(0.0, bound * (1.0 - 1e-9) - 1e-12);
            if (heap.size() < k || bound <= heap.top().distance) self(self, far);
        };
        visit(visit, tree.root());

        std::vector<Neighbor> out(heap.size());
        for (std::size_t i = heap.size(); i-- > 0;) {
            out[i] = Neighbor{entries_[heap.top().entry].key, heap.top().distance};
            heap.pop();
        }
        return out;
    }

    std::size_t dim_ = 0;
    std::vector<IndexEntry> entries_;
    Tree euclid_;
    Tree unit_;
};

} // namespace promptaid
