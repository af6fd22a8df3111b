#pragma once

// Directed graph views.  Algorithms in this library are templates over the
// DirectedGraph concept so they run unchanged on weekly snapshots of a
// TemporalNetwork, on plain edge lists, and on null-model realizations.

#include <algorithm>
#include <cassert>
#include <concepts>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "netdyn/core.hpp"

namespace netdyn {

using Edge = std::pair<AgentIdx, AgentIdx>;

namespace detail {
struct NodeVisitor {
    void operator()(AgentIdx) const {}
};
struct EdgeVisitor {
    void operator()(AgentIdx, AgentIdx) const {}
};
} // namespace detail

template <typename G>
concept DirectedGraph = requires(const G& g, AgentIdx v, detail::NodeVisitor nv, detail::EdgeVisitor ev) {
    { g.node_count() } -> std::convertible_to<std::size_t>;
    { g.edge_count() } -> std::convertible_to<std::size_t>;
    { g.has_edge(v, v) } -> std::convertible_to<bool>;
    { g.out_degree(v) } -> std::convertible_to<std::size_t>;
    { g.in_degree(v) } -> std::convertible_to<std::size_t>;
    g.for_each_out(v, nv);
    g.for_each_in(v, nv);
    g.for_each_edge(ev);
};

// ---------------------------------------------------------------------------
// FlatEdgeSet: open-addressing hash set of edge keys with backward-shift
// deletion.  Key 0 encodes the self-loop (0,0), which is never stored, so it
// doubles as the empty sentinel.

class FlatEdgeSet {
public:
    FlatEdgeSet() { rehash(16); }
    explicit FlatEdgeSet(std::size_t expected) { rehash(capacity_for(expected)); }

    void reserve(std::size_t expected) {
        std::size_t want = capacity_for(expected);
        if (want > slots_.size()) grow(want);
    }

    bool insert(std::uint64_t key) {
        assert(key != 0);
        if ((size_ + 1) * 8 > slots_.size() * 7) grow(slots_.size() * 2);
        std::size_t mask = slots_.size() - 1;
        std::size_t i = static_cast<std::size_t>(splitmix64(key)) & mask;
        while (slots_[i] != 0) {
            if (slots_[i] == key) return false;
            i = (i + 1) & mask;
        }
        slots_[i] = key;
        ++size_;
        return true;
    }

    bool contains(std::uint64_t key) const {
        std::size_t mask = slots_.size() - 1;
        std::size_t i = static_cast<std::size_t>(splitmix64(key)) & mask;
        while (slots_[i] != 0) {
            if (slots_[i] == key) return true;
            i = (i + 1) & mask;
        }
        return false;
    }

    bool erase(std::uint64_t key) {
        std::size_t mask = slots_.size() - 1;
        std::size_t i = static_cast<std::size_t>(splitmix64(key)) & mask;
        while (slots_[i] != key) {
            if (slots_[i] == 0) return false;
            i = (i + 1) & mask;
        }
        slots_[i] = 0;
        std::size_t j = i, k = i;
        while (true) {
            k = (k + 1) & mask;
            std::uint64_t cur = slots_[k];
            if (cur == 0) break;
            std::size_t h = static_cast<std::size_t>(splitmix64(cur)) & mask;
            bool movable = (j <= k) ? (h <= j || h > k) : (h <= j && h > k);
            if (movable) {
                slots_[j] = cur;
                slots_[k] = 0;
                j = k;
            }
        }
        --size_;
        return true;
    }

    std::size_t size() const { return size_; }

private:
    static std::size_t capacity_for(std::size_t expected) {
        std::size_t cap = 16;
        while (cap * 7 < (expected + 1) * 8) cap <<= 1;
        return cap;
    }

    void rehash(std::size_t cap) { slots_.assign(cap, 0); }

    void grow(std::size_t cap) {
        std::vector<std::uint64_t> old = std::move(slots_);
        rehash(cap);
        size_ = 0;
        for (std::uint64_t key : old)
            if (key != 0) insert(key);
    }

    std::vector<std::uint64_t> slots_;
    std::size_t size_ = 0;
};

// ---------------------------------------------------------------------------
// AdjacencyGraph: immutable CSR adjacency over dense node indices.
// Neighbor lists are sorted, so has_edge is a binary search.  Input edges
// must form a simple directed graph (no self-loops, no duplicates).

class AdjacencyGraph {
public:
    AdjacencyGraph() = default;

    AdjacencyGraph(std::size_t n, std::span<const Edge> edges) { build(n, edges); }

    void build(std::size_t n, std::span<const Edge> edges) {
        n_ = n;
        m_ = edges.size();
        out_off_.assign(n + 1, 0);
        in_off_.assign(n + 1, 0);
        for (const auto& [u, v] : edges) {
            assert(u < n && v < n && u != v);
            ++out_off_[u + 1];
            ++in_off_[v + 1];
        }
        for (std::size_t i = 0; i < n; ++i) {
            out_off_[i + 1] += out_off_[i];
            in_off_[i + 1] += in_off_[i];
        }
        out_nbr_.resize(m_);
        in_nbr_.resize(m_);
        std::vector<std::uint32_t> ocur(out_off_.begin(), out_off_.end() - 1);
        std::vector<std::uint32_t> icur(in_off_.begin(), in_off_.end() - 1);
        for (const auto& [u, v] : edges) {
            out_nbr_[ocur[u]++] = v;
            in_nbr_[icur[v]++] = u;
        }
        for (std::size_t i = 0; i < n; ++i) {
            std::sort(out_nbr_.begin() + out_off_[i], out_nbr_.begin() + out_off_[i + 1]);
            std::sort(in_nbr_.begin() + in_off_[i], in_nbr_.begin() + in_off_[i + 1]);
        }
    }

    std::size_t node_count() const { return n_; }
    std::size_t edge_count() const { return m_; }
    std::size_t out_degree(AgentIdx v) const { return out_off_[v + 1] - out_off_[v]; }
    std::size_t in_degree(AgentIdx v) const { return in_off_[v + 1] - in_off_[v]; }

    bool has_edge(AgentIdx u, AgentIdx v) const {
        auto b = out_nbr_.begin() + out_off_[u];
        auto e = out_nbr_.begin() + out_off_[u + 1];
        return std::binary_search(b, e, v);
    }

    std::span<const AgentIdx> out_neighbors(AgentIdx v) const {
        return {out_nbr_.data() + out_off_[v], out_nbr_.data() + out_off_[v + 1]};
    }
    std::span<const AgentIdx> in_neighbors(AgentIdx v) const {
        return {in_nbr_.data() + in_off_[v], in_nbr_.data() + in_off_[v + 1]};
    }

    template <typename F>
    void for_each_out(AgentIdx v, F&& fn) const {
        for (AgentIdx w : out_neighbors(v)) fn(w);
    }
    template <typename F>
    void for_each_in(AgentIdx v, F&& fn) const {
        for (AgentIdx w : in_neighbors(v)) fn(w);
    }
    template <typename F>
    void for_each_edge(F&& fn) const {
        for (std::size_t u = 0; u < n_; ++u)
            for (AgentIdx v : out_neighbors(static_cast<AgentIdx>(u))) fn(static_cast<AgentIdx>(u), v);
    }

private:
    std::size_t n_ = 0;
    std::size_t m_ = 0;
    std::vector<std::uint32_t> out_off_, in_off_;
    std::vector<AgentIdx> out_nbr_, in_nbr_;
};

static_assert(DirectedGraph<AdjacencyGraph>);

// Collects the edge list of any graph view, ordered by (source, target).
template <DirectedGraph G>
std::vector<Edge> extract_edges(const G& g) {
    std::vector<Edge> edges;
    edges.reserve(g.edge_count());
    g.for_each_edge([&](AgentIdx u, AgentIdx v) { edges.emplace_back(u, v); });
    return edges;
}

// Nodes with in-degree + out-degree >= 1.
template <DirectedGraph G>
std::vector<AgentIdx> active_nodes(const G& g) {
    std::vector<AgentIdx> out;
    for (std::size_t v = 0; v < g.node_count(); ++v) {
        AgentIdx a = static_cast<AgentIdx>(v);
        if (g.out_degree(a) + g.in_degree(a) > 0) out.push_back(a);
    }
    return out;
}

} // namespace netdyn
