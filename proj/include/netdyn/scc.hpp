#pragma once

// Strongly connected components (iterative Tarjan).

#include <cstdint>
#include <vector>

#include "netdyn/graph.hpp"

namespace netdyn {

struct SccResult {
    std::vector<std::uint32_t> comp_of;  // node -> component id
    std::vector<std::size_t> comp_size;  // component id -> node count
    std::size_t largest = 0;             // id of a largest component
};

inline SccResult strongly_connected_components(const AdjacencyGraph& g) {
    const std::size_t n = g.node_count();
    constexpr std::uint32_t kUnvisited = 0xffffffffu;
    SccResult result;
    result.comp_of.assign(n, kUnvisited);
    std::vector<std::uint32_t> index(n, kUnvisited), lowlink(n, 0);
    std::vector<std::uint8_t> on_stack(n, 0);
    std::vector<AgentIdx> stack;
    struct Frame {
        AgentIdx v;
        std::uint32_t next;  // position within out_neighbors(v)
    };
    std::vector<Frame> call;
    std::uint32_t counter = 0;

    for (std::size_t start = 0; start < n; ++start) {
        if (index[start] != kUnvisited) continue;
        call.push_back({static_cast<AgentIdx>(start), 0});
        while (!call.empty()) {
            Frame& f = call.back();
            AgentIdx v = f.v;
            if (f.next == 0) {
                index[v] = lowlink[v] = counter++;
                stack.push_back(v);
                on_stack[v] = 1;
            }
            auto nbrs = g.out_neighbors(v);
            bool descended = false;
            while (f.next < nbrs.size()) {
                AgentIdx w = nbrs[f.next++];
                if (index[w] == kUnvisited) {
                    call.push_back({w, 0});
                    descended = true;
                    break;
                }
                if (on_stack[w] && index[w] < lowlink[v]) lowlink[v] = index[w];
            }
            if (descended) continue;
            if (lowlink[v] == index[v]) {
                std::uint32_t comp = static_cast<std::uint32_t>(result.comp_size.size());
                std::size_t size = 0;
                AgentIdx w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    result.comp_of[w] = comp;
                    ++size;
                } while (w != v);
                result.comp_size.push_back(size);
            }
            call.pop_back();
            if (!call.empty()) {
                AgentIdx parent = call.back().v;
                if (lowlink[v] < lowlink[parent]) lowlink[parent] = lowlink[v];
            }
        }
    }
    for (std::size_t c = 0; c < result.comp_size.size(); ++c)
        if (result.comp_size[c] > result.comp_size[result.largest]) result.largest = c;
    return result;
}

} // namespace netdyn
