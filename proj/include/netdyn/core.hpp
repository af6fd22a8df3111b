#pragma once

// Basic identifiers, error types and small shared utilities.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

namespace netdyn {

using AgentIdx = std::uint32_t;  // dense index into an AgentTable
using Week = std::uint32_t;      // 1-based week number

inline constexpr AgentIdx kNoAgent = static_cast<AgentIdx>(-1);

// ---------------------------------------------------------------------------
// Errors.  parse_error and config_error map to CLI exit code 2 (input error),
// analysis_error to exit code 1.

class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class parse_error : public error {
public:
    parse_error(const std::string& what, long line = -1)
        : error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

class config_error : public error {
public:
    using error::error;
};

class analysis_error : public error {
public:
    using error::error;
};

class collinearity_error : public analysis_error {
public:
    using analysis_error::analysis_error;
};

// ---------------------------------------------------------------------------
// AgentTable: bidirectional mapping between external agent ids (opaque
// strings) and dense 0-based indices.  Indices are assigned in intern order.

class AgentTable {
public:
    AgentIdx intern(std::string_view id) {
        auto it = index_.find(std::string(id));
        if (it != index_.end()) return it->second;
        AgentIdx idx = static_cast<AgentIdx>(names_.size());
        names_.emplace_back(id);
        index_.emplace(names_.back(), idx);
        return idx;
    }

    AgentIdx lookup(std::string_view id) const {
        auto it = index_.find(std::string(id));
        return it == index_.end() ? kNoAgent : it->second;
    }

    const std::string& name(AgentIdx idx) const { return names_.at(idx); }
    std::size_t size() const { return names_.size(); }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, AgentIdx> index_;
};

// ---------------------------------------------------------------------------
// Hashing helpers.

inline constexpr std::uint64_t edge_key(AgentIdx from, AgentIdx to) {
    return (static_cast<std::uint64_t>(from) << 32) | to;
}

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a over bytes; used for content digests in provenance metadata.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

// ---------------------------------------------------------------------------
// parallel_for: runs fn(i) for i in [0, n).  Tasks must write to disjoint
// slots; results are then independent of the worker count.

template <typename F>
void parallel_for(std::size_t n, unsigned workers, F&& fn) {
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    unsigned nthreads = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};
    std::mutex err_mutex;
    for (unsigned w = 0; w < nthreads; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n || failed.load(std::memory_order_relaxed)) break;
                try {
                    fn(i);
                } catch (...) {
                    std::scoped_lock lock(err_mutex);
                    if (!first_error) first_error = std::current_exception();
                    failed.store(true, std::memory_order_relaxed);
                    break;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline unsigned resolve_workers(unsigned requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

} // namespace netdyn
