#pragma once

// Brute-force connectivity oracle for small configurations, used to validate
// the segment/union-find machinery.  Works directly on the raw death/bridge
// lists with interval logic: nodes are bridge endpoints, query points and
// probe points; two nodes on one line are adjacent when a monotone vertical
// sweep between them crosses no death (and no slit cut), possibly wrapping
// the periodic seam.  No code shared with SegmentIndex / ClusterLabeling.

#include <cmath>
#include <vector>

#include "qising/continuum.hpp"

namespace oracle {

using qising::continuum::BoxSpec;
using qising::continuum::GeometrySet;
using qising::continuum::RcConfig;
using qising::continuum::SideBc;

struct Pt {
    int line = 0;
    double time = 0.0;
    int side = 0;  // at the slit cut: +1 = x+, -1 = x-; 0 elsewhere
};

class Oracle {
public:
    Oracle(const BoxSpec& box, const RcConfig& config) : box_(box), cfg_(config) {}

    bool connected(const Pt& a, const Pt& b) const {
        std::vector<Pt> nodes{a, b};
        add_bridge_endpoints(nodes);
        const auto visited = bfs(nodes, {0});
        return visited[1];
    }

    bool reaches_sides(const std::vector<Pt>& sources) const {
        std::vector<Pt> nodes = sources;
        add_bridge_endpoints(nodes);
        const auto visited = bfs(nodes, source_indices(sources));
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (visited[i] && on_side(nodes[i].line)) return true;
        return false;
    }

    bool reaches_full_boundary(const std::vector<Pt>& sources) const {
        std::vector<Pt> nodes = sources;
        add_bridge_endpoints(nodes);
        const std::size_t n_base = nodes.size();
        if (!box_.periodic_tb)
            for (int x = box_.line_lo; x <= box_.line_hi; ++x) {
                nodes.push_back({x, box_.time_lo, 0});
                nodes.push_back({x, box_.time_hi, 0});
            }
        const auto visited = bfs(nodes, source_indices(sources));
        for (std::size_t i = 0; i < nodes.size(); ++i)
            if (visited[i] && (on_side(nodes[i].line) || i >= n_base)) return true;
        return false;
    }

    bool reaches_set(const std::vector<Pt>& sources, const GeometrySet& set) const {
        std::vector<Pt> nodes = sources;
        add_bridge_endpoints(nodes);
        const std::size_t n_base = nodes.size();
        for (const auto& iv : set.intervals) {
            if (iv.line < box_.line_lo || iv.line > box_.line_hi) continue;
            const double lo = std::max(iv.lo, box_.time_lo);
            const double hi = std::min(iv.hi, box_.time_hi);
            if (lo > hi) continue;
            const bool slit = box_.line_has_slit(iv.line);
            nodes.push_back({iv.line, lo, slit && lo == 0.0 ? +1 : 0});
            nodes.push_back({iv.line, hi, slit && hi == 0.0 ? -1 : 0});
        }
        const auto visited = bfs(nodes, source_indices(sources));
        for (std::size_t i = n_base; i < nodes.size(); ++i)
            if (visited[i]) return true;
        // a visited node strictly inside an interval also touches the set
        for (std::size_t i = 0; i < n_base; ++i) {
            if (!visited[i]) continue;
            for (const auto& iv : set.intervals)
                if (nodes[i].line == iv.line && iv.lo < nodes[i].time && nodes[i].time < iv.hi)
                    return true;
        }
        return false;
    }

private:
    static std::vector<int> source_indices(const std::vector<Pt>& sources) {
        std::vector<int> idx(sources.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
        return idx;
    }

    bool on_side(int line) const { return line == box_.line_lo || line == box_.line_hi; }

    void add_bridge_endpoints(std::vector<Pt>& nodes) const {
        for (int p = 0; p < std::max(0, box_.n_pairs()); ++p) {
            const int x = box_.line_lo + p;
            for (double t : cfg_.bridges[p]) {
                nodes.push_back({x, t, 0});
                nodes.push_back({x + 1, t, 0});
            }
        }
    }

    // monotone upward sweep from (line, tf) to (line, tt)
    bool up_clear(int line, double tf, int sf, double tt, int st) const {
        const bool slit = box_.line_has_slit(line);
        if (slit && tf == 0.0 && sf != +1) return false;  // only x+ departs upward
        if (slit && tt == 0.0 && st != -1) return false;  // arriving from below reaches x-
        const auto& deaths = cfg_.deaths[box_.line_index(line)];
        if (tf < tt) {
            for (double d : deaths)
                if (tf < d && d < tt) return false;
            if (slit && tf < 0.0 && 0.0 < tt) return false;
            return true;
        }
        if (!box_.periodic_tb) return false;
        // wrap: (tf, T] then [S, tt)
        for (double d : deaths)
            if (d > tf || d < tt) return false;
        if (slit && (0.0 > tf || 0.0 < tt)) return false;
        return true;
    }

    bool vertically_connected(const Pt& a, const Pt& b) const {
        if (a.line != b.line) return false;
        if (a.time == b.time) {
            if (box_.line_has_slit(a.line) && a.time == 0.0) {
                if (a.side == b.side) return true;
                // x+ reaches x- around the periodic seam when nothing blocks
                return box_.periodic_tb && cfg_.deaths[box_.line_index(a.line)].empty();
            }
            return true;
        }
        return up_clear(a.line, a.time, a.side, b.time, b.side) ||
               up_clear(a.line, b.time, b.side, a.time, a.side);
    }

    std::vector<char> bfs(const std::vector<Pt>& nodes, const std::vector<int>& start) const {
        const std::size_t n = nodes.size();
        std::vector<char> visited(n, 0);
        std::vector<int> queue;
        auto push = [&](int i) {
            if (!visited[i]) {
                visited[i] = 1;
                queue.push_back(i);
            }
        };
        for (int i : start) push(i);

        const bool wired = box_.side_bc == SideBc::wired;
        for (std::size_t qi = 0; qi < queue.size(); ++qi) {
            const int i = queue[qi];
            for (std::size_t j = 0; j < n; ++j)
                if (!visited[j] && vertically_connected(nodes[i], nodes[j]))
                    push(static_cast<int>(j));
            // bridge endpoints are consecutive in the appended order
            // (identified by exact (line, time) duplicates across a pair)
            for (std::size_t j = 0; j < n; ++j) {
                if (visited[j]) continue;
                if (nodes[j].time == nodes[i].time &&
                    std::abs(nodes[j].line - nodes[i].line) == 1 && is_bridge(nodes[i], nodes[j]))
                    push(static_cast<int>(j));
            }
            if (wired && on_side(nodes[i].line))
                for (std::size_t j = 0; j < n; ++j)
                    if (!visited[j] && on_side(nodes[j].line)) push(static_cast<int>(j));
        }
        return visited;
    }

    bool is_bridge(const Pt& a, const Pt& b) const {
        const int p = std::min(a.line, b.line) - box_.line_lo;
        if (p < 0 || p >= std::max(0, box_.n_pairs())) return false;
        for (double t : cfg_.bridges[p])
            if (t == a.time) return true;
        return false;
    }

    BoxSpec box_;
    RcConfig cfg_;
};

}  // namespace oracle
