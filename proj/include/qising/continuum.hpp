#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qising::continuum {

enum class SideBc { free, wired };

// Space-time box [a,b] x [s,t] on Z x R, optionally with top/bottom
// identification, wired vertical sides, and a slit cutting lines 0..slit_len
// at time 0 into upper (x+) and lower (x-) halves.
struct BoxSpec {
    int line_lo = 0;
    int line_hi = 0;
    double time_lo = 0.0;
    double time_hi = 0.0;
    bool periodic_tb = false;
    SideBc side_bc = SideBc::free;
    std::optional<int> slit_len;

    int n_lines() const { return line_hi - line_lo + 1; }
    int n_pairs() const { return n_lines() - 1; }
    double height() const { return time_hi - time_lo; }
    bool line_has_slit(int x) const {
        return slit_len.has_value() && x >= 0 && x <= *slit_len;
    }
    int line_index(int x) const { return x - line_lo; }
    void validate() const;
};

// Finite death/bridge configuration.  deaths[i] are sorted times on line
// line_lo + i; bridges[i] are sorted times on the pair (line_lo+i, line_lo+i+1).
struct RcConfig {
    std::vector<std::vector<double>> deaths;
    std::vector<std::vector<double>> bridges;

    std::size_t n_deaths() const;
    std::size_t n_bridges() const;
    std::size_t n_events() const { return n_deaths() + n_bridges(); }

    static RcConfig empty(const BoxSpec& box);
    // Sortedness, range, global distinctness; with a slit no event may sit at
    // time 0 exactly.
    void validate(const BoxSpec& box) const;
};

struct Point {
    int line = 0;
    double time = 0.0;
};

// Death-free sub-intervals per line (cut at deaths, at the slit, and at
// non-periodic box ends), with global segment ids and locate queries.
class SegmentIndex {
public:
    SegmentIndex(const BoxSpec& box, const RcConfig& config);

    const BoxSpec& box() const { return box_; }
    int n_segments() const { return total_; }
    int n_line_segments(int line) const { return counts_[idx(line)]; }
    int segment_id(int line, int local) const { return offsets_[idx(line)] + local; }
    int line_of(int segment) const;

    // Segment containing (line, t).  t must not coincide with a cut; the slit
    // cut at 0 is resolved through the dedicated accessors below.
    int segment_at(int line, double t) const;
    int segment_above_cut(int line, double cut_time) const;  // starts at the cut going up
    int segment_below_cut(int line, double cut_time) const;  // ends at the cut from below
    int slit_plus(int x) const { return segment_above_cut(x, 0.0); }
    int slit_minus(int x) const { return segment_below_cut(x, 0.0); }

    // All segments of `line` intersecting the closed interval [u, v].
    void segments_overlapping(int line, double u, double v, std::vector<int>& out) const;

    // Closed cover [lo, hi] (and a second piece when the segment wraps the
    // periodic seam).
    struct Span {
        double lo, hi;
        bool wraps;
        double lo2, hi2;  // valid when wraps
    };
    Span span_of(int segment) const;

    const std::vector<double>& cuts(int line) const { return cuts_[idx(line)]; }

private:
    int idx(int line) const { return line - box_.line_lo; }
    BoxSpec box_;
    std::vector<std::vector<double>> cuts_;  // deaths plus slit cut, sorted
    std::vector<int> offsets_;
    std::vector<int> counts_;
    int total_ = 0;
};

// Union-find clustering of segments across bridges, with wired-side merging.
class ClusterLabeling {
public:
    ClusterLabeling(const BoxSpec& box, const RcConfig& config);

    const SegmentIndex& segments() const { return seg_; }
    const BoxSpec& box() const { return seg_.box(); }
    const RcConfig& config() const { return *config_; }

    int find(int segment) const;
    bool same_cluster(int s1, int s2) const { return find(s1) == find(s2); }
    int cluster_count() const { return k_; }

    int root_of_point(Point p) const;
    bool connected(Point p, Point q) const;

private:
    SegmentIndex seg_;
    const RcConfig* config_;
    mutable std::vector<int> parent_;
    int k_ = 0;
};

int cluster_count(const BoxSpec& box, const RcConfig& config);
bool connected(const BoxSpec& box, const RcConfig& config, Point p, Point q);

enum class BoundaryTarget { vertical_sides, full_boundary };
bool reaches_boundary(const BoxSpec& box, const RcConfig& config, std::span<const Point> source,
                      BoundaryTarget target = BoundaryTarget::vertical_sides);

// Per-line closed time intervals; degenerate intervals are points.  Paths of
// a configuration meet such a set only along time lines (up to events of
// probability zero), so per-line intervals describe it exactly.
struct GeometrySet {
    struct Interval {
        int line;
        double lo, hi;
    };
    std::vector<Interval> intervals;

    GeometrySet clipped_to(const BoxSpec& box) const;
};

// The two separating sets used by the mixing estimates for the slit box
// [-m, m+L]: the equator complement D (columns [-m,-1] and [L+1,L+m] at time
// 0) and the staircase parallelogram circuit D0 with horizontal diagonal
// 2k+L, vertical diagonal ~ 4k+2L, k = floor(3m/7).
struct SeparatingSets {
    int m = 0, L = 0, k = 0;
    GeometrySet equator;
    GeometrySet parallelogram;

    double horizontal_diagonal() const { return 2.0 * k + L; }
    double vertical_diagonal() const { return 4.0 * k + 2.0 * L; }
};
SeparatingSets separating_sets(int m, int L);

// True when any segment touching `set` shares a cluster with one of `roots`.
bool set_touches_roots(const ClusterLabeling& labeling, const GeometrySet& set,
                       std::span<const int> roots);

// Line-oriented text serialisation: a header with the BoxSpec fields followed
// by one "D <line> <time>" / "B <line> <time>" record per event.  Round-trips
// bit-exactly.
void write_config(std::ostream& os, const BoxSpec& box, const RcConfig& config);
std::pair<BoxSpec, RcConfig> read_config(std::istream& is);

}  // namespace qising::continuum
