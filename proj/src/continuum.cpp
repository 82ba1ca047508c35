#include "qising/continuum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace qising::continuum {

void BoxSpec::validate() const {
    if (line_lo > line_hi) throw std::invalid_argument("BoxSpec: line_lo > line_hi");
    if (!(time_lo < time_hi)) throw std::invalid_argument("BoxSpec: requires s < t");
    if (slit_len) {
        if (*slit_len < 0) throw std::invalid_argument("BoxSpec: slit length must be >= 0");
        if (line_lo > 0 || *slit_len > line_hi)
            throw std::invalid_argument("BoxSpec: slit [0, L] must lie inside the line range");
    }
}

std::size_t RcConfig::n_deaths() const {
    std::size_t n = 0;
    for (const auto& d : deaths) n += d.size();
    return n;
}

std::size_t RcConfig::n_bridges() const {
    std::size_t n = 0;
    for (const auto& b : bridges) n += b.size();
    return n;
}

RcConfig RcConfig::empty(const BoxSpec& box) {
    RcConfig c;
    c.deaths.resize(box.n_lines());
    c.bridges.resize(std::max(0, box.n_pairs()));
    return c;
}

void RcConfig::validate(const BoxSpec& box) const {
    box.validate();
    if (static_cast<int>(deaths.size()) != box.n_lines() ||
        static_cast<int>(bridges.size()) != std::max(0, box.n_pairs()))
        throw std::invalid_argument("RcConfig: container sizes do not match the box");

    std::vector<double> all;
    all.reserve(n_events());
    auto check_list = [&](const std::vector<double>& times) {
        for (std::size_t i = 0; i < times.size(); ++i) {
            const double t = times[i];
            if (!(t > box.time_lo && t < box.time_hi))
                throw std::invalid_argument("RcConfig: event time outside (s, t)");
            if (i > 0 && !(times[i - 1] < t))
                throw std::invalid_argument("RcConfig: event times not strictly sorted");
            // With a slit, time 0 is reserved for the cut; an event exactly
            // there would make its upper/lower attachment ambiguous.
            if (box.slit_len && t == 0.0)
                throw std::invalid_argument("RcConfig: event at the slit time 0");
            all.push_back(t);
        }
    };
    for (const auto& d : deaths) check_list(d);
    for (const auto& b : bridges) check_list(b);
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end())
        throw std::invalid_argument("RcConfig: coincident event times");
}

// ---------------------------------------------------------------------------
// SegmentIndex

SegmentIndex::SegmentIndex(const BoxSpec& box, const RcConfig& config) : box_(box) {
    const int w = box_.n_lines();
    cuts_.resize(w);
    offsets_.resize(w);
    counts_.resize(w);
    for (int i = 0; i < w; ++i) {
        cuts_[i] = config.deaths[i];
        const int x = box_.line_lo + i;
        if (box_.line_has_slit(x)) {
            auto it = std::lower_bound(cuts_[i].begin(), cuts_[i].end(), 0.0);
            cuts_[i].insert(it, 0.0);
        }
        const int c = static_cast<int>(cuts_[i].size());
        counts_[i] = box_.periodic_tb ? std::max(1, c) : c + 1;
        offsets_[i] = total_;
        total_ += counts_[i];
    }
}

int SegmentIndex::line_of(int segment) const {
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), segment);
    return box_.line_lo + static_cast<int>(it - offsets_.begin()) - 1;
}

int SegmentIndex::segment_at(int line, double t) const {
    const int i = idx(line);
    const auto& cuts = cuts_[i];
    const auto it = std::upper_bound(cuts.begin(), cuts.end(), t);
    const int pos = static_cast<int>(it - cuts.begin());
    if (!box_.periodic_tb) return offsets_[i] + pos;
    if (cuts.empty()) return offsets_[i];
    // periodic: segment j starts at cuts[j]; below the first cut wraps around
    const int c = static_cast<int>(cuts.size());
    return offsets_[i] + (pos == 0 ? c - 1 : pos - 1);
}

int SegmentIndex::segment_above_cut(int line, double cut_time) const {
    const int i = idx(line);
    const auto& cuts = cuts_[i];
    const auto it = std::lower_bound(cuts.begin(), cuts.end(), cut_time);
    if (it == cuts.end() || *it != cut_time)
        throw std::invalid_argument("SegmentIndex: no cut at the requested time");
    const int q = static_cast<int>(it - cuts.begin());
    return offsets_[i] + (box_.periodic_tb ? q : q + 1);
}

int SegmentIndex::segment_below_cut(int line, double cut_time) const {
    const int i = idx(line);
    const auto& cuts = cuts_[i];
    const auto it = std::lower_bound(cuts.begin(), cuts.end(), cut_time);
    if (it == cuts.end() || *it != cut_time)
        throw std::invalid_argument("SegmentIndex: no cut at the requested time");
    const int q = static_cast<int>(it - cuts.begin());
    const int c = static_cast<int>(cuts.size());
    return offsets_[i] + (box_.periodic_tb ? (q + c - 1) % c : q);
}

void SegmentIndex::segments_overlapping(int line, double u, double v, std::vector<int>& out) const {
    out.clear();
    const int i = idx(line);
    const auto& cuts = cuts_[i];
    const auto at_cut = std::lower_bound(cuts.begin(), cuts.end(), u);
    const bool u_is_cut = at_cut != cuts.end() && *at_cut == u;
    if (u_is_cut)
        out.push_back(segment_below_cut(line, u));
    else
        out.push_back(segment_at(line, u));
    for (auto it = std::lower_bound(cuts.begin(), cuts.end(), u);
         it != cuts.end() && *it <= v; ++it) {
        const int s = segment_above_cut(line, *it);
        if (out.empty() || out.back() != s) out.push_back(s);
    }
    // the wrapped segment can be reported twice (containing u and starting at
    // a later cut); dedupe
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
}

SegmentIndex::Span SegmentIndex::span_of(int segment) const {
    const int line = line_of(segment);
    const int i = idx(line);
    const int local = segment - offsets_[i];
    const auto& cuts = cuts_[i];
    const int c = static_cast<int>(cuts.size());
    Span sp{0, 0, false, 0, 0};
    if (!box_.periodic_tb) {
        sp.lo = local == 0 ? box_.time_lo : cuts[local - 1];
        sp.hi = local == c ? box_.time_hi : cuts[local];
        return sp;
    }
    if (c == 0) {
        sp.lo = box_.time_lo;
        sp.hi = box_.time_hi;
        return sp;
    }
    if (local < c - 1) {
        sp.lo = cuts[local];
        sp.hi = cuts[local + 1];
        return sp;
    }
    sp.lo = cuts[c - 1];
    sp.hi = box_.time_hi;
    sp.wraps = true;
    sp.lo2 = box_.time_lo;
    sp.hi2 = cuts[0];
    return sp;
}

// ---------------------------------------------------------------------------
// ClusterLabeling

namespace {
int uf_find(std::vector<int>& parent, int s) {
    int root = s;
    while (parent[root] != root) root = parent[root];
    while (parent[s] != root) {
        const int next = parent[s];
        parent[s] = root;
        s = next;
    }
    return root;
}

void uf_union(std::vector<int>& parent, std::vector<int>& size, int a, int b) {
    a = uf_find(parent, a);
    b = uf_find(parent, b);
    if (a == b) return;
    if (size[a] < size[b]) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
}
}  // namespace

ClusterLabeling::ClusterLabeling(const BoxSpec& box, const RcConfig& config)
    : seg_(box, config), config_(&config) {
    const bool wired = box.side_bc == SideBc::wired;
    const int n = seg_.n_segments();
    const int ghost = n;
    parent_.resize(n + (wired ? 1 : 0));
    std::vector<int> size(parent_.size(), 1);
    for (std::size_t s = 0; s < parent_.size(); ++s) parent_[s] = static_cast<int>(s);

    for (int p = 0; p < std::max(0, box.n_pairs()); ++p) {
        const int xl = box.line_lo + p;
        for (double t : config.bridges[p])
            uf_union(parent_, size, seg_.segment_at(xl, t), seg_.segment_at(xl + 1, t));
    }
    if (wired) {
        for (int line : {box.line_lo, box.line_hi})
            for (int local = 0; local < seg_.n_line_segments(line); ++local)
                uf_union(parent_, size, ghost, seg_.segment_id(line, local));
    }

    std::vector<char> seen(parent_.size(), 0);
    for (int s = 0; s < n; ++s) {
        const int r = uf_find(parent_, s);
        if (!seen[r]) {
            seen[r] = 1;
            ++k_;
        }
    }
}

int ClusterLabeling::find(int segment) const { return uf_find(parent_, segment); }

int ClusterLabeling::root_of_point(Point p) const {
    const auto& b = box();
    if (p.line < b.line_lo || p.line > b.line_hi || p.time < b.time_lo || p.time > b.time_hi)
        throw std::invalid_argument("point outside the box");
    if (b.line_has_slit(p.line) && p.time == 0.0)
        throw std::invalid_argument("point on the slit cut; query x+ / x- explicitly");
    return find(seg_.segment_at(p.line, p.time));
}

bool ClusterLabeling::connected(Point p, Point q) const {
    return root_of_point(p) == root_of_point(q);
}

int cluster_count(const BoxSpec& box, const RcConfig& config) {
    config.validate(box);
    return ClusterLabeling(box, config).cluster_count();
}

bool connected(const BoxSpec& box, const RcConfig& config, Point p, Point q) {
    config.validate(box);
    return ClusterLabeling(box, config).connected(p, q);
}

bool reaches_boundary(const BoxSpec& box, const RcConfig& config, std::span<const Point> source,
                      BoundaryTarget target) {
    config.validate(box);
    ClusterLabeling lab(box, config);
    const auto& seg = lab.segments();

    // +1: the wired ghost node can be a root
    std::vector<char> is_target(lab.segments().n_segments() + 1, 0);
    auto mark = [&](int segment) { is_target[lab.find(segment)] = 1; };
    for (int line : {box.line_lo, box.line_hi})
        for (int local = 0; local < seg.n_line_segments(line); ++local)
            mark(seg.segment_id(line, local));
    if (target == BoundaryTarget::full_boundary && !box.periodic_tb) {
        for (int line = box.line_lo; line <= box.line_hi; ++line) {
            mark(seg.segment_id(line, 0));
            mark(seg.segment_id(line, seg.n_line_segments(line) - 1));
        }
    }
    for (const Point& p : source)
        if (is_target[lab.root_of_point(p)]) return true;
    return false;
}

GeometrySet GeometrySet::clipped_to(const BoxSpec& box) const {
    GeometrySet out;
    for (const auto& iv : intervals) {
        if (iv.line < box.line_lo || iv.line > box.line_hi) continue;
        const double lo = std::max(iv.lo, box.time_lo);
        const double hi = std::min(iv.hi, box.time_hi);
        if (lo <= hi) out.intervals.push_back({iv.line, lo, hi});
    }
    return out;
}

SeparatingSets separating_sets(int m, int L) {
    if (m < 1 || L < 1) throw std::invalid_argument("separating_sets: requires m, L >= 1");
    SeparatingSets out;
    out.m = m;
    out.L = L;
    out.k = 3 * m / 7;

    for (int x = -m; x <= -1; ++x) out.equator.intervals.push_back({x, 0.0, 0.0});
    for (int x = L + 1; x <= L + m; ++x) out.equator.intervals.push_back({x, 0.0, 0.0});

    // Staircase circuit through (-k, 0), (L+k, 0) with apex height ~ 2k+L:
    // vertical steps of height 2, horizontal steps of length 1.
    const int k = out.k;
    const int span = 2 * k + L;
    for (int j = 0; j <= span; ++j) {
        const int line = -k + j;
        double lo, hi;
        if (2 * j < span) {
            lo = 2.0 * j;
            hi = lo + 2.0;
        } else if (2 * j > span) {
            lo = 2.0 * (span - j);
            hi = lo + 2.0;
        } else {
            lo = hi = static_cast<double>(span);  // apex meeting point
        }
        out.parallelogram.intervals.push_back({line, lo, hi});
        out.parallelogram.intervals.push_back({line, -hi, -lo});
    }
    return out;
}

bool set_touches_roots(const ClusterLabeling& labeling, const GeometrySet& set,
                       std::span<const int> roots) {
    std::vector<int> segs;
    for (const auto& iv : set.intervals) {
        if (iv.line < labeling.box().line_lo || iv.line > labeling.box().line_hi) continue;
        segs.clear();
        labeling.segments().segments_overlapping(iv.line, iv.lo, iv.hi, segs);
        for (int s : segs) {
            const int r = labeling.find(s);
            if (std::find(roots.begin(), roots.end(), r) != roots.end()) return true;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// Serialisation

namespace {
std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace

void write_config(std::ostream& os, const BoxSpec& box, const RcConfig& config) {
    os << "rcconfig 1\n";
    os << "box " << box.line_lo << ' ' << box.line_hi << ' ' << fmt17(box.time_lo) << ' '
       << fmt17(box.time_hi) << ' ' << (box.periodic_tb ? 1 : 0) << ' '
       << (box.side_bc == SideBc::wired ? "wired" : "free") << ' '
       << (box.slit_len ? *box.slit_len : -1) << '\n';
    for (int i = 0; i < box.n_lines(); ++i)
        for (double t : config.deaths[i])
            os << "D " << box.line_lo + i << ' ' << fmt17(t) << '\n';
    for (int i = 0; i < std::max(0, box.n_pairs()); ++i)
        for (double t : config.bridges[i])
            os << "B " << box.line_lo + i << ' ' << fmt17(t) << '\n';
}

std::pair<BoxSpec, RcConfig> read_config(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("rcconfig", 0) != 0)
        throw std::invalid_argument("read_config: missing rcconfig header");

    BoxSpec box;
    {
        if (!std::getline(is, line)) throw std::invalid_argument("read_config: missing box line");
        std::istringstream ss(line);
        std::string tag, side;
        int periodic = 0, slit = -1;
        if (!(ss >> tag >> box.line_lo >> box.line_hi >> box.time_lo >> box.time_hi >> periodic >>
              side >> slit) ||
            tag != "box")
            throw std::invalid_argument("read_config: malformed box line");
        box.periodic_tb = periodic != 0;
        if (side == "wired")
            box.side_bc = SideBc::wired;
        else if (side == "free")
            box.side_bc = SideBc::free;
        else
            throw std::invalid_argument("read_config: unknown side boundary '" + side + "'");
        if (slit >= 0) box.slit_len = slit;
    }
    box.validate();

    RcConfig config = RcConfig::empty(box);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tag;
        int x = 0;
        double t = 0;
        if (!(ss >> tag >> x >> t)) throw std::invalid_argument("read_config: malformed record");
        if (tag == "D") {
            if (x < box.line_lo || x > box.line_hi)
                throw std::invalid_argument("read_config: death line outside box");
            config.deaths[box.line_index(x)].push_back(t);
        } else if (tag == "B") {
            if (x < box.line_lo || x >= box.line_hi)
                throw std::invalid_argument("read_config: bridge pair outside box");
            config.bridges[box.line_index(x)].push_back(t);
        } else {
            throw std::invalid_argument("read_config: unknown record '" + tag + "'");
        }
    }
    for (auto& d : config.deaths) std::sort(d.begin(), d.end());
    for (auto& b : config.bridges) std::sort(b.begin(), b.end());
    config.validate(box);
    return {box, config};
}

}  // namespace qising::continuum
