#include "qising/rcsampler.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <stdexcept>

namespace qising::rcsampler {

using continuum::SideBc;

void RcParams::validate(const BoxSpec& box) const {
    if (!(lambda > 0.0) || !(delta > 0.0))
        throw std::invalid_argument("RcParams: lambda and delta must be positive");
    if (!(q >= 1.0)) throw std::invalid_argument("RcParams: q must be >= 1");
    if (delta_per_line) {
        if (static_cast<int>(delta_per_line->size()) != box.n_lines())
            throw std::invalid_argument("RcParams: delta_per_line size mismatch");
        for (double d : *delta_per_line)
            if (!(d > 0.0)) throw std::invalid_argument("RcParams: non-positive death intensity");
    }
    if (lambda_per_pair) {
        if (static_cast<int>(lambda_per_pair->size()) != std::max(0, box.n_pairs()))
            throw std::invalid_argument("RcParams: lambda_per_pair size mismatch");
        for (double l : *lambda_per_pair)
            if (!(l > 0.0)) throw std::invalid_argument("RcParams: non-positive bridge intensity");
    }
}

RcConfig sample_percolation(const BoxSpec& box, const RcParams& params, Rng& rng) {
    box.validate();
    params.validate(box);
    RcConfig cfg = RcConfig::empty(box);
    auto fill = [&](std::vector<double>& out, double rate) {
        double t = box.time_lo;
        while (true) {
            t += rng.exponential(rate);
            if (!(t < box.time_hi)) break;
            if (box.slit_len && t == 0.0) continue;  // measure-zero guard near the slit cut
            out.push_back(t);
        }
    };
    for (int i = 0; i < box.n_lines(); ++i) fill(cfg.deaths[i], params.delta_at(i));
    for (int p = 0; p < std::max(0, box.n_pairs()); ++p) fill(cfg.bridges[p], params.lambda_at(p));
    return cfg;
}

// ---------------------------------------------------------------------------
// Chain

Chain::Chain(BoxSpec box, RcParams params, RcConfig initial, std::uint64_t seed,
             std::uint64_t stream)
    : box_(std::move(box)), params_(std::move(params)), cfg_(std::move(initial)),
      rng_(seed, stream) {
    box_.validate();
    params_.validate(box_);
    cfg_.validate(box_);
    n_deaths_ = cfg_.n_deaths();
    n_bridges_ = cfg_.n_bridges();
    total_line_len_ = box_.n_lines() * box_.height();
    total_pair_len_ = std::max(0, box_.n_pairs()) * box_.height();
    k_ = continuum::ClusterLabeling(box_, cfg_).cluster_count();

    // Sweep length must not depend on the current state: sampling at the
    // boundaries of state-dependent-length move batches weights a state by
    // 1/length and is no longer stationary for the target measure.  The
    // reference-process mean event count keeps the sweep proportional to
    // system size.
    double mean_events = 0.0;
    for (int i = 0; i < box_.n_lines(); ++i) mean_events += params_.delta_at(i) * box_.height();
    for (int p = 0; p < std::max(0, box_.n_pairs()); ++p)
        mean_events += params_.lambda_at(p) * box_.height();
    sweep_moves_ = static_cast<long>(std::ceil(mean_events)) + 1;
}

Chain::Chain(BoxSpec box, RcParams params, std::uint64_t seed, std::uint64_t stream)
    : Chain(box, std::move(params), RcConfig::empty(box), seed, stream) {}

void Chain::run_sweeps(long n) {
    for (long i = 0; i < n; ++i) sweep();
}

double Chain::draw_insert_time(const std::vector<double>& occupied) {
    while (true) {
        const double t = rng_.uniform(box_.time_lo, box_.time_hi);
        if (!(t > box_.time_lo)) continue;
        if (box_.slit_len && t == 0.0) continue;
        if (std::binary_search(occupied.begin(), occupied.end(), t)) continue;
        return t;
    }
}

void Chain::apply_move(const Move& m) {
    switch (m.kind) {
        case Move::Kind::insert_death: {
            auto& v = cfg_.deaths[m.idx];
            v.insert(std::upper_bound(v.begin(), v.end(), m.time), m.time);
            ++n_deaths_;
            break;
        }
        case Move::Kind::delete_death: {
            auto& v = cfg_.deaths[m.idx];
            v.erase(std::lower_bound(v.begin(), v.end(), m.time));
            --n_deaths_;
            break;
        }
        case Move::Kind::insert_bridge: {
            auto& v = cfg_.bridges[m.idx];
            v.insert(std::upper_bound(v.begin(), v.end(), m.time), m.time);
            ++n_bridges_;
            break;
        }
        case Move::Kind::delete_bridge: {
            auto& v = cfg_.bridges[m.idx];
            v.erase(std::lower_bound(v.begin(), v.end(), m.time));
            --n_bridges_;
            break;
        }
    }
}

void Chain::revert_move(const Move& m) {
    Move inverse = m;
    switch (m.kind) {
        case Move::Kind::insert_death: inverse.kind = Move::Kind::delete_death; break;
        case Move::Kind::delete_death: inverse.kind = Move::Kind::insert_death; break;
        case Move::Kind::insert_bridge: inverse.kind = Move::Kind::delete_bridge; break;
        case Move::Kind::delete_bridge: inverse.kind = Move::Kind::insert_bridge; break;
    }
    apply_move(inverse);
}

int Chain::delta_k(const Move& m) {
    if (box_.side_bc == SideBc::wired || cfg_.n_events() < kRecountThreshold)
        return delta_k_recount(m);
    return delta_k_local(m);
}

int Chain::delta_k_recount(const Move& m) {
    apply_move(m);
    const int k_new = continuum::ClusterLabeling(box_, cfg_).cluster_count();
    revert_move(m);
    return k_new - k_;
}

std::optional<double> Chain::vcut_below(int i, double t, const Override& ov) const {
    std::optional<double> best;
    const auto& d = cfg_.deaths[i];
    auto it = std::lower_bound(d.begin(), d.end(), t);
    while (it != d.begin()) {
        --it;
        if (ov.removed_cut_line == i && *it == ov.removed_cut_time) continue;
        best = *it;
        break;
    }
    if (box_.line_has_slit(box_.line_lo + i) && 0.0 < t && (!best || *best < 0.0)) best = 0.0;
    if (ov.cut_line == i && ov.cut_time < t && (!best || *best < ov.cut_time)) best = ov.cut_time;
    return best;
}

std::optional<double> Chain::vcut_above(int i, double t, const Override& ov) const {
    std::optional<double> best;
    const auto& d = cfg_.deaths[i];
    for (auto it = std::upper_bound(d.begin(), d.end(), t); it != d.end(); ++it) {
        if (ov.removed_cut_line == i && *it == ov.removed_cut_time) continue;
        best = *it;
        break;
    }
    if (box_.line_has_slit(box_.line_lo + i) && 0.0 > t && (!best || *best > 0.0)) best = 0.0;
    if (ov.cut_line == i && ov.cut_time > t && (!best || *best > ov.cut_time)) best = ov.cut_time;
    return best;
}

std::optional<double> Chain::vcut_min(int i, const Override& ov) const {
    std::optional<double> best;
    for (double d : cfg_.deaths[i]) {
        if (ov.removed_cut_line == i && d == ov.removed_cut_time) continue;
        best = d;
        break;
    }
    if (box_.line_has_slit(box_.line_lo + i) && (!best || 0.0 < *best)) best = 0.0;
    if (ov.cut_line == i && (!best || ov.cut_time < *best)) best = ov.cut_time;
    return best;
}

std::optional<double> Chain::vcut_max(int i, const Override& ov) const {
    std::optional<double> best;
    for (auto it = cfg_.deaths[i].rbegin(); it != cfg_.deaths[i].rend(); ++it) {
        if (ov.removed_cut_line == i && *it == ov.removed_cut_time) continue;
        best = *it;
        break;
    }
    if (box_.line_has_slit(box_.line_lo + i) && (!best || 0.0 > *best)) best = 0.0;
    if (ov.cut_line == i && (!best || ov.cut_time > *best)) best = ov.cut_time;
    return best;
}

Chain::Seg Chain::seg_containing(int i, double t, const Override& ov) const {
    const auto below = vcut_below(i, t, ov);
    const auto above = vcut_above(i, t, ov);
    if (!box_.periodic_tb)
        return {i, below.value_or(box_.time_lo), above.value_or(box_.time_hi), false};
    if (!below && !above) return {i, box_.time_lo, box_.time_hi, false};  // full circle
    if (below && above) return {i, *below, *above, false};
    if (!below) return {i, *vcut_max(i, ov), *above, true};
    return {i, *below, *vcut_min(i, ov), true};
}

Chain::Seg Chain::seg_above_vcut(int i, double ct, const Override& ov) const {
    const auto above = vcut_above(i, ct, ov);
    if (!box_.periodic_tb) return {i, ct, above.value_or(box_.time_hi), false};
    if (above) return {i, ct, *above, false};
    return {i, ct, *vcut_min(i, ov), true};
}

Chain::Seg Chain::seg_below_vcut(int i, double ct, const Override& ov) const {
    const auto below = vcut_below(i, ct, ov);
    if (!box_.periodic_tb) return {i, below.value_or(box_.time_lo), ct, false};
    if (below) return {i, *below, ct, false};
    return {i, *vcut_max(i, ov), ct, true};
}

bool Chain::segs_connected(const Seg& from, const Seg& to, const Override& ov) {
    auto same = [](const Seg& a, const Seg& b) { return a.line == b.line && a.lo == b.lo; };
    if (same(from, to)) return true;

    visited_.clear();
    frontier_ = 0;
    visited_.push_back(from);
    bool found = false;

    auto visit = [&](const Seg& s) {
        if (same(s, to)) {
            found = true;
            return;
        }
        for (const Seg& v : visited_)
            if (same(v, s)) return;
        visited_.push_back(s);
    };

    while (!found && frontier_ < visited_.size()) {
        const Seg s = visited_[frontier_++];
        for (int p : {s.line - 1, s.line}) {
            if (p < 0 || p >= std::max(0, box_.n_pairs())) continue;
            const int other = (p == s.line) ? s.line + 1 : s.line - 1;
            const auto& br = cfg_.bridges[p];
            auto scan = [&](double lo, double hi) {
                for (auto it = std::upper_bound(br.begin(), br.end(), lo);
                     it != br.end() && *it < hi; ++it) {
                    if (ov.removed_bridge_pair == p && *it == ov.removed_bridge_time) continue;
                    visit(seg_containing(other, *it, ov));
                    if (found) return;
                }
            };
            if (!s.wraps) {
                scan(s.lo, s.hi);
            } else {
                scan(s.lo, box_.time_hi + 1.0);  // (lo, T]
                scan(box_.time_lo - 1.0, s.hi);  // [S, hi)
            }
            if (found) break;
        }
    }
    return found;
}

int Chain::delta_k_local(const Move& m) {
    if (box_.side_bc == SideBc::wired)
        throw std::logic_error("delta_k_local: wired sides use the recount path");
    Override ov;
    switch (m.kind) {
        case Move::Kind::insert_death: {
            ov.cut_line = m.idx;
            ov.cut_time = m.time;
            const Seg below = seg_below_vcut(m.idx, m.time, ov);
            const Seg above = seg_above_vcut(m.idx, m.time, ov);
            return segs_connected(below, above, ov) ? 0 : +1;
        }
        case Move::Kind::delete_death: {
            const Seg below = seg_below_vcut(m.idx, m.time, ov);
            const Seg above = seg_above_vcut(m.idx, m.time, ov);
            return segs_connected(below, above, ov) ? 0 : -1;
        }
        case Move::Kind::insert_bridge: {
            const Seg a = seg_containing(m.idx, m.time, ov);
            const Seg b = seg_containing(m.idx + 1, m.time, ov);
            return segs_connected(a, b, ov) ? 0 : -1;
        }
        case Move::Kind::delete_bridge: {
            ov.removed_bridge_pair = m.idx;
            ov.removed_bridge_time = m.time;
            const Seg a = seg_containing(m.idx, m.time, ov);
            const Seg b = seg_containing(m.idx + 1, m.time, ov);
            return segs_connected(a, b, ov) ? 0 : +1;
        }
    }
    return 0;  // unreachable
}

double Chain::acceptance_ratio(const Move& m) {
    const double qdk = std::pow(params_.q, delta_k(m));
    switch (m.kind) {
        case Move::Kind::insert_death:
            return qdk * params_.delta_at(m.idx) * total_line_len_ /
                   static_cast<double>(n_deaths_ + 1);
        case Move::Kind::delete_death:
            return qdk * static_cast<double>(n_deaths_) /
                   (params_.delta_at(m.idx) * total_line_len_);
        case Move::Kind::insert_bridge:
            return qdk * params_.lambda_at(m.idx) * total_pair_len_ /
                   static_cast<double>(n_bridges_ + 1);
        case Move::Kind::delete_bridge:
            return qdk * static_cast<double>(n_bridges_) /
                   (params_.lambda_at(m.idx) * total_pair_len_);
    }
    return 0.0;  // unreachable
}

void Chain::sweep() {
    const long n_moves = sweep_moves_;
    for (long i = 0; i < n_moves; ++i) {
        const int kind = static_cast<int>(rng_.uniform_index(4));
        ++n_proposed_;
        Move m{Move::Kind::insert_death, 0, 0.0};
        switch (kind) {
            case 0: {
                m.kind = Move::Kind::insert_death;
                m.idx = static_cast<int>(rng_.uniform_index(box_.n_lines()));
                m.time = draw_insert_time(cfg_.deaths[m.idx]);
                break;
            }
            case 1: {
                if (n_deaths_ == 0) continue;
                m.kind = Move::Kind::delete_death;
                std::uint64_t flat = rng_.uniform_index(n_deaths_);
                int line = 0;
                while (flat >= cfg_.deaths[line].size()) flat -= cfg_.deaths[line++].size();
                m.idx = line;
                m.time = cfg_.deaths[line][flat];
                break;
            }
            case 2: {
                if (box_.n_pairs() <= 0) continue;
                m.kind = Move::Kind::insert_bridge;
                m.idx = static_cast<int>(rng_.uniform_index(box_.n_pairs()));
                m.time = draw_insert_time(cfg_.bridges[m.idx]);
                break;
            }
            default: {
                if (n_bridges_ == 0) continue;
                m.kind = Move::Kind::delete_bridge;
                std::uint64_t flat = rng_.uniform_index(n_bridges_);
                int pair = 0;
                while (flat >= cfg_.bridges[pair].size()) flat -= cfg_.bridges[pair++].size();
                m.idx = pair;
                m.time = cfg_.bridges[pair][flat];
                break;
            }
        }
        const int dk = delta_k(m);
        double ratio = std::pow(params_.q, dk);
        switch (m.kind) {
            case Move::Kind::insert_death:
                ratio *= params_.delta_at(m.idx) * total_line_len_ /
                         static_cast<double>(n_deaths_ + 1);
                break;
            case Move::Kind::delete_death:
                ratio *= static_cast<double>(n_deaths_) /
                         (params_.delta_at(m.idx) * total_line_len_);
                break;
            case Move::Kind::insert_bridge:
                ratio *= params_.lambda_at(m.idx) * total_pair_len_ /
                         static_cast<double>(n_bridges_ + 1);
                break;
            case Move::Kind::delete_bridge:
                ratio *= static_cast<double>(n_bridges_) /
                         (params_.lambda_at(m.idx) * total_pair_len_);
                break;
        }
        if (rng_.uniform() < std::min(1.0, ratio)) {
            apply_move(m);
            k_ += dk;
            ++n_accepted_;
        }
    }
}

RcConfig mcmc_sweep(const RcConfig& config, const BoxSpec& box, const RcParams& params,
                    std::uint64_t seed) {
    Chain chain(box, params, config, seed);
    chain.sweep();
    return chain.config();
}

// ---------------------------------------------------------------------------
// Estimators

namespace {

struct ChainSeries {
    std::vector<std::vector<double>> per_dim;  // dim x n_c
};

void run_chain_samples(const BoxSpec& box, const RcParams& params, const Measurement& f, int dim,
                       const EstimateOptions& opt, std::uint64_t seed, int chain_idx, long n_c,
                       ChainSeries& out) {
    out.per_dim.assign(dim, {});
    for (auto& s : out.per_dim) s.reserve(n_c);
    Eigen::VectorXd buf(dim);
    const std::uint64_t stream = opt.stream_base + static_cast<std::uint64_t>(chain_idx);
    if (params.q == 1.0 && !opt.force_mcmc) {
        Rng rng(seed, stream);
        for (long i = 0; i < n_c; ++i) {
            const RcConfig cfg = sample_percolation(box, params, rng);
            const ClusterLabeling lab(box, cfg);
            buf.setZero();
            f(lab, buf);
            for (int d = 0; d < dim; ++d) out.per_dim[d].push_back(buf[d]);
        }
    } else {
        Chain chain(box, params, seed, stream);
        chain.run_sweeps(opt.n_burnin);
        for (long i = 0; i < n_c; ++i) {
            chain.run_sweeps(std::max<long>(1, opt.thin));
            const ClusterLabeling lab(box, chain.config());
            buf.setZero();
            f(lab, buf);
            for (int d = 0; d < dim; ++d) out.per_dim[d].push_back(buf[d]);
        }
    }
}

}  // namespace

std::vector<EstimateResult> estimate_vector(const BoxSpec& box, const RcParams& params,
                                            const Measurement& f, int dim,
                                            const EstimateOptions& opt, std::uint64_t seed) {
    if (opt.n_samples <= 0) throw std::invalid_argument("estimate_vector: n_samples must be > 0");
    if (opt.n_chains <= 0) throw std::invalid_argument("estimate_vector: n_chains must be > 0");
    box.validate();
    params.validate(box);

    const int n_chains = opt.n_chains;
    std::vector<long> per_chain(n_chains, opt.n_samples / n_chains);
    for (long r = 0; r < opt.n_samples % n_chains; ++r) ++per_chain[r];

    std::vector<ChainSeries> series(n_chains);
    const int threads = std::max(1, std::min(opt.max_threads, n_chains));
    if (threads == 1) {
        for (int c = 0; c < n_chains; ++c)
            run_chain_samples(box, params, f, dim, opt, seed, c, per_chain[c], series[c]);
    } else {
        std::atomic<int> next{0};
        auto worker = [&]() {
            for (int c = next.fetch_add(1); c < n_chains; c = next.fetch_add(1))
                run_chain_samples(box, params, f, dim, opt, seed, c, per_chain[c], series[c]);
        };
        std::vector<std::future<void>> futures;
        for (int t = 0; t < threads; ++t)
            futures.push_back(std::async(std::launch::async, worker));
        for (auto& fu : futures) fu.get();
    }

    const bool direct = params.q == 1.0 && !opt.force_mcmc;
    std::vector<EstimateResult> results(dim);
    for (int d = 0; d < dim; ++d) {
        double total = 0.0, var_sum = 0.0, tau_sum = 0.0;
        long n_tot = 0;
        for (int c = 0; c < n_chains; ++c) {
            const auto bm = batch_means(series[c].per_dim[d], opt.n_batches);
            const long n_c = static_cast<long>(series[c].per_dim[d].size());
            total += bm.mean * static_cast<double>(n_c);
            n_tot += n_c;
            var_sum += bm.std_error * bm.std_error * static_cast<double>(n_c) *
                       static_cast<double>(n_c);
            tau_sum += bm.autocorr_time * static_cast<double>(n_c);
        }
        results[d].estimate = total / static_cast<double>(n_tot);
        results[d].std_error = std::sqrt(var_sum) / static_cast<double>(n_tot);
        results[d].autocorr_time = tau_sum / static_cast<double>(n_tot);
        results[d].n_samples = n_tot;
        results[d].n_burnin = direct ? 0 : opt.n_burnin;
        results[d].seed = seed;
    }
    return results;
}

EstimateResult estimate_event(const BoxSpec& box, const RcParams& params,
                              const std::function<bool(const ClusterLabeling&)>& event,
                              const EstimateOptions& opt, std::uint64_t seed) {
    Measurement f = [&event](const ClusterLabeling& lab, Eigen::Ref<Eigen::VectorXd> out) {
        out[0] = event(lab) ? 1.0 : 0.0;
    };
    return estimate_vector(box, params, f, 1, opt, seed)[0];
}

bool mixing_suspect(const EstimateResult& r) {
    return r.n_samples > 0 && r.autocorr_time > static_cast<double>(r.n_samples) / 50.0;
}

bool interval_reaches_sides(const ClusterLabeling& labeling, int line, double t_lo, double t_hi) {
    const BoxSpec& box = labeling.box();
    const auto& seg = labeling.segments();
    std::vector<int> side_roots;
    for (int l : {box.line_lo, box.line_hi})
        for (int local = 0; local < seg.n_line_segments(l); ++local)
            side_roots.push_back(labeling.find(seg.segment_id(l, local)));
    std::sort(side_roots.begin(), side_roots.end());
    side_roots.erase(std::unique(side_roots.begin(), side_roots.end()), side_roots.end());

    std::vector<int> source;
    seg.segments_overlapping(line, std::max(t_lo, box.time_lo), std::min(t_hi, box.time_hi),
                             source);
    for (int s : source)
        if (std::binary_search(side_roots.begin(), side_roots.end(), labeling.find(s)))
            return true;
    return false;
}

DecayFit estimate_decay_rate(const std::vector<std::pair<double, EstimateResult>>& points) {
    DecayFit fit;
    std::vector<double> x, y, sigma;
    for (const auto& [m, est] : points) {
        if (est.estimate <= 0.0) {
            fit.dropped.push_back(m);
            continue;
        }
        x.push_back(m);
        y.push_back(std::log(est.estimate));
        sigma.push_back(est.std_error / est.estimate);
    }
    if (x.size() < 3)
        throw std::invalid_argument("estimate_decay_rate: need >= 3 points with positive estimates");
    const LinearFit lf = weighted_linear_fit(x, y, sigma);
    fit.gamma_hat = -lf.slope;
    fit.c_hat = std::exp(lf.intercept);
    fit.gamma_se = lf.slope_se;
    fit.intercept_se = lf.intercept_se;
    fit.r2 = lf.r2;
    fit.chi2_reduced = lf.chi2_reduced;
    fit.n_used = lf.n;
    return fit;
}

DominationReport check_domination(const BoxSpec& box, const RcParams& params,
                                  const EstimateOptions& opt, std::uint64_t seed) {
    const int mid_line = (box.line_lo + box.line_hi) / 2;
    const double mid_t = 0.5 * (box.time_lo + box.time_hi);
    Measurement f = [mid_line, mid_t](const ClusterLabeling& lab,
                                      Eigen::Ref<Eigen::VectorXd> out) {
        out[0] = static_cast<double>(lab.config().n_bridges());
        out[1] = -static_cast<double>(lab.config().n_deaths());
        out[2] = interval_reaches_sides(lab, mid_line, mid_t - 0.5, mid_t + 0.5) ? 1.0 : 0.0;
    };

    EstimateOptions lhs_opt = opt;
    lhs_opt.force_mcmc = true;
    const auto lhs = estimate_vector(box, params, f, 3, lhs_opt, seed);

    RcParams perc = params;
    perc.q = 1.0;
    EstimateOptions rhs_opt = opt;
    rhs_opt.stream_base = opt.stream_base + static_cast<std::uint64_t>(opt.n_chains);
    const auto rhs = estimate_vector(box, perc, f, 3, rhs_opt, seed);

    DominationReport report;
    const char* names[3] = {"bridge_count", "minus_death_count", "side_reach"};
    for (int d = 0; d < 3; ++d) {
        DominationReport::Row row;
        row.statistic = names[d];
        row.lhs = lhs[d];
        row.rhs = rhs[d];
        const double se = std::sqrt(lhs[d].std_error * lhs[d].std_error +
                                    rhs[d].std_error * rhs[d].std_error);
        row.z = se > 0.0 ? (lhs[d].estimate - rhs[d].estimate) / se : 0.0;
        row.ordered = lhs[d].estimate <= rhs[d].estimate + 3.0 * se;
        report.all_ordered = report.all_ordered && row.ordered;
        report.rows.push_back(row);
    }
    return report;
}

}  // namespace qising::rcsampler
