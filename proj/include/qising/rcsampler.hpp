#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qising/continuum.hpp"
#include "qising/rng.hpp"
#include "qising/stats.hpp"

namespace qising::rcsampler {

using continuum::BoxSpec;
using continuum::ClusterLabeling;
using continuum::RcConfig;

// Intensities for the continuum random-cluster measure.  Optional per-line
// death rates / per-pair bridge rates cover the disordered case; the scalar
// values then act as reference intensities for theta.
struct RcParams {
    double lambda = 1.0;
    double delta = 1.0;
    double q = 1.0;
    std::optional<std::vector<double>> delta_per_line;
    std::optional<std::vector<double>> lambda_per_pair;

    double theta() const { return lambda / delta; }
    double delta_at(int line_idx) const {
        return delta_per_line ? (*delta_per_line)[line_idx] : delta;
    }
    double lambda_at(int pair_idx) const {
        return lambda_per_pair ? (*lambda_per_pair)[pair_idx] : lambda;
    }
    void validate(const BoxSpec& box) const;
};

// Independent Poisson processes: deaths at rate delta per unit length per
// line, bridges at rate lambda per adjacent pair.  Deterministic given rng
// state (the q = 1 continuum percolation measure).
RcConfig sample_percolation(const BoxSpec& box, const RcParams& params, Rng& rng);

// Single-event birth/death Metropolis-Hastings chain targeting
// q^{k(w)} dP(w).  One sweep performs (mean event count + 1) moves, each
// drawn uniformly from {insert death, delete death, insert bridge, delete
// bridge}; the per-sweep move count is a constant of the box so that states
// observed at sweep boundaries keep the stationary law (a state-dependent
// count would weight each state by the reciprocal of its sweep length).
//
// Delta-k is obtained from a full cluster recount below kRecountThreshold
// events and from a cluster-local search on the segment graph above it (the
// two engines are interchangeable and are property-tested against each
// other).  Wired side boundaries always use the recount path.
class Chain {
public:
    static constexpr std::size_t kRecountThreshold = 512;

    struct Move {
        enum class Kind { insert_death, delete_death, insert_bridge, delete_bridge };
        Kind kind;
        int idx;      // line index (deaths) or pair index (bridges), 0-based
        double time;
    };

    Chain(BoxSpec box, RcParams params, std::uint64_t seed, std::uint64_t stream = 0);
    Chain(BoxSpec box, RcParams params, RcConfig initial, std::uint64_t seed,
          std::uint64_t stream = 0);

    void sweep();
    void run_sweeps(long n);

    const BoxSpec& box() const { return box_; }
    const RcConfig& config() const { return cfg_; }
    int cluster_count() const { return k_; }
    long long n_proposed() const { return n_proposed_; }
    long long n_accepted() const { return n_accepted_; }

    // Metropolis ratio for a move from the current state (before min{1, .}).
    double acceptance_ratio(const Move& m);

    int delta_k(const Move& m);          // dispatching engine
    int delta_k_recount(const Move& m);  // reference: full relabel of the modified config
    int delta_k_local(const Move& m);    // cluster-local search; free sides only

private:
    struct Override {
        int cut_line = -1;
        double cut_time = 0.0;
        int removed_cut_line = -1;
        double removed_cut_time = 0.0;
        int removed_bridge_pair = -1;
        double removed_bridge_time = 0.0;
    };
    struct Seg {
        int line;
        double lo, hi;
        bool wraps;
    };

    void apply_move(const Move& m);
    void revert_move(const Move& m);
    double draw_insert_time(const std::vector<double>& occupied);
    Move propose(int kind);

    std::optional<double> vcut_below(int i, double t, const Override& ov) const;
    std::optional<double> vcut_above(int i, double t, const Override& ov) const;
    std::optional<double> vcut_min(int i, const Override& ov) const;
    std::optional<double> vcut_max(int i, const Override& ov) const;
    Seg seg_containing(int i, double t, const Override& ov) const;
    Seg seg_above_vcut(int i, double ct, const Override& ov) const;
    Seg seg_below_vcut(int i, double ct, const Override& ov) const;
    bool segs_connected(const Seg& from, const Seg& to, const Override& ov);
    void expand_neighbors(const Seg& s, const Override& ov);

    BoxSpec box_;
    RcParams params_;
    RcConfig cfg_;
    Rng rng_;
    int k_ = 0;
    std::size_t n_deaths_ = 0;
    std::size_t n_bridges_ = 0;
    double total_line_len_ = 0.0;
    double total_pair_len_ = 0.0;
    long sweep_moves_ = 1;
    long long n_proposed_ = 0;
    long long n_accepted_ = 0;

    std::vector<Seg> visited_;
    std::size_t frontier_ = 0;
};

// Spec-level wrapper: one sweep applied to a configuration.
RcConfig mcmc_sweep(const RcConfig& config, const BoxSpec& box, const RcParams& params,
                    std::uint64_t seed);

struct EstimateOptions {
    long n_samples = 10000;
    long n_burnin = 100;  // sweeps from the empty configuration (ignored for q = 1 direct sampling)
    long thin = 1;        // sweeps between measurements
    int n_chains = 1;
    int n_batches = 32;
    int max_threads = 1;
    bool force_mcmc = false;           // run the chain even at q = 1
    std::uint64_t stream_base = 0;     // chains draw from streams stream_base + chain index
};

// Vector-valued measurement evaluated on the cluster labeling of each sample.
using Measurement = std::function<void(const ClusterLabeling&, Eigen::Ref<Eigen::VectorXd>)>;

// q = 1: direct sampling; q > 1: MCMC with burn-in and thinning.  Chains use
// streams derived from (seed, chain index); results do not depend on thread
// scheduling.  Standard errors by batch means.
std::vector<EstimateResult> estimate_vector(const BoxSpec& box, const RcParams& params,
                                            const Measurement& f, int dim,
                                            const EstimateOptions& opt, std::uint64_t seed);

EstimateResult estimate_event(const BoxSpec& box, const RcParams& params,
                              const std::function<bool(const ClusterLabeling&)>& event,
                              const EstimateOptions& opt, std::uint64_t seed);

// Flags chains whose integrated autocorrelation time is suspiciously close to
// the run length (tau > n/50).
bool mixing_suspect(const EstimateResult& r);

// True when the cluster of the time interval [t_lo, t_hi] on `line` touches a
// vertical side of the box.
bool interval_reaches_sides(const ClusterLabeling& labeling, int line, double t_lo, double t_hi);

struct DecayFit {
    double gamma_hat = 0.0;  // -slope of log(p) vs m
    double c_hat = 0.0;      // exp(intercept)
    double gamma_se = 0.0;
    double intercept_se = 0.0;
    double r2 = 0.0;
    double chi2_reduced = 0.0;
    int n_used = 0;
    std::vector<double> dropped;  // abscissae with non-positive estimates
};
// Weighted least squares of log(estimate) against m, weights from the
// standard errors by the delta method.  Non-positive estimates are dropped
// and reported; at least three positive points are required.
DecayFit estimate_decay_rate(const std::vector<std::pair<double, EstimateResult>>& points);

struct DominationReport {
    struct Row {
        std::string statistic;
        EstimateResult lhs;  // the q >= 1 random-cluster chain
        EstimateResult rhs;  // q = 1 percolation
        double z = 0.0;      // (lhs - rhs) / combined SE
        bool ordered = false;
    };
    std::vector<Row> rows;
    bool all_ordered = true;
};
// Compares means of increasing statistics (bridge count, -death count,
// side-reaching indicator) between the q-weighted chain and direct q = 1
// percolation on the same box.  Stochastic domination predicts lhs <= rhs
// within noise for q >= 1.
DominationReport check_domination(const BoxSpec& box, const RcParams& params,
                                  const EstimateOptions& opt, std::uint64_t seed);

}  // namespace qising::rcsampler
