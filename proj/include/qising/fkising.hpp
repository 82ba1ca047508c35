#pragma once

#include <Eigen/Dense>

#include "qising/rcsampler.hpp"

namespace qising::fkising {

using continuum::BoxSpec;
using continuum::ClusterLabeling;
using rcsampler::EstimateOptions;
using rcsampler::RcParams;

// Spin boundary condition on the vertical sides.
struct EtaSpec {
    enum class Kind { none, all_plus, all_minus, split_sides };
    Kind kind = Kind::none;
    int left = +1;   // used by split_sides
    int right = -1;  // used by split_sides

    int side_value(bool left_side) const;
};

// Cluster-labelled spins: every cluster carries one uniform +-1 value,
// clusters touching an eta-constrained side carry the imposed value.
struct SpinAssignment {
    std::vector<signed char> cluster_spin;  // indexed by union-find root
    Eigen::VectorXi sigma_plus;             // slit vector, sites 0..L (empty without slit)
    Eigen::VectorXi sigma_minus;

    int spin_of_segment(const ClusterLabeling& lab, int segment) const {
        return cluster_spin[static_cast<std::size_t>(lab.find(segment))];
    }
};
// Throws std::invalid_argument for inadmissible eta (a cluster touching both
// spin values).
SpinAssignment assign_spins(const ClusterLabeling& labeling, const EtaSpec& eta, Rng& rng);

// Cluster structure of the slit vertices of one configuration.
struct SlitClusters {
    int k_slit = 0;    // distinct clusters among {x+, x-}
    int k_joined = 0;  // after additionally merging x+ with x- for every x
    std::vector<int> plus_root;   // per site 0..L
    std::vector<int> minus_root;
};
SlitClusters slit_clusters(const ClusterLabeling& labeling);

// P(sigma_L^+ = sigma_L^- | omega) = 2^{k_joined - k_slit}: the exact
// conditional agreement probability given the clusters (the Rao-Blackwell
// collapse of the spin draw).
double agreement_probability(const SlitClusters& sc);

// Lexicographic index of a +-1 pattern: -1 < +1, site 0 most significant.
int pattern_index(const Eigen::VectorXi& eps);

struct SlitStats {
    EstimateResult a_m;           // phi(sigma+ = sigma-)
    Eigen::MatrixXd joint_counts; // naive spin-sampled (eps+, eps-) histogram (optional)
    EstimateResult a_m_naive;     // agreement frequency from the sampled spins (optional)
};
// Rao-Blackwellised estimate of a_m on a slit box at q = 2.  When
// with_joint_counts is set, spins are additionally sampled per configuration
// to fill the histogram and the naive estimator (used for variance
// comparisons).
SlitStats estimate_am(const BoxSpec& box, const RcParams& params, const EstimateOptions& opt,
                      std::uint64_t seed, bool with_joint_counts = false);

struct ReducedMatrixEstimate {
    Eigen::MatrixXd m_hat;            // joint-pattern probabilities / a_m (the paper's form)
    Eigen::MatrixXd m_hat_se;
    Eigen::MatrixXd normalized;       // m_hat / trace(m_hat), for ED comparison
    Eigen::MatrixXd normalized_se;
    EstimateResult a_m;
    long n_samples = 0;
};
// Entrywise estimate of phi(sigma+ = eps+, sigma- = eps-) / a_m for L <= 3,
// via exact per-configuration conditional probabilities.  Standard errors by
// batched ratios.
ReducedMatrixEstimate estimate_reduced_matrix(const BoxSpec& box, const RcParams& params,
                                              const EstimateOptions& opt, std::uint64_t seed);

// phi((x,0) <-> (y,0)) at q = 2 on a slitless box: the FK representation of
// the ground-state sigma3 correlation.
EstimateResult estimate_correlation(int x, int y, const BoxSpec& box, const RcParams& params,
                                    const EstimateOptions& opt, std::uint64_t seed);

// All pairs at time 0 from one chain; returns (estimate, std_error) matrices
// indexed by line offset.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> estimate_correlation_matrix(
    const BoxSpec& box, const RcParams& params, const EstimateOptions& opt, std::uint64_t seed);

// t = t1 + 2 t2 + (t1 + t2) / (1 - t1 - 2 t2)
double compose_t(double t1, double t2);

enum class SeparatorKind { equator, parallelogram };

struct MixingDiagnostics {
    EstimateResult t1;     // phi(Delta <-> D)
    EstimateResult t2sq;   // phi(D <-> Gamma)
    double t2 = 0.0;
    double t2_se = 0.0;
    double t = 0.0;
    bool composite_defined = false;  // 1 - t1 - 2 t2 > 0
    bool hypothesis_ok = false;      // composite defined and t < 1/2
};
// Mixing estimates on a symmetric slit box [-m, m+L].  The equator separator
// uses the reduced slit sets Delta = {x+ : K <= x <= L-K}, Gamma = {x-}; the
// parallelogram separator uses Delta = all slit vertices and Gamma = the
// vertical sides, with k = floor(3m/7).
MixingDiagnostics mixing_diagnostics(const BoxSpec& box, const RcParams& params, int K,
                                     SeparatorKind kind, const EstimateOptions& opt,
                                     std::uint64_t seed);

}  // namespace qising::fkising
