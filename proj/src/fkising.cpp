#include "qising/fkising.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qising/errors.hpp"

namespace qising::fkising {

using continuum::SideBc;
using rcsampler::Chain;

int EtaSpec::side_value(bool left_side) const {
    switch (kind) {
        case Kind::all_plus: return +1;
        case Kind::all_minus: return -1;
        case Kind::split_sides: return left_side ? left : right;
        case Kind::none: break;
    }
    throw std::logic_error("EtaSpec::side_value: no boundary condition");
}

SpinAssignment assign_spins(const ClusterLabeling& labeling, const EtaSpec& eta, Rng& rng) {
    const auto& box = labeling.box();
    const auto& seg = labeling.segments();
    SpinAssignment out;
    out.cluster_spin.assign(static_cast<std::size_t>(seg.n_segments()) + 1, 0);

    if (eta.kind != EtaSpec::Kind::none) {
        for (int line : {box.line_lo, box.line_hi}) {
            const int value = eta.side_value(line == box.line_lo);
            for (int local = 0; local < seg.n_line_segments(line); ++local) {
                const int r = labeling.find(seg.segment_id(line, local));
                if (out.cluster_spin[r] != 0 && out.cluster_spin[r] != value)
                    throw std::invalid_argument(
                        "assign_spins: inadmissible eta (a cluster meets both spin values)");
                out.cluster_spin[r] = static_cast<signed char>(value);
            }
        }
    }

    for (int s = 0; s < seg.n_segments(); ++s) {
        const int r = labeling.find(s);
        if (out.cluster_spin[r] == 0)
            out.cluster_spin[r] = static_cast<signed char>(rng.pm_one());
    }

    if (box.slit_len) {
        const int L = *box.slit_len;
        out.sigma_plus.resize(L + 1);
        out.sigma_minus.resize(L + 1);
        for (int x = 0; x <= L; ++x) {
            out.sigma_plus[x] = out.cluster_spin[labeling.find(seg.slit_plus(x))];
            out.sigma_minus[x] = out.cluster_spin[labeling.find(seg.slit_minus(x))];
        }
    }
    return out;
}

SlitClusters slit_clusters(const ClusterLabeling& labeling) {
    const auto& box = labeling.box();
    if (!box.slit_len) throw std::invalid_argument("slit_clusters: box has no slit");
    const int L = *box.slit_len;
    SlitClusters sc;
    sc.plus_root.resize(L + 1);
    sc.minus_root.resize(L + 1);
    for (int x = 0; x <= L; ++x) {
        sc.plus_root[x] = labeling.find(labeling.segments().slit_plus(x));
        sc.minus_root[x] = labeling.find(labeling.segments().slit_minus(x));
    }

    std::vector<int> distinct;
    distinct.reserve(2 * (L + 1));
    for (int r : sc.plus_root) distinct.push_back(r);
    for (int r : sc.minus_root) distinct.push_back(r);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    sc.k_slit = static_cast<int>(distinct.size());

    // tiny DSU over the distinct roots, merging x+ with x-
    std::vector<int> parent(distinct.size());
    for (std::size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
    auto idx_of = [&](int root) {
        return static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), root) -
                                distinct.begin());
    };
    auto find = [&](int a) {
        while (parent[a] != a) a = parent[a] = parent[parent[a]];
        return a;
    };
    for (int x = 0; x <= L; ++x) {
        const int a = find(idx_of(sc.plus_root[x]));
        const int b = find(idx_of(sc.minus_root[x]));
        if (a != b) parent[a] = b;
    }
    sc.k_joined = 0;
    for (std::size_t i = 0; i < parent.size(); ++i)
        if (find(static_cast<int>(i)) == static_cast<int>(i)) ++sc.k_joined;
    return sc;
}

double agreement_probability(const SlitClusters& sc) {
    return std::exp2(static_cast<double>(sc.k_joined - sc.k_slit));
}

int pattern_index(const Eigen::VectorXi& eps) {
    const int L = static_cast<int>(eps.size()) - 1;
    int idx = 0;
    for (int x = 0; x <= L; ++x)
        if (eps[x] > 0) idx |= 1 << (L - x);
    return idx;
}

namespace {

void require_slit_q2(const BoxSpec& box, const RcParams& params) {
    if (!box.slit_len) throw std::invalid_argument("slit estimators require a slit box");
    if (params.q != 2.0) throw std::invalid_argument("slit estimators are defined at q = 2");
}

// Runs n_chains sequentially with derived streams, invoking f(lab, chain, i)
// per retained sample.
template <typename PerSample>
void run_slit_chains(const BoxSpec& box, const RcParams& params, const EstimateOptions& opt,
                     std::uint64_t seed, PerSample&& f) {
    std::vector<long> per_chain(opt.n_chains, opt.n_samples / opt.n_chains);
    for (long r = 0; r < opt.n_samples % opt.n_chains; ++r) ++per_chain[r];
    for (int c = 0; c < opt.n_chains; ++c) {
        Chain chain(box, params, seed, opt.stream_base + static_cast<std::uint64_t>(c));
        chain.run_sweeps(opt.n_burnin);
        for (long i = 0; i < per_chain[c]; ++i) {
            chain.run_sweeps(std::max<long>(1, opt.thin));
            const ClusterLabeling lab(box, chain.config());
            f(lab, c, i);
        }
    }
}

EstimateResult pooled_batches(const std::vector<double>& series, const EstimateOptions& opt,
                              std::uint64_t seed) {
    auto bm = qising::batch_means(series, opt.n_batches);
    EstimateResult r;
    r.estimate = bm.mean;
    r.std_error = bm.std_error;
    r.autocorr_time = bm.autocorr_time;
    r.n_samples = bm.n;
    r.n_burnin = opt.n_burnin;
    r.seed = seed;
    return r;
}

}  // namespace

SlitStats estimate_am(const BoxSpec& box, const RcParams& params, const EstimateOptions& opt,
                      std::uint64_t seed, bool with_joint_counts) {
    require_slit_q2(box, params);
    const int L = *box.slit_len;
    const int d = 1 << (L + 1);

    SlitStats out;
    std::vector<double> rb_series, naive_series;
    rb_series.reserve(opt.n_samples);
    if (with_joint_counts) {
        out.joint_counts = Eigen::MatrixXd::Zero(d, d);
        naive_series.reserve(opt.n_samples);
    }
    Rng spin_rng(seed, 0xa5a5a5a5ull);

    run_slit_chains(box, params, opt, seed, [&](const ClusterLabeling& lab, int, long) {
        const SlitClusters sc = slit_clusters(lab);
        rb_series.push_back(agreement_probability(sc));
        if (with_joint_counts) {
            const SpinAssignment sa = assign_spins(lab, EtaSpec{}, spin_rng);
            out.joint_counts(pattern_index(sa.sigma_plus), pattern_index(sa.sigma_minus)) += 1.0;
            const bool agree = (sa.sigma_plus.array() == sa.sigma_minus.array()).all();
            naive_series.push_back(agree ? 1.0 : 0.0);
        }
    });

    out.a_m = pooled_batches(rb_series, opt, seed);
    if (with_joint_counts) out.a_m_naive = pooled_batches(naive_series, opt, seed);
    return out;
}

ReducedMatrixEstimate estimate_reduced_matrix(const BoxSpec& box, const RcParams& params,
                                              const EstimateOptions& opt, std::uint64_t seed) {
    require_slit_q2(box, params);
    const int L = *box.slit_len;
    if (L > 3)
        throw FeasibilityError("estimate_reduced_matrix: L > 3 has too many joint patterns");
    const int d = 1 << (L + 1);

    // per-sample accumulation into batches of the (d*d + 1)-dimensional
    // measurement: joint-pattern conditional probabilities plus the agreement
    // probability
    std::vector<Eigen::MatrixXd> batch_mat;
    std::vector<double> batch_agree;
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(d, d);
    double total_agree = 0.0;
    long n_total = 0;
    std::vector<double> agree_series;

    const long per_chain = opt.n_samples / opt.n_chains;
    const long batch_len = std::max<long>(1, per_chain / opt.n_batches);

    run_slit_chains(box, params, opt, seed, [&](const ClusterLabeling& lab, int chain, long i) {
        const SlitClusters sc = slit_clusters(lab);

        // distinct roots -> compact cluster ids
        std::vector<int> roots;
        roots.reserve(2 * (L + 1));
        for (int r : sc.plus_root) roots.push_back(r);
        for (int r : sc.minus_root) roots.push_back(r);
        std::sort(roots.begin(), roots.end());
        roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
        const int kc = static_cast<int>(roots.size());
        auto cluster_of = [&](int root) {
            return static_cast<int>(std::lower_bound(roots.begin(), roots.end(), root) -
                                    roots.begin());
        };

        const long global_batch =
            static_cast<long>(chain) * std::max<long>(1, per_chain / batch_len) +
            std::min(i / batch_len, std::max<long>(1, per_chain / batch_len) - 1);
        while (static_cast<long>(batch_mat.size()) <= global_batch) {
            batch_mat.push_back(Eigen::MatrixXd::Zero(d, d));
            batch_agree.push_back(0.0);
        }

        const double w = std::exp2(static_cast<double>(-kc));
        for (int s = 0; s < (1 << kc); ++s) {
            int idx_p = 0, idx_m = 0;
            for (int x = 0; x <= L; ++x) {
                if ((s >> cluster_of(sc.plus_root[x])) & 1) idx_p |= 1 << (L - x);
                if ((s >> cluster_of(sc.minus_root[x])) & 1) idx_m |= 1 << (L - x);
            }
            batch_mat[global_batch](idx_p, idx_m) += w;
            total(idx_p, idx_m) += w;
        }
        const double agree = agreement_probability(sc);
        batch_agree[global_batch] += agree;
        total_agree += agree;
        agree_series.push_back(agree);
        ++n_total;
    });

    ReducedMatrixEstimate out;
    out.n_samples = n_total;
    out.a_m = pooled_batches(agree_series, opt, seed);

    out.m_hat = total / total_agree;
    out.normalized = total / total.trace();

    const int nb = static_cast<int>(batch_mat.size());
    out.m_hat_se = Eigen::MatrixXd::Zero(d, d);
    out.normalized_se = Eigen::MatrixXd::Zero(d, d);
    if (nb >= 2) {
        Eigen::MatrixXd mean_ratio = Eigen::MatrixXd::Zero(d, d);
        Eigen::MatrixXd mean_norm = Eigen::MatrixXd::Zero(d, d);
        std::vector<Eigen::MatrixXd> ratio(nb), norm(nb);
        for (int b = 0; b < nb; ++b) {
            ratio[b] = batch_mat[b] / batch_agree[b];
            norm[b] = batch_mat[b] / batch_mat[b].trace();
            mean_ratio += ratio[b];
            mean_norm += norm[b];
        }
        mean_ratio /= nb;
        mean_norm /= nb;
        for (int b = 0; b < nb; ++b) {
            out.m_hat_se.array() += (ratio[b] - mean_ratio).array().square();
            out.normalized_se.array() += (norm[b] - mean_norm).array().square();
        }
        out.m_hat_se = (out.m_hat_se / (nb - 1) / nb).cwiseSqrt();
        out.normalized_se = (out.normalized_se / (nb - 1) / nb).cwiseSqrt();
    }
    return out;
}

EstimateResult estimate_correlation(int x, int y, const BoxSpec& box, const RcParams& params,
                                    const EstimateOptions& opt, std::uint64_t seed) {
    if (box.slit_len) throw std::invalid_argument("estimate_correlation: box must not have a slit");
    if (params.q != 2.0) throw std::invalid_argument("estimate_correlation: requires q = 2");
    rcsampler::Measurement f = [x, y](const ClusterLabeling& lab,
                                      Eigen::Ref<Eigen::VectorXd> out) {
        out[0] = lab.connected({x, 0.0}, {y, 0.0}) ? 1.0 : 0.0;
    };
    return rcsampler::estimate_vector(box, params, f, 1, opt, seed)[0];
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> estimate_correlation_matrix(
    const BoxSpec& box, const RcParams& params, const EstimateOptions& opt, std::uint64_t seed) {
    if (box.slit_len)
        throw std::invalid_argument("estimate_correlation_matrix: box must not have a slit");
    if (params.q != 2.0) throw std::invalid_argument("estimate_correlation_matrix: requires q = 2");
    const int w = box.n_lines();
    const int dim = w * (w - 1) / 2;

    rcsampler::Measurement f = [&box, w](const ClusterLabeling& lab,
                                         Eigen::Ref<Eigen::VectorXd> out) {
        std::vector<int> roots(w);
        for (int i = 0; i < w; ++i) roots[i] = lab.root_of_point({box.line_lo + i, 0.0});
        int idx = 0;
        for (int i = 0; i < w; ++i)
            for (int j = i + 1; j < w; ++j) out[idx++] = roots[i] == roots[j] ? 1.0 : 0.0;
    };
    const auto res = rcsampler::estimate_vector(box, params, f, dim, opt, seed);

    Eigen::MatrixXd mean = Eigen::MatrixXd::Ones(w, w);
    Eigen::MatrixXd se = Eigen::MatrixXd::Zero(w, w);
    int idx = 0;
    for (int i = 0; i < w; ++i)
        for (int j = i + 1; j < w; ++j) {
            mean(i, j) = mean(j, i) = res[idx].estimate;
            se(i, j) = se(j, i) = res[idx].std_error;
            ++idx;
        }
    return {mean, se};
}

double compose_t(double t1, double t2) {
    return t1 + 2.0 * t2 + (t1 + t2) / (1.0 - t1 - 2.0 * t2);
}

MixingDiagnostics mixing_diagnostics(const BoxSpec& box, const RcParams& params, int K,
                                     SeparatorKind kind, const EstimateOptions& opt,
                                     std::uint64_t seed) {
    if (!box.slit_len) throw std::invalid_argument("mixing_diagnostics: requires a slit box");
    if (params.q != 2.0) throw std::invalid_argument("mixing_diagnostics: requires q = 2");
    const int L = *box.slit_len;
    const int m = -box.line_lo;
    if (box.line_hi != m + L)
        throw std::invalid_argument("mixing_diagnostics: box must be the symmetric [-m, m+L]");
    if (kind == SeparatorKind::equator && !(K >= 1 && 2 * K < L))
        throw std::invalid_argument("mixing_diagnostics: equator mode needs 1 <= K < L/2");

    const auto sets = continuum::separating_sets(m, L);
    const continuum::GeometrySet d_set =
        (kind == SeparatorKind::equator ? sets.equator : sets.parallelogram).clipped_to(box);

    rcsampler::Measurement f = [&, kind, K, L](const ClusterLabeling& lab,
                                               Eigen::Ref<Eigen::VectorXd> out) {
        const auto& seg = lab.segments();
        std::vector<int> delta_roots, gamma_roots;
        if (kind == SeparatorKind::equator) {
            for (int x = K; x <= L - K; ++x) {
                delta_roots.push_back(lab.find(seg.slit_plus(x)));
                gamma_roots.push_back(lab.find(seg.slit_minus(x)));
            }
        } else {
            for (int x = 0; x <= L; ++x) {
                delta_roots.push_back(lab.find(seg.slit_plus(x)));
                delta_roots.push_back(lab.find(seg.slit_minus(x)));
            }
            for (int line : {box.line_lo, box.line_hi})
                for (int local = 0; local < seg.n_line_segments(line); ++local)
                    gamma_roots.push_back(lab.find(seg.segment_id(line, local)));
        }
        out[0] = continuum::set_touches_roots(lab, d_set, delta_roots) ? 1.0 : 0.0;
        out[1] = continuum::set_touches_roots(lab, d_set, gamma_roots) ? 1.0 : 0.0;
    };

    const auto res = rcsampler::estimate_vector(box, params, f, 2, opt, seed);
    MixingDiagnostics out;
    out.t1 = res[0];
    out.t2sq = res[1];
    out.t2 = std::sqrt(std::max(0.0, out.t2sq.estimate));
    out.t2_se = out.t2 > 0.0 ? out.t2sq.std_error / (2.0 * out.t2) : std::sqrt(out.t2sq.std_error);
    out.composite_defined = 1.0 - out.t1.estimate - 2.0 * out.t2 > 0.0;
    if (out.composite_defined) out.t = compose_t(out.t1.estimate, out.t2);
    out.hypothesis_ok = out.composite_defined && out.t < 0.5;
    return out;
}

}  // namespace qising::fkising
