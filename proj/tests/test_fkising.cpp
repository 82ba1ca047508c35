#include <cmath>

#include "doctest.h"
#include "qising/bounds.hpp"
#include "qising/errors.hpp"
#include "qising/fkising.hpp"

using namespace qising::fkising;
using namespace qising::continuum;
using qising::Rng;
using qising::rcsampler::Chain;
using qising::rcsampler::EstimateOptions;
using qising::rcsampler::RcParams;

TEST_SUITE("fkising") {

TEST_CASE("pattern_index: -1 < +1 lexicographic, site 0 most significant") {
    Eigen::VectorXi eps(2);
    eps << -1, -1;
    CHECK(pattern_index(eps) == 0);
    eps << -1, +1;
    CHECK(pattern_index(eps) == 1);
    eps << +1, -1;
    CHECK(pattern_index(eps) == 2);
    eps << +1, +1;
    CHECK(pattern_index(eps) == 3);
}

TEST_CASE("compose_t closed form") {
    CHECK(compose_t(0.0, 0.0) == doctest::Approx(0.0));
    CHECK(compose_t(0.1, 0.1) == doctest::Approx(0.3 + 0.2 / 0.7).epsilon(1e-12));
}

TEST_CASE("assign_spins: free clusters are fair coins") {
    const BoxSpec box{0, 0, -1.0, 1.0, false, SideBc::free, {}};
    const RcConfig cfg = RcConfig::empty(box);
    const ClusterLabeling lab(box, cfg);
    Rng rng(1);
    double mean = 0.0;
    const int n = 4000;
    for (int i = 0; i < n; ++i)
        mean += assign_spins(lab, EtaSpec{}, rng).spin_of_segment(lab, 0);
    mean /= n;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("assign_spins honours eta and rejects inadmissible eta") {
    const BoxSpec box{-1, 1, -1.0, 1.0, false, SideBc::free, {}};
    const RcConfig cfg = RcConfig::empty(box);
    const ClusterLabeling lab(box, cfg);
    Rng rng(2);

    EtaSpec plus{EtaSpec::Kind::all_plus, +1, +1};
    for (int i = 0; i < 20; ++i) {
        const auto sa = assign_spins(lab, plus, rng);
        CHECK(sa.spin_of_segment(lab, lab.segments().segment_id(-1, 0)) == +1);
        CHECK(sa.spin_of_segment(lab, lab.segments().segment_id(+1, 0)) == +1);
    }

    // bridges joining the two sides make split eta inadmissible
    RcConfig joined = RcConfig::empty(box);
    joined.bridges[0] = {0.2};
    joined.bridges[1] = {0.4};
    const ClusterLabeling lab2(box, joined);
    EtaSpec split{EtaSpec::Kind::split_sides, +1, -1};
    CHECK_THROWS_AS(assign_spins(lab2, split, rng), std::invalid_argument);
    CHECK_NOTHROW(assign_spins(lab2, plus, rng));
}

TEST_CASE("slit cluster collapse: disconnected slit gives 2^-(L+1)") {
    // isolate every slit vertex with deaths above and below
    const int L = 1;
    const BoxSpec box{-1, 1 + L, -2.0, 2.0, false, SideBc::free, L};
    RcConfig cfg = RcConfig::empty(box);
    cfg.deaths[box.line_index(0)] = {-0.5, 0.5};
    cfg.deaths[box.line_index(1)] = {-0.6, 0.6};
    const ClusterLabeling lab(box, cfg);
    const auto sc = slit_clusters(lab);
    CHECK(sc.k_slit == 2 * (L + 1));
    CHECK(sc.k_joined == L + 1);
    CHECK(agreement_probability(sc) == doctest::Approx(std::exp2(-(L + 1))));

    // joining each x+ to its x- through bridges gives probability 1
    RcConfig wrap = RcConfig::empty(box);
    const ClusterLabeling lab2(box, wrap);  // no deaths: halves split only by the slit
    const auto sc2 = slit_clusters(lab2);
    // upper halves of lines 0..L are joined to the lower halves around the
    // sides only if bridges exist; without any event they stay distinct
    CHECK(sc2.k_slit >= L + 1);

    RcConfig bridged = RcConfig::empty(box);
    bridged.bridges[box.line_index(-1)] = {0.3, -0.3};  // join line -1 to line 0 above and below
    std::sort(bridged.bridges[box.line_index(-1)].begin(),
              bridged.bridges[box.line_index(-1)].end());
    const ClusterLabeling lab3(box, bridged);
    const auto sc3 = slit_clusters(lab3);
    // x=0 plus and minus now connect through line -1
    CHECK(lab3.find(lab3.segments().slit_plus(0)) == lab3.find(lab3.segments().slit_minus(0)));
    CHECK(agreement_probability(sc3) > std::exp2(-(L + 1)));
}

TEST_CASE("estimate_am: lambda -> 0 is the exact zero-variance case") {
    const int L = 1;
    const BoxSpec box{-2, 2 + L, -20.0, 20.0, true, SideBc::free, L};
    const RcParams params{1e-14, 1.0, 2.0, {}, {}};
    EstimateOptions opt;
    opt.n_samples = 400;
    opt.n_burnin = 30;
    const auto stats = estimate_am(box, params, opt, 7);
    CHECK(stats.a_m.estimate == doctest::Approx(std::exp2(-(L + 1))).epsilon(1e-12));
    CHECK(stats.a_m.std_error == doctest::Approx(0.0));
}

TEST_CASE("estimate_am: Rao-Blackwell matches naive sampling with smaller variance") {
    const BoxSpec box{-2, 2, -3.0, 3.0, true, SideBc::free, 0};
    const RcParams params{1.0, 1.0, 2.0, {}, {}};
    EstimateOptions opt;
    opt.n_samples = 20000;
    opt.n_burnin = 100;
    opt.thin = 1;
    const auto stats = estimate_am(box, params, opt, 13, true);

    CHECK(stats.a_m.estimate > 0.0);
    CHECK(stats.a_m.estimate <= 1.0);
    const double combined = std::sqrt(stats.a_m.std_error * stats.a_m.std_error +
                                      stats.a_m_naive.std_error * stats.a_m_naive.std_error);
    CHECK(std::abs(stats.a_m.estimate - stats.a_m_naive.estimate) < 3.0 * combined);
    CHECK(stats.a_m.std_error <= stats.a_m_naive.std_error * 1.1);
    CHECK(stats.joint_counts.sum() == doctest::Approx(stats.a_m_naive.n_samples));
}

TEST_CASE("estimate_reduced_matrix: exact mass, nonnegativity, symmetry, L cap") {
    const BoxSpec box{-2, 2, -4.0, 4.0, true, SideBc::free, 0};
    const RcParams params{0.5, 1.0, 2.0, {}, {}};
    EstimateOptions opt;
    opt.n_samples = 20000;
    opt.n_burnin = 100;
    const auto est = estimate_reduced_matrix(box, params, opt, 17);

    CHECK(est.m_hat.minCoeff() >= 0.0);
    // probabilities over all joint patterns sum to one per configuration,
    // exactly, so the total mass identity is exact as well
    CHECK(est.m_hat.sum() * est.a_m.estimate == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(est.normalized.trace() == doctest::Approx(1.0).epsilon(1e-12));

    // reflection symmetry within 3 SE
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const double se = std::sqrt(std::pow(est.normalized_se(i, j), 2) +
                                        std::pow(est.normalized_se(j, i), 2));
            CHECK(std::abs(est.normalized(i, j) - est.normalized(j, i)) <
                  3.0 * std::max(se, 1e-4));
        }

    BoxSpec big = box;
    big.slit_len = 4;
    big.line_hi = 6;
    CHECK_THROWS_AS(estimate_reduced_matrix(big, params, opt, 1), qising::FeasibilityError);
}

TEST_CASE("estimate_correlation: coincident sites exact, tiny lambda disconnects") {
    const BoxSpec box{-2, 2, -3.0, 3.0, true, SideBc::free, {}};
    EstimateOptions opt;
    opt.n_samples = 500;
    opt.n_burnin = 20;
    const RcParams params{1e-14, 1.0, 2.0, {}, {}};
    const auto same = estimate_correlation(1, 1, box, params, opt, 3);
    CHECK(same.estimate == doctest::Approx(1.0));
    CHECK(same.std_error == doctest::Approx(0.0));
    const auto far = estimate_correlation(-1, 1, box, params, opt, 4);
    CHECK(far.estimate == doctest::Approx(0.0));

    RcParams bad = params;
    bad.q = 1.0;
    CHECK_THROWS_AS(estimate_correlation(0, 1, box, bad, opt, 5), std::invalid_argument);
}

TEST_CASE("mixing_diagnostics smoke: estimates in range, flags coherent") {
    const int m = 7, L = 7;
    const BoxSpec box{-m, m + L, -6.0, 6.0, false, SideBc::free, L};
    const RcParams params{0.3, 1.0, 2.0, {}, {}};
    EstimateOptions opt;
    opt.n_samples = 3000;
    opt.n_burnin = 50;
    const auto diag = mixing_diagnostics(box, params, 2, SeparatorKind::equator, opt, 23);
    CHECK(diag.t1.estimate >= 0.0);
    CHECK(diag.t1.estimate <= 1.0);
    CHECK(diag.t2 >= 0.0);
    if (diag.composite_defined)
        CHECK(diag.t == doctest::Approx(compose_t(diag.t1.estimate, diag.t2)));

    const auto par = mixing_diagnostics(box, params, 0, SeparatorKind::parallelogram, opt, 24);
    CHECK(par.t1.estimate >= 0.0);

    CHECK_THROWS_AS(mixing_diagnostics(box, params, 4, SeparatorKind::equator, opt, 25),
                    std::invalid_argument);  // K >= L/2
}

TEST_CASE("equator t1 decreases as the reduced slit shrinks (K grows)") {
    const int m = 7, L = 9;
    const BoxSpec box{-m, m + L, -4.0, 4.0, false, SideBc::free, L};
    const RcParams params{0.3, 1.0, 2.0, {}, {}};
    EstimateOptions opt;
    opt.n_samples = 8000;
    opt.n_burnin = 100;

    std::vector<MixingDiagnostics> diags;
    for (int K : {1, 2, 3, 4}) {
        EstimateOptions o = opt;
        o.stream_base = 10ull * K;
        diags.push_back(mixing_diagnostics(box, params, K, SeparatorKind::equator, o, 41));
    }
    for (std::size_t i = 1; i < diags.size(); ++i) {
        const double slack = 2.0 * std::hypot(diags[i - 1].t1.std_error,
                                              diags[i].t1.std_error);
        CHECK(diags[i].t1.estimate <= diags[i - 1].t1.estimate + slack);
    }
    // the decay must actually bite across the K range
    CHECK(diags.back().t1.estimate <
          diags.front().t1.estimate + 1e-12);
}

TEST_CASE("slit factorisation envelope probe (L=3, K=1, theta=0.3)") {
    // ratio phi(s+=e+, s-=e-) / (phi(s+=e+) phi(s-=e-)) within the envelope
    // [A^2 (1-R), A^-2 (1+R)] at the maximal admissible R = 1/2
    const int L = 3, K = 1;
    const int m = 2;
    const BoxSpec box{-m, m + L, -3.0, 3.0, false, SideBc::free, L};
    const RcParams params{0.3, 1.0, 2.0, {}, {}};
    const double a_const = qising::bounds::constant_a(0.3, 1.0);
    const auto [env_lo, env_hi] = qising::bounds::envelope(a_const, K, 0.5);

    const int d = 1 << (L + 1);
    Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd plus = Eigen::VectorXd::Zero(d), minus = Eigen::VectorXd::Zero(d);

    Chain chain(box, params, 31);
    chain.run_sweeps(100);
    const int n = 6000;
    for (int it = 0; it < n; ++it) {
        chain.run_sweeps(2);
        const ClusterLabeling lab(box, chain.config());
        const auto sc = slit_clusters(lab);

        auto accumulate = [&](const std::vector<int>& roots_a, const std::vector<int>& roots_b,
                              bool joint_acc) {
            std::vector<int> roots = roots_a;
            roots.insert(roots.end(), roots_b.begin(), roots_b.end());
            std::vector<int> uniq = roots;
            std::sort(uniq.begin(), uniq.end());
            uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
            const int kc = static_cast<int>(uniq.size());
            const double w = std::exp2(-kc);
            for (int s = 0; s < (1 << kc); ++s) {
                int idx_a = 0, idx_b = 0;
                for (int x = 0; x <= L; ++x) {
                    const auto cl = [&](int root) {
                        return static_cast<int>(
                            std::lower_bound(uniq.begin(), uniq.end(), root) - uniq.begin());
                    };
                    if (!roots_a.empty() && ((s >> cl(roots_a[x])) & 1)) idx_a |= 1 << (L - x);
                    if (!roots_b.empty() && ((s >> cl(roots_b[x])) & 1)) idx_b |= 1 << (L - x);
                }
                if (joint_acc)
                    joint(idx_a, idx_b) += w;
                else if (!roots_a.empty())
                    plus[idx_a] += w;
                else
                    minus[idx_b] += w;
            }
        };
        accumulate(sc.plus_root, sc.minus_root, true);
        accumulate(sc.plus_root, {}, false);
        accumulate({}, sc.minus_root, false);
    }
    joint /= n;
    plus /= n;
    minus /= n;

    int contained = 0, total = 0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            const double denom = plus[i] * minus[j];
            if (denom < 1e-4) continue;  // too noisy to constrain
            const double ratio = joint(i, j) / denom;
            // generous Monte Carlo slack on top of the already-loose envelope
            const double slack = 3.0 * ratio / std::sqrt(std::max(1.0, joint(i, j) * n));
            ++total;
            if (ratio + slack >= env_lo && ratio - slack <= env_hi) ++contained;
        }
    CHECK(total > 50);
    CHECK(contained == total);
}

}  // TEST_SUITE
