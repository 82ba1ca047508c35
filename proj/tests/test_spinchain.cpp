#include <cmath>
#include <complex>
#include <sstream>

#include "doctest.h"
#include "qising/errors.hpp"
#include "qising/rng.hpp"
#include "qising/spinchain.hpp"
#include "qising/stats.hpp"

using namespace qising::spinchain;

namespace {

void check_density_invariants(const Eigen::MatrixXcd& rho) {
    CHECK((rho - rho.adjoint()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(std::abs(rho.trace().real() - 1.0) < 1e-10);
    CHECK(std::abs(rho.trace().imag()) < 1e-10);
    const Eigen::VectorXd spec = sorted_spectrum(rho);
    CHECK(spec.minCoeff() > -1e-10);
    CHECK(std::abs(spec.sum() - 1.0) < 1e-10);
    for (long j = 1; j < spec.size(); ++j) CHECK(spec[j] <= spec[j - 1] + 1e-14);
}

}  // namespace

TEST_SUITE("spinchain") {

TEST_CASE("params validation") {
    auto p = SpinChainParams::homogeneous(1, 1, 1.0, 1.0);
    CHECK(p.n_sites() == 4);
    CHECK_NOTHROW(p.validate());

    p.couplings[0] = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.couplings[0] = -1.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);

    CHECK_THROWS_AS(SpinChainParams::homogeneous(10, 10, 1.0, 1.0).validate(),
                    qising::FeasibilityError);
    CHECK_THROWS_AS(Hamiltonian(SpinChainParams::homogeneous(10, 10, 1.0, 1.0)),
                    qising::FeasibilityError);
}

TEST_CASE("single site: H = -sigma1") {
    const auto p = SpinChainParams::homogeneous(0, 0, 1.0, 1.0);
    const Hamiltonian h(p);
    const auto dense = h.dense();
    CHECK(dense(0, 0) == doctest::Approx(0.0));
    CHECK(dense(0, 1) == doctest::Approx(-1.0));
    CHECK(dense(1, 0) == doctest::Approx(-1.0));

    const auto gs = ground_state(h, 1e-12);
    CHECK(gs.energy == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(std::abs(gs.psi[0]) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-10));
    CHECK(std::abs(gs.psi[1]) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-10));
    CHECK(gs.residual <= 1e-12);
}

TEST_CASE("two sites: ground energy -sqrt(lambda^2/4 + 4 delta^2)") {
    // analytic 2x2 symmetric-sector oracle
    const double lambda = 2.0, delta = 1.0;
    const double expect = -std::sqrt(lambda * lambda / 4.0 + 4.0 * delta * delta);
    const auto p = SpinChainParams::homogeneous(0, 1, lambda, delta);
    const auto gs = ground_state(Hamiltonian(p), 1e-12);
    CHECK(gs.energy == doctest::Approx(expect).epsilon(1e-12));
    CHECK(expect == doctest::Approx(-std::sqrt(5.0)));

    // near-product limit: lambda -> 0 gives energy -2 delta
    const auto p2 = SpinChainParams::homogeneous(0, 1, 1e-12, 1.0);
    CHECK(ground_state(Hamiltonian(p2), 1e-12).energy == doctest::Approx(-2.0).epsilon(1e-9));
}

TEST_CASE("dense matches matrix-free apply") {
    const auto p = SpinChainParams::homogeneous(1, 1, 1.3, 0.8);
    const Hamiltonian h(p);
    const auto dense = h.dense();
    CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() < 1e-14);
    qising::Rng rng(7);
    Eigen::VectorXd x(h.dim());
    for (long i = 0; i < x.size(); ++i) x[i] = rng.uniform(-1.0, 1.0);
    CHECK((h.apply(x) - dense * x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("scaling invariance: (lambda, delta) -> (eta lambda, eta delta)") {
    const auto p1 = SpinChainParams::homogeneous(1, 1, 0.6, 1.0);
    const auto p2 = SpinChainParams::homogeneous(1, 1, 0.6 * 3.7, 3.7);
    const auto g1 = ground_state(Hamiltonian(p1), 1e-12);
    const auto g2 = ground_state(Hamiltonian(p2), 1e-12);
    CHECK(g2.energy == doctest::Approx(3.7 * g1.energy).epsilon(1e-10));
    const auto r1 = reduced_density_block(g1.psi, p1);
    const auto r2 = reduced_density_block(g2.psi, p2);
    CHECK((r1 - r2).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("reduced density of product and Bell states") {
    Eigen::VectorXcd up_up = Eigen::VectorXcd::Zero(4);
    up_up[0] = 1.0;  // bit 0 means spin +1 at both sites
    auto rho = reduced_density(up_up, 2, 0, 0);
    check_density_invariants(rho);
    CHECK(std::abs(rho(0, 0).real() - 1.0) < 1e-14);
    CHECK(entanglement_entropy(rho) < 1e-8);  // rank-1
    const Eigen::VectorXd rank1 = sorted_spectrum(rho);
    CHECK(rank1[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(rank1[1]) < 1e-12);

    Eigen::VectorXcd bell = Eigen::VectorXcd::Zero(4);
    bell[0] = bell[3] = 1.0 / std::sqrt(2.0);
    rho = reduced_density(bell, 2, 0, 0);
    check_density_invariants(rho);
    CHECK(std::abs(rho(0, 0).real() - 0.5) < 1e-14);
    CHECK(std::abs(rho(0, 1)) < 1e-14);
    CHECK(entanglement_entropy(rho) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("errors: block out of range, unnormalised state") {
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(4);
    psi[0] = 1.0;
    CHECK_THROWS_AS(reduced_density(psi, 2, 0, 2), std::invalid_argument);
    CHECK_THROWS_AS(reduced_density(psi, 2, 1, 0), std::invalid_argument);
    psi[0] = 2.0;
    CHECK_THROWS_AS(reduced_density(psi, 2, 0, 0), std::invalid_argument);
}

TEST_CASE("entropy values") {
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(2, 2);
    rho(0, 0) = 0.75;
    rho(1, 1) = 0.25;
    CHECK(entanglement_entropy(rho) ==
          doctest::Approx(2.0 - 0.75 * std::log2(3.0)).epsilon(1e-12));

    rho(0, 0) = 0.5;
    rho(1, 1) = 0.5;
    CHECK(entanglement_entropy(rho) == doctest::Approx(1.0));

    Eigen::VectorXd spec = sorted_spectrum(rho);
    CHECK(spec[0] == doctest::Approx(0.5));
    CHECK(spec[1] == doctest::Approx(0.5));
}

TEST_CASE("operator norm difference") {
    Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(2, 2), b = a;
    a(0, 0) = 1.0;
    b(1, 1) = 1.0;
    CHECK(operator_norm_diff(a, a) == doctest::Approx(0.0));
    CHECK(operator_norm_diff(a, b) == doctest::Approx(1.0));
    CHECK_THROWS_AS(operator_norm_diff(a, Eigen::MatrixXcd::Zero(4, 4)),
                    std::invalid_argument);
}

TEST_CASE("norm diff bounded by 2 and by eigenvalue sum on random density pairs") {
    qising::Rng rng(99);
    for (int trial = 0; trial < 20; ++trial) {
        auto random_rho = [&](int d) {
            Eigen::MatrixXcd g(d, d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    g(i, j) = std::complex<double>(rng.uniform(-1, 1), rng.uniform(-1, 1));
            Eigen::MatrixXcd rho = g * g.adjoint();
            return Eigen::MatrixXcd(rho / rho.trace().real());
        };
        const auto r1 = random_rho(4), r2 = random_rho(4);
        const double nd = operator_norm_diff(r1, r2);
        CHECK(nd <= 2.0 + 1e-12);
        CHECK(nd <= sorted_spectrum(r1)[0] + sorted_spectrum(r2)[0] + 1e-12);
    }
}

TEST_CASE("Schmidt oracle agrees with partial trace across chains") {
    qising::Rng rng(2718);
    for (int trial = 0; trial < 8; ++trial) {
        // chains up to n = 2*3 + 2 + 1 = 9 sites
        const int m = 1 + static_cast<int>(rng.uniform_index(3));
        const int L = static_cast<int>(rng.uniform_index(3));
        SpinChainParams p = SpinChainParams::homogeneous(m, L, 1.0, 1.0);
        for (auto& c : p.couplings) c = rng.uniform(0.2, 2.0);
        for (auto& f : p.fields) f = rng.uniform(0.5, 2.0);
        const auto gs = ground_state(Hamiltonian(p), 1e-12);

        const auto rho = reduced_density_block(gs.psi, p);
        check_density_invariants(rho);
        const Eigen::VectorXd via_trace = sorted_spectrum(rho);
        Eigen::VectorXd via_schmidt =
            schmidt_spectrum(gs.psi, p.n_sites(), p.site_to_bit(0), p.site_to_bit(p.L));
        std::sort(via_schmidt.begin(), via_schmidt.end(), std::greater<double>());
        CHECK((via_trace - via_schmidt).cwiseAbs().maxCoeff() < 1e-10);

        const double s_trace = entanglement_entropy(rho);
        double s_schmidt = 0.0;
        for (long j = 0; j < via_schmidt.size(); ++j)
            if (via_schmidt[j] > 0.0) s_schmidt -= via_schmidt[j] * std::log2(via_schmidt[j]);
        CHECK(s_trace == doctest::Approx(s_schmidt).epsilon(1e-10));
        CHECK(s_trace >= 0.0);
        CHECK(s_trace <= p.L + 1.0);
    }
}

TEST_CASE("n=2 ground state: reduced spectrum matches Schmidt oracle to 1e-12") {
    const auto p = SpinChainParams::homogeneous(0, 1, 2.0, 1.0);
    const auto gs = ground_state(Hamiltonian(p), 1e-13);
    // block = site 0 alone (bit 0)
    const auto rho = reduced_density(gs.psi, 2, 0, 0);
    const Eigen::VectorXd via_trace = sorted_spectrum(rho);
    Eigen::VectorXd via_schmidt = schmidt_spectrum(gs.psi, 2, 0, 0);
    std::sort(via_schmidt.begin(), via_schmidt.end(), std::greater<double>());
    CHECK((via_trace - via_schmidt).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("matrix CSV export writes re,im pairs row-major") {
    Eigen::MatrixXcd m(1, 2);
    m(0, 0) = std::complex<double>(0.5, -0.25);
    m(0, 1) = std::complex<double>(1.0, 0.0);
    std::ostringstream ss;
    write_matrix_csv(ss, m);
    CHECK(ss.str() == "0.5,-0.25,1,0\n");
}

TEST_CASE("norm-diff sequence is dominated by its fitted exponential") {
    const double theta = 1.0;
    const auto ref = SpinChainParams::homogeneous(5, 1, theta, 1.0);
    const auto rho_ref =
        reduced_density_block(ground_state(Hamiltonian(ref), 1e-10).psi, ref);
    std::vector<double> m_vals, log_nd;
    std::vector<double> nds;
    for (int m = 1; m <= 4; ++m) {
        const auto p = SpinChainParams::homogeneous(m, 1, theta, 1.0);
        const auto rho = reduced_density_block(ground_state(Hamiltonian(p), 1e-10).psi, p);
        const double nd = operator_norm_diff(rho, rho_ref);
        nds.push_back(nd);
        m_vals.push_back(m);
        log_nd.push_back(std::log(nd));
    }
    const auto fit = qising::weighted_linear_fit(m_vals, log_nd,
                                                 std::vector<double>(m_vals.size(), 0.0));
    const double gamma_hat = -fit.slope, c_hat = std::exp(fit.intercept);
    CHECK(gamma_hat > 0.0);
    for (std::size_t i = 0; i < nds.size(); ++i)
        CHECK(nds[i] <= 1.1 * c_hat * std::exp(-gamma_hat * m_vals[i]));
}

TEST_CASE("near-degeneracy flagged for tiny gap") {
    // two almost-decoupled sites with a tiny field produce a tiny gap
    SpinChainParams p = SpinChainParams::homogeneous(0, 1, 1.0, 1.0);
    p.fields.setConstant(1e-8);
    p.couplings.setConstant(1.0);
    const auto gs = ground_state(Hamiltonian(p), 1e-10);
    CHECK(gs.near_degenerate);
}

}  // TEST_SUITE
