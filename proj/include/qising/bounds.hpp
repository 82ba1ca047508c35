#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

namespace qising::bounds {

// A sequence of positive reals indexed by lattice site (or by bond, using the
// left endpoint), starting at `first`.
struct SiteSeq {
    int first = 0;
    std::vector<double> values;

    bool has(int i) const { return i >= first && i < first + static_cast<int>(values.size()); }
    double at(int i) const {
        if (!has(i)) throw std::out_of_range("SiteSeq: missing entry at index " + std::to_string(i));
        return values[static_cast<std::size_t>(i - first)];
    }
    int last() const { return first + static_cast<int>(values.size()) - 1; }
};

// A = (delta / (2 (2 lambda + delta)))^2: the square of the probability-type
// factor picked up when the first event met moving away from a slit vertex is
// required to be a death on each of the two half-lines.
double constant_a(double lambda, double delta);

// prod_{i=1..k} delta_{x+i} / (2 (delta_{x+i} + lambda_{x+i,x+i-1} + lambda_{x+i,x+i+1})).
// lambda is indexed by the left endpoint of its bond.  Reduces to
// constant_a(lambda, delta)^{k/2} in the homogeneous case.
double disorder_product(int x, int k, const SiteSeq& lambda, const SiteSeq& delta);

struct DisorderCheck {
    bool ok = true;
    double worst_ratio = 0.0;
    int worst_site = 0;
    int n_checked = 0;
};
// Checks lambda_{x,y} / delta_x <= lambda/delta for y = x-1, x+1 over the
// window where both sequences are defined.  Vacuously true on an empty window.
DisorderCheck check_disorder_condition(const SiteSeq& lambda_seq, const SiteSeq& delta_seq,
                                       double lambda, double delta);

// R_K = C1 exp(-gamma K / 2)
double r_k(double c1, double gamma, int k);

// (A^{2K} (1 - R_K), A^{-2K} (1 + R_K)); requires R_K <= 1/2.
std::pair<double, double> envelope(double a, int k, double r);

// Smallest integer K >= 2 with C exp(-gamma K) <= 1.
int choose_k(double c, double gamma);

struct EntropyBound {
    int K = 0;
    double xi = 0.0;         // gamma / (2 ln 2)
    double c = 0.0;          // e^{gamma (K+1)} / (1 - e^{-gamma})
    double nu = 0.0;         // 2^{2(K+2)}
    double c1 = 0.0;         // tail entropy sum over j > nu
    double c1_remainder = 0.0;  // proven bound on the truncation error (< 1e-9)
    double bound = 0.0;      // 2(K+2) + c1
};
// Requires gamma > 2 ln 2 (strict); throws std::domain_error otherwise.
EntropyBound entropy_bound(double c_prefactor, double gamma);

// Tail sum  sum_{j > nu} -(c/j^xi) log2(c/j^xi), xi > 1, evaluated by explicit
// summation plus a closed-form integral bracket for the remainder.  Templated
// on the working precision; the long double instantiation backs the
// doubled-precision self-check.
template <typename Real>
struct TailSum {
    Real value;
    Real remainder;  // half-width of the proven bracket
};
template <typename Real>
TailSum<Real> entropy_tail_sum(Real c, Real xi, Real nu, Real target_remainder);

extern template TailSum<double> entropy_tail_sum<double>(double, double, double, double);
extern template TailSum<long double> entropy_tail_sum<long double>(long double, long double,
                                                                   long double, long double);

// The proofs scale the decay rate of the connectivity theorem by fixed
// fractions before it enters the later estimates; exposed as labelled values
// rather than collapsed into one number.
struct GammaFractions {
    double third;        // gamma/3: the operator-norm estimate
    double two_sevenths; // 2 gamma/7: the boundary-mixing estimate
    double half;         // gamma/2: the rate inside R_K
};
GammaFractions gamma_fractions(double gamma);

}  // namespace qising::bounds
