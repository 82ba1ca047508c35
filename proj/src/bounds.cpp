#include "qising/bounds.hpp"

#include <cmath>
#include <string>

namespace qising::bounds {

namespace {
constexpr double kLn2 = 0.6931471805599453;

void require_positive(double v, const char* name) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string(name) + " must be positive");
}
}  // namespace

double constant_a(double lambda, double delta) {
    require_positive(lambda, "lambda");
    require_positive(delta, "delta");
    const double f = delta / (2.0 * (2.0 * lambda + delta));
    return f * f;
}

double disorder_product(int x, int k, const SiteSeq& lambda, const SiteSeq& delta) {
    if (k < 0) throw std::invalid_argument("disorder_product: k must be >= 0");
    double prod = 1.0;
    for (int i = 1; i <= k; ++i) {
        const int site = x + i;
        const double d = delta.at(site);
        const double ll = lambda.at(site - 1);  // bond (site-1, site)
        const double lr = lambda.at(site);      // bond (site, site+1)
        prod *= d / (2.0 * (d + ll + lr));
    }
    return prod;
}

DisorderCheck check_disorder_condition(const SiteSeq& lambda_seq, const SiteSeq& delta_seq,
                                       double lambda, double delta) {
    require_positive(lambda, "lambda");
    require_positive(delta, "delta");
    const double theta = lambda / delta;
    DisorderCheck out;
    for (int x = delta_seq.first; x <= delta_seq.last(); ++x) {
        for (int bond : {x - 1, x}) {  // lambda_{x,x-1} and lambda_{x,x+1}
            if (!lambda_seq.has(bond)) continue;
            const double ratio = lambda_seq.at(bond) / delta_seq.at(x);
            ++out.n_checked;
            if (ratio > out.worst_ratio) {
                out.worst_ratio = ratio;
                out.worst_site = x;
            }
        }
    }
    out.ok = out.worst_ratio <= theta;
    return out;
}

double r_k(double c1, double gamma, int k) {
    require_positive(c1, "C1");
    require_positive(gamma, "gamma");
    if (k < 0) throw std::invalid_argument("r_k: K must be >= 0");
    return c1 * std::exp(-0.5 * gamma * static_cast<double>(k));
}

std::pair<double, double> envelope(double a, int k, double r) {
    require_positive(a, "A");
    if (r > 0.5) throw std::domain_error("envelope: requires R_K <= 1/2");
    if (r < 0.0) throw std::invalid_argument("envelope: R_K must be >= 0");
    const double a2k = std::pow(a, 2.0 * k);
    return {a2k * (1.0 - r), (1.0 + r) / a2k};
}

int choose_k(double c, double gamma) {
    require_positive(c, "C");
    require_positive(gamma, "gamma");
    int k = 2;
    if (c > 1.0) k = std::max(2, static_cast<int>(std::ceil(std::log(c) / gamma - 1e-12)));
    while (c * std::exp(-gamma * k) > 1.0) ++k;
    while (k > 2 && c * std::exp(-gamma * (k - 1)) <= 1.0) --k;
    return k;
}

namespace {

// f(x) = x^{-xi} (a ln x + b) with a = c xi / ln2, b = -c ln c / ln2, i.e. the
// summand -(c/x^xi) log2(c/x^xi).
template <typename Real>
struct Summand {
    Real xi, a, b;

    Real f(Real x) const { return std::pow(x, -xi) * (a * std::log(x) + b); }
    Real fprime(Real x) const {
        return std::pow(x, -xi - 1) * (a - xi * (a * std::log(x) + b));
    }
    Real fsecond(Real x) const {
        return std::pow(x, -xi - 2) *
               (xi * (xi + 1) * (a * std::log(x) + b) - a * (2 * xi + 1));
    }
    // int_X^inf f(x) dx, xi > 1
    Real integral(Real x) const {
        const Real s = xi - 1;
        return std::pow(x, -s) * ((a * std::log(x) + b) / s + a / (s * s));
    }
};

}  // namespace

template <typename Real>
TailSum<Real> entropy_tail_sum(Real c, Real xi, Real nu, Real target_remainder) {
    if (!(xi > Real(1))) throw std::domain_error("entropy_tail_sum: xi must exceed 1");
    if (!(c > Real(0))) throw std::invalid_argument("entropy_tail_sum: c must be positive");

    const Real ln2 = std::log(Real(2));
    Summand<Real> s{xi, c * xi / ln2, -c * std::log(c) / ln2};

    // Find an explicit-summation horizon J with f decreasing and convex at
    // J - 1/2 and a midpoint-rule bracket narrower than the target:
    //   sum_{j>=J} f(j) in [F(J-1/2) - |f'(J-1/2)|/24, F(J-1/2)].
    Real j_end = std::max<Real>(nu + 1, 4096);
    while (true) {
        const Real x = j_end - Real(0.5);
        const Real w = std::abs(s.fprime(x)) / 24;
        if (s.fprime(x) < Real(0) && s.fsecond(x) > Real(0) && w / 2 <= target_remainder) break;
        j_end *= 2;
        if (j_end > Real(1e15)) throw std::runtime_error("entropy_tail_sum: horizon overflow");
    }

    // Kahan-compensated explicit part, summed ascending: j = nu+1 .. J-1.
    Real sum = 0, comp = 0;
    for (Real j = nu + 1; j < j_end; j += 1) {
        const Real t = s.f(j) - comp;
        const Real next = sum + t;
        comp = (next - sum) - t;
        sum = next;
    }

    const Real x = j_end - Real(0.5);
    const Real upper = s.integral(x);
    const Real width = std::abs(s.fprime(x)) / 24;
    TailSum<Real> out;
    out.value = sum + upper - width / 2;
    out.remainder = width / 2;
    return out;
}

template TailSum<double> entropy_tail_sum<double>(double, double, double, double);
template TailSum<long double> entropy_tail_sum<long double>(long double, long double, long double,
                                                            long double);

EntropyBound entropy_bound(double c_prefactor, double gamma) {
    require_positive(c_prefactor, "C");
    if (!(gamma > 2.0 * kLn2))
        throw std::domain_error("entropy_bound: requires gamma > 2 ln 2 (strict)");

    EntropyBound out;
    out.K = choose_k(c_prefactor, gamma);
    out.xi = gamma / (2.0 * kLn2);
    out.c = std::exp(gamma * (out.K + 1)) / (1.0 - std::exp(-gamma));
    out.nu = std::exp2(2.0 * (out.K + 2));
    const auto tail = entropy_tail_sum<double>(out.c, out.xi, out.nu, 1e-9);
    out.c1 = tail.value;
    out.c1_remainder = tail.remainder;
    out.bound = 2.0 * (out.K + 2) + out.c1;
    return out;
}

GammaFractions gamma_fractions(double gamma) {
    require_positive(gamma, "gamma");
    return {gamma / 3.0, 2.0 * gamma / 7.0, gamma / 2.0};
}

}  // namespace qising::bounds
