#pragma once

#include <Eigen/Dense>
#include <iosfwd>

namespace qising::spinchain {

inline constexpr int kDefaultSiteCap = 20;

// Chain geometry [-m, m+L] with per-bond couplings and per-site transverse
// fields.  Site x maps to bit x+m of the basis index; the block [0, L] is the
// contiguous bit range [m, m+L].  Bit value 0 encodes spin +1.
struct SpinChainParams {
    int m = 0;
    int L = 0;
    Eigen::VectorXd couplings;  // lambda_{x,x+1}, x = -m .. m+L-1
    Eigen::VectorXd fields;     // delta_x,       x = -m .. m+L

    int n_sites() const { return 2 * m + L + 1; }
    long dim() const { return 1L << n_sites(); }
    int site_to_bit(int x) const { return x + m; }

    static SpinChainParams homogeneous(int m, int L, double lambda, double delta);
    void validate(int site_cap = kDefaultSiteCap) const;
};

// H = -1/2 sum_x lambda_{x,x+1} sigma3_x sigma3_{x+1} - sum_x delta_x sigma1_x
// with free boundary, held as a matrix-free operator (diagonal cached).
class Hamiltonian {
public:
    explicit Hamiltonian(SpinChainParams params, int site_cap = kDefaultSiteCap);

    long dim() const { return params_.dim(); }
    int n_sites() const { return params_.n_sites(); }
    const SpinChainParams& params() const { return params_; }

    void apply(const Eigen::VectorXd& x, Eigen::VectorXd& y) const;
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;

    // Explicit dense matrix, only for n <= 12.
    Eigen::MatrixXd dense() const;

private:
    SpinChainParams params_;
    Eigen::VectorXd diag_;
};

struct GroundState {
    Eigen::VectorXcd psi;     // unit norm, deterministic sign (largest entry > 0)
    double energy = 0.0;
    double residual = 0.0;    // ||H psi - E psi||
    int iterations = 0;       // total Lanczos steps across restarts
    double gap_estimate = 0.0;
    bool near_degenerate = false;  // gap_estimate < 100 * tol; with delta > 0 this flags bad input
};

// Restarted Lanczos with full reorthogonalisation and the deterministic
// all-ones start vector (which overlaps the Perron-Frobenius ground state).
GroundState ground_state(const Hamiltonian& h, double tol = 1e-10);

// Partial trace of |psi><psi| onto the contiguous bit range [bit_lo, bit_hi].
Eigen::MatrixXcd reduced_density(const Eigen::VectorXcd& psi, int n_sites, int bit_lo, int bit_hi);

// Block [0, L] of the chain.
Eigen::MatrixXcd reduced_density_block(const Eigen::VectorXcd& psi, const SpinChainParams& p);

// -sum lambda_j log2 lambda_j, eigenvalues clipped to [0, 1]; tiny round-off
// negatives are treated as the paper's 0 log 0 = 0 convention.
double entanglement_entropy(const Eigen::MatrixXcd& rho);

// Eigenvalues of rho in decreasing order.
Eigen::VectorXd sorted_spectrum(const Eigen::MatrixXcd& rho);

// Largest absolute eigenvalue of the Hermitian difference rho1 - rho2; for
// Hermitian operators this equals the quadratic-form supremum over unit
// vectors (the spectral norm).
double operator_norm_diff(const Eigen::MatrixXcd& rho1, const Eigen::MatrixXcd& rho2);

// Squared Schmidt coefficients of psi across the cut (block = bit range),
// computed by SVD of the reshaped amplitude matrix.  Independent route to the
// spectrum of reduced_density; kept in the library for cross-validation and
// experiments.
Eigen::VectorXd schmidt_spectrum(const Eigen::VectorXcd& psi, int n_sites, int bit_lo, int bit_hi);

// Row-major CSV with "re,im" pairs per entry.
void write_matrix_csv(std::ostream& os, const Eigen::MatrixXcd& mat);

}  // namespace qising::spinchain
