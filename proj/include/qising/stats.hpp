#pragma once

#include <cstdint>
#include <vector>

namespace qising {

// Monte Carlo point estimate with provenance.
struct EstimateResult {
    double estimate = 0.0;
    double std_error = 0.0;
    long n_samples = 0;
    long n_burnin = 0;
    std::uint64_t seed = 0;
    double autocorr_time = 0.0;

    // z-distance between two independent estimates
    double sigma_distance(const EstimateResult& other) const;
};

// Batch-means mean / standard error / integrated autocorrelation estimate.
// Works for correlated (MCMC) series; for iid input the SE reduces to the
// usual s/sqrt(N) up to batching noise.
struct BatchMeans {
    double mean = 0.0;
    double std_error = 0.0;
    double autocorr_time = 0.0;
    long n = 0;
};
BatchMeans batch_means(const std::vector<double>& series, int n_batches = 32);

// Weighted least squares for y = intercept + slope * x.
// sigma[i] <= 0 anywhere switches to unweighted OLS with residual-based
// standard errors; otherwise errors come from the supplied sigmas.
struct LinearFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double intercept_se = 0.0;
    double r2 = 0.0;
    double chi2_reduced = 0.0;
    int n = 0;
};
LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& sigma);

// Two-sample Kolmogorov-Smirnov statistic scaled by sqrt(n*m/(n+m)).
// kolmogorov_critical(z) gives the critical value at the two-sided normal
// tail level of a z-sigma test (z = 4 -> 2.2759...).
double ks_two_sample(std::vector<double> a, std::vector<double> b);
double kolmogorov_critical(double z_sigma);

}  // namespace qising
