#include "qising/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qising {

double EstimateResult::sigma_distance(const EstimateResult& other) const {
    const double se = std::sqrt(std_error * std_error + other.std_error * other.std_error);
    if (se == 0.0) return (estimate == other.estimate) ? 0.0 : INFINITY;
    return std::abs(estimate - other.estimate) / se;
}

BatchMeans batch_means(const std::vector<double>& series, int n_batches) {
    BatchMeans out;
    const long n = static_cast<long>(series.size());
    out.n = n;
    if (n == 0) return out;

    double mean = 0.0;
    for (double v : series) mean += v;
    mean /= static_cast<double>(n);
    out.mean = mean;
    if (n == 1) return out;

    const int b = static_cast<int>(std::max<long>(2, std::min<long>(n_batches, n)));
    const long batch_len = n / b;  // trailing remainder dropped from the error estimate
    double var_b = 0.0;
    for (int i = 0; i < b; ++i) {
        double bm = 0.0;
        for (long j = i * batch_len; j < (i + 1) * batch_len; ++j) bm += series[j];
        bm /= static_cast<double>(batch_len);
        var_b += (bm - mean) * (bm - mean);
    }
    var_b /= static_cast<double>(b - 1);
    out.std_error = std::sqrt(var_b / static_cast<double>(b));

    double var_s = 0.0;
    for (double v : series) var_s += (v - mean) * (v - mean);
    var_s /= static_cast<double>(n - 1);
    out.autocorr_time = (var_s > 0.0) ? static_cast<double>(batch_len) * var_b / var_s : 0.0;
    return out;
}

LinearFit weighted_linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                              const std::vector<double>& sigma) {
    const int n = static_cast<int>(x.size());
    if (y.size() != x.size() || sigma.size() != x.size())
        throw std::invalid_argument("weighted_linear_fit: size mismatch");
    if (n < 2) throw std::invalid_argument("weighted_linear_fit: need >= 2 points");

    bool weighted = true;
    for (double s : sigma)
        if (!(s > 0.0)) weighted = false;

    std::vector<double> w(n, 1.0);
    if (weighted)
        for (int i = 0; i < n; ++i) w[i] = 1.0 / (sigma[i] * sigma[i]);

    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < n; ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
        sxx += w[i] * x[i] * x[i];
        sxy += w[i] * x[i] * y[i];
    }
    const double det = sw * sxx - sx * sx;
    if (det <= 0.0) throw std::invalid_argument("weighted_linear_fit: degenerate abscissae");

    LinearFit fit;
    fit.n = n;
    fit.slope = (sw * sxy - sx * sy) / det;
    fit.intercept = (sxx * sy - sx * sxy) / det;

    double chi2 = 0.0, ss_tot = 0.0;
    const double ybar = sy / sw;
    for (int i = 0; i < n; ++i) {
        const double r = y[i] - (fit.intercept + fit.slope * x[i]);
        chi2 += w[i] * r * r;
        ss_tot += w[i] * (y[i] - ybar) * (y[i] - ybar);
    }
    fit.r2 = (ss_tot > 0.0) ? 1.0 - chi2 / ss_tot : 1.0;
    fit.chi2_reduced = (n > 2) ? chi2 / static_cast<double>(n - 2) : 0.0;

    if (weighted) {
        fit.slope_se = std::sqrt(sw / det);
        fit.intercept_se = std::sqrt(sxx / det);
    } else {
        // residual-based OLS errors
        const double s2 = (n > 2) ? chi2 / static_cast<double>(n - 2) : 0.0;
        fit.slope_se = std::sqrt(s2 * sw / det);
        fit.intercept_se = std::sqrt(s2 * sxx / det);
    }
    return fit;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_two_sample: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        const double v = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= v) ++i;
        while (j < b.size() && b[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d * std::sqrt(na * nb / (na + nb));
}

double kolmogorov_critical(double z_sigma) {
    const double alpha = std::erfc(z_sigma / std::sqrt(2.0));
    return std::sqrt(-0.5 * std::log(alpha / 2.0));
}

}  // namespace qising
