#include "qising/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "qising/bounds.hpp"
#include "qising/errors.hpp"
#include "qising/fkising.hpp"
#include "qising/rcsampler.hpp"
#include "qising/spinchain.hpp"

namespace qising::cli {

using json = nlohmann::json;
namespace sc = qising::spinchain;
namespace rc = qising::rcsampler;
namespace fk = qising::fkising;
using continuum::BoxSpec;
using continuum::SideBc;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct KindInfo {
    const char* name;
    const char* default_theta;  // nullptr: no intensity keys
    std::map<std::string, std::string> defaults;  // key -> default ("" = optional, no default)
};

const std::map<ExperimentKind, KindInfo>& kind_table() {
    static const std::map<ExperimentKind, KindInfo> table = {
        {ExperimentKind::ed_entropy,
         {"ed-entropy", "0.3",
          {{"m", "4"}, {"l_min", "1"}, {"l_max", "8"}, {"tol", "1e-10"}}}},
        {ExperimentKind::ed_normdiff,
         {"ed-normdiff", "1.0",
          {{"L", "1"}, {"m_min", "1"}, {"m_max", "5"}, {"n_ref", "6"}, {"tol", "1e-10"}}}},
        {ExperimentKind::rc_decay,
         {"rc-decay", "0.5",
          {{"q", "1"},
           {"beta", "24"},
           {"m_list", "2,4,6,8"},
           {"n_samples", "100000"},
           {"n_burnin", "100"},
           {"thin", "1"},
           {"n_chains", "2"},
           {"bc", "periodic"},
           {"sides", "free"}}}},  // wired sides are exploratory only
        {ExperimentKind::rc_critical_scan,
         {"rc-critical-scan", nullptr,
          {{"q", "1"},
           {"beta", "24"},
           {"theta_list", "0.5,1.0,1.5"},
           {"m_list", "4,8,12,16"},
           {"n_samples", "50000"},
           {"n_burnin", "100"},
           {"thin", "1"},
           {"n_chains", "2"},
           {"delta", "1"},
           {"bc", "periodic"}}}},
        {ExperimentKind::fk_crosscheck,
         {"fk-crosscheck", "0.5",
          {{"m", "2"},
           {"beta", "12"},
           {"n_samples", "200000"},
           {"n_burnin", "200"},
           {"thin", "1"},
           {"n_chains", "2"},
           {"tol", "1e-10"}}}},
        {ExperimentKind::fk_am,
         {"fk-am", "0.5",
          {{"L", "0"},
           {"m_list", "2,4,6"},
           {"beta", ""},  // absent: resolved by the doubling probe
           {"bc", "free"},
           {"n_samples", "100000"},
           {"n_burnin", "200"},
           {"thin", "1"},
           {"n_chains", "2"}}}},
        {ExperimentKind::mixing_diag,
         {"mixing-diag", "0.5",
          {{"L", "7"},
           {"m", "7"},
           {"beta", "12"},
           {"mode", "equator"},
           {"k_list", "1,2,3"},
           {"n_samples", "50000"},
           {"n_burnin", "200"},
           {"thin", "1"},
           {"n_chains", "2"},
           // separating-set estimates assume non-periodic time: a periodic
           // box lets paths wrap past the equator
           {"bc", "free"}}}},
        {ExperimentKind::bounds_report,
         {"bounds-report", nullptr,
          {{"lambda", "1"}, {"delta", "1"}, {"gamma", ""}, {"c", "1"}}}},
        {ExperimentKind::disorder_sweep,
         {"disorder-sweep", "0.5",
          {{"q", "2"},
           {"m", "6"},
           {"beta", "12"},
           {"n_draws", "5"},
           {"n_samples", "30000"},
           {"n_burnin", "200"},
           {"thin", "1"},
           {"n_chains", "2"}}}},
    };
    return table;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

const char* kind_name(ExperimentKind kind) { return kind_table().at(kind).name; }

ExperimentKind kind_from_name(const std::string& name) {
    for (const auto& [kind, info] : kind_table())
        if (name == info.name) return kind;
    throw ConfigError("unknown experiment '" + name + "'");
}

const std::string& ExperimentSpec::get(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) throw ConfigError("missing key '" + key + "'");
    return it->second;
}

double ExperimentSpec::real(const std::string& key) const {
    const std::string& v = get(key);
    std::size_t pos = 0;
    double out = 0;
    try {
        out = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected a real, got '" + v + "'");
    }
    if (pos != v.size()) throw ConfigError("key '" + key + "': trailing junk in '" + v + "'");
    return out;
}

long ExperimentSpec::integer(const std::string& key) const {
    const std::string& v = get(key);
    std::size_t pos = 0;
    long out = 0;
    try {
        out = std::stol(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
    }
    if (pos != v.size()) throw ConfigError("key '" + key + "': trailing junk in '" + v + "'");
    return out;
}

std::uint64_t ExperimentSpec::seed() const {
    const std::string& v = get("seed");
    try {
        return std::stoull(v);
    } catch (const std::exception&) {
        throw ConfigError("key 'seed': expected an unsigned integer, got '" + v + "'");
    }
}

std::vector<int> ExperimentSpec::int_list(const std::string& key) const {
    std::vector<int> out;
    std::stringstream ss(get(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            out.push_back(std::stoi(item));
        } catch (const std::exception&) {
            throw ConfigError("key '" + key + "': bad integer list entry '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError("key '" + key + "': empty list");
    return out;
}

std::string ExperimentSpec::content_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto feed = [&h](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
    };
    for (const auto& [k, v] : values) {
        feed(k);
        feed("=");
        feed(v);
        feed("\n");
    }
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExperimentSpec parse_config(ExperimentKind kind, const std::string& path,
                            const std::map<std::string, std::string>& overrides) {
    const KindInfo& info = kind_table().at(kind);
    ExperimentSpec spec;
    spec.kind = kind;

    std::map<std::string, std::string> raw;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config file '" + path + "'");
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty() || value.empty())
                throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key or value");
            if (!raw.emplace(key, value).second)
                throw ConfigError(path + ":" + std::to_string(lineno) + ": duplicate key '" + key +
                                  "'");
        }
    }
    for (const auto& [k, v] : overrides) raw[k] = v;

    std::set<std::string> allowed = {"seed", "out"};
    for (const auto& [k, v] : info.defaults) allowed.insert(k);
    if (info.default_theta) {
        allowed.insert("theta");
        allowed.insert("lambda");
        allowed.insert("delta");
    }
    for (const auto& [k, v] : raw) {
        if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "'");
        spec.values[k] = v;
        spec.user_keys.insert(k);
    }
    for (const auto& [k, v] : info.defaults)
        if (!spec.has(k) && !v.empty()) spec.values[k] = v;
    if (!spec.has("seed")) spec.values["seed"] = "0";
    if (!spec.has("out"))
        spec.values["out"] = std::string(info.name) +
                             (kind == ExperimentKind::bounds_report ? ".json" : ".csv");

    if (info.default_theta) {
        const bool u_theta = spec.user_keys.count("theta");
        const bool u_lambda = spec.user_keys.count("lambda");
        const bool u_delta = spec.user_keys.count("delta");
        double lambda, delta, theta;
        if (u_theta) {
            theta = spec.real("theta");
            delta = u_delta ? spec.real("delta") : 1.0;
            lambda = theta * delta;
            if (u_lambda &&
                std::abs(spec.real("lambda") - lambda) > 1e-9 * std::max(1.0, std::abs(lambda)))
                throw ConfigError("inconsistent theta vs (lambda, delta)");
        } else if (u_lambda || u_delta) {
            delta = u_delta ? spec.real("delta") : 1.0;
            lambda = u_lambda ? spec.real("lambda") : std::stod(info.default_theta) * delta;
            theta = lambda / delta;
        } else {
            theta = std::stod(info.default_theta);
            delta = 1.0;
            lambda = theta;
        }
        if (!(lambda > 0.0) || !(delta > 0.0))
            throw ConfigError("lambda and delta must be positive");
        spec.values["lambda"] = fmt17(lambda);
        spec.values["delta"] = fmt17(delta);
        spec.values["theta"] = fmt17(theta);
    }
    return spec;
}

int thread_budget() {
    if (const char* env = std::getenv("QISING_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return std::min(n, 64);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::min(8u, std::max(1u, hw)));
}

// ---------------------------------------------------------------------------
// Output plumbing

namespace {

class OutputWriter {
public:
    OutputWriter(const ExperimentSpec& spec, const std::string& path) : path_(path) {
        out_.open(path);
        if (!out_) throw IoError("cannot open output file '" + path + "'");
        out_ << "# qising " << kVersion << "\n";
        out_ << "# experiment = " << kind_name(spec.kind) << "\n";
        for (const auto& [k, v] : spec.values) out_ << "# " << k << " = " << v << "\n";
        out_ << "# spec_hash = " << spec.content_hash() << "\n";
    }

    std::ostream& stream() { return out_; }

    // trailing comment, excluded from the byte-determinism guarantee
    void finish(double wallclock_s) {
        out_ << "# wallclock_s = " << wallclock_s << "\n";
        out_.close();
        if (!out_) throw IoError("failed writing '" + path_ + "'");
    }

private:
    std::string path_;
    std::ofstream out_;
};

json meta_json(const ExperimentSpec& spec) {
    json meta;
    meta["artifact_version"] = kVersion;
    meta["experiment"] = kind_name(spec.kind);
    for (const auto& [k, v] : spec.values) meta["spec"][k] = v;
    meta["spec_hash"] = spec.content_hash();
    return meta;
}

void write_summary(const ExperimentSpec& spec, const json& summary, double wallclock_s) {
    json body = summary;
    body["meta"] = meta_json(spec);
    body["meta"]["wallclock_s"] = wallclock_s;
    const std::string path = spec.get("out") + ".json";
    std::ofstream out(path);
    if (!out) throw IoError("cannot open summary file '" + path + "'");
    out << body.dump(2) << "\n";
}

rc::EstimateOptions estimate_options(const ExperimentSpec& spec) {
    rc::EstimateOptions opt;
    opt.n_samples = spec.integer("n_samples");
    opt.n_burnin = spec.integer("n_burnin");
    opt.thin = spec.integer("thin");
    opt.n_chains = static_cast<int>(spec.integer("n_chains"));
    opt.max_threads = thread_budget();
    return opt;
}

BoxSpec strip_box(int m, int L, double beta, bool periodic, std::optional<int> slit = {}) {
    BoxSpec box;
    box.line_lo = -m;
    box.line_hi = m + L;
    box.time_lo = -0.5 * beta;
    box.time_hi = 0.5 * beta;
    box.periodic_tb = periodic;
    box.slit_len = slit;
    return box;
}

bool parse_bc(const ExperimentSpec& spec) {
    const std::string& bc = spec.get("bc");
    if (bc == "periodic") return true;
    if (bc == "free") return false;
    throw ConfigError("key 'bc': expected 'periodic' or 'free'");
}

double szsz(const Eigen::VectorXcd& psi, int bit_x, int bit_y) {
    double acc = 0.0;
    for (long i = 0; i < psi.size(); ++i) {
        const int sx = (i >> bit_x) & 1 ? -1 : 1;
        const int sy = (i >> bit_y) & 1 ? -1 : 1;
        acc += sx * sy * std::norm(psi[i]);
    }
    return acc;
}

// FK pattern bit (site 0 most significant, bit set = spin +1) to the ED block
// index convention (site x = bit x, bit clear = spin +1).
int ed_index_of_pattern(int fk_index, int L) {
    int ed = 0;
    for (int x = 0; x <= L; ++x)
        if (!((fk_index >> (L - x)) & 1)) ed |= 1 << x;
    return ed;
}

// ---------------------------------------------------------------------------
// Experiments

void run_ed_entropy(const ExperimentSpec& spec, OutputWriter& out, json& summary) {
    const int m = static_cast<int>(spec.integer("m"));
    const int l_min = static_cast<int>(spec.integer("l_min"));
    const int l_max = static_cast<int>(spec.integer("l_max"));
    const double lambda = spec.real("lambda"), delta = spec.real("delta");
    const double tol = spec.real("tol");
    if (l_min < 0 || l_min > l_max) throw ConfigError("ed-entropy: bad L range");

    out.stream() << "m,L,theta,entropy_bits\n";
    double max_s = 0.0, prev_s = 0.0, last_increment = 0.0;
    for (int L = l_min; L <= l_max; ++L) {
        const auto params = sc::SpinChainParams::homogeneous(m, L, lambda, delta);
        const sc::Hamiltonian h(params);
        const auto gs = sc::ground_state(h, tol);
        const double s = sc::entanglement_entropy(sc::reduced_density_block(gs.psi, params));
        out.stream() << m << ',' << L << ',' << fmt17(spec.real("theta")) << ',' << fmt17(s)
                     << '\n';
        max_s = std::max(max_s, s);
        if (L > l_min) last_increment = s - prev_s;
        prev_s = s;
    }
    summary["max_entropy_bits"] = max_s;
    summary["last_increment_bits"] = last_increment;
}

void run_ed_normdiff(const ExperimentSpec& spec, OutputWriter& out, json& summary) {
    const int L = static_cast<int>(spec.integer("L"));
    const int m_min = static_cast<int>(spec.integer("m_min"));
    const int m_max = static_cast<int>(spec.integer("m_max"));
    const int n_ref = static_cast<int>(spec.integer("n_ref"));
    const double lambda = spec.real("lambda"), delta = spec.real("delta");
    const double tol = spec.real("tol");
    if (m_min < 0 || m_min > m_max || n_ref <= m_max)
        throw ConfigError("ed-normdiff: need m_min <= m_max < n_ref");

    const auto ref_params = sc::SpinChainParams::homogeneous(n_ref, L, lambda, delta);
    const auto rho_ref =
        sc::reduced_density_block(sc::ground_state(sc::Hamiltonian(ref_params), tol).psi,
                                  ref_params);

    out.stream() << "m,L,theta,norm_diff\n";
    std::vector<std::pair<double, EstimateResult>> points;
    for (int m = m_min; m <= m_max; ++m) {
        const auto params = sc::SpinChainParams::homogeneous(m, L, lambda, delta);
        const auto rho =
            sc::reduced_density_block(sc::ground_state(sc::Hamiltonian(params), tol).psi, params);
        const double nd = sc::operator_norm_diff(rho, rho_ref);
        out.stream() << m << ',' << L << ',' << fmt17(spec.real("theta")) << ',' << fmt17(nd)
                     << '\n';
        EstimateResult e;
        e.estimate = nd;
        e.n_samples = 1;
        points.push_back({static_cast<double>(m), e});
    }
    const auto fit = rc::estimate_decay_rate(points);
    summary["gamma_hat"] = fit.gamma_hat;
    summary["c_hat"] = fit.c_hat;
    summary["r2"] = fit.r2;
    summary["slope_se"] = fit.gamma_se;
}

void decay_rows(const ExperimentSpec& spec, OutputWriter& out, json& fit_json, double lambda,
                double delta, double q, const std::vector<int>& m_list, std::uint64_t seed,
                std::uint64_t stream_base) {
    const double beta = spec.real("beta");
    const bool periodic = parse_bc(spec);
    SideBc sides = SideBc::free;
    if (spec.has("sides")) {
        if (spec.get("sides") == "wired")
            sides = SideBc::wired;
        else if (spec.get("sides") != "free")
            throw ConfigError("key 'sides': expected 'free' or 'wired'");
    }
    rc::EstimateOptions opt = estimate_options(spec);
    opt.stream_base = stream_base;

    std::vector<std::pair<double, EstimateResult>> points;
    for (std::size_t i = 0; i < m_list.size(); ++i) {
        const int m = m_list[i];
        BoxSpec box = strip_box(m, 0, beta, periodic);
        box.side_bc = sides;
        rc::RcParams params{lambda, delta, q, {}, {}};
        opt.stream_base = stream_base + 100 * i;
        const auto est = rc::estimate_event(
            box, params,
            [](const continuum::ClusterLabeling& lab) {
                return rc::interval_reaches_sides(lab, 0, -0.5, 0.5);
            },
            opt, seed);
        out.stream() << m << ",0," << fmt17(lambda / delta) << ',' << fmt17(q) << ','
                     << fmt17(est.estimate) << ',' << fmt17(est.std_error) << ',' << est.n_samples
                     << ',' << seed << '\n';
        points.push_back({static_cast<double>(m), est});
    }
    try {
        const auto fit = rc::estimate_decay_rate(points);
        fit_json["gamma_hat"] = fit.gamma_hat;
        fit_json["gamma_se"] = fit.gamma_se;
        fit_json["c_hat"] = fit.c_hat;
        fit_json["r2"] = fit.r2;
        fit_json["n_used"] = fit.n_used;
        fit_json["dropped"] = fit.dropped;
    } catch (const std::invalid_argument& e) {
        fit_json["fit_error"] = e.what();
    }
}

void run_rc_decay(const ExperimentSpec& spec, OutputWriter& out, json& summary) {
    out.stream() << "m,L,theta,q,estimate,std_error,n_samples,seed\n";
    json fit;
    decay_rows(spec, out, fit, spec.real("lambda"), spec.real("delta"), spec.real("q"),
               spec.int_list("m_list"), spec.seed(), 0);
    summary["fit"] = fit;
}

void run_rc_critical_scan(const ExperimentSpec& spec, OutputWriter& out, json& summary) {
    out.stream() << "m,L,theta,q,estimate,std_error,n_samples,seed\n";
    std::vector<double> thetas;
    {
        std::stringstream ss(spec.get("theta_list"));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) thetas.push_back(std::stod(item));
        }
        if (thetas.empty()) throw ConfigError("theta_list: empty");
    }
    const double delta = spec.real("delta");
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        json fit;
        decay_rows(spec, out, fit, thetas[i] * delta, delta, spec.real("q"),
                   spec.int_list("m_list"), spec.seed(), (i + 1) * 100000);
        summary["fits"][fmt17(thetas[i])] = fit;
    }
}

void run_fk_crosscheck(const ExperimentSpec& spec, OutputWriter& out, json& summary) {
    const int m = static_cast<int>(spec.integer("m"));
    const double beta = spec.real("beta");
    const double lambda = spec.real("lambda"), delta = spec.real("delta");
    const double tol = spec.real("tol");
    rc::EstimateOptions opt = estimate_options(spec);
    const std::uint64_t seed = spec.seed();

    // quantum side
    const auto params = sc::SpinChainParams::homogeneous(m, 0, lambda, delta);
    const auto gs = sc::ground_state(sc::Hamiltonian(params), tol);

    out.stream() << "kind,i,j,ed_value,estimate,std_error,abs_diff,sigma_dev\n";

    // two-point correlations vs connectivity
    const BoxSpec corr_box = strip_box(m, 0, beta, true);
    rc::RcParams rcp{lambda, delta, 2.0, {}, {}};
    const auto [corr, corr_se] = fk::estimate_correlation_matrix(corr_box, rcp, opt, seed);
    double max_sigma_corr = 0.0, max_abs_corr = 0.0;
    for (int x = -m; x <= m; ++x)
        for (int y = x + 1; y <= m; ++y) {
            const double ed = szsz(gs.psi, params.site_to_bit(x), params.site_to_bit(y));
            const int i = x + m, j = y + m;
            const double diff = std::abs(corr(i, j) - ed);
            const double sig = corr_se(i, j) > 0 ? diff / corr_se(i, j) : 0.0;
            out.stream() << "corr," << x << ',' << y << ',' << fmt17(ed) << ','
                         << fmt17(corr(i, j)) << ',' << fmt17(corr_se(i, j)) << ',' << fmt17(diff)
                         << ',' << fmt17(sig) << '\n';
            max_sigma_corr = std::max(max_sigma_corr, sig);
            max_abs_corr = std::max(max_abs_corr, diff);
        }
    summary["corr_max_sigma"] = max_sigma_corr;
    summary["corr_max_abs_diff"] = max_abs_corr;

    // slit joint law at L = 0 vs the reduced density matrix
    const BoxSpec slit_box = strip_box(m, 0, beta, true, 0);
    rc::EstimateOptions slit_opt = opt;
    slit_opt.stream_base = 1u << 16;
    const auto est = fk::estimate_reduced_matrix(slit_box, rcp, slit_opt, seed);
    const auto rho = sc::reduced_density_block(gs.psi, params);
    double max_sigma_slit = 0.0;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const double ed =
                rho(ed_index_of_pattern(i, 0), ed_index_of_pattern(j, 0)).real();
            const double diff = std::abs(est.normalized(i, j) - ed);
            const double sig =
                est.normalized_se(i, j) > 0 ? diff / est.normalized_se(i, j) : 0.0;
            out.stream() << "slit," << i << ',' << j << ',' << fmt17(ed) << ','
                         << fmt17(est.normalized(i, j)) << ',' << fmt17(est.normalized_se(i, j))
                         << ',' << fmt17(diff) << ',' << fmt17(sig) << '\n';
            max_sigma_slit = std::max(max_sigma_slit, sig);
        }
    summary["slit_max_sigma"] = max_sigma_slit;
    summary["a_m"] = est.a_m.estimate;
    summary["a_m_se"] = est.a_m.std_error;
}

// Finite beta stands in for the zero-temperature limit: starting from
// 6 max(1/delta, 1/lambda), double beta until the a_m estimate moves by less
// than one combined standard error.
double resolve_beta_by_probe(const ExperimentSpec& spec) {
    const double lambda = spec.real("lambda"), delta = spec.real("delta");
    const int L = static_cast<int>(spec.integer("L"));
    const int m = spec.int_list("m_list").front();
    const bool periodic = parse_bc(spec);

    rc::EstimateOptions opt;
    opt.n_samples = std::max<long>(2000, spec.integer("n_samples") / 8);
    opt.n_burnin = spec.integer("n_burnin");
    opt.max_threads = thread_budget();

    double beta = 6.0 * std::max(1.0 / delta, 1.0 / lambda);
    rc::RcParams params{lambda, delta, 2.0, {}, {}};
    auto estimate = [&](double b, std::uint64_t stream) {
        rc::EstimateOptions o = opt;
        o.stream_base = stream;
        return fk::estimate_am(strip_box(m, L, b, periodic, L), params, o, spec.seed()).a_m;
    };
    auto prev = estimate(beta, 1);
    for (int doubling = 0; doubling < 4; ++doubling) {
        const auto next = estimate(2.0 * beta, 2 + doubling);
        const double se = std::hypot(prev.std_error, next.std_error);
        beta *= 2.0;
        if (std::abs(next.estimate - prev.estimate) < std::max(se, 1e-12)) break;
        prev = next;
    }
    return beta;
}

void run_fk_am(const ExperimentSpec& spec, OutputWriter& out, json& summary) {
    const int L = static_cast<int>(spec.integer("L"));
    const double beta = spec.real("beta");
    const double lambda = spec.real("lambda"), delta = spec.real("delta");
    const bool periodic = parse_bc(spec);
    rc::EstimateOptions opt = estimate_options(spec);
    const std::uint64_t seed = spec.seed();

    out.stream() << "m,L,theta,q,estimate,std_error,n_samples,seed\n";
    json am;
    const auto m_list = spec.int_list("m_list");
    for (std::size_t i = 0; i < m_list.size(); ++i) {
        const int m = m_list[i];
        const BoxSpec box = strip_box(m, L, beta, periodic, L);
        rc::RcParams params{lambda, delta, 2.0, {}, {}};
        rc::EstimateOptions o = opt;
        o.stream_base = i * 100;
        const auto stats = fk::estimate_am(box, params, o, seed);
        out.stream() << m << ',' << L << ',' << fmt17(lambda / delta) << ",2,"
                     << fmt17(stats.a_m.estimate) << ',' << fmt17(stats.a_m.std_error) << ','
                     << stats.a_m.n_samples << ',' << seed << '\n';
        am[std::to_string(m)] = stats.a_m.estimate;
    }
    summary["a_m"] = am;
}

void run_mixing_diag(const ExperimentSpec& spec, OutputWriter& out, json& summary) {
    const int L = static_cast<int>(spec.integer("L"));
    const int m = static_cast<int>(spec.integer("m"));
    const double beta = spec.real("beta");
    const double lambda = spec.real("lambda"), delta = spec.real("delta");
    const bool periodic = parse_bc(spec);
    const std::string& mode = spec.get("mode");
    fk::SeparatorKind kind;
    if (mode == "equator")
        kind = fk::SeparatorKind::equator;
    else if (mode == "parallelogram")
        kind = fk::SeparatorKind::parallelogram;
    else
        throw ConfigError("key 'mode': expected 'equator' or 'parallelogram'");
    rc::EstimateOptions opt = estimate_options(spec);
    const std::uint64_t seed = spec.seed();

    const BoxSpec box = strip_box(m, L, beta, periodic, L);
    rc::RcParams params{lambda, delta, 2.0, {}, {}};

    out.stream() << "mode,K,t1,t1_se,t2,t2_se,t,composite_defined,hypothesis_ok\n";
    std::vector<int> ks = kind == fk::SeparatorKind::equator ? spec.int_list("k_list")
                                                             : std::vector<int>{0};
    for (std::size_t i = 0; i < ks.size(); ++i) {
        rc::EstimateOptions o = opt;
        o.stream_base = i * 100;
        const auto diag = fk::mixing_diagnostics(box, params, ks[i], kind, o, seed);
        out.stream() << mode << ',' << ks[i] << ',' << fmt17(diag.t1.estimate) << ','
                     << fmt17(diag.t1.std_error) << ',' << fmt17(diag.t2) << ','
                     << fmt17(diag.t2_se) << ',' << fmt17(diag.composite_defined ? diag.t : -1.0)
                     << ',' << (diag.composite_defined ? 1 : 0) << ','
                     << (diag.hypothesis_ok ? 1 : 0) << '\n';
        json row;
        row["t1"] = diag.t1.estimate;
        row["t2"] = diag.t2;
        row["composite_defined"] = diag.composite_defined;
        summary["K"][std::to_string(ks[i])] = row;
    }
}

void run_bounds_report(const ExperimentSpec& spec, json& report) {
    namespace bd = qising::bounds;
    const double lambda = spec.real("lambda"), delta = spec.real("delta");
    report["lambda"] = lambda;
    report["delta"] = delta;
    report["theta"] = lambda / delta;
    report["A"] = bd::constant_a(lambda, delta);
    if (spec.has("gamma")) {
        const double gamma = spec.real("gamma");
        const double c = spec.real("c");
        report["gamma"] = gamma;
        report["C"] = c;
        if (lambda / delta >= 2.0)
            report["warning"] = "theta >= 2: outside the exponential-decay regime";
        const auto frac = bd::gamma_fractions(gamma);
        report["gamma_third"] = frac.third;
        report["gamma_two_sevenths"] = frac.two_sevenths;
        report["gamma_half"] = frac.half;
        report["K"] = bd::choose_k(c, gamma);
        report["R_K"] = bd::r_k(c, gamma, bd::choose_k(c, gamma));
        if (gamma > 2.0 * std::log(2.0)) {
            const auto eb = bd::entropy_bound(c, gamma);
            report["xi"] = eb.xi;
            report["c_eig"] = eb.c;
            report["nu"] = eb.nu;
            report["c1"] = eb.c1;
            report["entropy_bound"] = eb.bound;
        } else {
            report["entropy_bound_error"] = "gamma <= 2 ln 2: tail series diverges";
        }
    }
}

void run_disorder_sweep(const ExperimentSpec& spec, OutputWriter& out, json& summary) {
    const int m = static_cast<int>(spec.integer("m"));
    const double beta = spec.real("beta");
    const double lambda = spec.real("lambda"), delta = spec.real("delta");
    const double q = spec.real("q");
    const long n_draws = spec.integer("n_draws");
    rc::EstimateOptions opt = estimate_options(spec);
    const std::uint64_t seed = spec.seed();

    const BoxSpec box = strip_box(m, 0, beta, true);
    auto event = [](const continuum::ClusterLabeling& lab) {
        return rc::interval_reaches_sides(lab, 0, -0.5, 0.5);
    };

    rc::RcParams homog{lambda, delta, q, {}, {}};
    const auto base = rc::estimate_event(box, homog, event, opt, seed);

    out.stream() << "draw,estimate,std_error,homog_estimate,homog_std_error,worst_ratio,ordered\n";
    Rng draw_rng(seed, 0xd15ull);
    bool all_ok = true;
    for (long d = 0; d < n_draws; ++d) {
        rc::RcParams params = homog;
        params.delta_per_line.emplace();
        params.lambda_per_pair.emplace();
        for (int i = 0; i < box.n_lines(); ++i)
            params.delta_per_line->push_back(delta * (1.0 + draw_rng.uniform()));
        for (int p = 0; p < box.n_pairs(); ++p)
            params.lambda_per_pair->push_back(lambda * (0.25 + 0.75 * draw_rng.uniform()));

        // ratio condition lambda_{x,y} / delta_x <= lambda / delta
        qising::bounds::SiteSeq lam_seq{box.line_lo, *params.lambda_per_pair};
        qising::bounds::SiteSeq del_seq{box.line_lo, *params.delta_per_line};
        const auto check = qising::bounds::check_disorder_condition(lam_seq, del_seq, lambda, delta);

        rc::EstimateOptions o = opt;
        o.stream_base = (d + 1) * 1000;
        const auto est = rc::estimate_event(box, params, event, o, seed);
        const double se = std::sqrt(est.std_error * est.std_error +
                                    base.std_error * base.std_error);
        const bool ordered = est.estimate <= base.estimate + 3.0 * se;
        all_ok = all_ok && ordered && check.ok;
        out.stream() << d << ',' << fmt17(est.estimate) << ',' << fmt17(est.std_error) << ','
                     << fmt17(base.estimate) << ',' << fmt17(base.std_error) << ','
                     << fmt17(check.worst_ratio) << ',' << (ordered ? 1 : 0) << '\n';
    }
    summary["all_ordered"] = all_ok;
    summary["homog_estimate"] = base.estimate;
}

}  // namespace

int run(const ExperimentSpec& spec_in) {
    const auto start = std::chrono::steady_clock::now();

    ExperimentSpec spec = spec_in;
    if (spec.kind == ExperimentKind::fk_am && !spec.has("beta"))
        spec.values["beta"] = fmt17(resolve_beta_by_probe(spec));

    if (spec.kind == ExperimentKind::bounds_report) {
        // pure JSON output, meta embedded in the object
        json report;
        run_bounds_report(spec, report);
        report["meta"] = meta_json(spec);
        report["meta"]["wallclock_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::ofstream out(spec.get("out"));
        if (!out) throw IoError("cannot open output file '" + spec.get("out") + "'");
        out << report.dump(2) << "\n";
        std::printf("%s\n", report.dump(2).c_str());
        return 0;
    }

    OutputWriter out(spec, spec.get("out"));
    json summary;
    switch (spec.kind) {
        case ExperimentKind::ed_entropy: run_ed_entropy(spec, out, summary); break;
        case ExperimentKind::ed_normdiff: run_ed_normdiff(spec, out, summary); break;
        case ExperimentKind::rc_decay: run_rc_decay(spec, out, summary); break;
        case ExperimentKind::rc_critical_scan: run_rc_critical_scan(spec, out, summary); break;
        case ExperimentKind::fk_crosscheck: run_fk_crosscheck(spec, out, summary); break;
        case ExperimentKind::fk_am: run_fk_am(spec, out, summary); break;
        case ExperimentKind::mixing_diag: run_mixing_diag(spec, out, summary); break;
        case ExperimentKind::disorder_sweep: run_disorder_sweep(spec, out, summary); break;
        case ExperimentKind::bounds_report: break;  // handled above
    }
    const double wallclock =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.finish(wallclock);
    write_summary(spec, summary, wallclock);
    return 0;
}

}  // namespace qising::cli
