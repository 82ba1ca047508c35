#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace qising::cli {

enum class ExperimentKind {
    ed_entropy,
    ed_normdiff,
    rc_decay,
    rc_critical_scan,
    fk_crosscheck,
    fk_am,
    mixing_diag,
    bounds_report,
    disorder_sweep,
};

const char* kind_name(ExperimentKind kind);
ExperimentKind kind_from_name(const std::string& name);

// A fully resolved experiment: every key has a final value (defaults filled
// in and logged), intensities canonicalised so that lambda, delta and theta
// are all present and consistent.
struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::bounds_report;
    std::map<std::string, std::string> values;
    std::set<std::string> user_keys;

    bool has(const std::string& key) const { return values.count(key) != 0; }
    const std::string& get(const std::string& key) const;
    double real(const std::string& key) const;
    long integer(const std::string& key) const;
    std::uint64_t seed() const;
    std::vector<int> int_list(const std::string& key) const;

    // 64-bit FNV-1a over the sorted resolved "key=value" block
    std::string content_hash() const;
};

// Line-based `key = value` format; '#' starts a comment.  Unknown keys,
// duplicates and type mismatches raise ConfigError; a missing file raises
// IoError.  `path` may be empty (defaults only).  Overrides are applied on
// top of the file.
ExperimentSpec parse_config(ExperimentKind kind, const std::string& path,
                            const std::map<std::string, std::string>& overrides = {});

// Runs the experiment, writing the CSV (or JSON, for bounds-report) to the
// resolved `out` path plus a JSON summary beside it.  Returns 0.
int run(const ExperimentSpec& spec);

// Thread budget: QISING_THREADS when set, else min(hardware, 8).
int thread_budget();

}  // namespace qising::cli
