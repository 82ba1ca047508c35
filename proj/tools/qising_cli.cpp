// qising: reproducible experiments on the quantum Ising chain and its
// continuum random-cluster representation.
//
// Exit codes: 0 ok, 1 internal error, 2 config error, 3 infeasible request,
// 4 I/O failure.

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qising/errors.hpp"
#include "qising/experiments.hpp"

namespace {

struct SubArgs {
    std::string config;
    std::string seed;
    std::string out;
    std::vector<std::string> sets;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum Ising chain / continuum random-cluster simulation lab"};
    app.require_subcommand(1);

    const char* kinds[] = {"ed-entropy",    "ed-normdiff", "rc-decay",
                           "rc-critical-scan", "fk-crosscheck", "fk-am",
                           "mixing-diag",   "bounds-report", "disorder-sweep"};
    std::map<std::string, SubArgs> args;
    for (const char* name : kinds) {
        auto* sub = app.add_subcommand(name, "");
        auto& a = args[name];
        sub->add_option("--config", a.config, "key = value config file");
        sub->add_option("--seed", a.seed, "master seed (unsigned 64-bit)");
        sub->add_option("--out", a.out, "output path");
        sub->add_option("--set", a.sets, "extra key=value overrides")->take_all();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const std::string name = app.get_subcommands().front()->get_name();
    const SubArgs& a = args[name];

    try {
        std::map<std::string, std::string> overrides;
        if (!a.seed.empty()) overrides["seed"] = a.seed;
        if (!a.out.empty()) overrides["out"] = a.out;
        for (const std::string& s : a.sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw qising::ConfigError("--set expects key=value, got '" + s + "'");
            overrides[s.substr(0, eq)] = s.substr(eq + 1);
        }
        const auto kind = qising::cli::kind_from_name(name);
        const auto spec = qising::cli::parse_config(kind, a.config, overrides);
        return qising::cli::run(spec);
    } catch (const qising::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const qising::FeasibilityError& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return 3;
    } catch (const qising::IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
