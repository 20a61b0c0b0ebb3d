// Acceptance suite: runs every verification criterion at full scale and
// prints one pass/fail line per criterion. Exit status 0 iff all pass.
//
// Optional overrides for quick local runs:
//   acceptance [--paths N] [--dt-div N] [--seed N] [--threads N]

#include <cstdio>
#include <cstring>
#include <string>

#include "rslq/verify.hpp"

int main(int argc, char** argv) {
    rslq::verify::VerifyOptions opts;
    for (int a = 1; a + 1 < argc; a += 2) {
        if (!std::strcmp(argv[a], "--paths"))
            opts.n_paths = std::stoull(argv[a + 1]);
        else if (!std::strcmp(argv[a], "--dt-div"))
            opts.dt_div = std::stoi(argv[a + 1]);
        else if (!std::strcmp(argv[a], "--seed"))
            opts.seed = std::stoull(argv[a + 1]);
        else if (!std::strcmp(argv[a], "--threads"))
            opts.n_threads = std::stoi(argv[a + 1]);
        else {
            std::fprintf(stderr, "unknown flag: %s\n", argv[a]);
            return 2;
        }
    }

    try {
        auto results = rslq::verify::run_all(opts);
        std::fputs(rslq::verify::render_report(results).c_str(), stdout);
        return rslq::verify::all_pass(results) ? 0 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
