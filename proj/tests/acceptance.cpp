#include "qlab/verify.hpp"

#include <cstdio>

// One line per criterion; exit status 1 if any fails.
int main() {
    int failed = 0;
    qlab::run_suite("all", {}, [&](const qlab::CriterionResult& r) {
        std::printf("%s\n", qlab::format_result(r).c_str());
        std::fflush(stdout);
        if (!r.passed) ++failed;
    });
    std::printf("%d of 12 criteria passed\n", 12 - failed);
    return failed == 0 ? 0 : 1;
}
