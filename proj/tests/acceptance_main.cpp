#include "windest/acceptance.hpp"

#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

// Runs acceptance criteria 1-10 (or the ids given on the command line) and
// prints one PASS/FAIL line for each. Exit status is nonzero if any fails.
int main(int argc, char** argv)
{
    std::vector<int> ids;
    for (int i = 1; i < argc; ++i) {
        ids.push_back(std::atoi(argv[i]));
    }
    int failed = 0;
    windest::acceptance::run_suite(ids, 1, [&](const windest::acceptance::CriterionResult& r) {
        std::printf("%s\n", windest::acceptance::line(r).c_str());
        std::fflush(stdout);
        failed += !r.passed;
    });
    std::printf("%s: %d criteria failed\n", failed == 0 ? "ACCEPTED" : "REJECTED", failed);
    return failed == 0 ? 0 : 1;
}
