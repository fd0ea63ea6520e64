// Acceptance runner: one PASS/FAIL line per criterion; --only N restricts the run.
#include <cstdlib>
#include <iostream>
#include <string>

#include "qwkb/acceptance.hpp"

int main(int argc, char** argv) {
    std::vector<int> ids;
    for (int k = 1; k < argc; ++k) {
        std::string a = argv[k];
        if (a == "--only" && k + 1 < argc) {
            int id = std::atoi(argv[++k]);
            if (id < 1 || id > qwkb::acceptance_count()) {
                std::cerr << "no criterion " << argv[k] << "\n";
                return 2;
            }
            ids.push_back(id);
        } else {
            std::cerr << "usage: acceptance [--only N]...\n";
            return 2;
        }
    }
    auto results = qwkb::run_acceptance(ids);
    std::cout << qwkb::format_acceptance(results);
    int failed = 0;
    for (const auto& r : results) failed += !r.pass;
    std::cout << results.size() - failed << "/" << results.size() << " criteria passed\n";
    return failed ? 1 : 0;
}
