#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sec {

struct CheckResult {
    std::string name;
    double max_rel_err = 0.0;
    double tolerance = 0.0;
    int instances = 0;
    bool pass = false;
};

// Central finite-difference verification (64-bit, h = 1e-5) of every
// hand-written gradient, evaluated at generic random points.
std::vector<CheckResult> gradcheck_pooling(int instances = 20, uint64_t seed = 7);
std::vector<CheckResult> gradcheck_losses(int instances = 20, uint64_t seed = 7);
std::vector<CheckResult> gradcheck_network(int instances = 20, uint64_t seed = 7);
std::vector<CheckResult> gradcheck_all(int instances = 20, uint64_t seed = 7);

}  // namespace sec
