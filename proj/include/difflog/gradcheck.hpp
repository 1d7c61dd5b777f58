#ifndef DIFFLOG_GRADCHECK_HPP
#define DIFFLOG_GRADCHECK_HPP

#include <string>

#include "difflog/reasoner.hpp"

// Verifies differentiability of the prediction pipeline: dual-number
// directional derivatives of the target probabilities with respect to every
// clause weight and every neural-predicate parameter, compared against
// central finite differences on random instances.

namespace difflog {

struct GradCheckResult {
    double max_rel_err = 0.0;
    std::size_t coordinates = 0;
    std::size_t instances = 0;
    bool pass = false;
    std::string worst;  // coordinate of the largest error
};

GradCheckResult gradcheck_run(std::size_t instances, std::uint64_t seed, double tolerance = 1e-4,
                              double fd_step = 1e-5);

}  // namespace difflog

#endif
