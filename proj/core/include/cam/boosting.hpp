#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cam/additive.hpp"
#include "cam/dataset.hpp"

namespace cam {

struct BoostTrace {
    int iterations = 0;
    std::vector<int> selection_counts;  // aligned with candidates
    double step_length = 0.0;
    std::vector<int> candidates;        // ascending, duplicates removed
    std::vector<std::string> warnings;  // skipped unusable columns
};

// Componentwise L2 boosting: per iteration fit each candidate's univariate
// penalized spline learner (~4 edf) to the residual, subtract step times the
// best fit (smallest RSS, lowest index on ties), count the pick.
BoostTrace boost_select(const Eigen::VectorXd& y, const Dataset& data,
                        const std::vector<int>& candidates, int iterations,
                        double step);
BoostTrace boost_select(const Eigen::VectorXd& y, const DesignCache& cache,
                        const std::vector<int>& candidates, int iterations,
                        double step, int threads = 1);

}  // namespace cam
