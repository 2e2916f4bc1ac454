#include "cam/boosting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cam/errors.hpp"
#include "cam/parallel.hpp"

namespace cam {

BoostTrace boost_select(const Eigen::VectorXd& y, const DesignCache& cache,
                        const std::vector<int>& candidates, int iterations,
                        double step, int threads) {
    if (iterations < 1) throw InvalidData("boosting needs at least one iteration");
    if (!(step > 0.0)) throw InvalidData("boosting step must be positive");
    if (candidates.empty()) throw InvalidData("boosting needs at least one candidate");
    if (y.size() != cache.n()) throw InvalidData("response length mismatch");
    if (!y.allFinite()) throw InvalidData("non-finite response");

    BoostTrace trace;
    trace.iterations = iterations;
    trace.step_length = step;
    trace.candidates = candidates;
    std::sort(trace.candidates.begin(), trace.candidates.end());
    trace.candidates.erase(std::unique(trace.candidates.begin(), trace.candidates.end()),
                           trace.candidates.end());
    for (int c : trace.candidates) {
        if (c < 0 || c >= cache.p()) throw InvalidData("candidate index out of range");
    }
    trace.selection_counts.assign(trace.candidates.size(), 0);

    struct Learner {
        int slot;  // position in trace.candidates
        const ColumnDesign* cd;
        Eigen::ArrayXd w;  // shrinkage weights at the fixed ~4 edf smoothing
        Eigen::ArrayXd h;  // 2w - w^2, for the RSS shortcut
    };
    std::vector<Learner> learners;
    for (std::size_t i = 0; i < trace.candidates.size(); ++i) {
        const int c = trace.candidates[i];
        if (!cache.column_ok(c)) {
            trace.warnings.push_back("skipping candidate " + std::to_string(c) + ": " +
                                     cache.column_error(c));
            continue;
        }
        Learner lr;
        lr.slot = static_cast<int>(i);
        lr.cd = &cache.column(c);
        lr.w = 1.0 / (1.0 + lr.cd->lambda4 * lr.cd->s.array());
        lr.h = 2.0 * lr.w - lr.w.square();
        learners.push_back(std::move(lr));
    }
    if (learners.empty()) return trace;

    Eigen::VectorXd r = y.array() - y.mean();
    std::vector<double> rss(learners.size());
    for (int it = 0; it < iterations; ++it) {
        const double rtr = r.squaredNorm();
        parallel_for(learners.size(), threads, [&](std::size_t i) {
            const Learner& lr = learners[i];
            const Eigen::VectorXd d = lr.cd->t.transpose() * (lr.cd->bc.transpose() * r);
            rss[i] = rtr - (d.array().square() * lr.h).sum();
        });
        std::size_t best = 0;
        for (std::size_t i = 1; i < learners.size(); ++i) {
            if (rss[i] < rss[best]) best = i;
        }
        const Learner& win = learners[best];
        const Eigen::VectorXd d = win.cd->t.transpose() * (win.cd->bc.transpose() * r);
        r -= step * (win.cd->bc * (win.cd->t * (win.w * d.array()).matrix()));
        ++trace.selection_counts[win.slot];
    }
    return trace;
}

BoostTrace boost_select(const Eigen::VectorXd& y, const Dataset& data,
                        const std::vector<int>& candidates, int iterations, double step) {
    DesignCache cache(data, 10);
    return boost_select(y, cache, candidates, iterations, step);
}

}  // namespace cam
