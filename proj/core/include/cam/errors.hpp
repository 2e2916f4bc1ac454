#pragma once

#include <stdexcept>
#include <string>

namespace cam {

/// Input that cannot be parsed or has inconsistent dimensions.
class InvalidData : public std::runtime_error {
public:
    explicit InvalidData(const std::string& what) : std::runtime_error(what) {}
};

/// A column with too few distinct values to support a spline basis.
class DegenerateColumn : public std::runtime_error {
public:
    explicit DegenerateColumn(const std::string& what) : std::runtime_error(what) {}
};

/// The penalized design is numerically rank-deficient.
class SingularFit : public std::runtime_error {
public:
    explicit SingularFit(const std::string& what) : std::runtime_error(what) {}
};

/// A generative draw failed (e.g. kernel factorization after jitter escalation).
class SimulationError : public std::runtime_error {
public:
    explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

/// A request outside the supported problem size (e.g. factorial enumeration).
class ExplicitRefusal : public std::runtime_error {
public:
    explicit ExplicitRefusal(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cam
