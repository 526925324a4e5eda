#pragma once

#include <stdexcept>
#include <string>

namespace daekit {

// Every numerical failure carries a short tag naming its kind (e.g. "SingularPencil"),
// which the CLI prints verbatim.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define DAEKIT_ERROR(Name)                                                        \
    class Name : public Error {                                                   \
    public:                                                                       \
        explicit Name(const std::string& what) : Error(#Name, what) {}            \
    }

DAEKIT_ERROR(SingularPencil);
DAEKIT_ERROR(RankAmbiguity);
DAEKIT_ERROR(ChainExtensionFailure);
DAEKIT_ERROR(BiorthogonalizationFailure);
DAEKIT_ERROR(InvariantViolation);
DAEKIT_ERROR(StructureViolation);
DAEKIT_ERROR(InconsistentInitialValue);
DAEKIT_ERROR(SamplingFailure);
DAEKIT_ERROR(SchemaError);
DAEKIT_ERROR(UnknownRegistryId);

#undef DAEKIT_ERROR

class NoConvergence : public Error {
public:
    NoConvergence(const std::string& what, int iters, double last_residual, double contraction)
        : Error("NoConvergence", what), iterations(iters), residual(last_residual),
          contraction_estimate(contraction) {}
    int iterations;
    double residual;
    double contraction_estimate;
};

class SingularJacobian : public Error {
public:
    explicit SingularJacobian(const std::string& what) : Error("SingularJacobian", what) {}
};

// An inner algebraic solve failed; `level` names the cascade level or "F2star".
class ConstraintSolveFailure : public Error {
public:
    ConstraintSolveFailure(const std::string& what, double t_, std::string level_)
        : Error("ConstraintSolveFailure", what), t(t_), level(std::move(level_)) {}
    double t;
    std::string level;
};

}  // namespace daekit
