#pragma once
#include <stdexcept>
#include <string>

namespace glv {

// Error taxonomy. Each failure mode gets its own type so callers (and the
// pipeline driver, which maps them to exit codes) can react specifically.

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define GLV_ERROR(NAME)                                               \
    struct NAME : Error {                                             \
        explicit NAME(const std::string& msg) : Error(#NAME ": " + msg) {} \
    }

// geometry / braid input
GLV_ERROR(EmptyBraid);
GLV_ERROR(NonFiniteControlPoint);
GLV_ERROR(NotMonotoneInZ);
GLV_ERROR(StrandTouchesWall);
GLV_ERROR(StrandsTooClose);
GLV_ERROR(BadEndpoint);
GLV_ERROR(TubesOverlap);
GLV_ERROR(OutsideTube);
GLV_ERROR(DegenerateProjection);
GLV_ERROR(InvalidDomainNesting);

// kernels / spectra
GLV_ERROR(BadParameter);
GLV_ERROR(SpectralGapViolation);
GLV_ERROR(CoincidentPoints);
GLV_ERROR(SeriesNotConverged);

// fitting
GLV_ERROR(NoSources);
GLV_ERROR(SingularSystem);
GLV_ERROR(SourceInsideDomain);
GLV_ERROR(TooCloseToSource);

// grid / solver
GLV_ERROR(GridMismatch);
GLV_ERROR(SolverDiverged);
GLV_ERROR(NotContracting);
GLV_ERROR(AmplitudeBoundViolated);

// tracing
GLV_ERROR(SeedNotConverged);
GLV_ERROR(StepCollapse);
GLV_ERROR(TransversalityLost);
GLV_ERROR(RunawayCurve);

// io / config
GLV_ERROR(ConfigError);
GLV_ERROR(IoError);
GLV_ERROR(FormatError);

#undef GLV_ERROR

} // namespace glv
