#pragma once

#include <stdexcept>
#include <string>

namespace qss {

/// Base of every error raised by the library. The CLI maps ValidationError to
/// exit status 2 and every other qss::Error to exit status 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define QSS_DEFINE_ERROR(Name)                                              \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what) : Error(#Name ": " + what) {}    \
  }

// specfun
QSS_DEFINE_ERROR(DomainError);
QSS_DEFINE_ERROR(ConvergenceError);
QSS_DEFINE_ERROR(PoleError);

// potentials / classical dynamics
QSS_DEFINE_ERROR(NonSmoothPoint);
QSS_DEFINE_ERROR(StepSizeUnderflow);
QSS_DEFINE_ERROR(EventDetectionFailure);
QSS_DEFINE_ERROR(Unreachable);
QSS_DEFINE_ERROR(SingularPoint);

// wkb / splitting / scattering
QSS_DEFINE_ERROR(ResolutionError);
QSS_DEFINE_ERROR(OutOfRange);
QSS_DEFINE_ERROR(NoSplitWithinHorizon);
QSS_DEFINE_ERROR(NoPreimage);

// schrodinger
QSS_DEFINE_ERROR(BoundaryContamination);
QSS_DEFINE_ERROR(NotSplit);

// cli_io
QSS_DEFINE_ERROR(ValidationError);
QSS_DEFINE_ERROR(MissingArtifact);

#undef QSS_DEFINE_ERROR

}  // namespace qss
