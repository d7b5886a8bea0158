#pragma once

#include <stdexcept>
#include <string>

namespace oscdom {

/// Base class for all domain errors raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define OSCDOM_DEFINE_ERROR(Name)                                   \
    struct Name : Error {                                           \
        explicit Name(const std::string& msg) : Error(#Name ": " + msg) {} \
    }

OSCDOM_DEFINE_ERROR(CubeBelowResolution);
OSCDOM_DEFINE_ERROR(CubeOutsideDomain);
OSCDOM_DEFINE_ERROR(LambdaOutOfRange);
OSCDOM_DEFINE_ERROR(DepthExhausted);
OSCDOM_DEFINE_ERROR(SingularCellUnhandled);
OSCDOM_DEFINE_ERROR(TailNotConvergent);
OSCDOM_DEFINE_ERROR(DomainTooSmall);
OSCDOM_DEFINE_ERROR(SupportNotContained);
OSCDOM_DEFINE_ERROR(RingBudgetExceeded);
OSCDOM_DEFINE_ERROR(NoDiagonalPart);
OSCDOM_DEFINE_ERROR(UnauditedFamily);
OSCDOM_DEFINE_ERROR(ZeroGradient);
OSCDOM_DEFINE_ERROR(DimensionUnsupported);
OSCDOM_DEFINE_ERROR(ConfigError);

#undef OSCDOM_DEFINE_ERROR

}  // namespace oscdom
