#pragma once

#include <stdexcept>
#include <string>

namespace pme {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotPositiveDefinite : Error { using Error::Error; };
struct NonSymmetric : Error { using Error::Error; };
struct DegenerateCloud : Error { using Error::Error; };
struct InvalidDistances : Error { using Error::Error; };
struct InvalidPoint : Error { using Error::Error; };
struct RankDeficientDesign : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct KindMismatch : Error { using Error::Error; };
struct TooFewPairs : Error { using Error::Error; };
struct Disconnected : Error { using Error::Error; };
struct InvalidInput : Error { using Error::Error; };
struct NonFiniteLoss : Error { using Error::Error; };
struct EmptySet : Error { using Error::Error; };
struct UnsupportedMechanism : Error { using Error::Error; };

}  // namespace pme
