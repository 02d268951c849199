#pragma once

#include <stdexcept>
#include <string>

namespace hmccond {

inline constexpr const char* kVersion = "0.1.0";

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NotPositiveDefinite : Error {
  using Error::Error;
};
struct InvalidOrder : Error {
  using Error::Error;
};
struct DegenerateRange : Error {
  using Error::Error;
};
struct NoConvergence : Error {
  using Error::Error;
};
struct Unstable : Error {
  using Error::Error;
};
struct OutOfRange : Error {
  using Error::Error;
};
struct InvalidConfig : Error {
  using Error::Error;
};
struct RankDeficient : Error {
  using Error::Error;
};
struct SingularDraw : Error {
  using Error::Error;
};
struct OmegaTooSmall : Error {
  using Error::Error;
};
struct ZeroVariance : Error {
  using Error::Error;
};
struct NonFinite : Error {
  using Error::Error;
};
struct SingularPreconditioner : Error {
  using Error::Error;
};

}  // namespace hmccond
