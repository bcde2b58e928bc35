#pragma once

#include <stdexcept>
#include <string>

namespace lof {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Sampling or gradient access outside the valid image domain. Callers that
// can tolerate a wandering point catch this and drop the point instead of
// aborting the whole line.
struct OutOfBounds : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

struct DimensionTooSmall : Error {
  using Error::Error;
};

struct DegenerateSegment : Error {
  using Error::Error;
};

struct SegmentTooShort : Error {
  using Error::Error;
};

struct NotARotation : Error {
  using Error::Error;
};

struct PointAtInfinity : Error {
  using Error::Error;
};

struct SingularSystem : Error {
  using Error::Error;
};

struct SingularWarp : Error {
  using Error::Error;
};

struct TooFewPoints : Error {
  using Error::Error;
};

struct FrameMismatch : Error {
  using Error::Error;
};

struct FrameOutOfRange : Error {
  using Error::Error;
};

struct NotInitialized : Error {
  using Error::Error;
};

}  // namespace lof
