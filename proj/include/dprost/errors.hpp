#pragma once

#include <stdexcept>
#include <string>

namespace dprost {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateRotationInput : Error { using Error::Error; };
struct InvalidBasisChange : Error { using Error::Error; };
struct DegenerateBox : Error { using Error::Error; };
struct DistanceTooSmall : Error { using Error::Error; };
struct StageMismatch : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct EmptyTrainingSet : Error { using Error::Error; };
struct EmptyReferenceSet : Error { using Error::Error; };
struct EmptyPointSet : Error { using Error::Error; };
struct PointBehindCamera : Error { using Error::Error; };
struct NonFiniteLoss : Error { using Error::Error; };
struct ParseError : Error { using Error::Error; };
struct ConventionUnknown : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct TruncatedFile : Error { using Error::Error; };

}  // namespace dprost
