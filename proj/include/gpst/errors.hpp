#pragma once

#include <stdexcept>
#include <string>

namespace gpst {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// image I/O
struct FileNotFound : Error { using Error::Error; };
struct UnsupportedFormat : Error { using Error::Error; };
struct CorruptImage : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// region / metric
struct RegionOutOfBounds : Error { using Error::Error; };
struct InvalidDistribution : Error { using Error::Error; };

// partitioning
struct SideTooSmall : Error { using Error::Error; };
struct InfeasiblePartition : Error { using Error::Error; };
struct InvalidInput : Error { using Error::Error; };

// gaussians / fitting
struct NonFiniteParameter : Error { using Error::Error; };
struct NonFiniteLoss : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };

// metrics
struct ImageTooSmall : Error { using Error::Error; };

// token store
struct UnsupportedVersion : Error { using Error::Error; };
struct CorruptFile : Error { using Error::Error; };
struct InvariantViolation : Error { using Error::Error; };

}  // namespace gpst
