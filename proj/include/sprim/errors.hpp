#pragma once

#include <stdexcept>
#include <string>

namespace sprim {

struct DegenerateConfiguration : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InsufficientSamples : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonFiniteLoss : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CountMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TooFewInstances : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct AngleNotInSpec : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MalformedDistribution : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TooFewLabels : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DegenerateVector : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LabelSetTooSmall : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct MissingLabel : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LengthMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ParamsOutOfRange : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyView : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyList : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace sprim
