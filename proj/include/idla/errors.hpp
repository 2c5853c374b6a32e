#pragma once

#include <stdexcept>
#include <string>

namespace idla {

struct InvalidWidthError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct OccupiedSiteError : std::logic_error {
    using std::logic_error::logic_error;
};

struct StartVacantError : std::logic_error {
    using std::logic_error::logic_error;
};

struct CardinalityMismatchError : std::logic_error {
    using std::logic_error::logic_error;
};

struct TooLargeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MissingSnapshotError : std::logic_error {
    using std::logic_error::logic_error;
};

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

} // namespace idla
