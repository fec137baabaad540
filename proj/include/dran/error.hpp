#pragma once

#include <stdexcept>
#include <string>

namespace dran {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape, range or precondition violation by the caller.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A requested region id is absent from a segmentation mask.
class RegionNotFound : public Error {
public:
    explicit RegionNotFound(int region_id)
        : Error("region " + std::to_string(region_id) + " not found in mask"),
          region_id_(region_id) {}

    int region_id() const noexcept { return region_id_; }

private:
    int region_id_;
};

/// Malformed or inconsistent configuration / gate parameter documents.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File decode / encode failures.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace dran
