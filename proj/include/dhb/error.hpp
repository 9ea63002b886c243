#pragma once

#include <stdexcept>
#include <string>

namespace dhb {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// A bootstrapped discount factor came out non-positive.
class DegenerateCurve : public Error {
public:
    using Error::Error;
};

// Artifacts produced by different stages do not belong together.
class FingerprintMismatch : public Error {
public:
    using Error::Error;
};

// A required artifact (file, trained component) is absent.
class MissingArtifact : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class TrainingDiverged : public Error {
public:
    using Error::Error;
};

#define DHB_REQUIRE(cond, ExcType, msg)                                        \
    do {                                                                       \
        if (!(cond)) throw ExcType(std::string(msg));                          \
    } while (false)

}  // namespace dhb
