#ifndef BDEKIT_ERRORS_HPP
#define BDEKIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace bdekit {

/// Base class for all recoverable bdekit errors caused by bad input.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Mismatched tensor/image shapes or channel counts.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid bit specification, or a bit spec inconsistent with an image.
class BitSpecError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value (training or model config).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// PNG stream is not decodable as a supported image.
class PngError : public IoError {
public:
    using IoError::IoError;
};

/// PNG is valid but uses a color type or depth outside the supported set.
class PngUnsupportedError : public PngError {
public:
    using PngError::PngError;
};

/// PNG stream ends before the image is complete.
class PngTruncatedError : public PngError {
public:
    using PngError::PngError;
};

/// Dataset directory does not match its manifest.
class ManifestError : public Error {
public:
    using Error::Error;
};

/// Checkpoint file errors, each condition distinct.
class CheckpointError : public Error {
public:
    using Error::Error;
};

class CheckpointVersionError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

class CheckpointDigestError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

class CheckpointTruncatedError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

/// An internal invariant failed; indicates a bug, not bad input.
class InternalError : public std::logic_error {
public:
    explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

} // namespace bdekit

#endif
