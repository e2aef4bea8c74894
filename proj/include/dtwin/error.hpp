#pragma once

#include <stdexcept>
#include <string>

namespace dtwin {

/// Base for every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rejected caller input (empty keys, malformed globs, bad ranges).
class InputError : public Error {
public:
    using Error::Error;
};

/// A snapshot header or schema file does not satisfy the schema contract.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration: alert rules, scene configs, templates.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A frame node has no placement in the layout.
class LayoutError : public Error {
public:
    using Error::Error;
};

/// A mesh id is missing from the mesh library.
class LibraryError : public Error {
public:
    using Error::Error;
};

/// A scene that cannot be batched (duplicate item ids).
class SceneError : public Error {
public:
    using Error::Error;
};

/// History misuse: non-monotonic append, query before the first frame.
class HistoryError : public Error {
public:
    using Error::Error;
};

/// Filesystem failure; the message names the path.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace dtwin
