#pragma once

#include <stdexcept>
#include <string>

namespace nsg {

// Base class for everything this library throws on purpose.
class NsgError : public std::runtime_error {
public:
    explicit NsgError(const std::string& what) : std::runtime_error(what) {}
};

// Raw table loading and binning failures (bad file, bad row, bad cell).
class IngestError : public NsgError {
public:
    using NsgError::NsgError;
};

// Question template rendering failures (unresolved placeholder etc).
class TemplateError : public NsgError {
public:
    using NsgError::NsgError;
};

// Bad dataset/experiment configuration, including unresolvable credentials.
class ConfigError : public NsgError {
public:
    using NsgError::NsgError;
};

// Model output could not be parsed into a typed result.
class ParseError : public NsgError {
public:
    using NsgError::NsgError;
};

// Network-level failure after retries were exhausted.
class TransportError : public NsgError {
public:
    using NsgError::NsgError;
};

// Endpoint answered with a terminal non-2xx status.
class EndpointError : public NsgError {
public:
    explicit EndpointError(const std::string& what, int status = 0)
        : NsgError(what), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

// Metric computation preconditions violated (empty filter, bad matrix, ...).
class MetricsError : public NsgError {
public:
    using NsgError::NsgError;
};

// Experiment config/CLI validation failure. Exit code 2 at the CLI boundary.
class ValidationError : public NsgError {
public:
    using NsgError::NsgError;
};

}  // namespace nsg
