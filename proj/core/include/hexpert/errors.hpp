#pragma once

#include <stdexcept>
#include <string>

namespace hexpert {

/// Shape or dimension mismatch between operands.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// KL divergence with q_i = 0 where p_i > 0.
class InfiniteDivergenceError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Caller broke a documented precondition.
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Non-finite loss, gradient or parameter during training.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class EpisodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace hexpert
