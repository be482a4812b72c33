#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace drls {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

/// Zero-based node index. Reports and CSV output use one-based ids.
using NodeId = std::size_t;

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid model or scenario description. `path()` names the offending field.
class ConfigError : public Error {
public:
    ConfigError(std::string path, const std::string& what)
        : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}
    [[nodiscard]] const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// A factorization or inversion could not be certified.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, double condition)
        : Error(what + " (condition estimate " + std::to_string(condition) + ")"),
          condition_(condition) {}
    explicit NumericalError(const std::string& what) : Error(what), condition_(0.0) {}
    [[nodiscard]] double condition() const noexcept { return condition_; }

private:
    double condition_;
};

/// Errors tied to a simulation step (divergence, covariance collapse).
class StepError : public Error {
public:
    StepError(const std::string& what, long step) : Error(what + " at step " + std::to_string(step)), step_(step) {}
    [[nodiscard]] long step() const noexcept { return step_; }

private:
    long step_;
};

class SimulationDivergenceError : public StepError {
public:
    using StepError::StepError;
};

class CovarianceCollapseError : public StepError {
public:
    using StepError::StepError;
};

/// Robustified measurement covariance could not be made positive definite.
class InfeasibleRobustificationError : public Error {
public:
    using Error::Error;
};

/// The regulatory indicator hit a value the estimator formulas cannot evaluate.
class DegenerateAlphaError : public Error {
public:
    using Error::Error;
};

class DegenerateNeighborhoodError : public Error {
public:
    using Error::Error;
};

/// Message-exchange protocol violations.
class ProtocolError : public Error {
public:
    using Error::Error;
};

class RoundMismatchError : public ProtocolError {
public:
    using ProtocolError::ProtocolError;
};

class NotReadyError : public ProtocolError {
public:
    using ProtocolError::ProtocolError;
};

}  // namespace drls
