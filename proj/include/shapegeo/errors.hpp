#pragma once
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace shapegeo {

// Base of every library error. kind() is a stable machine-readable tag.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class IntegrationDiverged : public Error {
public:
    explicit IntegrationDiverged(double last_time)
        : Error("integration_diverged",
                "non-finite state after t=" + std::to_string(last_time)),
          last_time(last_time) {}
    double last_time;
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error("domain_error", what) {}
};

class DegenerateConfiguration : public Error {
public:
    explicit DegenerateConfiguration(const std::string& what)
        : Error("degenerate_configuration", what) {}
};

class MatchFailed : public Error {
public:
    explicit MatchFailed(double residual)
        : Error("match_failed", "shooting residual stalled at " + std::to_string(residual)),
          best_residual(residual) {}
    double best_residual;
};

class ImmersionViolated : public Error {
public:
    explicit ImmersionViolated(const std::string& what) : Error("immersion_violated", what) {}
};

class FlowSingular : public Error {
public:
    FlowSingular(const std::string& what, double t) : Error("flow_singular", what), time(t) {}
    double time;
};

class PreconditionError : public Error {
public:
    explicit PreconditionError(const std::string& what) : Error("precondition", what) {}
};

class BvpFailed : public Error {
public:
    BvpFailed(const std::string& what, std::vector<Eigen::MatrixXd> best)
        : Error("bvp_failed", what), best_path(std::move(best)) {}
    std::vector<Eigen::MatrixXd> best_path;
};

class NotInRange : public Error {
public:
    explicit NotInRange(const std::string& what) : Error("not_in_range", what) {}
};

class ResolutionExceeded : public Error {
public:
    ResolutionExceeded(double t, double tail)
        : Error("resolution_exceeded", "spectral tail fraction " + std::to_string(tail) +
                                           " at t=" + std::to_string(t)),
          time(t), tail_fraction(tail) {}
    double time, tail_fraction;
};

class UnknownPreset : public Error {
public:
    explicit UnknownPreset(const std::string& name) : Error("unknown_preset", "unknown preset: " + name) {}
};

class CollisionError : public Error {
public:
    CollisionError(double t, double gap)
        : Error("collision", "teichon gap " + std::to_string(gap) + " at t=" + std::to_string(t)),
          time(t) {}
    double time;
};

class LeftDomain : public Error {
public:
    explicit LeftDomain(double t)
        : Error("left_domain", "metric lost positive definiteness at t=" + std::to_string(t)),
          time(t) {}
    double time;
};

class NoLog : public Error {
public:
    explicit NoLog(const std::string& what) : Error("no_log", what) {}
};

}  // namespace shapegeo
