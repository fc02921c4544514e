#pragma once

#include <stdexcept>
#include <string>

namespace aplab {

class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

class OutOfRange : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

class DomainError : public std::domain_error {
  public:
    using std::domain_error::domain_error;
};

class ConstructionFailure : public std::runtime_error {
  public:
    explicit ConstructionFailure(const std::string &what, std::string trace = {})
        : std::runtime_error(what), trace_(std::move(trace)) {}
    const std::string &trace() const { return trace_; }

  private:
    std::string trace_;
};

class DegenerateLevel : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class SolverFailure : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class OutOfWindow : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class NoLimit : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class Unsupported : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

} // namespace aplab
