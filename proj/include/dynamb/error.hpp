#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace dynamb {

enum class ErrorKind {
  Dimension,
  Domain,
  Detectability,
  Gramian,
  NoContraction,
  Quadrature,
  InfeasibleWeights,
  SizeCap,
  DualInfeasible,
  SearchBracket,
  Solver,
  Config,
  Io,
};

const char* to_string(ErrorKind kind);

// All library failures are reported through this type. `index` names the
// offending time step, atom or row when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<long> index = std::nullopt);

  ErrorKind kind() const { return kind_; }
  std::optional<long> index() const { return index_; }

 private:
  ErrorKind kind_;
  std::optional<long> index_;
};

}  // namespace dynamb
