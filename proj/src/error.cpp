#include "dynamb/error.hpp"

namespace dynamb {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Detectability: return "detectability";
    case ErrorKind::Gramian: return "gramian";
    case ErrorKind::NoContraction: return "no_contraction";
    case ErrorKind::Quadrature: return "quadrature";
    case ErrorKind::InfeasibleWeights: return "infeasible_weights";
    case ErrorKind::SizeCap: return "size_cap";
    case ErrorKind::DualInfeasible: return "dual_infeasible";
    case ErrorKind::SearchBracket: return "search_bracket";
    case ErrorKind::Solver: return "solver";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

namespace {

std::string decorate(ErrorKind kind, const std::string& message,
                     std::optional<long> index) {
  std::string out = std::string(to_string(kind)) + ": " + message;
  if (index) out += " (index " + std::to_string(*index) + ")";
  return out;
}

}  // namespace

Error::Error(ErrorKind kind, const std::string& message,
             std::optional<long> index)
    : std::runtime_error(decorate(kind, message, index)),
      kind_(kind),
      index_(index) {}

}  // namespace dynamb
