#include "humorfuse/error.hpp"

namespace humorfuse {

std::string_view to_string(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::Parse: return "parse";
    case ErrorCategory::Validation: return "validation";
    case ErrorCategory::Reference: return "reference";
    case ErrorCategory::Duplicate: return "duplicate";
    case ErrorCategory::Io: return "io";
    case ErrorCategory::Transport: return "transport";
    case ErrorCategory::Numeric: return "numeric";
    case ErrorCategory::Degenerate: return "degenerate";
  }
  return "unknown";
}

namespace {

std::string decorate(const std::string& message, std::optional<std::size_t> line) {
  if (!line) return message;
  return "line " + std::to_string(*line) + ": " + message;
}

}  // namespace

Error::Error(ErrorCategory category, const std::string& message,
             std::optional<std::size_t> line)
    : std::runtime_error(decorate(message, line)), category_(category), line_(line) {}

}  // namespace humorfuse
