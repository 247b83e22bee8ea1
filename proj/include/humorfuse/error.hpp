#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace humorfuse {

// Error categories surface in the CLI's machine-readable error envelope.
enum class ErrorCategory {
  Parse,       // malformed input line / document
  Validation,  // value or invariant violated
  Reference,   // dangling id, missing fold plan, unknown text
  Duplicate,   // repeated (text, annotator) pair or id
  Io,          // file system
  Transport,   // embedding service
  Numeric,     // non-finite values, diverging training
  Degenerate,  // statistic undefined for the given sample
};

std::string_view to_string(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorCategory category() const noexcept { return category_; }
  // 1-based line number for stream parsing errors.
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorCategory category_;
  std::optional<std::size_t> line_;
};

}  // namespace humorfuse
