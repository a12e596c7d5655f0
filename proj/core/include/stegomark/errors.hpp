#pragma once

#include <stdexcept>
#include <string>

namespace stegomark {

// Malformed files, invalid configs, violated structural invariants.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Text contains a byte the tokenizer cannot represent.
struct EncodeError : std::runtime_error {
  EncodeError(const std::string& msg, size_t offset)
      : std::runtime_error(msg), offset(offset) {}
  size_t offset;
};

struct VocabError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Remote LM transport failures (connection, protocol, error frames).
struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Observed token absent from the reconstructed candidate pool.
struct DesyncError : std::runtime_error {
  DesyncError(const std::string& msg, size_t step)
      : std::runtime_error(msg), step(step) {}
  size_t step;
};

// Stegotext ended before the payload was fully recovered.
struct TruncationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Generation exceeded the configured token budget.
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every vocabulary token would break round-trip consistency.
struct NoConsistentContinuation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rollback budget exhausted; carries whatever was generated so far.
struct RollbackBudgetError : std::runtime_error {
  RollbackBudgetError(const std::string& msg, std::string partial)
      : std::runtime_error(msg), partial_text(std::move(partial)) {}
  std::string partial_text;
};

}  // namespace stegomark
