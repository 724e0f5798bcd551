#pragma once

// Runs Python programs on stdin test cases and compares their output.

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace restyle {

struct TestCase {
  std::string name;
  std::string input;
  std::optional<std::string> expected_output;
};

struct Outcome {
  std::string output;  // stdout
  std::string errors;  // stderr, diagnostics only
  int exit_status = 0; // exit code, or 128 + signal number
  bool timed_out = false;
  double wall_ms = 0;
};

struct ExecConfig {
  std::string interpreter;  // empty: $RESTYLE_PYTHON, else python3 on PATH
  int timeout_ms = 10000;
  std::size_t max_output_bytes = 64u << 20;
  std::size_t memory_limit_mb = 0;  // 0: unlimited
};

class ExecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InterpreterNotFound : public ExecError {
 public:
  using ExecError::ExecError;
};

class SpawnFailure : public ExecError {
 public:
  using ExecError::ExecError;
};

/// Absolute path of the interpreter the config selects. Throws
/// InterpreterNotFound.
std::string resolve_interpreter(const ExecConfig& config);

/// Runs `source` as a script in a fresh temporary directory.
Outcome run_program(std::string_view source, const TestCase& test, const ExecConfig& config = {});

/// Drops trailing whitespace on every line and trailing blank lines.
std::string normalize_output(std::string_view text);
inline bool outputs_match(std::string_view a, std::string_view b) {
  return normalize_output(a) == normalize_output(b);
}

struct Verdict {
  enum class Kind { Equivalent, Diverged, OriginalFailed };
  Kind kind = Kind::Equivalent;
  std::size_t case_index = 0;
  std::string detail;

  bool equivalent() const { return kind == Kind::Equivalent; }
};

std::string to_string(const Verdict& v);

/// Runs both programs on every case. The original must exit 0 within the
/// timeout (and match the expected output when the case has one);
/// otherwise the verdict is original-failed. The transformed program must
/// then finish in time with the same exit status and matching output.
Verdict equivalent(std::string_view original, std::string_view transformed,
                   const std::vector<TestCase>& cases, const ExecConfig& config = {});

/// `<dir>/*.in` with optional sibling `.out` files, sorted by name.
std::vector<TestCase> load_test_cases(const std::string& dir);

}  // namespace restyle
