#pragma once

#include <stdexcept>
#include <string>

namespace vrlm {

// Config file problems: unknown keys, bad types, incompatible combinations.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A mixing matrix failed one of the structural conditions.
class topology_error : public std::runtime_error {
 public:
  explicit topology_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite inputs or state.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// An iterative inner solver failed to reach its tolerance.
class oracle_error : public std::runtime_error {
 public:
  oracle_error(const std::string& msg, double residual)
      : std::runtime_error(msg), residual(residual) {}
  double residual;
};

// State norm blew past the divergence threshold during a run.
class diverged_error : public std::runtime_error {
 public:
  diverged_error(const std::string& msg, long iteration, double norm)
      : std::runtime_error(msg), iteration(iteration), norm(norm) {}
  long iteration;
  double norm;
};

// Dataset ingestion failures.
class ingestion_error : public std::runtime_error {
 public:
  explicit ingestion_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace vrlm
