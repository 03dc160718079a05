#ifndef MRFUSE_TOOLS_COMMANDS_HPP
#define MRFUSE_TOOLS_COMMANDS_HPP

#include "mrfuse/synthgen.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace mrfuse::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kCaseFailure = 2 };

/// Runs one command line (args exclude the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "boundary:R:J" or "confusion:D" (symmetric, diagonal D).
RaterSpec parse_rater_spec(const std::string& text, Index classes, std::uint64_t seed_offset);

struct OracleReport {
  int trials = 0;
  int failures = 0;
  double max_error = 0.0;
};

/// Compares fuse_loglik(posterior_confidence(...)) with bayes_oracle on
/// random instances: K in {2,3}, M in {2,3,4}, random confusions and priors.
OracleReport oracle_check(int trials, std::uint64_t seed, double tolerance = 1e-10);

/// Worker count from MRFUSE_JOBS, else 1.
int default_jobs();

}  // namespace mrfuse::cli

#endif  // MRFUSE_TOOLS_COMMANDS_HPP
