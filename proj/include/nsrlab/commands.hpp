#pragma once

#include <exception>
#include <functional>
#include <iosfwd>
#include <string>

#include "nsrlab/report.hpp"

namespace nsrlab {

// Exit codes shared by every command.
enum ExitCode : int {
  kExitOk = 0,
  kExitIo = 1,
  kExitUsage = 2,
  kExitIntegrity = 3,
  kExitNumeric = 4,
};

int exit_code_for(const std::exception_ptr& e);

// Pool size from NSRLAB_WORKERS, else the hardware thread count. Throws ValidationError on junk.
int worker_count();
// Runs fn(0..n-1) on up to `workers` threads. The lowest-index exception is rethrown.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

// Each returns the report; generate also writes the container to config.output.
Json cmd_generate(const RunConfig& config);
Json cmd_diagnose(const RunConfig& config);
Json cmd_audit(const RunConfig& config);
Json cmd_scale_check(const RunConfig& config);

// Dispatches on config.command, writes the report to config.output (or `out` for generate and
// when no report path is set) and maps exceptions to exit codes with a message on `err`.
int run_command(const RunConfig& config, std::ostream& out, std::ostream& err);

}  // namespace nsrlab
