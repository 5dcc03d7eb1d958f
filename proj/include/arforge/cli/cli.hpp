#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "arforge/metrics/report.hpp"

namespace arforge::cli {

// Process exit statuses. Failures also print one line to stderr of the form
// "error[<class>]: <message>" with class usage, config or stage.
inline constexpr int kExitOk = 0;
inline constexpr int kExitStage = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitConfig = 3;

enum class ReportFormat { json, table };

std::optional<ReportFormat> parse_format(const std::string &text);

std::string emit_report(const metrics::ExperimentReport &report, ReportFormat format);

/// Parses argv, dispatches to one pipeline operation and returns the exit
/// status. Progress goes to `err`, rendered reports to `out`.
int run_command(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace arforge::cli
