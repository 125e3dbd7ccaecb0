#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "limsup/content.hpp"
#include "limsup/dimest.hpp"

namespace limsup::cli {

/// Runs one limsup_lab subcommand. Returns 0 on success, 1 on contract
/// violations or usage errors, 2 on I/O errors.
int run(int argc, char** argv);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Shortest decimal that round-trips to the same double.
std::string fmt(double v);

/// Fixed-header CSV of local-dimension samples: x1..xd,r,mu,case,bound,pass.
std::string samples_csv(const std::vector<LocalDimSample>& samples, std::size_t d);

/// Tidy plot data: log r against log mu, one row per sample.
void emit_plot_data(const LocalDimReport& report, const std::string& path);
/// Three rows per report: phi lower bound, content, and 6^s times the dual bound.
void emit_plot_data(const std::vector<SandwichReport>& reports, const std::string& path);

/// Worker count from --threads, else LIMSUP_LAB_THREADS, else 1.
unsigned resolve_threads(int flag);

}  // namespace limsup::cli
