#pragma once

// The command-line workflows. Each command computes everything in memory and
// writes its CSV files afterwards from a single thread.
//
// CSV dialect: comma separated, '.' decimal point, 17 significant digits,
// one header row, LF line endings.

#include "osc_echo/config.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace osc_echo {

/// states.csv: one row per sample mark plus "final".
void cmd_propagate(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// cloud_<mark>.csv per sample mark (cloud_final.csv when there are no
/// marks) and mc_summary.csv comparing each cloud with the closed form.
void cmd_mc(const RunConfig& cfg, const std::filesystem::path& out_dir);

/// sweep.csv and fit.csv. Fit failures are reported in fit.csv, not thrown.
void cmd_sweep(const RunConfig& cfg, const std::filesystem::path& out_dir, std::optional<Backend> backend = {});

/// All of the above under panel-named subdirectories plus report.txt.
void cmd_fig4(const RunConfig& cfg, const std::filesystem::path& out_dir, std::optional<Backend> backend = {});

/// %.17g, with "nan" / "inf" / "-inf" for non-finite values.
std::string format_double(double x);

}  // namespace osc_echo
