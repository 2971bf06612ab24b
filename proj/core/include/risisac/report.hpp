#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "risisac/driver.hpp"

namespace risisac {

inline constexpr const char* kSweepHeader =
    "scheme,axis_value,seed,power_w,iterations,status,min_se_margin,min_snr_margin_db";
inline constexpr const char* kHeatmapHeader = "x,y,snr_db";
inline constexpr const char* kConvergenceHeader = "init,iteration,power_w";

/// Shortest round-trip decimal form; nan and +-inf spelled out.
std::string format_number(double x);

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);
void write_heatmap_csv(const std::vector<HeatmapCell>& cells, std::ostream& out);
void write_convergence_csv(const std::vector<RunReport>& runs, std::ostream& out);

/// JSON document with the power history, stop reason, final metrics,
/// beamformers, phases and per-iteration diagnostics. `generated_at` goes
/// into a metadata object and is the only non-deterministic field.
std::string run_report_json(const RunReport& r, const std::string& generated_at = "");

/// Writes `content` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace risisac
