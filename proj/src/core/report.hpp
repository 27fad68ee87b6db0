#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "core/mission.hpp"

namespace recap::mission {

/// Quantile table for both iterations of both metrics, computed from rows.
std::vector<QuantileRow> compute_quantiles(const std::vector<MetricRow>& rows);

/// CSV: metric,q,iteration_1,iteration_2,delta
void write_quantiles(const std::vector<QuantileRow>& rows, const std::filesystem::path& path);

/// CSV: iteration,value,cumulative_fraction
void write_cdf(const std::vector<std::pair<double, double>> (&cdf)[2], const std::filesystem::path& path);

/// SVG line plot of both iterations' CDFs, axes labeled.
std::string cdf_svg(const std::vector<std::pair<double, double>> (&cdf)[2], const std::string& title,
                    const std::string& x_label);

/// Deterministic summary (no timings).
void write_report_json(const MissionReport& report, const std::filesystem::path& path);

}  // namespace recap::mission
