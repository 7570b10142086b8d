#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "icsdetect/core.hpp"
#include "icsdetect/mprofile.hpp"

namespace icsdetect::correlate {

inline constexpr double kDefaultWindow = 30.0;

/// Alerts from one or more detectors folded together.
struct Incident {
    std::size_t id = 0; ///< 1-based, in start-time order
    std::vector<Alert> alerts;
    double start_time = 0.0;
    double end_time = 0.0;
    std::set<AlertSource> sources;

    std::size_t severity() const { return sources.size(); }
};

/// Two alerts share an incident iff their intervals, each widened by
/// window / 2 on both sides, overlap; membership is closed transitively.
/// Throws UsageError on a negative window.
std::vector<Incident> correlate(const std::vector<std::vector<Alert>>& streams, double window = kDefaultWindow);

std::string incidents_to_json(const std::vector<Incident>& incidents);

/// One chart of the operator report: a series, optionally with its matrix
/// profile drawn underneath.
struct Chart {
    TimeSeries series;
    std::optional<mprofile::MatrixProfile> profile;
};

/// Self-contained HTML page: incident table, one inline SVG per chart with
/// the incident spans shaded, and the run metadata. Output depends only on
/// the inputs.
std::string render_report(const std::vector<Incident>& incidents, const std::vector<Chart>& charts,
                          const Provenance& metadata, const std::string& title = "Intrusion detection report");

void write_report(const std::vector<Incident>& incidents, const std::vector<Chart>& charts,
                  const Provenance& metadata, const std::string& path);

} // namespace icsdetect::correlate
