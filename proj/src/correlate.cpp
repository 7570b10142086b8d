#include "icsdetect/correlate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "icsdetect/error.hpp"

namespace icsdetect::correlate {

namespace {

std::string fixed(double v, int digits = 2) {
    if (!std::isfinite(v)) {
        return "inf";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string escape_html(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string sources_text(const std::set<AlertSource>& sources) {
    std::string out;
    for (auto s : sources) {
        if (!out.empty()) {
            out += ", ";
        }
        out += to_string(s);
    }
    return out;
}

constexpr double kChartWidth = 760.0;
constexpr double kPanelHeight = 120.0;
constexpr double kMargin = 40.0;

// Polyline of `values` over [t0, t1] into a panel at vertical offset `top`.
std::string polyline(const std::vector<double>& values, double t_first, double step, double t0, double t1, double top,
                     const char* css_class) {
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (double v : values) {
        if (!std::isfinite(v)) {
            continue;
        }
        lo = any ? std::min(lo, v) : v;
        hi = any ? std::max(hi, v) : v;
        any = true;
    }
    if (!any) {
        return {};
    }
    if (hi == lo) {
        hi = lo + 1.0;
    }
    const double span = t1 > t0 ? t1 - t0 : 1.0;
    std::string pts;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) {
            continue;
        }
        const double t = t_first + static_cast<double>(i) * step;
        const double x = kMargin + (t - t0) / span * kChartWidth;
        const double y = top + kPanelHeight - (values[i] - lo) / (hi - lo) * (kPanelHeight - 10.0) - 5.0;
        if (!pts.empty()) {
            pts += ' ';
        }
        pts += fixed(x) + "," + fixed(y);
    }
    std::string out = "<polyline class=\"" + std::string(css_class) + "\" points=\"" + pts + "\"/>\n";
    out += "<text x=\"4\" y=\"" + fixed(top + 12.0) + "\" class=\"axis\">" + fixed(hi, 3) + "</text>\n";
    out += "<text x=\"4\" y=\"" + fixed(top + kPanelHeight - 2.0) + "\" class=\"axis\">" + fixed(lo, 3) + "</text>\n";
    return out;
}

std::string render_chart(const Chart& chart, const std::vector<Incident>& incidents) {
    const auto& s = chart.series;
    const double t0 = s.start_time;
    const double t1 = s.time_at(s.size() == 0 ? 0 : s.size() - 1) + s.bin_width;
    const bool with_profile = chart.profile.has_value();
    const double height = kPanelHeight * (with_profile ? 2.0 : 1.0) + 30.0;

    std::string out = "<h3>" + escape_html(s.channel_name) + "</h3>\n";
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(kChartWidth + 2 * kMargin, 0) +
           "\" height=\"" + fixed(height, 0) + "\">\n";
    for (const auto& inc : incidents) {
        if (inc.end_time < t0 || inc.start_time > t1) {
            continue;
        }
        const double a = std::max(inc.start_time, t0);
        const double b = std::min(inc.end_time, t1);
        const double x = kMargin + (a - t0) / (t1 - t0) * kChartWidth;
        const double w = std::max(1.0, (b - a) / (t1 - t0) * kChartWidth);
        out += "<rect class=\"incident\" x=\"" + fixed(x) + "\" y=\"0\" width=\"" + fixed(w) + "\" height=\"" +
               fixed(height - 20.0) + "\"><title>incident " + std::to_string(inc.id) + "</title></rect>\n";
    }
    out += polyline(s.values, t0, s.bin_width, t0, t1, 0.0, "series");
    if (with_profile) {
        out += polyline(chart.profile->values, t0, s.bin_width, t0, t1, kPanelHeight, "profile");
    }
    out += "<text x=\"" + fixed(kMargin) + "\" y=\"" + fixed(height - 4.0) + "\" class=\"axis\">t=" + fixed(t0) +
           " s</text>\n";
    out += "<text x=\"" + fixed(kMargin + kChartWidth - 80.0) + "\" y=\"" + fixed(height - 4.0) +
           "\" class=\"axis\">t=" + fixed(t1) + " s</text>\n";
    out += "</svg>\n";
    return out;
}

} // namespace

std::vector<Incident> correlate(const std::vector<std::vector<Alert>>& streams, double window) {
    if (!(window >= 0.0) || !std::isfinite(window)) {
        throw UsageError("correlation window must be a non-negative number of seconds");
    }
    std::vector<Alert> all;
    for (const auto& stream : streams) {
        for (const auto& a : stream) {
            validate(a);
            all.push_back(a);
        }
    }
    std::stable_sort(all.begin(), all.end(), [](const Alert& a, const Alert& b) {
        if (a.start_time != b.start_time) return a.start_time < b.start_time;
        return a.end_time < b.end_time;
    });

    const double half = window / 2.0;
    std::vector<Incident> incidents;
    double reach = 0.0;
    for (auto& a : all) {
        if (incidents.empty() || a.start_time - half > reach) {
            Incident inc;
            inc.id = incidents.size() + 1;
            inc.start_time = a.start_time;
            inc.end_time = a.end_time;
            incidents.push_back(std::move(inc));
            reach = a.end_time + half;
        }
        auto& inc = incidents.back();
        inc.start_time = std::min(inc.start_time, a.start_time);
        inc.end_time = std::max(inc.end_time, a.end_time);
        inc.sources.insert(a.source);
        reach = std::max(reach, a.end_time + half);
        inc.alerts.push_back(std::move(a));
    }
    return incidents;
}

std::string incidents_to_json(const std::vector<Incident>& incidents) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& inc : incidents) {
        nlohmann::ordered_json j;
        j["id"] = inc.id;
        j["start"] = inc.start_time;
        j["end"] = inc.end_time;
        j["severity"] = inc.severity();
        auto sources = nlohmann::ordered_json::array();
        for (auto s : inc.sources) {
            sources.push_back(std::string(to_string(s)));
        }
        j["sources"] = sources;
        auto alerts = nlohmann::ordered_json::array();
        for (const auto& a : inc.alerts) {
            alerts.push_back({{"source", std::string(to_string(a.source))},
                              {"start", a.start_time},
                              {"end", a.end_time},
                              {"score", a.score},
                              {"detail", a.detail}});
        }
        j["alerts"] = alerts;
        arr.push_back(std::move(j));
    }
    return arr.dump(2) + "\n";
}

std::string render_report(const std::vector<Incident>& incidents, const std::vector<Chart>& charts,
                          const Provenance& metadata, const std::string& title) {
    std::string out;
    out += "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n";
    out += "<title>" + escape_html(title) + "</title>\n";
    out += "<style>\n"
           "body{font-family:sans-serif;margin:24px;color:#222}\n"
           "table{border-collapse:collapse;margin-bottom:16px}\n"
           "td,th{border:1px solid #bbb;padding:3px 8px;font-size:13px;vertical-align:top}\n"
           "th{background:#eee}\n"
           ".sev2{background:#fde2b8}.sev3{background:#f9b8a8}.sev4{background:#f08a80}\n"
           "polyline.series{fill:none;stroke:#1f4e9c;stroke-width:1}\n"
           "polyline.profile{fill:none;stroke:#b03a2e;stroke-width:1}\n"
           "rect.incident{fill:#f5a623;fill-opacity:0.3}\n"
           "text.axis{font-size:10px;fill:#555}\n"
           "</style>\n</head>\n<body>\n";
    out += "<h1>" + escape_html(title) + "</h1>\n";

    out += "<h2>Incidents</h2>\n<p>" + std::to_string(incidents.size()) + " incidents</p>\n";
    if (!incidents.empty()) {
        out += "<table>\n<tr><th>id</th><th>start [s]</th><th>end [s]</th><th>severity</th><th>sources</th>"
               "<th>alerts</th></tr>\n";
        for (const auto& inc : incidents) {
            out += "<tr class=\"sev" + std::to_string(inc.severity()) + "\"><td>" + std::to_string(inc.id) + "</td><td>" +
                   fixed(inc.start_time) + "</td><td>" + fixed(inc.end_time) + "</td><td>" +
                   std::to_string(inc.severity()) + "</td><td>" + escape_html(sources_text(inc.sources)) + "</td><td>";
            for (std::size_t i = 0; i < inc.alerts.size(); ++i) {
                const auto& a = inc.alerts[i];
                if (i > 0) {
                    out += "<br>";
                }
                out += escape_html(std::string(to_string(a.source))) + " [" + fixed(a.start_time) + ", " +
                       fixed(a.end_time) + "] score " + fixed(a.score, 3) + ": " + escape_html(a.detail);
            }
            out += "</td></tr>\n";
        }
        out += "</table>\n";
    }

    out += "<h2>Channels</h2>\n";
    for (const auto& chart : charts) {
        out += render_chart(chart, incidents);
    }

    out += "<h2>Run</h2>\n<table>\n";
    for (const auto& [key, value] : metadata) {
        out += "<tr><th>" + escape_html(key) + "</th><td>" + escape_html(value) + "</td></tr>\n";
    }
    out += "</table>\n</body>\n</html>\n";
    return out;
}

void write_report(const std::vector<Incident>& incidents, const std::vector<Chart>& charts,
                  const Provenance& metadata, const std::string& path) {
    write_text_file_atomic(path, render_report(incidents, charts, metadata));
}

} // namespace icsdetect::correlate
