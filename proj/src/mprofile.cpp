#include "icsdetect/mprofile.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "icsdetect/error.hpp"

namespace icsdetect::mprofile {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// A window after z-normalization; `constant` windows keep all-zero values.
struct ZWindow {
    std::vector<double> z;
    bool constant = false;
};

ZWindow znormalize(std::span<const double> w) {
    ZWindow out;
    out.z.resize(w.size());
    const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
    if (*lo == *hi) {
        out.constant = true;
        return out;
    }
    const auto stats = window_stats(w);
    const double inv = 1.0 / stats.stddev;
    for (std::size_t i = 0; i < w.size(); ++i) {
        out.z[i] = (w[i] - stats.mean) * inv;
    }
    return out;
}

double zdistance_squared(const ZWindow& a, const ZWindow& b) {
    if (a.constant || b.constant) {
        return a.constant && b.constant ? 0.0 : 2.0 * static_cast<double>(a.z.size());
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < a.z.size(); ++i) {
        const double d = a.z[i] - b.z[i];
        acc += d * d;
    }
    return acc;
}

// Ordering on (distance, neighbor index): ties resolve to the smaller index.
inline bool better(double d, std::size_t j, double best, std::size_t best_j) {
    return d < best || (d == best && j < best_j);
}

void check_finite(std::span<const double> series) {
    for (double v : series) {
        if (!std::isfinite(v)) {
            throw InputError("series holds a non-finite value");
        }
    }
}

MatrixProfile empty_profile(std::size_t windows, const ProfileConfig& config) {
    MatrixProfile p;
    p.values.assign(windows, kInf);
    p.indices.assign(windows, kNoNeighbor);
    p.config = config;
    return p;
}

// Per-diagonal sweep state shared by the worker threads.
struct Sweep {
    std::span<const double> x;
    std::size_t m;
    std::size_t windows;
    std::size_t first_diagonal;
    std::vector<double> mean;
    std::vector<double> inv_sigma;
    std::vector<unsigned char> constant;
};

double direct_dot(std::span<const double> x, std::size_t i, std::size_t j, std::size_t m) {
    double acc = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
        acc += x[i + t] * x[j + t];
    }
    return acc;
}

// Squared distances along diagonals k = first, first + stride, ... into
// the thread-local best arrays.
void sweep_diagonals(const Sweep& s, std::size_t first, std::size_t stride, std::vector<double>& best,
                     std::vector<std::size_t>& best_idx) {
    constexpr std::size_t kRefresh = 1024;
    const double m = static_cast<double>(s.m);
    const double two_m = 2.0 * m;
    const auto x = s.x;
    for (std::size_t k = first; k < s.windows; k += stride) {
        double qt = 0.0;
        std::size_t since_refresh = kRefresh;
        for (std::size_t i = 0; i + k < s.windows; ++i) {
            const std::size_t j = i + k;
            if (since_refresh == kRefresh) {
                qt = direct_dot(x, i, j, s.m);
                since_refresh = 1;
            } else {
                qt += x[i + s.m - 1] * x[j + s.m - 1] - x[i - 1] * x[j - 1];
                ++since_refresh;
            }
            double d2;
            if (s.constant[i] | s.constant[j]) {
                d2 = s.constant[i] & s.constant[j] ? 0.0 : two_m;
            } else {
                double corr = (qt - m * s.mean[i] * s.mean[j]) * (s.inv_sigma[i] * s.inv_sigma[j] / m);
                corr = std::clamp(corr, -1.0, 1.0);
                d2 = two_m * (1.0 - corr);
            }
            if (better(d2, j, best[i], best_idx[i])) {
                best[i] = d2;
                best_idx[i] = j;
            }
            if (better(d2, i, best[j], best_idx[j])) {
                best[j] = d2;
                best_idx[j] = i;
            }
        }
    }
}

} // namespace

WindowStats window_stats(std::span<const double> window) {
    if (window.empty()) {
        throw UsageError("window must not be empty");
    }
    const double m = static_cast<double>(window.size());
    double sum = 0.0;
    for (double v : window) {
        sum += v;
    }
    const double mean = sum / m;
    double ss = 0.0;
    for (double v : window) {
        ss += (v - mean) * (v - mean);
    }
    return {mean, std::sqrt(ss / m)};
}

ProfileConfig ProfileConfig::with_window(std::size_t m) { return ProfileConfig{m, (m + 1) / 2}; }

double znorm_distance(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) {
        throw UsageError("window lengths differ (" + std::to_string(x.size()) + " vs " + std::to_string(y.size()) +
                         ")");
    }
    if (x.empty()) {
        throw UsageError("window must not be empty");
    }
    check_finite(x);
    check_finite(y);
    return std::sqrt(zdistance_squared(znormalize(x), znormalize(y)));
}

void check_config(const ProfileConfig& config, std::size_t n) {
    if (config.m < 3) {
        throw PreconditionError("window length m must be at least 3 (got " + std::to_string(config.m) + ")");
    }
    if (config.exclusion_radius < 1) {
        throw PreconditionError("exclusion radius must be at least 1");
    }
    if (n < 2 * config.m) {
        throw PreconditionError("series of length " + std::to_string(n) + " is too short for m = " +
                                std::to_string(config.m) + " (need at least 2m)");
    }
}

MatrixProfile matrix_profile_brute(std::span<const double> series, const ProfileConfig& config) {
    check_config(config, series.size());
    check_finite(series);
    const std::size_t windows = series.size() - config.m + 1;
    std::vector<ZWindow> z;
    z.reserve(windows);
    for (std::size_t i = 0; i < windows; ++i) {
        z.push_back(znormalize(series.subspan(i, config.m)));
    }
    std::vector<double> best(windows, kInf);
    std::vector<std::size_t> best_idx(windows, kNoNeighbor);
    for (std::size_t i = 0; i < windows; ++i) {
        for (std::size_t j = i + config.exclusion_radius + 1; j < windows; ++j) {
            const double d2 = zdistance_squared(z[i], z[j]);
            if (better(d2, j, best[i], best_idx[i])) {
                best[i] = d2;
                best_idx[i] = j;
            }
            if (better(d2, i, best[j], best_idx[j])) {
                best[j] = d2;
                best_idx[j] = i;
            }
        }
    }
    auto p = empty_profile(windows, config);
    for (std::size_t i = 0; i < windows; ++i) {
        if (best_idx[i] != kNoNeighbor) {
            p.values[i] = std::sqrt(best[i]);
            p.indices[i] = best_idx[i];
        }
    }
    return p;
}

MatrixProfile matrix_profile_brute(const TimeSeries& series, const ProfileConfig& config) {
    return matrix_profile_brute(std::span<const double>(series.values), config);
}

MatrixProfile matrix_profile_brute_at(std::span<const double> series, const ProfileConfig& config,
                                      std::span<const std::size_t> positions) {
    check_config(config, series.size());
    check_finite(series);
    const std::size_t windows = series.size() - config.m + 1;
    auto p = empty_profile(positions.size(), config);
    for (std::size_t k = 0; k < positions.size(); ++k) {
        const std::size_t i = positions[k];
        if (i >= windows) {
            throw UsageError("window position " + std::to_string(i) + " out of range");
        }
        const auto zi = znormalize(series.subspan(i, config.m));
        double best = kInf;
        std::size_t best_j = kNoNeighbor;
        for (std::size_t j = 0; j < windows; ++j) {
            const std::size_t gap = i > j ? i - j : j - i;
            if (gap <= config.exclusion_radius) {
                continue;
            }
            const double d2 = zdistance_squared(zi, znormalize(series.subspan(j, config.m)));
            if (better(d2, j, best, best_j)) {
                best = d2;
                best_j = j;
            }
        }
        if (best_j != kNoNeighbor) {
            p.values[k] = std::sqrt(best);
            p.indices[k] = best_j;
        }
    }
    return p;
}

MatrixProfile matrix_profile_fast(std::span<const double> series, const ProfileConfig& config, unsigned threads) {
    check_config(config, series.size());
    check_finite(series);
    const std::size_t m = config.m;
    const std::size_t windows = series.size() - m + 1;

    // Centering leaves every z-normalized window unchanged and keeps the
    // running dot products small for series far from zero.
    const double offset = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(series.size());
    std::vector<double> centered(series.begin(), series.end());
    for (auto& v : centered) {
        v -= offset;
    }
    Sweep s{centered, m, windows, config.exclusion_radius + 1, {}, {}, {}};
    s.mean.resize(windows);
    s.inv_sigma.resize(windows);
    s.constant.resize(windows);
    for (std::size_t i = 0; i < windows; ++i) {
        const auto w = s.x.subspan(i, m);
        const auto [lo, hi] = std::minmax_element(w.begin(), w.end());
        const auto stats = window_stats(w);
        s.mean[i] = stats.mean;
        s.constant[i] = *lo == *hi ? 1 : 0;
        s.inv_sigma[i] = s.constant[i] ? 0.0 : 1.0 / stats.stddev;
    }

    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
    }
    const std::size_t diagonals = windows > s.first_diagonal ? windows - s.first_diagonal : 0;
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, diagonals)));

    std::vector<std::vector<double>> best(threads, std::vector<double>(windows, kInf));
    std::vector<std::vector<std::size_t>> best_idx(threads, std::vector<std::size_t>(windows, kNoNeighbor));
    if (threads == 1) {
        sweep_diagonals(s, s.first_diagonal, 1, best[0], best_idx[0]);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back(sweep_diagonals, std::cref(s), s.first_diagonal + t, threads, std::ref(best[t]),
                              std::ref(best_idx[t]));
        }
        for (auto& th : pool) {
            th.join();
        }
        for (unsigned t = 1; t < threads; ++t) {
            for (std::size_t i = 0; i < windows; ++i) {
                if (better(best[t][i], best_idx[t][i], best[0][i], best_idx[0][i])) {
                    best[0][i] = best[t][i];
                    best_idx[0][i] = best_idx[t][i];
                }
            }
        }
    }

    // The search ran on running dot products; the reported value is the
    // chosen pair's distance evaluated directly.
    auto p = empty_profile(windows, config);
    for (std::size_t i = 0; i < windows; ++i) {
        const std::size_t j = best_idx[0][i];
        if (j == kNoNeighbor) {
            continue;
        }
        p.indices[i] = j;
        p.values[i] = std::sqrt(zdistance_squared(znormalize(series.subspan(i, m)), znormalize(series.subspan(j, m))));
    }
    return p;
}

MatrixProfile matrix_profile_fast(const TimeSeries& series, const ProfileConfig& config, unsigned threads) {
    return matrix_profile_fast(std::span<const double>(series.values), config, threads);
}

std::vector<bool> attack_marked_windows(std::span<const BinLabel> bin_labels, std::size_t m) {
    if (m == 0 || bin_labels.size() < m) {
        return {};
    }
    const std::size_t windows = bin_labels.size() - m + 1;
    std::vector<bool> marked(windows, false);
    // Sliding count of attack bins in [i, i + m).
    std::size_t attacks = 0;
    for (std::size_t t = 0; t < m; ++t) {
        attacks += bin_labels[t] == BinLabel::Attack;
    }
    for (std::size_t i = 0; i < windows; ++i) {
        if (i > 0) {
            attacks -= bin_labels[i - 1] == BinLabel::Attack;
            attacks += bin_labels[i + m - 1] == BinLabel::Attack;
        }
        marked[i] = attacks > 0;
    }
    return marked;
}

std::vector<WindowInterval> marked_runs(const std::vector<bool>& marked) {
    std::vector<WindowInterval> runs;
    for (std::size_t i = 0; i < marked.size(); ++i) {
        if (!marked[i]) {
            continue;
        }
        if (!runs.empty() && runs.back().last + 1 == i) {
            runs.back().last = i;
        } else {
            runs.push_back({i, i});
        }
    }
    return runs;
}

Calibration calibrate_threshold(std::span<const double> profile, const std::vector<bool>& attack_windows) {
    if (attack_windows.size() != profile.size()) {
        throw UsageError("attack marks and profile differ in length");
    }
    Calibration c;
    c.attack_intervals = marked_runs(attack_windows);
    if (c.attack_intervals.empty()) {
        throw PreconditionError("nothing to calibrate: no attack interval present");
    }
    c.threshold = kInf;
    for (const auto& run : c.attack_intervals) {
        const double score =
            *std::max_element(profile.begin() + static_cast<std::ptrdiff_t>(run.first),
                              profile.begin() + static_cast<std::ptrdiff_t>(run.last) + 1);
        c.threshold = std::min(c.threshold, score);
    }
    for (std::size_t i = 0; i < profile.size(); ++i) {
        if (!attack_windows[i]) {
            ++c.benign_windows;
            if (profile[i] >= c.threshold) {
                ++c.false_positive_windows;
            }
        }
    }
    return c;
}

Calibration calibrate_threshold(const MatrixProfile& profile, std::span<const BinLabel> bin_labels) {
    if (bin_labels.size() != profile.size() + profile.config.m - 1) {
        throw UsageError("label count " + std::to_string(bin_labels.size()) + " does not match the profiled series");
    }
    return calibrate_threshold(profile.values, attack_marked_windows(bin_labels, profile.config.m));
}

std::vector<Alert> detect(const MatrixProfile& profile, double threshold, AlertSource source, double start_time,
                          double bin_width, const std::string& channel) {
    if (!std::isfinite(threshold)) {
        throw UsageError("threshold must be finite");
    }
    std::vector<bool> flagged(profile.size());
    for (std::size_t i = 0; i < profile.size(); ++i) {
        flagged[i] = profile.values[i] >= threshold;
    }
    std::vector<Alert> alerts;
    for (const auto& run : marked_runs(flagged)) {
        double score = 0.0;
        for (std::size_t i = run.first; i <= run.last; ++i) {
            // Windows without any admissible neighbor do not contribute a score.
            if (std::isfinite(profile.values[i])) {
                score = std::max(score, profile.values[i]);
            }
        }
        Alert a;
        a.source = source;
        a.start_time = start_time + static_cast<double>(run.first) * bin_width;
        a.end_time = start_time + static_cast<double>(run.last + profile.config.m) * bin_width;
        a.score = score;
        a.detail = (channel.empty() ? std::string("profile") : channel) + " windows " + std::to_string(run.first) +
                   "-" + std::to_string(run.last) + " max distance " + format_double(score);
        alerts.push_back(std::move(a));
    }
    return alerts;
}

std::string format_profile(const MatrixProfile& profile, const Provenance& provenance) {
    std::string out;
    out += "# m=" + std::to_string(profile.config.m) + "\n";
    out += "# exclusion_radius=" + std::to_string(profile.config.exclusion_radius) + "\n";
    for (const auto& [key, value] : provenance) {
        out += "# " + key + "=" + value + "\n";
    }
    out += "window_start,value,neighbor\n";
    for (std::size_t i = 0; i < profile.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += std::isfinite(profile.values[i]) ? format_double(profile.values[i]) : "inf";
        out += ',';
        out += profile.indices[i] == kNoNeighbor ? "-1" : std::to_string(profile.indices[i]);
        out += '\n';
    }
    return out;
}

MatrixProfile parse_profile(std::string_view text) {
    const auto meta = parse_provenance(text);
    auto get = [&](const char* key) -> std::size_t {
        const auto it = meta.find(key);
        if (it == meta.end()) {
            throw InputError(std::string("profile file lacks the '# ") + key + "=' line");
        }
        std::size_t v = 0;
        const auto& s = it->second;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) {
            throw InputError(std::string("bad value for ") + key);
        }
        return v;
    };
    MatrixProfile p;
    p.config.m = get("m");
    p.config.exclusion_radius = get("exclusion_radius");

    bool header = false;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        if (!header) {
            if (line != "window_start,value,neighbor") {
                throw InputError("line " + std::to_string(line_no) + ": expected header window_start,value,neighbor");
            }
            header = true;
            continue;
        }
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 == std::string_view::npos ? c1 : c1 + 1);
        if (c1 == std::string_view::npos || c2 == std::string_view::npos) {
            throw InputError("line " + std::to_string(line_no) + ": expected three columns");
        }
        const auto value_text = line.substr(c1 + 1, c2 - c1 - 1);
        const auto neighbor_text = line.substr(c2 + 1);
        double value = kInf;
        if (value_text != "inf") {
            const auto [ptr, ec] = std::from_chars(value_text.data(), value_text.data() + value_text.size(), value);
            if (ec != std::errc() || ptr != value_text.data() + value_text.size()) {
                throw InputError("line " + std::to_string(line_no) + ": non-numeric value");
            }
        }
        long long neighbor = -1;
        const auto [ptr, ec] =
            std::from_chars(neighbor_text.data(), neighbor_text.data() + neighbor_text.size(), neighbor);
        if (ec != std::errc() || ptr != neighbor_text.data() + neighbor_text.size()) {
            throw InputError("line " + std::to_string(line_no) + ": non-numeric neighbor");
        }
        p.values.push_back(value);
        p.indices.push_back(neighbor < 0 ? kNoNeighbor : static_cast<std::size_t>(neighbor));
    }
    if (!header) {
        throw InputError("missing profile header");
    }
    return p;
}

std::string format_calibration(const Calibration& c) {
    nlohmann::ordered_json j;
    j["threshold"] = c.threshold;
    j["false_positive_bins"] = c.false_positive_windows;
    j["benign_windows"] = c.benign_windows;
    auto intervals = nlohmann::ordered_json::array();
    for (const auto& run : c.attack_intervals) {
        intervals.push_back({run.first, run.last});
    }
    j["attack_intervals"] = intervals;
    return j.dump(2) + "\n";
}

} // namespace icsdetect::mprofile
