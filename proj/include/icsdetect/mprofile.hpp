#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "icsdetect/core.hpp"

namespace icsdetect::mprofile {

/// Mean and population standard deviation (divisor m) of one window.
struct WindowStats {
    double mean = 0.0;
    double stddev = 0.0;
};

WindowStats window_stats(std::span<const double> window);

struct ProfileConfig {
    std::size_t m = 16;
    /// Neighbors j with |i - j| <= exclusion_radius are ignored.
    std::size_t exclusion_radius = 8;

    /// Config with the default exclusion radius ceil(m / 2).
    static ProfileConfig with_window(std::size_t m);

    friend bool operator==(const ProfileConfig&, const ProfileConfig&) = default;
};

inline constexpr std::size_t kNoNeighbor = std::numeric_limits<std::size_t>::max();

/// Minimal z-normalized distance of every length-m window to any other
/// admissible window, plus the start of that nearest neighbor. Positions
/// without an admissible neighbor hold +infinity and kNoNeighbor.
struct MatrixProfile {
    std::vector<double> values;
    std::vector<std::size_t> indices;
    ProfileConfig config;

    std::size_t size() const { return values.size(); }
};

/// z-normalized Euclidean distance
///   d = sqrt(2m (1 - (sum x_i y_i - m mu_x mu_y) / (m sigma_x sigma_y)))
/// evaluated as the Euclidean distance of the two z-normalized windows,
/// which is the same quantity without the cancellation in (1 - ratio).
/// Two constant windows are at distance 0; exactly one constant window is
/// at sqrt(2m) (correlation taken as 0).
/// Throws UsageError on a length mismatch or empty windows and InputError
/// on non-finite values.
double znorm_distance(std::span<const double> x, std::span<const double> y);

/// Validates config against a series of length n; throws
/// PreconditionError when m < 3, n < 2m or the radius is 0.
void check_config(const ProfileConfig& config, std::size_t n);

/// Reference implementation: every pair evaluated directly from its
/// z-normalized windows. O(n^2 m).
MatrixProfile matrix_profile_brute(std::span<const double> series, const ProfileConfig& config);
MatrixProfile matrix_profile_brute(const TimeSeries& series, const ProfileConfig& config);

/// Brute-force profile entries for a subset of window starts only.
MatrixProfile matrix_profile_brute_at(std::span<const double> series, const ProfileConfig& config,
                                      std::span<const std::size_t> positions);

/// Diagonal-order computation with running dot products (O(n^2) time,
/// O(n) memory). `threads` = 0 picks the hardware concurrency; the result
/// is bit-identical for every thread count.
MatrixProfile matrix_profile_fast(std::span<const double> series, const ProfileConfig& config,
                                  unsigned threads = 1);
MatrixProfile matrix_profile_fast(const TimeSeries& series, const ProfileConfig& config, unsigned threads = 1);

/// Maximal run [first, last] of window indices.
struct WindowInterval {
    std::size_t first = 0;
    std::size_t last = 0;

    friend bool operator==(const WindowInterval&, const WindowInterval&) = default;
};

struct Calibration {
    double threshold = 0.0;
    std::size_t false_positive_windows = 0;
    std::vector<WindowInterval> attack_intervals;
    std::size_t benign_windows = 0;
};

/// Window i is attack-marked iff any bin in [i, i + m) is labeled attack.
std::vector<bool> attack_marked_windows(std::span<const BinLabel> bin_labels, std::size_t m);

/// Maximal runs of marked windows.
std::vector<WindowInterval> marked_runs(const std::vector<bool>& marked);

/// Smallest threshold that flags every attack interval: the minimum over
/// intervals of the interval's maximum profile value. Throws
/// PreconditionError when no window is attack-marked.
Calibration calibrate_threshold(std::span<const double> profile, const std::vector<bool>& attack_windows);
Calibration calibrate_threshold(const MatrixProfile& profile, std::span<const BinLabel> bin_labels);

/// Maximal runs of windows with value >= threshold become alerts spanning
/// the bins the run's windows cover.
std::vector<Alert> detect(const MatrixProfile& profile, double threshold, AlertSource source, double start_time,
                          double bin_width, const std::string& channel = {});

// Serialization: CSV `window_start,value,neighbor` preceded by `# m=` and
// `# exclusion_radius=` comment lines; calibration as JSON.
std::string format_profile(const MatrixProfile& profile, const Provenance& provenance = {});
MatrixProfile parse_profile(std::string_view text);
std::string format_calibration(const Calibration& calibration);

} // namespace icsdetect::mprofile
