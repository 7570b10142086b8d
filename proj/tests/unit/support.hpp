#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "icsdetect/rng.hpp"

namespace testsupport {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path_ = std::filesystem::temp_directory_path() / ("icsdetect_" + tag + "_" + std::to_string(stamp));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::vector<double> random_walk(icsdetect::Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    double x = 0.0;
    for (auto& e : v) {
        x += rng.normal();
        e = x;
    }
    return v;
}

} // namespace testsupport
