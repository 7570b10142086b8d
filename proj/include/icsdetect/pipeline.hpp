#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "icsdetect/core.hpp"
#include "icsdetect/correlate.hpp"
#include "icsdetect/features.hpp"
#include "icsdetect/learn.hpp"
#include "icsdetect/mprofile.hpp"
#include "icsdetect/simulate.hpp"

namespace icsdetect::pipeline {

/// Matrix Profile window on binned traffic and on process samples.
inline constexpr std::size_t kDefaultTrafficWindow = 10;
inline constexpr std::size_t kDefaultProcessWindow = 250;

struct Options {
    std::string preset = "ds1";
    RngSeed seed;
    /// Replaces the preset's scenario when set (single run).
    std::optional<simulate::NetScenarioConfig> scenario;
    simulate::ProcScenarioConfig process;
    double bin_width = 1.0;
    std::size_t traffic_window = kDefaultTrafficWindow;
    std::size_t process_window = kDefaultProcessWindow;
    double correlation_window = correlate::kDefaultWindow;
    double train_fraction = 0.7;
    learn::ForestParams forest;
    learn::SvmParams svm;
    unsigned threads = 1;
    std::vector<Alert> it_alerts;
};

/// Profile, calibration and alerts of one channel.
struct ChannelAnalysis {
    TimeSeries series;
    mprofile::MatrixProfile profile;
    std::optional<mprofile::Calibration> calibration;
    std::vector<Alert> alerts;
};

struct Result {
    Options options;
    simulate::Preset scenario;
    std::vector<PacketRecord> capture;
    features::BinnedFeatures binned;
    std::map<std::string, ChannelAnalysis> traffic;
    simulate::ProcessSeries process_series;
    std::map<std::string, ChannelAnalysis> process;
    features::PacketFeatures packets;
    learn::ForestModel forest;
    learn::SvmModel svm;
    learn::EvalReport forest_eval;
    learn::EvalReport svm_eval;
    std::vector<Alert> classifier_alerts;
    std::vector<correlate::Incident> incidents;
    Provenance metadata;
};

/// Runs simulation, traffic and process profiling, threshold calibration,
/// classification and correlation entirely in memory.
Result run(const Options& options);

/// Every output file as (relative name, content); byte-identical for equal
/// options.
std::map<std::string, std::string> render_files(const Result& result);

/// Writes render_files() below `out_dir` (created if needed). Nothing is
/// written unless every file rendered successfully.
void write(const Result& result, const std::string& out_dir);

/// Merges packets flagged by a classifier into alerts: flagged records no
/// more than `gap` seconds apart form one alert.
std::vector<Alert> classifier_alerts(const std::vector<PacketRecord>& records, const std::vector<int>& flags,
                                     double gap, const std::string& model_name);

} // namespace icsdetect::pipeline
