#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "icsdetect/rng.hpp"

namespace icsdetect {

/// Ground-truth label of a captured packet.
enum class PacketLabel : std::uint8_t { Benign, Scan, Upload, FakeCommand, ProcessDisruption };

/// Per-bin / per-sample ground truth of a time series.
enum class BinLabel : std::uint8_t { Benign, Attack };

/// Origin of an alert.
enum class AlertSource : std::uint8_t { OtTraffic, Process, PacketClassifier, ItExternal };

std::string_view to_string(PacketLabel label);
std::string_view to_string(BinLabel label);
std::string_view to_string(AlertSource source);
PacketLabel parse_packet_label(std::string_view text);
BinLabel parse_bin_label(std::string_view text);
AlertSource parse_alert_source(std::string_view text);

/// One timestamped Modbus/TCP application data unit seen on the wire.
struct PacketRecord {
    double timestamp = 0.0; ///< seconds since capture start
    std::string src_ip;
    std::uint16_t src_port = 0;
    std::string dst_ip;
    std::uint16_t dst_port = 0;
    std::vector<std::uint8_t> frame; ///< raw MBAP header + PDU
    PacketLabel label = PacketLabel::Benign;

    friend bool operator==(const PacketRecord&, const PacketRecord&) = default;
};

/// A uniformly sampled numeric channel.
struct TimeSeries {
    double start_time = 0.0;
    double bin_width = 1.0;
    std::vector<double> values;
    std::string channel_name;
    std::optional<std::vector<BinLabel>> labels;

    double time_at(std::size_t i) const { return start_time + static_cast<double>(i) * bin_width; }
    std::size_t size() const { return values.size(); }

    friend bool operator==(const TimeSeries&, const TimeSeries&) = default;
};

/// Feature vectors with binary labels (0 = benign, 1 = attack).
struct LabeledDataset {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;

    std::size_t size() const { return rows.size(); }
    std::size_t dimension() const { return feature_names.size(); }
    std::size_t count(int label) const;

    friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

/// Detector output covering [start_time, end_time].
struct Alert {
    AlertSource source = AlertSource::OtTraffic;
    double start_time = 0.0;
    double end_time = 0.0;
    double score = 0.0;
    std::string detail;

    friend bool operator==(const Alert&, const Alert&) = default;
};

/// Free-form provenance (seed, flags, configuration) written as comment
/// lines ahead of the data in every file the toolkit produces.
using Provenance = std::map<std::string, std::string>;

/// Collects `# key=value` comment lines from the head of a file.
Provenance parse_provenance(std::string_view text);

// Validation. Each throws InputError naming the violated invariant.
void validate(const PacketRecord& record);
void validate_capture(const std::vector<PacketRecord>& records);
void validate(const TimeSeries& series);
void validate(const LabeledDataset& dataset);
void validate(const Alert& alert);

// Hex helpers for frame bytes (lowercase).
std::string to_hex(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> from_hex(std::string_view text);

// Capture JSONL.
std::string format_capture(const std::vector<PacketRecord>& records, const Provenance& provenance = {});
std::vector<PacketRecord> parse_capture(std::string_view text);
std::vector<PacketRecord> read_capture(const std::string& path);
void write_capture(const std::vector<PacketRecord>& records, const std::string& path,
                   const Provenance& provenance = {});

// Series CSV (`t,value[,label]`). The reader also accepts several value
// columns after `t` when `column` names the one to load.
std::string format_series(const TimeSeries& series, const Provenance& provenance = {});
TimeSeries parse_series(std::string_view text, std::string channel_name = "value", std::string_view column = {});
TimeSeries read_series(const std::string& path, std::string_view column = {});
void write_series(const TimeSeries& series, const std::string& path, const Provenance& provenance = {});

// Labeled dataset CSV (header row, final `label` column).
std::string format_dataset(const LabeledDataset& dataset, const Provenance& provenance = {});
LabeledDataset parse_dataset(std::string_view text);
LabeledDataset read_dataset(const std::string& path);

// Alert JSONL (`{source, start, end, score, detail}`).
std::string format_alerts(const std::vector<Alert>& alerts);
std::vector<Alert> parse_alerts(std::string_view text);
std::vector<Alert> read_alerts(const std::string& path);

// File helpers.
std::string read_text_file(const std::string& path);
/// Writes through a temporary sibling file and renames it into place, so a
/// failed write never leaves partial output behind.
void write_text_file_atomic(const std::string& path, std::string_view content);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

} // namespace icsdetect
