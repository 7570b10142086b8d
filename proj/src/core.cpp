#include "icsdetect/core.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "icsdetect/error.hpp"

namespace icsdetect {

namespace {

using nlohmann::json;

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        auto line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        lines.push_back(line);
        pos = end + 1;
    }
    return lines;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (true) {
        const auto end = line.find(',', pos);
        if (end == std::string_view::npos) {
            fields.push_back(line.substr(pos));
            break;
        }
        fields.push_back(line.substr(pos, end - pos));
        pos = end + 1;
    }
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) {
        s.remove_suffix(1);
    }
    return s;
}

bool is_comment(std::string_view line) { return !line.empty() && line.front() == '#'; }

double parse_number(std::string_view cell, std::size_t line_no) {
    cell = trim(cell);
    double value = 0.0;
    const auto* first = cell.data();
    const auto* last = cell.data() + cell.size();
    if (!cell.empty() && *first == '+') {
        ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (cell.empty() || ec != std::errc() || ptr != last) {
        throw InputError("line " + std::to_string(line_no) + ": non-numeric cell '" + std::string(cell) + "'");
    }
    return value;
}

std::string provenance_header(const Provenance& provenance) {
    std::string out;
    for (const auto& [key, value] : provenance) {
        out += "# " + key + "=" + value + "\n";
    }
    return out;
}

bool valid_ipv4(std::string_view ip) {
    int parts = 0;
    for (std::size_t pos = 0; pos <= ip.size();) {
        auto end = ip.find('.', pos);
        if (end == std::string_view::npos) {
            end = ip.size();
        }
        const auto part = ip.substr(pos, end - pos);
        int value = 0;
        const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
        if (part.empty() || part.size() > 3 || ec != std::errc() || ptr != part.data() + part.size() || value > 255) {
            return false;
        }
        ++parts;
        pos = end + 1;
    }
    return parts == 4;
}

constexpr std::array<std::string_view, 5> kPacketLabels = {"benign", "scan", "upload", "fake_command",
                                                           "process_disruption"};
constexpr std::array<std::string_view, 4> kAlertSources = {"ot_traffic", "process", "packet_classifier",
                                                           "it_external"};

} // namespace

std::string_view to_string(PacketLabel label) { return kPacketLabels.at(static_cast<std::size_t>(label)); }

std::string_view to_string(BinLabel label) { return label == BinLabel::Attack ? "attack" : "benign"; }

std::string_view to_string(AlertSource source) { return kAlertSources.at(static_cast<std::size_t>(source)); }

PacketLabel parse_packet_label(std::string_view text) {
    for (std::size_t i = 0; i < kPacketLabels.size(); ++i) {
        if (kPacketLabels[i] == text) {
            return static_cast<PacketLabel>(i);
        }
    }
    throw InputError("unknown packet label '" + std::string(text) + "'");
}

BinLabel parse_bin_label(std::string_view text) {
    if (text == "attack" || text == "1") {
        return BinLabel::Attack;
    }
    if (text == "benign" || text == "0") {
        return BinLabel::Benign;
    }
    throw InputError("unknown bin label '" + std::string(text) + "'");
}

AlertSource parse_alert_source(std::string_view text) {
    for (std::size_t i = 0; i < kAlertSources.size(); ++i) {
        if (kAlertSources[i] == text) {
            return static_cast<AlertSource>(i);
        }
    }
    throw InputError("unknown alert source '" + std::string(text) + "'");
}

std::size_t LabeledDataset::count(int label) const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

Provenance parse_provenance(std::string_view text) {
    Provenance out;
    for (auto line : split_lines(text)) {
        if (!is_comment(line)) {
            if (trim(line).empty()) {
                continue;
            }
            break;
        }
        line.remove_prefix(1);
        line = trim(line);
        const auto eq = line.find('=');
        if (eq != std::string_view::npos) {
            out[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 1));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Validation

void validate(const PacketRecord& record) {
    if (!(record.timestamp >= 0.0) || !std::isfinite(record.timestamp)) {
        throw InputError("timestamp must be finite and non-negative");
    }
    if (!valid_ipv4(record.src_ip) || !valid_ipv4(record.dst_ip)) {
        throw InputError("address is not a dotted quad");
    }
    if (record.frame.size() < 8) {
        throw InputError("frame too short (" + std::to_string(record.frame.size()) + " bytes, need 8)");
    }
}

void validate_capture(const std::vector<PacketRecord>& records) {
    for (std::size_t i = 0; i < records.size(); ++i) {
        try {
            validate(records[i]);
        } catch (const InputError& e) {
            throw InputError("record " + std::to_string(i) + ": " + e.what());
        }
        if (i > 0 && records[i].timestamp < records[i - 1].timestamp) {
            throw InputError("record " + std::to_string(i) + ": timestamps not sorted");
        }
    }
}

void validate(const TimeSeries& series) {
    if (!(series.bin_width > 0.0) || !std::isfinite(series.bin_width)) {
        throw InputError("bin_width must be positive");
    }
    if (series.labels && series.labels->size() != series.values.size()) {
        throw InputError("labels length differs from values length");
    }
    for (double v : series.values) {
        if (!std::isfinite(v)) {
            throw InputError("series '" + series.channel_name + "' holds a non-finite value");
        }
    }
}

void validate(const LabeledDataset& dataset) {
    if (dataset.labels.size() != dataset.rows.size()) {
        throw InputError("dataset label count differs from row count");
    }
    for (std::size_t i = 0; i < dataset.rows.size(); ++i) {
        const auto& row = dataset.rows[i];
        if (row.size() != dataset.feature_names.size()) {
            throw InputError("row " + std::to_string(i) + " has " + std::to_string(row.size()) +
                             " features, expected " + std::to_string(dataset.feature_names.size()));
        }
        for (double v : row) {
            if (!std::isfinite(v)) {
                throw InputError("row " + std::to_string(i) + " holds a non-finite value");
            }
        }
        if (dataset.labels[i] != 0 && dataset.labels[i] != 1) {
            throw InputError("row " + std::to_string(i) + " label must be 0 or 1");
        }
    }
}

void validate(const Alert& alert) {
    if (!std::isfinite(alert.start_time) || !std::isfinite(alert.end_time) || alert.start_time > alert.end_time) {
        throw InputError("alert interval must satisfy start <= end");
    }
    if (!std::isfinite(alert.score) || alert.score < 0.0) {
        throw InputError("alert score must be finite and non-negative");
    }
}

// ---------------------------------------------------------------------------
// Hex

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0x0f]);
    }
    return out;
}

std::vector<std::uint8_t> from_hex(std::string_view text) {
    if (text.size() % 2 != 0) {
        throw InputError("hex string has odd length");
    }
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw InputError(std::string("invalid hex digit '") + c + "'");
    };
    std::vector<std::uint8_t> out(text.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<std::uint8_t>(nibble(text[2 * i]) << 4 | nibble(text[2 * i + 1]));
    }
    return out;
}

std::string format_double(double value) {
    std::array<char, 32> buf{};
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    return std::string(buf.data(), ptr);
}

// ---------------------------------------------------------------------------
// Capture JSONL

std::string format_capture(const std::vector<PacketRecord>& records, const Provenance& provenance) {
    validate_capture(records);
    std::string out = provenance_header(provenance);
    for (const auto& r : records) {
        json j;
        j["ts"] = r.timestamp;
        j["src_ip"] = r.src_ip;
        j["src_port"] = r.src_port;
        j["dst_ip"] = r.dst_ip;
        j["dst_port"] = r.dst_port;
        j["frame_hex"] = to_hex(r.frame);
        j["label"] = std::string(to_string(r.label));
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<PacketRecord> parse_capture(std::string_view text) {
    std::vector<PacketRecord> records;
    std::size_t line_no = 0;
    for (auto line : split_lines(text)) {
        ++line_no;
        if (trim(line).empty() || is_comment(line)) {
            continue;
        }
        auto fail = [&](const std::string& why) {
            return InputError("line " + std::to_string(line_no) + ": " + why);
        };
        PacketRecord r;
        try {
            const auto j = json::parse(line);
            r.timestamp = j.at("ts").get<double>();
            r.src_ip = j.at("src_ip").get<std::string>();
            r.dst_ip = j.at("dst_ip").get<std::string>();
            const auto sp = j.at("src_port").get<std::int64_t>();
            const auto dp = j.at("dst_port").get<std::int64_t>();
            if (sp < 0 || sp > 65535 || dp < 0 || dp > 65535) {
                throw fail("port out of range");
            }
            r.src_port = static_cast<std::uint16_t>(sp);
            r.dst_port = static_cast<std::uint16_t>(dp);
            r.frame = from_hex(j.at("frame_hex").get<std::string>());
            r.label = parse_packet_label(j.at("label").get<std::string>());
        } catch (const json::exception& e) {
            throw fail(std::string("malformed record: ") + e.what());
        } catch (const InputError& e) {
            if (std::string_view(e.what()).starts_with("line ")) {
                throw;
            }
            throw fail(e.what());
        }
        try {
            validate(r);
        } catch (const InputError& e) {
            throw fail(e.what());
        }
        if (!records.empty() && r.timestamp < records.back().timestamp) {
            throw fail("timestamp ordering violation");
        }
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<PacketRecord> read_capture(const std::string& path) { return parse_capture(read_text_file(path)); }

void write_capture(const std::vector<PacketRecord>& records, const std::string& path, const Provenance& provenance) {
    write_text_file_atomic(path, format_capture(records, provenance));
}

// ---------------------------------------------------------------------------
// Series CSV

std::string format_series(const TimeSeries& series, const Provenance& provenance) {
    validate(series);
    std::string out = provenance_header(provenance);
    out += series.labels ? "t,value,label\n" : "t,value\n";
    for (std::size_t i = 0; i < series.values.size(); ++i) {
        out += format_double(series.time_at(i));
        out += ',';
        out += format_double(series.values[i]);
        if (series.labels) {
            out += ',';
            out += to_string((*series.labels)[i]);
        }
        out += '\n';
    }
    return out;
}

TimeSeries parse_series(std::string_view text, std::string channel_name, std::string_view column) {
    TimeSeries series;
    series.channel_name = std::move(channel_name);
    bool header_seen = false;
    std::size_t n_fields = 0;
    std::size_t value_col = 0;
    std::optional<std::size_t> label_col;
    std::vector<double> times;
    std::vector<BinLabel> labels;
    std::size_t line_no = 0;
    for (auto line : split_lines(text)) {
        ++line_no;
        if (trim(line).empty() || is_comment(line)) {
            continue;
        }
        const auto fields = split_fields(line);
        if (!header_seen) {
            if (fields.size() < 2 || trim(fields[0]) != "t") {
                throw InputError("line " + std::to_string(line_no) + ": expected header 't,value[,label]'");
            }
            std::vector<std::size_t> value_cols;
            for (std::size_t c = 1; c < fields.size(); ++c) {
                const auto name = trim(fields[c]);
                if (name == "label") {
                    label_col = c;
                } else if (column.empty() || name == column) {
                    value_cols.push_back(c);
                }
            }
            if (value_cols.empty() && !column.empty()) {
                throw UsageError("no column '" + std::string(column) + "' in the header");
            }
            if (value_cols.size() != 1) {
                throw InputError("line " + std::to_string(line_no) +
                                 ": expected exactly one value column (select one by name)");
            }
            value_col = value_cols.front();
            n_fields = fields.size();
            header_seen = true;
            continue;
        }
        if (fields.size() != n_fields) {
            throw InputError("line " + std::to_string(line_no) + ": wrong number of columns");
        }
        times.push_back(parse_number(fields[0], line_no));
        series.values.push_back(parse_number(fields[value_col], line_no));
        if (label_col) {
            try {
                labels.push_back(parse_bin_label(trim(fields[*label_col])));
            } catch (const InputError& e) {
                throw InputError("line " + std::to_string(line_no) + ": " + e.what());
            }
        }
    }
    if (!header_seen) {
        throw InputError("missing header row 't,value[,label]'");
    }
    if (!times.empty()) {
        series.start_time = times.front();
    }
    if (times.size() >= 2) {
        series.bin_width = times[1] - times[0];
        if (!(series.bin_width > 0.0)) {
            throw InputError("non-uniform spacing: time must increase");
        }
        for (std::size_t i = 1; i < times.size(); ++i) {
            const double step = times[i] - times[i - 1];
            if (std::abs(step - series.bin_width) > 1e-6 * series.bin_width) {
                throw InputError("non-uniform spacing at row " + std::to_string(i + 1));
            }
        }
    }
    if (label_col) {
        series.labels = std::move(labels);
    }
    validate(series);
    return series;
}

TimeSeries read_series(const std::string& path, std::string_view column) {
    const auto name = column.empty() ? std::filesystem::path(path).stem().string() : std::string(column);
    return parse_series(read_text_file(path), name, column);
}

void write_series(const TimeSeries& series, const std::string& path, const Provenance& provenance) {
    write_text_file_atomic(path, format_series(series, provenance));
}

// ---------------------------------------------------------------------------
// Dataset CSV

std::string format_dataset(const LabeledDataset& dataset, const Provenance& provenance) {
    validate(dataset);
    std::string out = provenance_header(provenance);
    for (const auto& name : dataset.feature_names) {
        out += name;
        out += ',';
    }
    out += "label\n";
    for (std::size_t i = 0; i < dataset.rows.size(); ++i) {
        for (double v : dataset.rows[i]) {
            out += format_double(v);
            out += ',';
        }
        out += std::to_string(dataset.labels[i]);
        out += '\n';
    }
    return out;
}

LabeledDataset parse_dataset(std::string_view text) {
    LabeledDataset dataset;
    bool header_seen = false;
    std::size_t line_no = 0;
    for (auto line : split_lines(text)) {
        ++line_no;
        if (trim(line).empty() || is_comment(line)) {
            continue;
        }
        const auto fields = split_fields(line);
        if (!header_seen) {
            if (fields.empty() || trim(fields.back()) != "label") {
                throw InputError("line " + std::to_string(line_no) + ": header must end with 'label'");
            }
            for (std::size_t i = 0; i + 1 < fields.size(); ++i) {
                dataset.feature_names.emplace_back(trim(fields[i]));
            }
            header_seen = true;
            continue;
        }
        if (fields.size() != dataset.feature_names.size() + 1) {
            throw InputError("line " + std::to_string(line_no) + ": wrong number of columns");
        }
        std::vector<double> row;
        row.reserve(dataset.feature_names.size());
        for (std::size_t i = 0; i + 1 < fields.size(); ++i) {
            row.push_back(parse_number(fields[i], line_no));
        }
        const double label = parse_number(fields.back(), line_no);
        if (label != 0.0 && label != 1.0) {
            throw InputError("line " + std::to_string(line_no) + ": label must be 0 or 1");
        }
        dataset.rows.push_back(std::move(row));
        dataset.labels.push_back(static_cast<int>(label));
    }
    if (!header_seen) {
        throw InputError("missing header row");
    }
    validate(dataset);
    return dataset;
}

LabeledDataset read_dataset(const std::string& path) { return parse_dataset(read_text_file(path)); }

// ---------------------------------------------------------------------------
// Alerts JSONL

std::string format_alerts(const std::vector<Alert>& alerts) {
    std::string out;
    for (const auto& a : alerts) {
        validate(a);
        json j;
        j["source"] = std::string(to_string(a.source));
        j["start"] = a.start_time;
        j["end"] = a.end_time;
        j["score"] = a.score;
        j["detail"] = a.detail;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<Alert> parse_alerts(std::string_view text) {
    std::vector<Alert> alerts;
    std::size_t line_no = 0;
    for (auto line : split_lines(text)) {
        ++line_no;
        if (trim(line).empty() || is_comment(line)) {
            continue;
        }
        Alert a;
        try {
            const auto j = json::parse(line);
            a.source = parse_alert_source(j.at("source").get<std::string>());
            a.start_time = j.at("start").get<double>();
            a.end_time = j.at("end").get<double>();
            a.score = j.at("score").get<double>();
            a.detail = j.value("detail", std::string{});
            validate(a);
        } catch (const json::exception& e) {
            throw InputError("line " + std::to_string(line_no) + ": malformed alert: " + e.what());
        } catch (const InputError& e) {
            throw InputError("line " + std::to_string(line_no) + ": " + e.what());
        }
        alerts.push_back(std::move(a));
    }
    return alerts;
}

std::vector<Alert> read_alerts(const std::string& path) { return parse_alerts(read_text_file(path)); }

// ---------------------------------------------------------------------------
// Files

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) {
        throw InputError("failed reading '" + path + "'");
    }
    return buf.str();
}

void write_text_file_atomic(const std::string& path, std::string_view content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw InputError("cannot write '" + tmp.string() + "'");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ignore;
            fs::remove(tmp, ignore);
            throw InputError("failed writing '" + tmp.string() + "'");
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw InputError("cannot move output into place at '" + path + "'");
    }
}

} // namespace icsdetect
