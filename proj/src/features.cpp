#include "icsdetect/features.hpp"

#include <cmath>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "icsdetect/error.hpp"
#include "icsdetect/modbus.hpp"
#include "icsdetect/simulate.hpp"

namespace icsdetect::features {

namespace {

std::string endpoint(const std::string& ip, std::uint16_t port) { return ip + ":" + std::to_string(port); }

// Unordered pair key: the lexicographically smaller side first.
std::string pair_key(const std::string& a, const std::string& b) {
    return a < b ? a + "|" + b : b + "|" + a;
}

} // namespace

const TimeSeries& BinnedFeatures::channel(const std::string& name) const {
    const auto it = channels.find(name);
    if (it == channels.end()) {
        throw UsageError("unknown channel '" + name + "'");
    }
    return it->second;
}

BinnedFeatures bin_traffic(const std::vector<PacketRecord>& records, double bin_width) {
    if (!(bin_width > 0.0) || !std::isfinite(bin_width)) {
        throw UsageError("bin width must be positive");
    }
    if (records.empty()) {
        throw InputError("cannot bin an empty capture");
    }
    for (std::size_t i = 1; i < records.size(); ++i) {
        if (records[i].timestamp < records[i - 1].timestamp) {
            throw InputError("capture is not sorted by timestamp (record " + std::to_string(i) + ")");
        }
    }
    auto bin_of = [&](double t) { return static_cast<std::size_t>(std::floor(t / bin_width)); };
    const std::size_t n_bins = bin_of(records.back().timestamp) + 1;

    std::vector<double> packets(n_bins, 0.0);
    std::vector<double> ip_pairs(n_bins, 0.0);
    std::vector<double> port_pairs(n_bins, 0.0);
    std::vector<BinLabel> labels(n_bins, BinLabel::Benign);

    std::size_t r = 0;
    std::unordered_set<std::string> ips;
    std::unordered_set<std::string> ports;
    while (r < records.size()) {
        const std::size_t bin = bin_of(records[r].timestamp);
        ips.clear();
        ports.clear();
        for (; r < records.size() && bin_of(records[r].timestamp) == bin; ++r) {
            const auto& rec = records[r];
            packets[bin] += 1.0;
            ips.insert(pair_key(rec.src_ip, rec.dst_ip));
            ports.insert(pair_key(endpoint(rec.src_ip, rec.src_port), endpoint(rec.dst_ip, rec.dst_port)));
            if (rec.label != PacketLabel::Benign) {
                labels[bin] = BinLabel::Attack;
            }
        }
        ip_pairs[bin] = static_cast<double>(ips.size());
        port_pairs[bin] = static_cast<double>(ports.size());
    }

    BinnedFeatures out;
    out.bin_width = bin_width;
    out.bin_labels = labels;
    auto make = [&](const char* name, std::vector<double> values) {
        TimeSeries s;
        s.start_time = 0.0;
        s.bin_width = bin_width;
        s.values = std::move(values);
        s.channel_name = name;
        s.labels = labels;
        out.channels.emplace(name, std::move(s));
    };
    make(kPacketCount, std::move(packets));
    make(kIpPairCount, std::move(ip_pairs));
    make(kPortPairCount, std::move(port_pairs));
    return out;
}

const std::vector<std::string>& packet_feature_names() {
    static const std::vector<std::string> names = {
        "function_code",      "frame_length",     "is_new_ip_pair", "is_new_port_pair",
        "inter_arrival_time", "src_is_known_mtu", "payload_size",
    };
    return names;
}

PacketFeatures packet_features(const std::vector<PacketRecord>& records, int n_mtus) {
    PacketFeatures out;
    out.dataset.feature_names = packet_feature_names();
    std::unordered_set<std::string> seen_ip_pairs;
    std::unordered_set<std::string> seen_port_pairs;
    std::unordered_map<std::string, double> last_seen;

    for (std::size_t r = 0; r < records.size(); ++r) {
        const auto& rec = records[r];
        const bool new_ip = seen_ip_pairs.insert(pair_key(rec.src_ip, rec.dst_ip)).second;
        const bool new_port =
            seen_port_pairs.insert(pair_key(endpoint(rec.src_ip, rec.src_port), endpoint(rec.dst_ip, rec.dst_port)))
                .second;
        double inter_arrival = 0.0;
        if (auto it = last_seen.find(rec.src_ip); it != last_seen.end()) {
            inter_arrival = rec.timestamp - it->second;
        }
        last_seen[rec.src_ip] = rec.timestamp;

        modbus::Frame frame;
        try {
            frame = modbus::decode(rec.frame);
        } catch (const InputError&) {
            ++out.skipped;
            continue;
        }
        out.dataset.rows.push_back({
            static_cast<double>(frame.function_code),
            static_cast<double>(rec.frame.size()),
            new_ip ? 1.0 : 0.0,
            new_port ? 1.0 : 0.0,
            inter_arrival,
            simulate::is_mtu_address(rec.src_ip, n_mtus) ? 1.0 : 0.0,
            static_cast<double>(frame.data.size()),
        });
        out.dataset.labels.push_back(rec.label == PacketLabel::Benign ? 0 : 1);
        out.record_index.push_back(r);
    }
    return out;
}

} // namespace icsdetect::features
