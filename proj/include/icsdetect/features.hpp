#pragma once

#include <map>
#include <string>
#include <vector>

#include "icsdetect/core.hpp"

namespace icsdetect::features {

inline constexpr const char* kPacketCount = "packet_count";
inline constexpr const char* kIpPairCount = "ip_pair_count";
inline constexpr const char* kPortPairCount = "port_pair_count";

/// Per-bin traffic counts. Pair counts are distinct per bin, not cumulative.
struct BinnedFeatures {
    std::map<std::string, TimeSeries> channels;
    double bin_width = 1.0;
    std::vector<BinLabel> bin_labels;

    const TimeSeries& channel(const std::string& name) const;
    std::size_t size() const { return bin_labels.size(); }
};

/// Bins [i*w, (i+1)*w) up to the bin holding the last record. Throws
/// InputError on empty or unsorted input and UsageError on w <= 0.
BinnedFeatures bin_traffic(const std::vector<PacketRecord>& records, double bin_width = 1.0);

/// Names of the per-packet feature columns, in row order.
const std::vector<std::string>& packet_feature_names();

struct PacketFeatures {
    LabeledDataset dataset;
    std::size_t skipped = 0; ///< records whose frame did not decode
    std::vector<std::size_t> record_index; ///< source record of every row
};

/// One row per decodable record. Novelty and inter-arrival features look at
/// every earlier record of the capture, including skipped ones.
PacketFeatures packet_features(const std::vector<PacketRecord>& records, int n_mtus = 2);

} // namespace icsdetect::features
