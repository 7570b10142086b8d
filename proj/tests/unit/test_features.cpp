#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "icsdetect/error.hpp"
#include "icsdetect/features.hpp"
#include "icsdetect/modbus.hpp"
#include "icsdetect/simulate.hpp"

using namespace icsdetect;

namespace {

PacketRecord rec(double t, std::string src, std::uint16_t sport, std::string dst, std::uint16_t dport,
                 std::uint8_t fc = 3, std::size_t data = 4, PacketLabel label = PacketLabel::Benign) {
    modbus::Frame f;
    f.function_code = fc;
    f.data.assign(data, 0);
    return PacketRecord{t, std::move(src), sport, std::move(dst), dport, modbus::encode(f), label};
}

/// Recount of one bin by sorting endpoint tuples; no hashing or key strings.
struct Counts {
    double packets = 0, ips = 0, ports = 0;
};

Counts recount(const std::vector<PacketRecord>& records, double lo, double hi) {
    std::set<std::pair<std::string, std::string>> ips;
    std::set<std::pair<std::pair<std::string, int>, std::pair<std::string, int>>> ports;
    Counts c;
    for (const auto& r : records) {
        if (r.timestamp < lo || r.timestamp >= hi) {
            continue;
        }
        c.packets += 1;
        ips.insert(std::minmax(r.src_ip, r.dst_ip));
        const std::pair<std::string, int> a{r.src_ip, r.src_port};
        const std::pair<std::string, int> b{r.dst_ip, r.dst_port};
        ports.insert(std::minmax(a, b));
    }
    c.ips = static_cast<double>(ips.size());
    c.ports = static_cast<double>(ports.size());
    return c;
}

} // namespace

TEST_CASE("three packets in two bins") {
    const std::vector<PacketRecord> records{rec(0.1, "10.0.0.1", 1000, "10.0.0.2", 502),
                                            rec(0.5, "10.0.0.2", 502, "10.0.0.1", 1000),
                                            rec(1.2, "10.0.0.1", 1000, "10.0.0.3", 502)};
    const auto b = features::bin_traffic(records, 1.0);
    CHECK(b.channel(features::kPacketCount).values == std::vector<double>{2, 1});
    CHECK(b.channel(features::kIpPairCount).values == std::vector<double>{1, 1});
    CHECK(b.channel(features::kPortPairCount).values == std::vector<double>{1, 1});
}

TEST_CASE("single packet gives all channels [1]") {
    const auto b = features::bin_traffic({rec(0.3, "10.0.0.1", 1, "10.0.0.2", 502)}, 1.0);
    for (const auto& [name, s] : b.channels) {
        CHECK(s.values == std::vector<double>{1});
    }
}

TEST_CASE("empty bins up to the last record are zeros") {
    const auto b = features::bin_traffic(
        {rec(0.3, "10.0.0.1", 1, "10.0.0.2", 502), rec(3.5, "10.0.0.1", 1, "10.0.0.2", 502)}, 1.0);
    CHECK(b.channel(features::kPacketCount).values == std::vector<double>{1, 0, 0, 1});
    CHECK(b.channel(features::kIpPairCount).values == std::vector<double>{1, 0, 0, 1});
}

TEST_CASE("bin labels follow attack packets") {
    const auto b = features::bin_traffic({rec(0.3, "10.0.0.1", 1, "10.0.0.2", 502),
                                          rec(1.3, "10.0.0.200", 1, "10.0.0.2", 502, 43, 3, PacketLabel::Scan),
                                          rec(2.3, "10.0.0.1", 1, "10.0.0.2", 502)},
                                         1.0);
    CHECK(b.bin_labels == std::vector<BinLabel>{BinLabel::Benign, BinLabel::Attack, BinLabel::Benign});
    CHECK(b.channel(features::kPacketCount).labels == b.bin_labels);
}

TEST_CASE("binning errors") {
    CHECK_THROWS_AS(features::bin_traffic({}, 1.0), InputError);
    CHECK_THROWS_AS(features::bin_traffic({rec(2, "a", 1, "b", 2), rec(1, "a", 1, "b", 2)}, 1.0), InputError);
    CHECK_THROWS_AS(features::bin_traffic({rec(1, "a", 1, "b", 2)}, 0.0), UsageError);
}

TEST_CASE("benign poll capture is 12 packets per bin") {
    simulate::NetScenarioConfig c;
    c.duration = 60.0;
    c.human_rate = 0.0;
    const auto b = features::bin_traffic(simulate::run_net(c), 1.0);
    REQUIRE(b.size() == 60);
    for (double v : b.channel(features::kPacketCount).values) {
        CHECK(v == 12);
    }
    for (double v : b.channel(features::kIpPairCount).values) {
        CHECK(v == 6);
    }
}

TEST_CASE("binned counts match an independent recount") {
    simulate::NetScenarioConfig c;
    c.duration = 200.0;
    c.n_mtus = 2;
    c.human_rate = 0.2;
    c.attacks = {{simulate::AttackKind::Scan, 20.0}, {simulate::AttackKind::Upload, 80.0},
                 {simulate::AttackKind::FakeCommand, 150.0}};
    const auto records = simulate::run_net(c);
    for (double w : {1.0, 2.5}) {
        const auto b = features::bin_traffic(records, w);
        double total = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            const auto expect = recount(records, static_cast<double>(i) * w, static_cast<double>(i + 1) * w);
            const double packets = b.channel(features::kPacketCount).values[i];
            const double ips = b.channel(features::kIpPairCount).values[i];
            const double ports = b.channel(features::kPortPairCount).values[i];
            CHECK(packets == expect.packets);
            CHECK(ips == expect.ips);
            CHECK(ports == expect.ports);
            CHECK(ips <= packets);
            CHECK(ports <= packets);
            total += packets;
        }
        CHECK(total == static_cast<double>(records.size()));
    }
}

TEST_CASE("packet features follow their definitions") {
    const std::vector<PacketRecord> records{
        rec(0.0, "10.0.0.2", 49152, "10.0.0.10", 502),
        rec(0.5, "10.0.0.10", 502, "10.0.0.2", 49152),
        rec(1.0, "10.0.0.2", 49152, "10.0.0.10", 502),
        rec(1.5, "10.0.0.2", 49153, "10.0.0.10", 502),
        rec(2.0, "10.0.0.2", 49400, "10.0.0.11", 502, 21, 252, PacketLabel::Upload),
    };
    const auto pf = features::packet_features(records, 1);
    const auto& rows = pf.dataset.rows;
    REQUIRE(rows.size() == 5);
    CHECK(pf.dataset.feature_names == features::packet_feature_names());
    // function_code, frame_length, new_ip, new_port, inter_arrival, known_mtu, payload
    CHECK(rows[0] == std::vector<double>{3, 12, 1, 1, 0, 1, 4});
    CHECK(rows[1] == std::vector<double>{3, 12, 0, 0, 0, 0, 4});
    CHECK(rows[2] == std::vector<double>{3, 12, 0, 0, 1.0, 1, 4});
    CHECK(rows[3] == std::vector<double>{3, 12, 0, 1, 0.5, 1, 4});
    CHECK(rows[4] == std::vector<double>{21, 260, 1, 1, 0.5, 1, 252});
    CHECK(pf.dataset.labels == std::vector<int>{0, 0, 0, 0, 1});
    CHECK(pf.record_index == std::vector<std::size_t>{0, 1, 2, 3, 4});
}

TEST_CASE("undecodable frames are skipped and counted") {
    auto bad = rec(0.2, "10.0.0.2", 1, "10.0.0.10", 502);
    bad.frame[3] = 1; // protocol id 1
    const std::vector<PacketRecord> records{rec(0.0, "10.0.0.2", 1, "10.0.0.10", 502), bad,
                                            rec(0.4, "10.0.0.2", 1, "10.0.0.10", 502)};
    const auto pf = features::packet_features(records, 1);
    CHECK(pf.skipped == 1);
    CHECK(pf.dataset.size() + pf.skipped == records.size());
    CHECK(pf.record_index == std::vector<std::size_t>{0, 2});
    // The skipped record still counts as the previous one from its source.
    CHECK(pf.dataset.rows[1][4] == doctest::Approx(0.2));
}

TEST_CASE("simulated capture yields one row per record") {
    simulate::NetScenarioConfig c;
    c.duration = 120.0;
    c.attacks = {{simulate::AttackKind::Upload, 30.0}};
    const auto records = simulate::run_net(c);
    const auto pf = features::packet_features(records, 1);
    CHECK(pf.skipped == 0);
    CHECK(pf.dataset.size() == records.size());
    CHECK_NOTHROW(validate(pf.dataset));
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(pf.dataset.labels[i] == (records[i].label == PacketLabel::Benign ? 0 : 1));
    }
}
