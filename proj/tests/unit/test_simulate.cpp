#include <doctest.h>

#include <algorithm>
#include <set>

#include "icsdetect/error.hpp"
#include "icsdetect/features.hpp"
#include "icsdetect/modbus.hpp"
#include "icsdetect/simulate.hpp"

using namespace icsdetect;
using simulate::AttackKind;

namespace {

simulate::NetScenarioConfig base(double duration = 60.0) {
    simulate::NetScenarioConfig c;
    c.n_rtus = 6;
    c.n_mtus = 1;
    c.duration = duration;
    c.poll_period = 1.0;
    c.seed = RngSeed{42};
    return c;
}

bool is_polling(const PacketRecord& r, int n_mtus) {
    return simulate::is_mtu_address(r.src_ip, n_mtus) || simulate::is_mtu_address(r.dst_ip, n_mtus);
}

std::uint8_t fc_of(const PacketRecord& r) { return modbus::decode(r.frame).function_code; }

} // namespace

TEST_CASE("benign 60 s run has exactly 720 polling records") {
    const auto records = simulate::run_net(base());
    const auto polling = std::count_if(records.begin(), records.end(), [](const auto& r) { return is_polling(r, 1); });
    CHECK(polling == 720);
    for (const auto& r : records) {
        CHECK(r.label == PacketLabel::Benign);
        if (is_polling(r, 1)) {
            CHECK(fc_of(r) == modbus::kReadHoldingRegisters);
        }
    }
}

TEST_CASE("polling stays inside its one-second slot") {
    auto cfg = base();
    cfg.human_rate = 0.0;
    const auto records = simulate::run_net(cfg);
    REQUIRE(records.size() == 720);
    const auto binned = features::bin_traffic(records, 1.0);
    for (double v : binned.channel(features::kPacketCount).values) {
        CHECK(v == 12.0);
    }
}

TEST_CASE("same config twice gives identical captures") {
    auto cfg = base(120.0);
    cfg.attacks = {{AttackKind::Scan, 10.0}, {AttackKind::Upload, 40.0}, {AttackKind::FakeCommand, 100.0}};
    CHECK(simulate::run_net(cfg) == simulate::run_net(cfg));
    CHECK(format_capture(simulate::run_net(cfg)) == format_capture(simulate::run_net(cfg)));
    auto other = cfg;
    other.seed = RngSeed{43};
    CHECK_FALSE(simulate::run_net(other) == simulate::run_net(cfg));
}

TEST_CASE("output is sorted") {
    auto cfg = base(300.0);
    cfg.attacks = {{AttackKind::Scan, 30.0}, {AttackKind::Upload, 100.0}, {AttackKind::FakeCommand, 200.0}};
    const auto records = simulate::run_net(cfg);
    CHECK(std::is_sorted(records.begin(), records.end(),
                         [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; }));
    CHECK_NOTHROW(validate_capture(records));
}

TEST_CASE("scan at 30 s") {
    auto cfg = base();
    cfg.attacks = {{AttackKind::Scan, 30.0}};
    const auto records = simulate::run_net(cfg);
    std::vector<PacketRecord> scan;
    for (const auto& r : records) {
        if (r.label == PacketLabel::Scan) {
            scan.push_back(r);
        }
    }
    REQUIRE(scan.size() >= 6u * 8u);
    CHECK(std::any_of(scan.begin(), scan.end(), [](const auto& r) { return r.timestamp >= 30 && r.timestamp <= 40; }));
    CHECK(scan.back().timestamp - scan.front().timestamp <= 10.0);
    std::set<std::string> dsts;
    std::set<std::pair<std::string, int>> endpoints;
    for (const auto& r : scan) {
        CHECK(fc_of(r) == modbus::kReadDeviceIdentification);
        CHECK(r.src_ip == simulate::kScannerAddress);
        dsts.insert(r.dst_ip);
        endpoints.insert({r.dst_ip, r.dst_port});
    }
    CHECK(dsts.size() == 6);
    CHECK(endpoints.size() == scan.size());
}

TEST_CASE("upload burst shape") {
    auto cfg = base(300.0);
    cfg.attacks = {{AttackKind::Upload, 100.0}};
    const auto records = simulate::run_net(cfg);
    std::vector<PacketRecord> up;
    for (const auto& r : records) {
        if (r.label == PacketLabel::Upload) {
            up.push_back(r);
        }
    }
    REQUIRE(up.size() >= 200);
    const double span = up.back().timestamp - up.front().timestamp;
    CHECK(span >= 29.0);
    CHECK(span <= 60.0);
    for (const auto& r : up) {
        const auto f = modbus::decode(r.frame);
        CHECK(f.function_code == modbus::kWriteFileRecord);
        CHECK(f.data.size() >= 128);
        CHECK(f.data.size() <= 252);
        CHECK(simulate::is_mtu_address(r.src_ip, 1));
    }
}

TEST_CASE("fake command is a few coil writes") {
    auto cfg = base();
    cfg.attacks = {{AttackKind::FakeCommand, 20.0}};
    const auto records = simulate::run_net(cfg);
    std::size_t n = 0;
    for (const auto& r : records) {
        if (r.label == PacketLabel::FakeCommand) {
            ++n;
            CHECK(fc_of(r) == modbus::kWriteSingleCoil);
            CHECK(r.timestamp >= 20.0);
            CHECK(r.timestamp < 25.0);
        }
    }
    CHECK(n >= 1);
    CHECK(n <= 3);
}

TEST_CASE("label soundness: only attack templates carry attack labels") {
    auto cfg = base(200.0);
    cfg.human_rate = 0.1;
    cfg.attacks = {{AttackKind::Scan, 20.0}, {AttackKind::Upload, 60.0}, {AttackKind::FakeCommand, 150.0}};
    for (const auto& r : simulate::run_net(cfg)) {
        const auto fc = fc_of(r);
        switch (r.label) {
        case PacketLabel::Benign:
            CHECK((fc == modbus::kReadHoldingRegisters || fc == modbus::kWriteMultipleRegisters));
            break;
        case PacketLabel::Scan: CHECK(fc == modbus::kReadDeviceIdentification); break;
        case PacketLabel::Upload: CHECK(fc == modbus::kWriteFileRecord); break;
        case PacketLabel::FakeCommand: CHECK(fc == modbus::kWriteSingleCoil); break;
        default: FAIL("unexpected label");
        }
    }
}

TEST_CASE("adding an attack leaves the benign traffic untouched") {
    auto cfg = base(120.0);
    cfg.human_rate = 0.05;
    cfg.attacks = {{AttackKind::Scan, 50.0}};
    auto plain = cfg;
    plain.attacks.clear();
    std::vector<PacketRecord> benign;
    for (const auto& r : simulate::run_net(cfg)) {
        if (r.label == PacketLabel::Benign) {
            benign.push_back(r);
        }
    }
    CHECK(benign == simulate::run_net(plain));
}

TEST_CASE("scan raises ip_pair_count, upload triples packet_count") {
    auto cfg = base(600.0);
    cfg.human_rate = 0.0;
    cfg.attacks = {{AttackKind::Scan, 120.0}, {AttackKind::Upload, 300.0}};
    const auto records = simulate::run_net(cfg);
    const auto binned = features::bin_traffic(records, 1.0);
    const auto& ips = binned.channel(features::kIpPairCount).values;
    const auto& packets = binned.channel(features::kPacketCount).values;

    double benign_ips = 0.0;
    double benign_packets = 0.0;
    std::size_t benign_bins = 0;
    for (std::size_t i = 0; i < binned.size(); ++i) {
        if (binned.bin_labels[i] == BinLabel::Benign) {
            benign_ips = std::max(benign_ips, ips[i]);
            benign_packets += packets[i];
            ++benign_bins;
        }
    }
    const double mean_packets = benign_packets / static_cast<double>(benign_bins);
    double scan_ips = 0.0;
    for (std::size_t i = 120; i < 130; ++i) {
        scan_ips = std::max(scan_ips, ips[i]);
    }
    CHECK(scan_ips > benign_ips);

    // Mean over the burst's full seconds.
    double burst = 0.0;
    for (std::size_t i = 301; i < 329; ++i) {
        burst += packets[i];
    }
    CHECK(burst / 28.0 >= 3.0 * mean_packets);
}

TEST_CASE("attacks stay below 5% of records in the presets") {
    for (const char* name : {"ds1", "ds2", "ds3"}) {
        auto p = simulate::preset(name);
        for (auto& r : p.runs) {
            r.seed = RngSeed{1};
        }
        const auto records = simulate::run_preset(p);
        const auto attacks = std::count_if(records.begin(), records.end(),
                                           [](const auto& r) { return r.label != PacketLabel::Benign; });
        INFO(name);
        CHECK(attacks > 0);
        CHECK(static_cast<double>(attacks) < 0.05 * static_cast<double>(records.size()));
        CHECK(records.size() >= 5000);
    }
}

TEST_CASE("presets") {
    const auto ds1 = simulate::preset("ds1");
    REQUIRE(ds1.runs.size() == 1);
    CHECK(ds1.runs[0].n_rtus == 6);
    CHECK(std::any_of(ds1.runs[0].attacks.begin(), ds1.runs[0].attacks.end(),
                      [](const auto& a) { return a.kind == AttackKind::Upload; }));

    const auto ds2 = simulate::preset("ds2");
    REQUIRE(ds2.runs.size() == 1);
    CHECK(ds2.runs[0].n_rtus == 6);
    CHECK(ds2.runs[0].human_rate > 0.0);
    CHECK(std::any_of(ds2.runs[0].attacks.begin(), ds2.runs[0].attacks.end(),
                      [](const auto& a) { return a.kind == AttackKind::FakeCommand; }));

    const auto ds3 = simulate::preset("ds3");
    REQUIRE(ds3.runs.size() == 2);
    CHECK_FALSE(ds3.runs[0].attacks.empty());
    CHECK(ds3.runs[1].attacks.empty());

    CHECK_THROWS_AS(simulate::preset("ds4"), UsageError);
}

TEST_CASE("concatenated preset is sorted and offsets the second run") {
    auto p = simulate::preset("ds3");
    const auto records = simulate::run_preset(p);
    CHECK_NOTHROW(validate_capture(records));
    CHECK(records.back().timestamp >= p.runs[0].duration);
}

TEST_CASE("config validation") {
    auto c = base();
    c.n_rtus = 2;
    CHECK_THROWS_AS(simulate::run_net(c), UsageError);
    c = base();
    c.n_rtus = 13;
    CHECK_THROWS_AS(simulate::run_net(c), UsageError);
    c = base();
    c.n_mtus = 3;
    CHECK_THROWS_AS(simulate::run_net(c), UsageError);
    c = base();
    c.attacks = {{AttackKind::Scan, 60.0}};
    CHECK_THROWS_AS(simulate::run_net(c), UsageError);
    c = base();
    c.attacks = {{AttackKind::Scan, 10.0}, {AttackKind::Scan, 12.0}};
    CHECK_THROWS_WITH_AS(simulate::run_net(c), doctest::Contains("overlapping"), UsageError);
    c = base();
    c.attacks = {{AttackKind::Scan, 10.0}, {AttackKind::Scan, 40.0}};
    CHECK_NOTHROW(simulate::run_net(c));
}

TEST_CASE("attack specs parse") {
    CHECK(simulate::parse_attack("upload@300") == simulate::AttackSpec{AttackKind::Upload, 300.0});
    CHECK(simulate::parse_attack("fake_command@2.5") == simulate::AttackSpec{AttackKind::FakeCommand, 2.5});
    CHECK_THROWS_AS(simulate::parse_attack("upload"), UsageError);
    CHECK_THROWS_AS(simulate::parse_attack("flood@3"), UsageError);
    CHECK_THROWS_AS(simulate::parse_attack("scan@x"), UsageError);
}

TEST_CASE("process level stays within the tank without noise") {
    simulate::ProcScenarioConfig c;
    c.noise_sigma = 0.0;
    c.attack_samples.clear();
    const auto p = simulate::run_process(c);
    REQUIRE(p.level.size() == 8000);
    for (double v : p.level.values) {
        CHECK(v >= 0.0);
        CHECK(v <= c.tank_capacity);
    }
    for (const auto l : *p.flow.labels) {
        CHECK(l == BinLabel::Benign);
    }
}

TEST_CASE("overfill never exceeds capacity") {
    simulate::ProcScenarioConfig c;
    c.tank_capacity = 300.0;
    c.attack_samples = {10, 400, 900};
    const auto p = simulate::run_process(c);
    CHECK(*std::max_element(p.level.values.begin(), p.level.values.end()) <= 300.0);
    CHECK(*std::min_element(p.level.values.begin(), p.level.values.end()) >= 0.0);
}

TEST_CASE("process attacks at 4000 and 6500 last at least 50 samples") {
    simulate::ProcScenarioConfig c;
    c.seed = RngSeed{3};
    const auto p = simulate::run_process(c);
    for (const auto* s : {&p.flow, &p.level}) {
        const auto& labels = *s->labels;
        for (std::size_t start : {4000u, 6500u}) {
            CHECK(labels[start - 1] == BinLabel::Benign);
            for (std::size_t i = start; i < start + 50; ++i) {
                CHECK(labels[i] == BinLabel::Attack);
            }
        }
    }
    CHECK(p.flow.labels == p.level.labels);
}

TEST_CASE("process is deterministic and cycles about every 500 samples") {
    simulate::ProcScenarioConfig c;
    c.attack_samples.clear();
    const auto a = simulate::run_process(c);
    const auto b = simulate::run_process(c);
    CHECK(a.flow == b.flow);
    CHECK(a.level == b.level);
    // Count fill starts (flow rising from 0).
    int starts = 0;
    for (std::size_t i = 1; i < a.flow.size(); ++i) {
        starts += a.flow.values[i - 1] == 0.0 && a.flow.values[i] > 0.0;
    }
    CHECK(starts >= 14);
    CHECK(starts <= 17);
}

TEST_CASE("process validation") {
    simulate::ProcScenarioConfig c;
    c.noise_sigma = 0.2;
    CHECK_THROWS_AS(simulate::run_process(c), UsageError);
    c = {};
    c.attack_samples = {8000};
    CHECK_THROWS_AS(simulate::run_process(c), UsageError);
    c = {};
    c.fill_rate = 0.0;
    CHECK_THROWS_AS(simulate::run_process(c), UsageError);
}
