#include "icsdetect/simulate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "icsdetect/error.hpp"
#include "icsdetect/modbus.hpp"

namespace icsdetect::simulate {

namespace {

// Sub-stream indices; attacks use kAttackStream + attack index so adding an
// attack never perturbs the benign traffic.
constexpr std::uint64_t kPollStream = 1;
constexpr std::uint64_t kHumanStream = 2;
constexpr std::uint64_t kAttackStream = 100;

constexpr double kScanDuration = 8.0;
constexpr int kScanPortsPerRtu = 8;
constexpr std::uint16_t kScanPorts[kScanPortsPerRtu] = {502, 102, 20000, 2404, 44818, 47808, 80, 443};
constexpr double kUploadMinSeconds = 30.0;
constexpr double kUploadMaxSeconds = 40.0;
constexpr double kFakeCommandSpan = 5.0;

// Address next to the MTU block: plausible for a master, never configured.
constexpr std::string_view kSpoofedMasterAddress = "10.0.0.4";

double attack_span(AttackKind kind) {
    switch (kind) {
    case AttackKind::Scan: return kScanDuration;
    case AttackKind::Upload: return kUploadMaxSeconds;
    case AttackKind::FakeCommand: return kFakeCommandSpan;
    }
    return 0.0;
}

std::vector<std::uint8_t> be16(std::uint16_t v) {
    return {static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v & 0xff)};
}

std::vector<std::uint8_t> random_bytes(Rng& rng, std::size_t n) {
    std::vector<std::uint8_t> out(n);
    for (auto& b : out) {
        b = static_cast<std::uint8_t>(rng.below(256));
    }
    return out;
}

class CaptureBuilder {
public:
    explicit CaptureBuilder(double horizon) : horizon_(horizon) {}

    void add(double t, std::string_view src, std::uint16_t sport, std::string_view dst, std::uint16_t dport,
             const modbus::Frame& frame, PacketLabel label) {
        if (t < 0.0 || t >= horizon_) {
            return;
        }
        records_.push_back(PacketRecord{t, std::string(src), sport, std::string(dst), dport, modbus::encode(frame),
                                        label});
    }

    std::vector<PacketRecord> finish() {
        std::stable_sort(records_.begin(), records_.end(),
                         [](const PacketRecord& a, const PacketRecord& b) { return a.timestamp < b.timestamp; });
        return std::move(records_);
    }

private:
    double horizon_;
    std::vector<PacketRecord> records_;
};

/// Time span during which a compromised master is busy transferring a file.
struct Transfer {
    double start = 0.0;
    double end = 0.0;
    int mtu = 0;
    int target = 0;
};

// A master busy with a transfer runs its polling cycle at half rate: each
// RTU it serves is polled only every second period.
bool poll_skipped(const std::vector<Transfer>& transfers, int mtu, long k, int i, double t) {
    for (const auto& tr : transfers) {
        if (tr.mtu == mtu && t >= tr.start && t < tr.end && (k + i) % 2 == 1) {
            return true;
        }
    }
    return false;
}

void emit_polling(const NetScenarioConfig& cfg, const std::vector<Transfer>& transfers, CaptureBuilder& out) {
    Rng rng(derive_seed(cfg.seed, kPollStream));
    const double period = cfg.poll_period;
    std::vector<std::uint16_t> txn(static_cast<std::size_t>(cfg.n_mtus), 0);
    // Slowly varying register image per RTU (breaker states, currents).
    std::vector<std::vector<std::uint8_t>> registers;
    for (int i = 0; i < cfg.n_rtus; ++i) {
        registers.push_back(random_bytes(rng, 20));
    }
    for (long k = 0; static_cast<double>(k) * period < cfg.duration; ++k) {
        for (int i = 0; i < cfg.n_rtus; ++i) {
            const int j = i % cfg.n_mtus;
            const auto rtu = rtu_address(i);
            const auto mtu = mtu_address(j);
            const auto port = static_cast<std::uint16_t>(49152 + i);
            const double slot = 0.05 + 0.8 * static_cast<double>(i) / static_cast<double>(cfg.n_rtus);
            const double t_req = (static_cast<double>(k) + slot + 0.01 * rng.uniform()) * period;
            const double t_rsp = t_req + period * rng.uniform(0.002, 0.008);
            auto& regs = registers[static_cast<std::size_t>(i)];
            if (rng.uniform() < 0.05) {
                regs[rng.below(regs.size())] = static_cast<std::uint8_t>(rng.below(256));
            }
            if (poll_skipped(transfers, j, k, i, t_req)) {
                continue;
            }
            const auto id = txn[static_cast<std::size_t>(j)]++;
            const auto unit = static_cast<std::uint8_t>(i + 1);

            modbus::Frame req{id, 0, unit, modbus::kReadHoldingRegisters, {0x00, 0x00, 0x00, 0x0a}};
            out.add(t_req, mtu, port, rtu, kModbusPort, req, PacketLabel::Benign);
            modbus::Frame rsp{id, 0, unit, modbus::kReadHoldingRegisters, {20}};
            rsp.data.insert(rsp.data.end(), regs.begin(), regs.end());
            out.add(t_rsp, rtu, kModbusPort, mtu, port, rsp, PacketLabel::Benign);
        }
    }
}

void emit_human(const NetScenarioConfig& cfg, CaptureBuilder& out) {
    if (cfg.human_rate <= 0.0) {
        return;
    }
    Rng rng(derive_seed(cfg.seed, kHumanStream));
    std::uint16_t txn = 0;
    
    for (double t = rng.exponential(cfg.human_rate); t < cfg.duration; t += rng.exponential(cfg.human_rate)) {
        const int i = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.n_rtus)));
        const auto rtu = rtu_address(i);
        // The HMI keeps one session per RTU open.
        const auto port = static_cast<std::uint16_t>(50000 + i);
        const auto unit = static_cast<std::uint8_t>(i + 1);
        const double t_rsp = t + cfg.poll_period * rng.uniform(0.002, 0.008);
        const auto id = txn++;
        const auto addr = static_cast<std::uint16_t>(rng.below(100));
        if (rng.uniform() < 0.7) {
            const auto qty = static_cast<std::uint16_t>(rng.between(1, 20));
            modbus::Frame req{id, 0, unit, modbus::kReadHoldingRegisters, be16(addr)};
            const auto q = be16(qty);
            req.data.insert(req.data.end(), q.begin(), q.end());
            out.add(t, kHmiAddress, port, rtu, kModbusPort, req, PacketLabel::Benign);
            modbus::Frame rsp{id, 0, unit, modbus::kReadHoldingRegisters, {static_cast<std::uint8_t>(2 * qty)}};
            const auto values = random_bytes(rng, 2u * qty);
            rsp.data.insert(rsp.data.end(), values.begin(), values.end());
            out.add(t_rsp, rtu, kModbusPort, kHmiAddress, port, rsp, PacketLabel::Benign);
        } else {
            const auto qty = static_cast<std::uint16_t>(rng.between(1, 4));
            modbus::Frame req{id, 0, unit, modbus::kWriteMultipleRegisters, be16(addr)};
            const auto q = be16(qty);
            req.data.insert(req.data.end(), q.begin(), q.end());
            req.data.push_back(static_cast<std::uint8_t>(2 * qty));
            const auto values = random_bytes(rng, 2u * qty);
            req.data.insert(req.data.end(), values.begin(), values.end());
            out.add(t, kHmiAddress, port, rtu, kModbusPort, req, PacketLabel::Benign);
            modbus::Frame rsp{id, 0, unit, modbus::kWriteMultipleRegisters, be16(addr)};
            rsp.data.insert(rsp.data.end(), q.begin(), q.end());
            out.add(t_rsp, rtu, kModbusPort, kHmiAddress, port, rsp, PacketLabel::Benign);
        }

    }
}

// Port-major sweep so every second of the scan touches every RTU.
void emit_scan(const NetScenarioConfig& cfg, const AttackSpec& attack, Rng& rng, CaptureBuilder& out) {
    const int count = cfg.n_rtus * kScanPortsPerRtu;
    const double spacing = kScanDuration / static_cast<double>(count);
    int idx = 0;
    for (int p = 0; p < kScanPortsPerRtu; ++p) {
        for (int i = 0; i < cfg.n_rtus; ++i, ++idx) {
            const double t = attack.start_time + spacing * (static_cast<double>(idx) + 0.2 * rng.uniform());
            modbus::Frame probe{static_cast<std::uint16_t>(idx), 0, 0xff, modbus::kReadDeviceIdentification,
                                {0x0e, 0x01, 0x00}};
            out.add(t, kScannerAddress, static_cast<std::uint16_t>(40000 + idx), rtu_address(i), kScanPorts[p], probe,
                    PacketLabel::Scan);
        }
    }
}

Transfer plan_upload(const NetScenarioConfig& cfg, const AttackSpec& attack, Rng& rng) {
    Transfer tr;
    const auto extra = static_cast<std::uint64_t>(kUploadMaxSeconds - kUploadMinSeconds) + 1;
    tr.start = attack.start_time;
    tr.end = attack.start_time + kUploadMinSeconds + static_cast<double>(rng.below(extra));
    tr.mtu = 0;
    tr.target = static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.n_rtus)));
    return tr;
}

// Write-file-record burst from the first MTU, about three times the benign
// volume while it lasts.
void emit_upload(const NetScenarioConfig& cfg, const Transfer& tr, Rng& rng, CaptureBuilder& out) {
    const double rate = 5.0 * cfg.n_rtus / cfg.poll_period + 6.0;
    const auto frames = static_cast<long>((tr.end - tr.start) * rate);
    const auto src = mtu_address(tr.mtu);
    const auto dst = rtu_address(tr.target);
    for (long k = 0; k < frames; ++k) {
        const double t = tr.start + (static_cast<double>(k) + 0.1 * rng.uniform()) / rate;
        const auto size = static_cast<std::size_t>(rng.between(128, 252));
        modbus::Frame frame{static_cast<std::uint16_t>(k & 0xffff), 0, static_cast<std::uint8_t>(tr.target + 1),
                            modbus::kWriteFileRecord, random_bytes(rng, size)};
        frame.data[0] = static_cast<std::uint8_t>(size - 1);
        frame.data[1] = 0x06;
        out.add(t, src, 49400, dst, kModbusPort, frame, PacketLabel::Upload);
    }
}

// Two or three coil writes to distinct RTUs, one to two seconds apart, from
// an address inside the master block that never polls.
void emit_fake_command(const NetScenarioConfig& cfg, const AttackSpec& attack, std::size_t index, Rng& rng,
                       CaptureBuilder& out) {
    const int count = static_cast<int>(rng.between(2, std::min(3, cfg.n_rtus)));
    std::vector<int> targets(static_cast<std::size_t>(cfg.n_rtus));
    for (int i = 0; i < cfg.n_rtus; ++i) {
        targets[static_cast<std::size_t>(i)] = i;
    }
    rng.shuffle(targets.begin(), targets.end());
    double t = attack.start_time;
    for (int c = 0; c < count; ++c) {
        const int i = targets[static_cast<std::size_t>(c)];
        const auto coil = static_cast<std::uint16_t>(rng.below(64));
        modbus::Frame frame{static_cast<std::uint16_t>(rng.below(65536)), 0, static_cast<std::uint8_t>(i + 1),
                            modbus::kWriteSingleCoil, be16(coil)};
        frame.data.push_back(0xff);
        frame.data.push_back(0x00);
        // A fresh connection per write; ports cycle only after 1,000 attacks.
        const auto sport = static_cast<std::uint16_t>(61000 + (index % 1000) * 4 + static_cast<std::size_t>(c));
        out.add(t, kSpoofedMasterAddress, sport, rtu_address(i), kModbusPort, frame, PacketLabel::FakeCommand);
        t += rng.uniform(1.0, 1.5);
    }
}

} // namespace

std::string_view to_string(AttackKind kind) {
    switch (kind) {
    case AttackKind::Scan: return "scan";
    case AttackKind::Upload: return "upload";
    case AttackKind::FakeCommand: return "fake_command";
    }
    return "?";
}

AttackKind parse_attack_kind(std::string_view text) {
    if (text == "scan") return AttackKind::Scan;
    if (text == "upload") return AttackKind::Upload;
    if (text == "fake_command") return AttackKind::FakeCommand;
    throw UsageError("unknown attack kind '" + std::string(text) + "'");
}

AttackSpec parse_attack(std::string_view text) {
    const auto at = text.find('@');
    if (at == std::string_view::npos) {
        throw UsageError("attack must be written kind@seconds, got '" + std::string(text) + "'");
    }
    AttackSpec spec;
    spec.kind = parse_attack_kind(text.substr(0, at));
    const auto num = text.substr(at + 1);
    const auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), spec.start_time);
    if (num.empty() || ec != std::errc() || ptr != num.data() + num.size()) {
        throw UsageError("bad attack start time in '" + std::string(text) + "'");
    }
    return spec;
}

std::string rtu_address(int index) { return "10.0.0." + std::to_string(10 + index); }

std::string mtu_address(int index) { return "10.0.0." + std::to_string(2 + index); }

bool is_mtu_address(std::string_view ip, int n_mtus) {
    for (int j = 0; j < n_mtus; ++j) {
        if (ip == mtu_address(j)) {
            return true;
        }
    }
    return false;
}

void validate(const NetScenarioConfig& c) {
    if (c.n_rtus < 3 || c.n_rtus > 12) {
        throw UsageError("n_rtus must be within 3..12");
    }
    if (c.n_mtus < 1 || c.n_mtus > 2) {
        throw UsageError("n_mtus must be 1 or 2");
    }
    if (!(c.duration > 0.0) || !std::isfinite(c.duration)) {
        throw UsageError("duration must be positive");
    }
    if (!(c.poll_period > 0.0) || !std::isfinite(c.poll_period)) {
        throw UsageError("poll_period must be positive");
    }
    if (!(c.human_rate >= 0.0) || !std::isfinite(c.human_rate)) {
        throw UsageError("human_rate must be non-negative");
    }
    for (std::size_t a = 0; a < c.attacks.size(); ++a) {
        const auto& x = c.attacks[a];
        if (!(x.start_time >= 0.0) || x.start_time >= c.duration) {
            throw UsageError("attack start time " + format_double(x.start_time) + " outside [0, duration)");
        }
        for (std::size_t b = 0; b < a; ++b) {
            const auto& y = c.attacks[b];
            if (x.kind == y.kind && x.start_time < y.start_time + attack_span(y.kind) &&
                y.start_time < x.start_time + attack_span(x.kind)) {
                throw UsageError("overlapping " + std::string(to_string(x.kind)) + " attacks");
            }
        }
    }
}

void validate(const ProcScenarioConfig& c) {
    if (c.n_samples < 1) {
        throw UsageError("n_samples must be positive");
    }
    if (!(c.sample_period > 0.0) || !(c.tank_capacity > 0.0) || !(c.fill_rate > 0.0) || !(c.drain_rate > 0.0)) {
        throw UsageError("sample_period, tank_capacity and rates must be positive");
    }
    if (!(c.noise_sigma >= 0.0) || !(c.noise_sigma < 0.2)) {
        throw UsageError("noise_sigma must be within [0, 0.2)");
    }
    for (int a : c.attack_samples) {
        if (a < 0 || a >= c.n_samples) {
            throw UsageError("attack sample " + std::to_string(a) + " outside [0, n_samples)");
        }
    }
}

std::vector<PacketRecord> run_net(const NetScenarioConfig& config) {
    validate(config);
    CaptureBuilder out(config.duration);
    std::vector<Rng> rngs;
    std::vector<Transfer> transfers(config.attacks.size());
    for (std::size_t a = 0; a < config.attacks.size(); ++a) {
        rngs.emplace_back(derive_seed(config.seed, kAttackStream + a));
        if (config.attacks[a].kind == AttackKind::Upload) {
            transfers[a] = plan_upload(config, config.attacks[a], rngs[a]);
        }
    }
    emit_polling(config, transfers, out);
    emit_human(config, out);
    for (std::size_t a = 0; a < config.attacks.size(); ++a) {
        const auto& attack = config.attacks[a];
        switch (attack.kind) {
        case AttackKind::Scan: emit_scan(config, attack, rngs[a], out); break;
        case AttackKind::Upload: emit_upload(config, transfers[a], rngs[a], out); break;
        case AttackKind::FakeCommand: emit_fake_command(config, attack, a, rngs[a], out); break;
        }
    }
    return out.finish();
}

ProcessSeries run_process(const ProcScenarioConfig& config) {
    validate(config);
    enum class Phase { Fill, Hold, Drain };
    enum class Disruption { None, ValveClosed, Overfill };

    Rng rng(derive_seed(config.seed, kPollStream));
    const double dt = config.sample_period;
    const double setpoint = kSetpointFraction * config.tank_capacity;
    const auto n = static_cast<std::size_t>(config.n_samples);

    ProcessSeries out;
    out.flow.channel_name = "flow";
    out.level.channel_name = "level";
    for (auto* s : {&out.flow, &out.level}) {
        s->bin_width = dt;
        s->values.resize(n);
        s->labels = std::vector<BinLabel>(n, BinLabel::Benign);
    }

    std::vector<int> attacks = config.attack_samples;
    std::sort(attacks.begin(), attacks.end());

    // Start half-way through a fill so the batch cycle is already running.
    Phase phase = Phase::Fill;
    double level = setpoint / 2.0;
    int hold_count = 0;
    Disruption disruption = Disruption::None;
    int remaining = 0;
    std::size_t next_attack = 0;

    auto fill_samples_left = [&] {
        return static_cast<int>(std::ceil((setpoint - level) / (config.fill_rate * dt)));
    };

    for (std::size_t s = 0; s < n; ++s) {
        while (next_attack < attacks.size() && static_cast<std::size_t>(attacks[next_attack]) == s) {
            if (next_attack % 2 == 0) {
                disruption = Disruption::ValveClosed;
                remaining = std::max(kMinDisruptionSamples, phase == Phase::Fill ? fill_samples_left() : 0);
            } else {
                disruption = Disruption::Overfill;
                remaining = (phase == Phase::Fill ? std::max(0, fill_samples_left()) : 0) + 60;
            }
            ++next_attack;
        }

        double inflow = 0.0;
        double outflow = 0.0;
        const auto noisy_fill = [&] { return config.fill_rate * (1.0 + config.noise_sigma * rng.normal()); };

        if (disruption == Disruption::Overfill) {
            phase = Phase::Fill;
            inflow = noisy_fill();
        } else {
            switch (phase) {
            case Phase::Fill:
                inflow = disruption == Disruption::ValveClosed ? 0.0 : noisy_fill();
                break;
            case Phase::Hold:
                break;
            case Phase::Drain:
                outflow = config.drain_rate;
                break;
            }
        }
        level = std::clamp(level + (inflow - outflow) * dt, 0.0, config.tank_capacity);

        if (disruption == Disruption::None) {
            if (phase == Phase::Fill && level >= setpoint) {
                phase = Phase::Hold;
                hold_count = 0;
            } else if (phase == Phase::Hold && ++hold_count >= kHoldSamples) {
                phase = Phase::Drain;
            } else if (phase == Phase::Drain && level <= 0.0) {
                phase = Phase::Fill;
            }
        } else if (phase == Phase::Hold && ++hold_count >= kHoldSamples) {
            phase = Phase::Drain;
        } else if (phase == Phase::Drain && level <= 0.0) {
            phase = Phase::Fill;
        }

        out.flow.values[s] = std::max(0.0, inflow);
        out.level.values[s] = level;
        if (disruption != Disruption::None) {
            (*out.flow.labels)[s] = BinLabel::Attack;
            (*out.level.labels)[s] = BinLabel::Attack;
            if (--remaining <= 0) {
                if (disruption == Disruption::Overfill && level >= setpoint) {
                    phase = Phase::Hold;
                    hold_count = 0;
                }
                disruption = Disruption::None;
            }
        }
    }
    return out;
}

Preset preset(std::string_view name) {
    Preset p;
    p.name = std::string(name);
    if (name == "ds1") {
        // File transfer to an RTU; polling only, no operator.
        NetScenarioConfig c;
        c.n_rtus = 6;
        c.n_mtus = 1;
        c.duration = 3000.0;
        c.human_rate = 0.0;
        c.attacks = {{AttackKind::Upload, 900.0}};
        p.runs.push_back(c);
    } else if (name == "ds2") {
        // Repeated spoofed coil writes with an operator active.
        NetScenarioConfig c;
        c.n_rtus = 6;
        c.n_mtus = 1;
        c.duration = 3000.0;
        c.human_rate = 0.02;
        // Enough episodes that a 30% test split holds a few hundred attack rows.
        for (int k = 0; k < 300; ++k) {
            c.attacks.push_back({AttackKind::FakeCommand, 20.0 + 9.8 * k});
        }
        p.runs.push_back(c);
    } else if (name == "ds3") {
        NetScenarioConfig attack;
        attack.n_rtus = 6;
        attack.n_mtus = 1;
        attack.duration = 1500.0;
        attack.human_rate = 0.02;
        attack.attacks = {{AttackKind::Scan, 400.0}, {AttackKind::Upload, 900.0}};
        NetScenarioConfig benign = attack;
        benign.attacks.clear();
        p.runs.push_back(attack);
        p.runs.push_back(benign);
    } else {
        throw UsageError("unknown preset '" + std::string(name) + "' (expected ds1, ds2 or ds3)");
    }
    return p;
}

std::vector<PacketRecord> run_preset(const Preset& p) {
    std::vector<PacketRecord> all;
    double offset = 0.0;
    for (std::size_t r = 0; r < p.runs.size(); ++r) {
        auto cfg = p.runs[r];
        if (r > 0) {
            cfg.seed = derive_seed(cfg.seed, r);
        }
        for (auto rec : run_net(cfg)) {
            rec.timestamp += offset;
            all.push_back(std::move(rec));
        }
        offset += cfg.duration;
    }
    return all;
}

} // namespace icsdetect::simulate
