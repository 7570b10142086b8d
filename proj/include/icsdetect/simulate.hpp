#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "icsdetect/core.hpp"

namespace icsdetect::simulate {

enum class AttackKind { Scan, Upload, FakeCommand };

std::string_view to_string(AttackKind kind);
AttackKind parse_attack_kind(std::string_view text);

struct AttackSpec {
    AttackKind kind = AttackKind::Scan;
    double start_time = 0.0;

    friend bool operator==(const AttackSpec&, const AttackSpec&) = default;
};

/// Parses "kind@seconds", e.g. "upload@300".
AttackSpec parse_attack(std::string_view text);

/// Polled SCADA network: MTUs poll RTUs over Modbus/TCP, an operator HMI
/// issues occasional manual requests and attacks are injected on top.
struct NetScenarioConfig {
    int n_rtus = 6;
    int n_mtus = 1;
    double duration = 600.0;
    double poll_period = 1.0;
    double human_rate = 0.02; ///< operator events per second
    std::vector<AttackSpec> attacks;
    RngSeed seed;

    friend bool operator==(const NetScenarioConfig&, const NetScenarioConfig&) = default;
};

/// Batch process: fill -> hold -> drain, repeated.
struct ProcScenarioConfig {
    int n_samples = 8000;
    double sample_period = 1.0;
    double tank_capacity = 1000.0;
    double fill_rate = 4.0;
    double drain_rate = 4.0;
    double noise_sigma = 0.01;
    std::vector<int> attack_samples{4000, 6500};
    RngSeed seed;

    friend bool operator==(const ProcScenarioConfig&, const ProcScenarioConfig&) = default;
};

// Fixed address plan.
std::string rtu_address(int index);   // 10.0.0.10 + i
std::string mtu_address(int index);   // 10.0.0.2 + j
inline constexpr std::string_view kHmiAddress = "10.0.0.50";
inline constexpr std::string_view kScannerAddress = "10.0.0.200";
inline constexpr std::uint16_t kModbusPort = 502;

/// True for addresses in the MTU block of the address plan (10.0.0.2-3).
bool is_mtu_address(std::string_view ip, int n_mtus = 2);

void validate(const NetScenarioConfig& config);
void validate(const ProcScenarioConfig& config);

/// Generates a labeled capture, sorted by timestamp and fully determined
/// by the configuration (including its seed).
std::vector<PacketRecord> run_net(const NetScenarioConfig& config);

/// Samples of the hold phase and the fill setpoint (fraction of capacity)
/// used by the batch controller.
inline constexpr int kHoldSamples = 100;
inline constexpr double kSetpointFraction = 0.8;
/// Minimum number of samples every disruption lasts.
inline constexpr int kMinDisruptionSamples = 50;

struct ProcessSeries {
    TimeSeries flow;
    TimeSeries level;
};

ProcessSeries run_process(const ProcScenarioConfig& config);

/// A named dataset recipe. Most presets are one run; ds3 concatenates an
/// attack run and a benign run.
struct Preset {
    std::string name;
    std::vector<NetScenarioConfig> runs;
};

Preset preset(std::string_view name);

/// Runs every part of a preset and concatenates them on one time axis.
std::vector<PacketRecord> run_preset(const Preset& preset);

} // namespace icsdetect::simulate
