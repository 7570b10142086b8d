/// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "icsdetect/correlate.hpp"
#include "icsdetect/error.hpp"
#include "icsdetect/features.hpp"
#include "icsdetect/learn.hpp"
#include "icsdetect/modbus.hpp"
#include "icsdetect/mprofile.hpp"
#include "icsdetect/pipeline.hpp"
#include "icsdetect/simulate.hpp"
#include "oracles.hpp"

using namespace icsdetect;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::vector<double> random_walk(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    double x = 0.0;
    for (auto& e : v) {
        x += rng.normal();
        e = x;
    }
    return v;
}

// 1. Distance equation suite.
Outcome distance_suite() {
    Outcome o;
    const auto t0 = Clock::now();
    Rng rng(RngSeed{1});
    const std::size_t ms[] = {3, 8, 64};
    double worst_oracle = 0.0, worst_affine = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const std::size_t m = ms[k % 3];
        std::vector<double> x(m), y(m), z(m);
        for (std::size_t i = 0; i < m; ++i) {
            x[i] = rng.uniform(-10.0, 10.0);
            y[i] = rng.uniform(-10.0, 10.0);
        }
        const double a = rng.uniform(0.001, 1000.0), b = rng.uniform(-1000.0, 1000.0);
        for (std::size_t i = 0; i < m; ++i) {
            z[i] = a * x[i] + b;
        }
        const double d = mprofile::znorm_distance(x, y);
        worst_oracle = std::max(worst_oracle, std::abs(d - oracle::znorm_distance(x, y)));
        worst_affine = std::max(worst_affine, mprofile::znorm_distance(x, z));
        o.pass = o.pass && d == mprofile::znorm_distance(y, x) && d >= 0.0 &&
                 d <= std::sqrt(4.0 * static_cast<double>(m)) + 1e-9 && mprofile::znorm_distance(x, x) == 0.0;
    }
    const double hand = mprofile::znorm_distance(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1});
    const double secs = seconds_since(t0);
    o.pass = o.pass && worst_affine <= 1e-9 && worst_oracle <= 1e-9 && std::abs(hand - std::sqrt(12.0)) <= 1e-9 &&
             secs < 5.0;
    o.detail = "hand case " + fmt("%.12f", hand) + ", max |d(x,ax+b)| " + fmt("%.2e", worst_affine) +
               ", max |d - literal equation| " + fmt("%.2e", worst_oracle) + ", " + fmt("%.2f s", secs);
    return o;
}

// 2. Fast vs brute Matrix Profile.
Outcome oracle_equivalence() {
    Outcome o;
    const auto t0 = Clock::now();
    Rng rng(RngSeed{2});
    const std::size_t ms[] = {8, 16, 64};
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const std::size_t m = ms[k % 3];
        const std::size_t n = 2 * m + rng.below(2048 - 2 * m + 1);
        auto s = random_walk(rng, n);
        if (k % 10 == 9) {
            // Plateaus and a distant offset on some series.
            for (std::size_t i = n / 4; i < n / 4 + m + 5 && i < n; ++i) {
                s[i] = 3.0;
            }
            for (auto& v : s) {
                v += 1e4;
            }
        }
        const auto cfg = mprofile::ProfileConfig::with_window(m);
        const auto fast = mprofile::matrix_profile_fast(s, cfg);
        const auto brute = mprofile::matrix_profile_brute(s, cfg);
        for (std::size_t i = 0; i < fast.size(); ++i) {
            const double delta = std::isinf(brute.values[i]) && std::isinf(fast.values[i])
                                     ? 0.0
                                     : std::abs(fast.values[i] - brute.values[i]);
            worst = std::max(worst, delta);
        }
    }
    const double secs = seconds_since(t0);
    o.pass = worst <= 1e-6 && secs < 120.0;
    o.detail = "100 series, max |fast - brute| " + fmt("%.2e", worst) + ", " + fmt("%.2f s", secs);
    return o;
}

// 3. Traffic profile calibration on a three-attack scenario.
Outcome traffic_calibration() {
    Outcome o;
    const auto t0 = Clock::now();
    pipeline::Options opt;
    simulate::NetScenarioConfig c;
    c.n_rtus = 6;
    c.n_mtus = 1;
    c.duration = 600.0;
    c.human_rate = 0.02;
    c.attacks = {{simulate::AttackKind::Scan, 120.0}, {simulate::AttackKind::Upload, 300.0},
                 {simulate::AttackKind::FakeCommand, 480.0}};
    opt.scenario = c;
    opt.seed = RngSeed{0};
    const auto r = pipeline::run(opt);
    for (const char* name : {features::kPacketCount, features::kIpPairCount}) {
        const auto& a = r.traffic.at(name);
        const auto& cal = *a.calibration;
        std::size_t detected = 0;
        for (const auto& iv : cal.attack_intervals) {
            bool hit = false;
            for (std::size_t i = iv.first; i <= iv.last; ++i) {
                hit = hit || a.profile.values[i] >= cal.threshold;
            }
            detected += hit;
        }
        const double fp_share = static_cast<double>(cal.false_positive_windows) / static_cast<double>(cal.benign_windows);
        o.pass = o.pass && detected == cal.attack_intervals.size() && fp_share <= 0.05;
        o.detail += std::string(name) + ": " + std::to_string(detected) + "/" +
                    std::to_string(cal.attack_intervals.size()) + " intervals, FP " +
                    std::to_string(cal.false_positive_windows) + "/" + std::to_string(cal.benign_windows) + " (" +
                    fmt("%.2f%%", 100.0 * fp_share) + "); ";
    }
    const double secs = seconds_since(t0);
    o.pass = o.pass && secs < 30.0;
    o.detail += fmt("%.2f s", secs);
    return o;
}

// 4. Packet classifiers on the ds1/ds2 presets.
Outcome classifiers() {
    Outcome o;
    const auto t0 = Clock::now();
    double worst_f1 = 1.0, worst_acc = 1.0;
    for (const char* name : {"ds1", "ds2"}) {
        for (std::uint64_t seed : {1, 2, 3}) {
            auto p = simulate::preset(name);
            for (auto& run : p.runs) {
                run.seed = RngSeed{seed};
            }
            const auto capture = simulate::run_preset(p);
            const auto pf = features::packet_features(capture, p.runs.front().n_mtus);
            const auto& d = pf.dataset;
            const double attack_share = static_cast<double>(d.count(1)) / static_cast<double>(d.size());
            const auto [train, test] = learn::split(d, 0.7, RngSeed{seed});
            const auto rf = learn::evaluate(learn::train_forest(train, {}, RngSeed{seed}), test);
            const auto svm = learn::evaluate(learn::train_svm(train, {}, RngSeed{seed}), test);
            worst_f1 = std::min({worst_f1, rf.f1, svm.f1});
            worst_acc = std::min({worst_acc, rf.accuracy, svm.accuracy});
            o.pass = o.pass && capture.size() >= 5000 && attack_share <= 0.05 && rf.f1 >= 0.98 &&
                     rf.accuracy >= 0.98 && svm.f1 >= 0.98 && svm.accuracy >= 0.98;
            o.detail += std::string(name) + "/" + std::to_string(seed) + " n=" + std::to_string(capture.size()) +
                        " attack " + fmt("%.1f%%", 100.0 * attack_share) + " rf F1 " + fmt("%.4f", rf.f1) +
                        " svm F1 " + fmt("%.4f", svm.f1) + "; ";
        }
    }
    const double secs = seconds_since(t0);
    o.pass = o.pass && secs < 120.0;
    o.detail += "worst F1 " + fmt("%.4f", worst_f1) + ", worst accuracy " + fmt("%.4f", worst_acc) + ", " +
                fmt("%.2f s", secs);
    return o;
}

double percentile99(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    // Nearest-rank definition.
    const auto rank = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(v.size())));
    return v[std::max<std::size_t>(rank, 1) - 1];
}

// 5. Process channels with disruptions at 4000 and 6500.
Outcome process_profile() {
    Outcome o;
    const auto t0 = Clock::now();
    simulate::ProcScenarioConfig cfg;
    cfg.attack_samples = {4000, 6500};
    cfg.seed = RngSeed{0};
    const auto p = simulate::run_process(cfg);
    for (const auto* s : {&p.flow, &p.level}) {
        const std::size_t m = pipeline::kDefaultProcessWindow;
        const auto profile = mprofile::matrix_profile_fast(*s, mprofile::ProfileConfig::with_window(m));
        const auto marked = mprofile::attack_marked_windows(*s->labels, m);
        std::vector<double> outside;
        for (std::size_t i = 0; i < profile.size(); ++i) {
            if (!marked[i]) {
                outside.push_back(profile.values[i]);
            }
        }
        const double p99 = percentile99(outside);
        o.detail += s->channel_name + ": p99 outside " + fmt("%.3f", p99) + ", interval max";
        const auto runs = mprofile::marked_runs(marked);
        o.pass = o.pass && runs.size() == 2;
        for (const auto& iv : runs) {
            const double top = *std::max_element(profile.values.begin() + static_cast<std::ptrdiff_t>(iv.first),
                                                 profile.values.begin() + static_cast<std::ptrdiff_t>(iv.last) + 1);
            o.pass = o.pass && top > p99;
            o.detail += " " + fmt("%.3f", top);
        }
        o.detail += "; ";
    }
    const double secs = seconds_since(t0);
    o.pass = o.pass && secs < 30.0;
    o.detail += fmt("%.2f s", secs);
    return o;
}

// 6. Codec round-trip and short-input rejection.
Outcome codec() {
    Outcome o;
    Rng rng(RngSeed{6});
    std::size_t round_trips = 0, rejected = 0, short_inputs = 0;
    for (int k = 0; k < 10000; ++k) {
        modbus::Frame f;
        f.transaction_id = static_cast<std::uint16_t>(rng.below(65536));
        f.unit_id = static_cast<std::uint8_t>(rng.below(256));
        f.function_code = static_cast<std::uint8_t>(1 + rng.below(255));
        f.data.resize(rng.below(modbus::kMaxDataSize + 1));
        for (auto& b : f.data) {
            b = static_cast<std::uint8_t>(rng.below(256));
        }
        const auto bytes = modbus::encode(f);
        round_trips += modbus::decode(bytes) == f && modbus::encode(modbus::decode(bytes)) == bytes;
    }
    // Every length below 8, with the header fields both valid and random.
    for (std::size_t len = 0; len < modbus::kMinFrameSize; ++len) {
        for (int k = 0; k < 1000; ++k) {
            std::vector<std::uint8_t> b(len);
            for (auto& x : b) {
                x = static_cast<std::uint8_t>(rng.below(256));
            }
            if (k % 2 == 0 && len >= 6) {
                b[2] = b[3] = b[4] = 0;
                b[5] = static_cast<std::uint8_t>(len - 6);
            }
            ++short_inputs;
            try {
                modbus::decode(b);
            } catch (const InputError&) {
                ++rejected;
            }
        }
    }
    o.pass = round_trips == 10000 && rejected == short_inputs;
    o.detail = std::to_string(round_trips) + "/10000 round-trips, " + std::to_string(rejected) + "/" +
               std::to_string(short_inputs) + " short inputs rejected";
    return o;
}

// 7. Correlator properties.
Outcome correlator() {
    Outcome o;
    Rng rng(RngSeed{7});
    const AlertSource sources[] = {AlertSource::OtTraffic, AlertSource::Process, AlertSource::PacketClassifier,
                                   AlertSource::ItExternal};
    std::size_t violations = 0;
    for (int k = 0; k < 1000; ++k) {
        std::vector<std::vector<Alert>> streams(1 + rng.below(4));
        std::size_t total = 0;
        for (auto& s : streams) {
            const auto n = rng.below(15);
            for (std::size_t i = 0; i < n; ++i) {
                const double a = rng.uniform(0.0, 1000.0);
                s.push_back(Alert{sources[rng.below(4)], a, a + rng.uniform(0.0, 30.0), 1.0,
                                  std::to_string(total++)});
            }
            std::sort(s.begin(), s.end(), [](const Alert& x, const Alert& y) { return x.start_time < y.start_time; });
        }
        std::size_t previous = SIZE_MAX;
        for (double w : {0.0, 5.0, 30.0, 120.0}) {
            const auto inc = correlate::correlate(streams, w);
            std::vector<int> seen(total, 0);
            for (const auto& x : inc) {
                std::set<AlertSource> distinct;
                for (const auto& a : x.alerts) {
                    ++seen[std::stoul(a.detail)];
                    distinct.insert(a.source);
                }
                violations += x.severity() != distinct.size() || x.alerts.empty();
            }
            violations += std::any_of(seen.begin(), seen.end(), [](int c) { return c != 1; });
            violations += inc.size() > previous;
            previous = inc.size();
        }
    }
    const auto example = correlate::correlate(
        {{Alert{AlertSource::OtTraffic, 100, 110, 1, ""}}, {Alert{AlertSource::Process, 105, 120, 1, ""}}}, 30);
    const bool example_ok = example.size() == 1 && example[0].severity() == 2;
    o.pass = violations == 0 && example_ok;
    o.detail = std::to_string(violations) + " property violations over 1000 alert sets, example " +
               (example_ok ? "1 incident of severity 2" : "wrong");
    return o;
}

// 8. Pipeline determinism, report included.
Outcome determinism() {
    Outcome o;
    const auto t0 = Clock::now();
    std::size_t files = 0;
    for (const char* name : {"ds2", "ds3"}) {
        pipeline::Options opt;
        opt.preset = name;
        opt.seed = RngSeed{7};
        const auto a = pipeline::render_files(pipeline::run(opt));
        opt.threads = 4;
        const auto b = pipeline::render_files(pipeline::run(opt));
        o.pass = o.pass && a == b && a.count("report.html") == 1;
        files += a.size();
    }
    o.detail = std::to_string(files) + " files compared across reruns (1 and 4 threads), " +
               fmt("%.2f s", seconds_since(t0));
    return o;
}

// 9. Matrix Profile performance at n = 50,000, m = 64.
Outcome performance() {
    Outcome o;
    Rng rng(RngSeed{9});
    const auto s = random_walk(rng, 50000);
    const auto cfg = mprofile::ProfileConfig::with_window(64);
    const auto t0 = Clock::now();
    const auto one = mprofile::matrix_profile_fast(s, cfg, 1);
    const double single = seconds_since(t0);
    const auto t1 = Clock::now();
    const auto many = mprofile::matrix_profile_fast(s, cfg, 4);
    const double parallel = seconds_since(t1);
    const bool identical = one.values == many.values && one.indices == many.indices;

    // Sampled brute-force check on 1% of positions.
    std::vector<std::size_t> positions;
    for (std::size_t i = 0; i < one.size(); i += 100) {
        positions.push_back(i);
    }
    const auto brute = mprofile::matrix_profile_brute_at(s, cfg, positions);
    double worst = 0.0;
    for (std::size_t k = 0; k < positions.size(); ++k) {
        worst = std::max(worst, std::abs(brute.values[k] - one.values[positions[k]]));
    }
    o.pass = single <= 10.0 && identical && worst <= 1e-6;
    o.detail = "single-threaded " + fmt("%.2f s", single) + ", 4 threads " + fmt("%.2f s", parallel) +
               (identical ? " (identical)" : " (DIFFERS)") + ", sampled max |fast - brute| " + fmt("%.2e", worst) +
               " on " + std::to_string(positions.size()) + " positions";
    return o;
}

} // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"distance equation suite", distance_suite},
        {"fast/brute oracle equivalence", oracle_equivalence},
        {"traffic threshold calibration", traffic_calibration},
        {"packet classifiers on ds1/ds2", classifiers},
        {"process channel profiles", process_profile},
        {"Modbus/TCP codec", codec},
        {"correlator properties", correlator},
        {"pipeline determinism", determinism},
        {"Matrix Profile performance", performance},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = std::string("exception: ") + e.what();
        }
        failures += !o.pass;
        std::printf("criterion %zu %-32s %s  %s\n", i + 1, criteria[i].first, o.pass ? "PASS" : "FAIL",
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
