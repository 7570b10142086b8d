#include "icsdetect/pipeline.hpp"

#include <filesystem>

#include <json.hpp>

#include "icsdetect/error.hpp"

namespace icsdetect::pipeline {

namespace {

constexpr std::uint64_t kProcessStream = 0x70726f63;

ChannelAnalysis analyze(const TimeSeries& series, std::size_t m, unsigned threads, AlertSource source) {
    ChannelAnalysis a;
    a.series = series;
    a.profile = mprofile::matrix_profile_fast(series, mprofile::ProfileConfig::with_window(m), threads);
    if (series.labels) {
        try {
            a.calibration = mprofile::calibrate_threshold(a.profile, *series.labels);
        } catch (const PreconditionError&) {
            // Benign-only series: nothing to calibrate against.
        }
    }
    if (a.calibration && std::isfinite(a.calibration->threshold)) {
        a.alerts = mprofile::detect(a.profile, a.calibration->threshold, source, series.start_time, series.bin_width,
                                    series.channel_name);
    }
    return a;
}

std::string labels_csv(const TimeSeries& series) {
    std::string out = "t,label\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
        out += format_double(series.time_at(i)) + "," + std::string(to_string((*series.labels)[i])) + "\n";
    }
    return out;
}

std::string config_json(const Result& r) {
    nlohmann::ordered_json j;
    j["preset"] = r.scenario.name;
    j["seed"] = r.options.seed.value;
    auto runs = nlohmann::ordered_json::array();
    for (const auto& c : r.scenario.runs) {
        nlohmann::ordered_json jc;
        jc["n_rtus"] = c.n_rtus;
        jc["n_mtus"] = c.n_mtus;
        jc["duration"] = c.duration;
        jc["poll_period"] = c.poll_period;
        jc["human_rate"] = c.human_rate;
        auto attacks = nlohmann::ordered_json::array();
        for (const auto& a : c.attacks) {
            attacks.push_back({{"kind", std::string(simulate::to_string(a.kind))}, {"start_time", a.start_time}});
        }
        jc["attacks"] = attacks;
        jc["seed"] = c.seed.value;
        runs.push_back(jc);
    }
    j["runs"] = runs;
    const auto& p = r.options.process;
    j["process"] = {{"n_samples", p.n_samples},     {"sample_period", p.sample_period},
                    {"tank_capacity", p.tank_capacity}, {"fill_rate", p.fill_rate},
                    {"drain_rate", p.drain_rate},   {"noise_sigma", p.noise_sigma},
                    {"attack_samples", p.attack_samples}};
    j["bin_width"] = r.options.bin_width;
    j["traffic_window"] = r.options.traffic_window;
    j["process_window"] = r.options.process_window;
    j["correlation_window"] = r.options.correlation_window;
    j["train_fraction"] = r.options.train_fraction;
    j["forest"] = {{"n_trees", r.options.forest.n_trees},
                   {"max_depth", r.options.forest.max_depth},
                   {"min_samples_split", r.options.forest.min_samples_split},
                   {"feature_subset_size", r.forest.feature_subset_size}};
    j["svm"] = {{"lambda", r.options.svm.lambda}, {"epochs", r.options.svm.epochs}};
    return j.dump(2) + "\n";
}

} // namespace

std::vector<Alert> classifier_alerts(const std::vector<PacketRecord>& records, const std::vector<int>& flags,
                                     double gap, const std::string& model_name) {
    if (flags.size() != records.size()) {
        throw UsageError("one flag per record is required");
    }
    std::vector<Alert> alerts;
    std::size_t members = 0;
    auto close = [&] {
        if (members > 0) {
            alerts.back().score = static_cast<double>(members);
            alerts.back().detail = model_name + ": " + std::to_string(members) + " packets flagged";
        }
        members = 0;
    };
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (flags[i] != 1) {
            continue;
        }
        const double t = records[i].timestamp;
        if (members > 0 && t - alerts.back().end_time <= gap) {
            alerts.back().end_time = t;
            ++members;
            continue;
        }
        close();
        alerts.push_back(Alert{AlertSource::PacketClassifier, t, t, 0.0, {}});
        members = 1;
    }
    close();
    return alerts;
}

Result run(const Options& options) {
    Result r;
    r.options = options;
    if (options.scenario) {
        r.scenario.name = "custom";
        r.scenario.runs = {*options.scenario};
    } else {
        r.scenario = simulate::preset(options.preset);
    }
    for (auto& run : r.scenario.runs) {
        run.seed = options.seed;
    }

    r.capture = simulate::run_preset(r.scenario);
    r.binned = features::bin_traffic(r.capture, options.bin_width);
    for (const auto& [name, series] : r.binned.channels) {
        r.traffic.emplace(name, analyze(series, options.traffic_window, options.threads, AlertSource::OtTraffic));
    }

    auto proc = options.process;
    proc.seed = derive_seed(options.seed, kProcessStream);
    r.options.process.seed = proc.seed;
    r.process_series = simulate::run_process(proc);
    for (const auto* s : {&r.process_series.flow, &r.process_series.level}) {
        r.process.emplace(s->channel_name, analyze(*s, options.process_window, options.threads, AlertSource::Process));
    }

    r.packets = features::packet_features(r.capture, r.scenario.runs.front().n_mtus);
    auto [train, test] = learn::split(r.packets.dataset, options.train_fraction, options.seed);
    r.forest = learn::train_forest(train, options.forest, options.seed);
    r.svm = learn::train_svm(train, options.svm, options.seed);
    r.forest_eval = learn::evaluate(r.forest, test);
    r.svm_eval = learn::evaluate(r.svm, test);

    std::vector<int> flags(r.capture.size(), 0);
    for (std::size_t row = 0; row < r.packets.dataset.size(); ++row) {
        flags[r.packets.record_index[row]] = learn::predict_forest(r.forest, r.packets.dataset.rows[row]);
    }
    r.classifier_alerts = classifier_alerts(r.capture, flags, options.bin_width, "random forest");

    std::vector<std::vector<Alert>> streams;
    for (const auto& [name, a] : r.traffic) {
        streams.push_back(a.alerts);
    }
    for (const auto& [name, a] : r.process) {
        streams.push_back(a.alerts);
    }
    streams.push_back(r.classifier_alerts);
    streams.push_back(options.it_alerts);
    r.incidents = correlate::correlate(streams, options.correlation_window);

    auto& md = r.metadata;
    md["preset"] = r.scenario.name;
    md["seed"] = std::to_string(options.seed.value);
    md["packets"] = std::to_string(r.capture.size());
    md["bin_width"] = format_double(options.bin_width);
    md["traffic_window"] = std::to_string(options.traffic_window);
    md["process_window"] = std::to_string(options.process_window);
    md["process_seed"] = std::to_string(proc.seed.value);
    md["correlation_window"] = format_double(options.correlation_window);
    for (std::size_t i = 0; i < r.scenario.runs.size(); ++i) {
        const auto& c = r.scenario.runs[i];
        std::string attacks;
        for (const auto& a : c.attacks) {
            attacks += (attacks.empty() ? "" : " ") + std::string(simulate::to_string(a.kind)) + "@" +
                       format_double(a.start_time);
        }
        md["run" + std::to_string(i)] = std::to_string(c.n_rtus) + " RTUs, " + std::to_string(c.n_mtus) +
                                        " MTUs, " + format_double(c.duration) + " s, human rate " +
                                        format_double(c.human_rate) + ", attacks: " +
                                        (attacks.empty() ? "none" : attacks);
    }
    for (const auto* group : {&r.traffic, &r.process}) {
        for (const auto& [name, a] : *group) {
            if (a.calibration) {
                md["threshold." + name] = format_double(a.calibration->threshold) + " (" +
                                          std::to_string(a.calibration->false_positive_windows) + " false-positive windows of " +
                                          std::to_string(a.calibration->benign_windows) + ")";
            }
        }
    }
    md["forest"] = "F1 " + format_double(r.forest_eval.f1) + ", accuracy " + format_double(r.forest_eval.accuracy);
    md["svm"] = "F1 " + format_double(r.svm_eval.f1) + ", accuracy " + format_double(r.svm_eval.accuracy);
    return r;
}

std::map<std::string, std::string> render_files(const Result& r) {
    std::map<std::string, std::string> files;
    const Provenance prov{{"preset", r.scenario.name}, {"seed", std::to_string(r.options.seed.value)}};

    files["capture.jsonl"] = format_capture(r.capture, prov);
    for (const auto& [name, a] : r.traffic) {
        files["features_" + name + ".csv"] = format_series(a.series, prov);
        files["profile_" + name + ".csv"] = mprofile::format_profile(a.profile, prov);
        if (a.calibration) {
            files["calibration_" + name + ".json"] = mprofile::format_calibration(*a.calibration);
        }
    }
    files["features_labels.csv"] = labels_csv(r.binned.channels.begin()->second);
    for (const auto& [name, a] : r.process) {
        files["process_" + name + ".csv"] = format_series(a.series, prov);
        files["profile_process_" + name + ".csv"] = mprofile::format_profile(a.profile, prov);
        if (a.calibration) {
            files["calibration_process_" + name + ".json"] = mprofile::format_calibration(*a.calibration);
        }
    }
    files["packets.csv"] = format_dataset(r.packets.dataset, prov);
    files["model_rf.json"] = learn::to_json(r.forest);
    files["model_svm.json"] = learn::to_json(r.svm);
    files["eval_rf.json"] = learn::to_json(r.forest_eval);
    files["eval_svm.json"] = learn::to_json(r.svm_eval);

    std::vector<Alert> all;
    for (const auto& inc : r.incidents) {
        all.insert(all.end(), inc.alerts.begin(), inc.alerts.end());
    }
    files["alerts.jsonl"] = format_alerts(all);
    files["incidents.json"] = correlate::incidents_to_json(r.incidents);
    files["run.json"] = config_json(r);

    std::vector<correlate::Chart> charts;
    for (const auto& [name, a] : r.traffic) {
        charts.push_back({a.series, a.profile});
    }
    for (const auto& [name, a] : r.process) {
        auto s = a.series;
        s.channel_name = "process " + name;
        charts.push_back({s, a.profile});
    }
    files["report.html"] = correlate::render_report(r.incidents, charts, r.metadata);
    return files;
}

void write(const Result& result, const std::string& out_dir) {
    const auto files = render_files(result);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw InputError("cannot create output directory '" + out_dir + "'");
    }
    for (const auto& [name, content] : files) {
        write_text_file_atomic((std::filesystem::path(out_dir) / name).string(), content);
    }
}

} // namespace icsdetect::pipeline
