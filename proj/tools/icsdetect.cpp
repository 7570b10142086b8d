// icsdetect: command-line front end for the detection toolkit.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "icsdetect/core.hpp"
#include "icsdetect/correlate.hpp"
#include "icsdetect/error.hpp"
#include "icsdetect/features.hpp"
#include "icsdetect/learn.hpp"
#include "icsdetect/mprofile.hpp"
#include "icsdetect/pipeline.hpp"
#include "icsdetect/simulate.hpp"

namespace fs = std::filesystem;
using namespace icsdetect;

namespace {

/// Every option of `cmd` with its effective value, for output headers.
Provenance provenance_of(const CLI::App* cmd) {
    Provenance p;
    std::string name = cmd->get_name();
    for (const auto* parent = cmd->get_parent(); parent && parent->get_parent(); parent = parent->get_parent()) {
        name = parent->get_name() + " " + name;
    }
    p["command"] = name;
    for (const auto* opt : cmd->get_options()) {
        if (opt->get_name() == "--help" || opt->get_name() == "-h" || opt->get_name() == "--help-all") {
            continue;
        }
        std::string key = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
        std::string value;
        if (opt->count() > 0) {
            for (const auto& r : opt->results()) {
                value += (value.empty() ? "" : " ") + r;
            }
        } else if (opt->get_expected_max() == 0) {
            value = "false";
        } else {
            value = opt->get_default_str();
        }
        p[key] = value;
    }
    return p;
}

std::string with_provenance(const std::string& json_text, const Provenance& prov) {
    auto j = nlohmann::ordered_json::parse(json_text);
    if (j.is_object()) {
        j["provenance"] = prov;
    }
    return j.dump(2) + "\n";
}

/// Atomic write to `path`, or standard output when no path was given.
void emit(const std::string& path, const std::string& content) {
    if (path.empty()) {
        std::cout << content;
    } else {
        write_text_file_atomic(path, content);
    }
}

std::string prefixed(const Provenance& prov, const std::string& body) {
    std::string out;
    for (const auto& [k, v] : prov) {
        out += "# " + k + "=" + v + "\n";
    }
    return out + body;
}

LabeledDataset read_rows(const std::string& path) { return read_dataset(path); }

double threshold_from(const std::string& calibration_path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(calibration_path));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(calibration_path + ": " + e.what());
    }
    if (!j.contains("threshold") || !j["threshold"].is_number()) {
        throw InputError(calibration_path + ": no numeric 'threshold'");
    }
    return j["threshold"].get<double>();
}

nlohmann::json read_json_object(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path + ": " + e.what());
    }
    if (!j.is_object()) {
        throw InputError(path + ": expected a JSON object");
    }
    return j;
}

/// Copies `key` from a config object into `target` unless the matching flag
/// was given on the command line.
template <class T>
void take(const nlohmann::json& j, const char* key, const CLI::App* cmd, const char* flag, T& target) {
    if (!j.contains(key) || cmd->get_option(flag)->count() > 0) {
        return;
    }
    try {
        target = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("config key '") + key + "': " + e.what());
    }
}

void reject_unknown_keys(const nlohmann::json& j, std::initializer_list<const char*> known) {
    for (const auto& [key, value] : j.items()) {
        if (std::find_if(known.begin(), known.end(), [&](const char* k) { return key == k; }) == known.end()) {
            throw InputError("unknown config key '" + key + "'");
        }
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Matrix Profile and classifier based intrusion detection for Modbus/TCP OT networks"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Print help for every subcommand");

    // simulate ---------------------------------------------------------------
    auto* sim = app.add_subcommand("simulate", "Generate labeled captures and process data");
    sim->require_subcommand(1);

    simulate::NetScenarioConfig net;
    std::vector<std::string> net_attacks;
    std::uint64_t net_seed = 0;
    std::string net_preset;
    std::string net_out;
    auto* sim_net = sim->add_subcommand("net", "Simulate a Modbus/TCP polling network");
    sim_net->add_option("--rtus", net.n_rtus, "Number of RTUs (3-12)")->capture_default_str();
    sim_net->add_option("--mtus", net.n_mtus, "Number of MTUs (1-2)")->capture_default_str();
    sim_net->add_option("--duration", net.duration, "Capture length in seconds")->capture_default_str();
    sim_net->add_option("--poll-period", net.poll_period, "Polling period in seconds")->capture_default_str();
    sim_net->add_option("--human-rate", net.human_rate, "Operator events per second")->capture_default_str();
    sim_net->add_option("--attack", net_attacks, "Attack as kind@seconds (scan, upload, fake_command); repeatable");
    sim_net->add_option("--preset", net_preset, "Use a dataset preset (ds1, ds2, ds3) instead of the flags above");
    sim_net->add_option("--seed", net_seed, "Random seed")->capture_default_str();
    sim_net->add_option("--out", net_out, "Output capture (JSONL)")->required();
    std::string net_config;
    sim_net->add_option("--config", net_config,
                        "JSON object with n_rtus, n_mtus, duration, poll_period, human_rate, attacks, seed; flags win");

    simulate::ProcScenarioConfig proc;
    std::uint64_t proc_seed = 0;
    std::string proc_out_dir;
    auto* sim_proc = sim->add_subcommand("process", "Simulate the two-channel tank process (flow.csv, level.csv)");
    sim_proc->add_option("--samples", proc.n_samples, "Number of samples")->capture_default_str();
    sim_proc->add_option("--period", proc.sample_period, "Sample period in seconds")->capture_default_str();
    sim_proc->add_option("--capacity", proc.tank_capacity, "Tank capacity")->capture_default_str();
    sim_proc->add_option("--fill-rate", proc.fill_rate, "Inflow per sample while filling")->capture_default_str();
    sim_proc->add_option("--drain-rate", proc.drain_rate, "Outflow per sample while draining")->capture_default_str();
    sim_proc->add_option("--noise", proc.noise_sigma, "Relative sensor noise")->capture_default_str();
    sim_proc->add_option("--attack-at", proc.attack_samples, "Sample index of a disruption; repeatable")
        ->capture_default_str();
    sim_proc->add_option("--seed", proc_seed, "Random seed")->capture_default_str();
    sim_proc->add_option("--out-dir", proc_out_dir, "Output directory")->required();
    std::string proc_config;
    sim_proc->add_option("--config", proc_config,
                         "JSON object with n_samples, sample_period, tank_capacity, fill_rate, drain_rate, "
                         "noise_sigma, attack_samples, seed; flags win");

    // features ---------------------------------------------------------------
    std::string feat_in;
    std::string feat_out_dir;
    double feat_bin = 1.0;
    int feat_mtus = 1;
    auto* feat = app.add_subcommand("features", "Bin a capture into traffic series and per-packet rows");
    feat->add_option("--in", feat_in, "Input capture (JSONL)")->required();
    feat->add_option("--bin-width", feat_bin, "Bin width in seconds")->capture_default_str();
    feat->add_option("--mtus", feat_mtus, "MTUs in the address plan (for src_is_known_mtu)")->capture_default_str();
    feat->add_option("--out-dir", feat_out_dir, "Output directory")->required();

    // mp ----------------------------------------------------------------------
    std::string mp_in;
    std::string mp_column;
    std::string mp_out;
    std::size_t mp_window = 0;
    std::size_t mp_exclusion = 0;
    bool mp_brute = false;
    unsigned mp_threads = 1;
    auto* mp = app.add_subcommand("mp", "Compute the Matrix Profile of a series");
    mp->add_option("--in", mp_in, "Input series CSV (t,value[,label])")->required();
    mp->add_option("--column", mp_column, "Value column to profile when the CSV has several");
    mp->add_option("--window", mp_window, "Subsequence length m (>= 3)")->required();
    mp->add_option("--exclusion", mp_exclusion, "Exclusion radius (default ceil(m/2))");
    mp->add_flag("--brute", mp_brute, "Use the all-pairs reference computation");
    mp->add_option("--threads", mp_threads, "Worker threads for the fast path (0 = all cores)")
        ->capture_default_str();
    mp->add_option("--out", mp_out, "Output profile CSV (default: standard output)");

    // calibrate ---------------------------------------------------------------
    std::string cal_profile;
    std::string cal_series;
    std::string cal_column;
    std::string cal_out;
    auto* cal = app.add_subcommand("calibrate", "Pick the threshold that flags every labeled attack interval");
    cal->add_option("--profile", cal_profile, "Profile CSV")->required();
    cal->add_option("--series", cal_series, "Series CSV carrying the bin labels")->required();
    cal->add_option("--column", cal_column, "Value column of the series CSV");
    cal->add_option("--out", cal_out, "Output calibration JSON (default: standard output)");

    // detect ------------------------------------------------------------------
    std::string det_profile;
    std::string det_series;
    std::string det_column;
    std::string det_calibration;
    std::string det_source = "ot_traffic";
    std::string det_out;
    double det_threshold = 0.0;
    auto* det = app.add_subcommand("detect", "Turn profile values above a threshold into alerts");
    det->add_option("--profile", det_profile, "Profile CSV")->required();
    auto* det_thr = det->add_option("--threshold", det_threshold, "Alert threshold");
    auto* det_cal = det->add_option("--calibration", det_calibration, "Take the threshold from a calibration JSON");
    det_thr->excludes(det_cal);
    det->add_option("--series", det_series, "Series CSV giving start time, bin width and channel name");
    det->add_option("--column", det_column, "Value column of the series CSV");
    det->add_option("--source", det_source, "Alert source (ot_traffic, process)")->capture_default_str();
    det->add_option("--out", det_out, "Output alerts (JSONL) (default: standard output)");

    // train / predict / evaluate ---------------------------------------------------
    std::string tr_in;
    std::string tr_model = "rf";
    std::string tr_out;
    std::string tr_test_out;
    double tr_fraction = 1.0;
    std::uint64_t tr_seed = 0;
    learn::ForestParams forest;
    learn::SvmParams svm;
    auto* train = app.add_subcommand("train", "Train a Random Forest or linear SVM on per-packet rows");
    train->add_option("--in", tr_in, "Labeled dataset CSV")->required();
    train->add_option("--model", tr_model, "Model kind")->check(CLI::IsMember({"rf", "svm"}))->capture_default_str();
    train->add_option("--train-fraction", tr_fraction, "Stratified share used for training")->capture_default_str();
    train->add_option("--test-out", tr_test_out, "Write the held-out rows here");
    train->add_option("--seed", tr_seed, "Random seed")->capture_default_str();
    train->add_option("--trees", forest.n_trees, "Forest size")->capture_default_str();
    train->add_option("--max-depth", forest.max_depth, "Maximum tree depth")->capture_default_str();
    train->add_option("--min-split", forest.min_samples_split, "Minimum samples to split a node")
        ->capture_default_str();
    train->add_option("--features-per-split", forest.feature_subset_size, "Features tried per split (0 = ceil(sqrt(d)))")
        ->capture_default_str();
    train->add_option("--threads", forest.threads, "Worker threads for forest training (0 = all cores)")
        ->capture_default_str();
    train->add_option("--lambda", svm.lambda, "SVM regularization")->capture_default_str();
    train->add_option("--epochs", svm.epochs, "SVM passes over the data")->capture_default_str();
    train->add_option("--out", tr_out, "Output model JSON")->required();

    std::string pr_model;
    std::string pr_knn;
    std::size_t pr_k = 5;
    std::string pr_in;
    std::string pr_out;
    auto* predict = app.add_subcommand("predict", "Classify rows with a trained model or k-NN");
    auto* pr_model_opt = predict->add_option("--model", pr_model, "Model JSON from train");
    auto* pr_knn_opt = predict->add_option("--knn", pr_knn, "Labeled dataset CSV used as k-NN reference");
    pr_model_opt->excludes(pr_knn_opt);
    predict->add_option("--k", pr_k, "Neighbors for --knn")->capture_default_str();
    predict->add_option("--in", pr_in, "Dataset CSV to classify (its label column is ignored)")->required();
    predict->add_option("--out", pr_out, "Output CSV (row,prediction) (default: standard output)");

    std::string ev_model;
    std::string ev_in;
    std::string ev_out;
    auto* evaluate = app.add_subcommand("evaluate", "Score a model on a labeled dataset");
    evaluate->add_option("--model", ev_model, "Model JSON from train")->required();
    evaluate->add_option("--in", ev_in, "Labeled dataset CSV")->required();
    evaluate->add_option("--out", ev_out, "Output metrics JSON (default: standard output)");

    std::string km_in;
    std::string km_out;
    std::size_t km_k = 2;
    std::uint64_t km_seed = 0;
    auto* km = app.add_subcommand("kmeans", "Cluster dataset rows");
    km->add_option("--in", km_in, "Dataset CSV (label column ignored)")->required();
    km->add_option("--k", km_k, "Number of clusters")->capture_default_str();
    km->add_option("--seed", km_seed, "Random seed")->capture_default_str();
    km->add_option("--out", km_out, "Output JSON (centroids, assignments) (default: standard output)");

    // correlate / report ------------------------------------------------------------
    std::vector<std::string> co_in;
    double co_window = correlate::kDefaultWindow;
    std::string co_out;
    auto* co = app.add_subcommand("correlate", "Group alerts from several detectors into incidents");
    co->add_option("--in", co_in, "Alert stream (JSONL); repeatable")->required();
    co->add_option("--window", co_window, "Correlation window in seconds")->capture_default_str();
    co->add_option("--out", co_out, "Output incidents JSON (default: standard output)");

    std::vector<std::string> rep_alerts;
    std::vector<std::string> rep_series;
    std::vector<std::string> rep_profiles;
    double rep_window = correlate::kDefaultWindow;
    std::string rep_title = "Intrusion detection report";
    std::string rep_out;
    auto* rep = app.add_subcommand("report", "Render the operator report as one HTML file");
    rep->add_option("--alerts", rep_alerts, "Alert stream (JSONL); repeatable");
    rep->add_option("--series", rep_series, "Series CSV to chart; repeatable");
    rep->add_option("--profile", rep_profiles, "Profile CSV for the series at the same position; repeatable");
    rep->add_option("--window", rep_window, "Correlation window in seconds")->capture_default_str();
    rep->add_option("--title", rep_title, "Page title")->capture_default_str();
    rep->add_option("--out", rep_out, "Output HTML")->required();

    // pipeline ----------------------------------------------------------------------
    pipeline::Options popt;
    std::uint64_t p_seed = 0;
    std::string p_out_dir;
    std::string p_it_alerts;
    simulate::NetScenarioConfig p_over;
    std::vector<std::string> p_attacks;
    auto* pipe = app.add_subcommand("pipeline", "Run a dataset preset end to end and write every artifact");
    pipe->add_option("preset", popt.preset, "Dataset preset")
        ->check(CLI::IsMember({"ds1", "ds2", "ds3"}))
        ->capture_default_str();
    pipe->add_option("--seed", p_seed, "Random seed")->capture_default_str();
    pipe->add_option("--out-dir", p_out_dir, "Output directory")->required();
    pipe->add_option("--bin-width", popt.bin_width, "Traffic bin width in seconds")->capture_default_str();
    pipe->add_option("--traffic-window", popt.traffic_window, "Matrix Profile window on traffic bins")
        ->capture_default_str();
    pipe->add_option("--process-window", popt.process_window, "Matrix Profile window on process samples")
        ->capture_default_str();
    pipe->add_option("--correlation-window", popt.correlation_window, "Correlation window in seconds")
        ->capture_default_str();
    pipe->add_option("--train-fraction", popt.train_fraction, "Stratified training share")->capture_default_str();
    pipe->add_option("--threads", popt.threads, "Worker threads (0 = all cores)")->capture_default_str();
    pipe->add_option("--it-alerts", p_it_alerts, "External IT alerts (JSONL) to correlate with");
    auto* o_rtus = pipe->add_option("--rtus", p_over.n_rtus, "Override: number of RTUs");
    auto* o_mtus = pipe->add_option("--mtus", p_over.n_mtus, "Override: number of MTUs");
    auto* o_dur = pipe->add_option("--duration", p_over.duration, "Override: capture length in seconds");
    auto* o_human = pipe->add_option("--human-rate", p_over.human_rate, "Override: operator events per second");
    auto* o_attack = pipe->add_option("--attack", p_attacks, "Override: attack list as kind@seconds; repeatable");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            return app.exit(e);
        }
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(Error::Kind::Usage);
    }

    try {
        if (sim_net->parsed()) {
            const auto prov = provenance_of(sim_net);
            if (!net_config.empty()) {
                const auto j = read_json_object(net_config);
                reject_unknown_keys(j, {"n_rtus", "n_mtus", "duration", "poll_period", "human_rate", "attacks", "seed"});
                take(j, "n_rtus", sim_net, "--rtus", net.n_rtus);
                take(j, "n_mtus", sim_net, "--mtus", net.n_mtus);
                take(j, "duration", sim_net, "--duration", net.duration);
                take(j, "poll_period", sim_net, "--poll-period", net.poll_period);
                take(j, "human_rate", sim_net, "--human-rate", net.human_rate);
                take(j, "seed", sim_net, "--seed", net_seed);
                if (j.contains("attacks") && net_attacks.empty()) {
                    // Either "kind@seconds" strings or {kind, start_time} objects.
                    for (const auto& a : j.at("attacks")) {
                        if (a.is_string()) {
                            net_attacks.push_back(a.get<std::string>());
                        } else if (a.is_object() && a.contains("kind") && a.contains("start_time")) {
                            net_attacks.push_back(a.at("kind").get<std::string>() + "@" +
                                                  format_double(a.at("start_time").get<double>()));
                        } else {
                            throw InputError("config attacks must be \"kind@seconds\" or {kind, start_time}");
                        }
                    }
                }
            }
            std::vector<PacketRecord> records;
            if (!net_preset.empty()) {
                auto p = simulate::preset(net_preset);
                for (auto& run : p.runs) {
                    run.seed = RngSeed{net_seed};
                }
                records = simulate::run_preset(p);
            } else {
                for (const auto& a : net_attacks) {
                    net.attacks.push_back(simulate::parse_attack(a));
                }
                net.seed = RngSeed{net_seed};
                records = simulate::run_net(net);
            }
            write_capture(records, net_out, prov);
            std::cout << records.size() << " records written to " << net_out << "\n";
        } else if (sim_proc->parsed()) {
            const auto prov = provenance_of(sim_proc);
            if (!proc_config.empty()) {
                const auto j = read_json_object(proc_config);
                reject_unknown_keys(j, {"n_samples", "sample_period", "tank_capacity", "fill_rate", "drain_rate",
                                        "noise_sigma", "attack_samples", "seed"});
                take(j, "n_samples", sim_proc, "--samples", proc.n_samples);
                take(j, "sample_period", sim_proc, "--period", proc.sample_period);
                take(j, "tank_capacity", sim_proc, "--capacity", proc.tank_capacity);
                take(j, "fill_rate", sim_proc, "--fill-rate", proc.fill_rate);
                take(j, "drain_rate", sim_proc, "--drain-rate", proc.drain_rate);
                take(j, "noise_sigma", sim_proc, "--noise", proc.noise_sigma);
                take(j, "attack_samples", sim_proc, "--attack-at", proc.attack_samples);
                take(j, "seed", sim_proc, "--seed", proc_seed);
            }
            proc.seed = RngSeed{proc_seed};
            const auto series = simulate::run_process(proc);
            fs::create_directories(proc_out_dir);
            write_series(series.flow, (fs::path(proc_out_dir) / "flow.csv").string(), prov);
            write_series(series.level, (fs::path(proc_out_dir) / "level.csv").string(), prov);
            std::cout << proc.n_samples << " samples written to " << proc_out_dir << "\n";
        } else if (feat->parsed()) {
            const auto prov = provenance_of(feat);
            const auto records = read_capture(feat_in);
            const auto binned = features::bin_traffic(records, feat_bin);
            const auto packets = features::packet_features(records, feat_mtus);
            fs::create_directories(feat_out_dir);
            for (const auto& [name, series] : binned.channels) {
                write_series(series, (fs::path(feat_out_dir) / (name + ".csv")).string(), prov);
            }
            write_text_file_atomic((fs::path(feat_out_dir) / "packets.csv").string(),
                                   format_dataset(packets.dataset, prov));
            std::cout << binned.size() << " bins, " << packets.dataset.size() << " packet rows";
            if (packets.skipped > 0) {
                std::cout << " (" << packets.skipped << " undecodable records skipped)";
            }
            std::cout << "\n";
        } else if (mp->parsed()) {
            const auto prov = provenance_of(mp);
            const auto series = read_series(mp_in, mp_column);
            mprofile::ProfileConfig cfg = mprofile::ProfileConfig::with_window(mp_window);
            if (mp->count("--exclusion") > 0) {
                cfg.exclusion_radius = mp_exclusion;
            }
            const auto profile = mp_brute ? mprofile::matrix_profile_brute(series, cfg)
                                          : mprofile::matrix_profile_fast(series, cfg, mp_threads);
            emit(mp_out, mprofile::format_profile(profile, prov));
        } else if (cal->parsed()) {
            const auto profile = mprofile::parse_profile(read_text_file(cal_profile));
            const auto series = read_series(cal_series, cal_column);
            if (!series.labels) {
                throw InputError(cal_series + ": no label column");
            }
            const auto c = mprofile::calibrate_threshold(profile, *series.labels);
            emit(cal_out, with_provenance(mprofile::format_calibration(c), provenance_of(cal)));
            std::cerr << "threshold " << format_double(c.threshold) << ", " << c.false_positive_windows << " of "
                      << c.benign_windows << " benign windows flagged\n";
        } else if (det->parsed()) {
            const auto profile = mprofile::parse_profile(read_text_file(det_profile));
            if (det->count("--threshold") == 0 && det->count("--calibration") == 0) {
                throw UsageError("one of --threshold or --calibration is required");
            }
            const double threshold = det_calibration.empty() ? det_threshold : threshold_from(det_calibration);
            double start = 0.0;
            double width = 1.0;
            std::string channel;
            if (!det_series.empty()) {
                const auto series = read_series(det_series, det_column);
                start = series.start_time;
                width = series.bin_width;
                channel = series.channel_name;
            }
            const auto alerts =
                mprofile::detect(profile, threshold, parse_alert_source(det_source), start, width, channel);
            emit(det_out, format_alerts(alerts));
            std::cerr << alerts.size() << " alerts\n";
        } else if (train->parsed()) {
            const auto data = read_rows(tr_in);
            auto train_set = data;
            if (tr_fraction < 1.0) {
                auto [tr, te] = learn::split(data, tr_fraction, RngSeed{tr_seed});
                train_set = std::move(tr);
                if (!tr_test_out.empty()) {
                    write_text_file_atomic(tr_test_out, format_dataset(te, provenance_of(train)));
                }
            } else if (!tr_test_out.empty()) {
                throw UsageError("--test-out needs --train-fraction below 1");
            }
            const std::string json = tr_model == "rf"
                                         ? learn::to_json(learn::train_forest(train_set, forest, RngSeed{tr_seed}))
                                         : learn::to_json(learn::train_svm(train_set, svm, RngSeed{tr_seed}));
            write_text_file_atomic(tr_out, with_provenance(json, provenance_of(train)));
        } else if (predict->parsed()) {
            if (pr_model.empty() && pr_knn.empty()) {
                throw UsageError("one of --model or --knn is required");
            }
            const auto rows = read_rows(pr_in);
            std::function<int(std::span<const double>)> fn;
            learn::ForestModel forest_model;
            learn::SvmModel svm_model;
            LabeledDataset reference;
            if (!pr_knn.empty()) {
                reference = read_rows(pr_knn);
                fn = [&](std::span<const double> r) { return learn::knn_predict(reference, r, pr_k); };
            } else {
                const auto text = read_text_file(pr_model);
                if (learn::model_kind(text) == "rf") {
                    forest_model = learn::forest_from_json(text);
                    fn = [&](std::span<const double> r) { return learn::predict_forest(forest_model, r); };
                } else {
                    svm_model = learn::svm_from_json(text);
                    fn = [&](std::span<const double> r) { return learn::predict_svm(svm_model, r); };
                }
            }
            std::string out = "row,prediction\n";
            for (std::size_t i = 0; i < rows.size(); ++i) {
                out += std::to_string(i) + "," + std::to_string(fn(rows.rows[i])) + "\n";
            }
            emit(pr_out, prefixed(provenance_of(predict), out));
        } else if (evaluate->parsed()) {
            const auto text = read_text_file(ev_model);
            const auto data = read_rows(ev_in);
            const auto report = learn::model_kind(text) == "rf" ? learn::evaluate(learn::forest_from_json(text), data)
                                                                : learn::evaluate(learn::svm_from_json(text), data);
            emit(ev_out, with_provenance(learn::to_json(report), provenance_of(evaluate)));
            std::cerr << "F1 " << format_double(report.f1) << ", accuracy " << format_double(report.accuracy) << "\n";
        } else if (km->parsed()) {
            const auto data = read_rows(km_in);
            const auto result = learn::kmeans(data.rows, km_k, RngSeed{km_seed});
            nlohmann::ordered_json j;
            j["k"] = km_k;
            j["iterations"] = result.iterations;
            j["centroids"] = result.centroids;
            j["assignments"] = result.assignments;
            emit(km_out, with_provenance(j.dump(), provenance_of(km)));
        } else if (co->parsed()) {
            std::vector<std::vector<Alert>> streams;
            for (const auto& path : co_in) {
                streams.push_back(read_alerts(path));
            }
            const auto incidents = correlate::correlate(streams, co_window);
            emit(co_out, correlate::incidents_to_json(incidents));
            std::cerr << incidents.size() << " incidents\n";
        } else if (rep->parsed()) {
            if (rep_profiles.size() > rep_series.size()) {
                throw UsageError("more --profile than --series files");
            }
            std::vector<std::vector<Alert>> streams;
            for (const auto& path : rep_alerts) {
                streams.push_back(read_alerts(path));
            }
            const auto incidents = correlate::correlate(streams, rep_window);
            std::vector<correlate::Chart> charts;
            for (std::size_t i = 0; i < rep_series.size(); ++i) {
                correlate::Chart c{read_series(rep_series[i]), std::nullopt};
                if (i < rep_profiles.size()) {
                    c.profile = mprofile::parse_profile(read_text_file(rep_profiles[i]));
                }
                charts.push_back(std::move(c));
            }
            write_text_file_atomic(rep_out,
                                   correlate::render_report(incidents, charts, provenance_of(rep), rep_title));
        } else if (pipe->parsed()) {
            popt.seed = RngSeed{p_seed};
            if (!p_it_alerts.empty()) {
                popt.it_alerts = read_alerts(p_it_alerts);
            }
            const bool overridden = o_rtus->count() + o_mtus->count() + o_dur->count() + o_human->count() +
                                        o_attack->count() > 0;
            if (overridden) {
                auto base = simulate::preset(popt.preset).runs.front();
                if (o_rtus->count()) base.n_rtus = p_over.n_rtus;
                if (o_mtus->count()) base.n_mtus = p_over.n_mtus;
                if (o_dur->count()) base.duration = p_over.duration;
                if (o_human->count()) base.human_rate = p_over.human_rate;
                if (o_attack->count()) {
                    base.attacks.clear();
                    for (const auto& a : p_attacks) {
                        base.attacks.push_back(simulate::parse_attack(a));
                    }
                }
                popt.scenario = base;
            }
            const auto result = pipeline::run(popt);
            pipeline::write(result, p_out_dir);
            std::cout << result.capture.size() << " packets, " << result.incidents.size() << " incidents; forest F1 "
                      << format_double(result.forest_eval.f1) << ", SVM F1 " << format_double(result.svm_eval.f1)
                      << "; outputs in " << p_out_dir << "\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(Error::Kind::Input);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(Error::Kind::Input);
    }
    return 0;
}
