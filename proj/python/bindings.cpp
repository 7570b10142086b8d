#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "icsdetect/core.hpp"
#include "icsdetect/correlate.hpp"
#include "icsdetect/error.hpp"
#include "icsdetect/features.hpp"
#include "icsdetect/learn.hpp"
#include "icsdetect/modbus.hpp"
#include "icsdetect/mprofile.hpp"
#include "icsdetect/pipeline.hpp"
#include "icsdetect/simulate.hpp"

namespace py = pybind11;
using namespace icsdetect;

namespace {

py::bytes to_bytes(const std::vector<std::uint8_t>& v) {
    return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
}

std::vector<std::uint8_t> from_bytes(const py::bytes& b) {
    const std::string s = b;
    return {s.begin(), s.end()};
}

/// Labels given as "benign"/"attack" strings.
std::vector<BinLabel> bin_labels(const std::vector<std::string>& labels) {
    std::vector<BinLabel> out;
    out.reserve(labels.size());
    for (const auto& l : labels) {
        out.push_back(parse_bin_label(l));
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_icsdetect, m) {
    m.doc() = "Matrix Profile and classifier based intrusion detection for Modbus/TCP OT networks";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<UsageError>(m, "UsageError", base.ptr());
    py::register_exception<InputError>(m, "InputError", base.ptr());
    py::register_exception<PreconditionError>(m, "PreconditionError", base.ptr());

    py::enum_<PacketLabel>(m, "PacketLabel")
        .value("benign", PacketLabel::Benign)
        .value("scan", PacketLabel::Scan)
        .value("upload", PacketLabel::Upload)
        .value("fake_command", PacketLabel::FakeCommand)
        .value("process_disruption", PacketLabel::ProcessDisruption);
    py::enum_<BinLabel>(m, "BinLabel").value("benign", BinLabel::Benign).value("attack", BinLabel::Attack);
    py::enum_<AlertSource>(m, "AlertSource")
        .value("ot_traffic", AlertSource::OtTraffic)
        .value("process", AlertSource::Process)
        .value("packet_classifier", AlertSource::PacketClassifier)
        .value("it_external", AlertSource::ItExternal);

    // core -------------------------------------------------------------------
    py::class_<PacketRecord>(m, "PacketRecord")
        .def(py::init<>())
        .def_readwrite("timestamp", &PacketRecord::timestamp)
        .def_readwrite("src_ip", &PacketRecord::src_ip)
        .def_readwrite("src_port", &PacketRecord::src_port)
        .def_readwrite("dst_ip", &PacketRecord::dst_ip)
        .def_readwrite("dst_port", &PacketRecord::dst_port)
        .def_property(
            "frame", [](const PacketRecord& r) { return to_bytes(r.frame); },
            [](PacketRecord& r, const py::bytes& b) { r.frame = from_bytes(b); })
        .def_readwrite("label", &PacketRecord::label);

    py::class_<TimeSeries>(m, "TimeSeries")
        .def(py::init<>())
        .def(py::init([](std::vector<double> values, double start_time, double bin_width, std::string name) {
                 TimeSeries s;
                 s.values = std::move(values);
                 s.start_time = start_time;
                 s.bin_width = bin_width;
                 s.channel_name = std::move(name);
                 return s;
             }),
             py::arg("values"), py::arg("start_time") = 0.0, py::arg("bin_width") = 1.0, py::arg("name") = "value")
        .def_readwrite("start_time", &TimeSeries::start_time)
        .def_readwrite("bin_width", &TimeSeries::bin_width)
        .def_readwrite("values", &TimeSeries::values)
        .def_readwrite("channel_name", &TimeSeries::channel_name)
        .def_readwrite("labels", &TimeSeries::labels)
        .def("__len__", &TimeSeries::size);

    py::class_<LabeledDataset>(m, "LabeledDataset")
        .def(py::init<>())
        .def(py::init([](std::vector<std::string> names, std::vector<std::vector<double>> rows,
                         std::vector<int> labels) {
                 return LabeledDataset{std::move(names), std::move(rows), std::move(labels)};
             }),
             py::arg("feature_names"), py::arg("rows"), py::arg("labels"))
        .def_readwrite("feature_names", &LabeledDataset::feature_names)
        .def_readwrite("rows", &LabeledDataset::rows)
        .def_readwrite("labels", &LabeledDataset::labels)
        .def("count", &LabeledDataset::count)
        .def("__len__", &LabeledDataset::size);

    py::class_<Alert>(m, "Alert")
        .def(py::init([](AlertSource source, double start, double end, double score, std::string detail) {
                 return Alert{source, start, end, score, std::move(detail)};
             }),
             py::arg("source"), py::arg("start_time"), py::arg("end_time"), py::arg("score") = 0.0,
             py::arg("detail") = "")
        .def_readwrite("source", &Alert::source)
        .def_readwrite("start_time", &Alert::start_time)
        .def_readwrite("end_time", &Alert::end_time)
        .def_readwrite("score", &Alert::score)
        .def_readwrite("detail", &Alert::detail);

    m.def("format_capture", &format_capture, py::arg("records"), py::arg("provenance") = Provenance{});
    m.def("parse_capture", &parse_capture);
    m.def("read_capture", &read_capture);
    m.def("format_series", &format_series, py::arg("series"), py::arg("provenance") = Provenance{});
    m.def("parse_series", &parse_series, py::arg("text"), py::arg("channel_name") = "value",
          py::arg("column") = "");
    m.def("read_series", &read_series, py::arg("path"), py::arg("column") = "");
    m.def("format_dataset", &format_dataset, py::arg("dataset"), py::arg("provenance") = Provenance{});
    m.def("parse_dataset", &parse_dataset);
    m.def("format_alerts", &format_alerts);
    m.def("parse_alerts", &parse_alerts);

    // modbus -----------------------------------------------------------------
    auto mb = m.def_submodule("modbus", "Modbus/TCP frame codec");
    py::class_<modbus::Frame>(mb, "Frame")
        .def(py::init([](std::uint16_t txn, std::uint16_t proto, std::uint8_t unit, std::uint8_t fc,
                         const py::bytes& data) { return modbus::Frame{txn, proto, unit, fc, from_bytes(data)}; }),
             py::arg("transaction_id") = 0, py::arg("protocol_id") = 0, py::arg("unit_id") = 0,
             py::arg("function_code") = 1, py::arg("data") = py::bytes())
        .def_readwrite("transaction_id", &modbus::Frame::transaction_id)
        .def_readwrite("protocol_id", &modbus::Frame::protocol_id)
        .def_readwrite("unit_id", &modbus::Frame::unit_id)
        .def_readwrite("function_code", &modbus::Frame::function_code)
        .def_property(
            "data", [](const modbus::Frame& f) { return to_bytes(f.data); },
            [](modbus::Frame& f, const py::bytes& b) { f.data = from_bytes(b); })
        .def("__eq__", [](const modbus::Frame& a, const modbus::Frame& b) { return a == b; });
    mb.def("decode", [](const py::bytes& b) { return modbus::decode(from_bytes(b)); });
    mb.def("encode", [](const modbus::Frame& f) { return to_bytes(modbus::encode(f)); });
    mb.def("describe", py::overload_cast<const modbus::Frame&>(&modbus::describe));

    // simulate ---------------------------------------------------------------
    auto sim = m.def_submodule("simulate", "Labeled capture and process generators");
    py::enum_<simulate::AttackKind>(sim, "AttackKind")
        .value("scan", simulate::AttackKind::Scan)
        .value("upload", simulate::AttackKind::Upload)
        .value("fake_command", simulate::AttackKind::FakeCommand);
    py::class_<simulate::AttackSpec>(sim, "AttackSpec")
        .def(py::init([](simulate::AttackKind k, double t) { return simulate::AttackSpec{k, t}; }))
        .def_readwrite("kind", &simulate::AttackSpec::kind)
        .def_readwrite("start_time", &simulate::AttackSpec::start_time);
    sim.def("parse_attack", &simulate::parse_attack);
    py::class_<simulate::NetScenarioConfig>(sim, "NetScenarioConfig")
        .def(py::init<>())
        .def_readwrite("n_rtus", &simulate::NetScenarioConfig::n_rtus)
        .def_readwrite("n_mtus", &simulate::NetScenarioConfig::n_mtus)
        .def_readwrite("duration", &simulate::NetScenarioConfig::duration)
        .def_readwrite("poll_period", &simulate::NetScenarioConfig::poll_period)
        .def_readwrite("human_rate", &simulate::NetScenarioConfig::human_rate)
        .def_readwrite("attacks", &simulate::NetScenarioConfig::attacks)
        .def_property(
            "seed", [](const simulate::NetScenarioConfig& c) { return c.seed.value; },
            [](simulate::NetScenarioConfig& c, std::uint64_t s) { c.seed = RngSeed{s}; });
    py::class_<simulate::ProcScenarioConfig>(sim, "ProcScenarioConfig")
        .def(py::init<>())
        .def_readwrite("n_samples", &simulate::ProcScenarioConfig::n_samples)
        .def_readwrite("sample_period", &simulate::ProcScenarioConfig::sample_period)
        .def_readwrite("tank_capacity", &simulate::ProcScenarioConfig::tank_capacity)
        .def_readwrite("fill_rate", &simulate::ProcScenarioConfig::fill_rate)
        .def_readwrite("drain_rate", &simulate::ProcScenarioConfig::drain_rate)
        .def_readwrite("noise_sigma", &simulate::ProcScenarioConfig::noise_sigma)
        .def_readwrite("attack_samples", &simulate::ProcScenarioConfig::attack_samples)
        .def_property(
            "seed", [](const simulate::ProcScenarioConfig& c) { return c.seed.value; },
            [](simulate::ProcScenarioConfig& c, std::uint64_t s) { c.seed = RngSeed{s}; });
    py::class_<simulate::ProcessSeries>(sim, "ProcessSeries")
        .def_readonly("flow", &simulate::ProcessSeries::flow)
        .def_readonly("level", &simulate::ProcessSeries::level);
    py::class_<simulate::Preset>(sim, "Preset")
        .def_readonly("name", &simulate::Preset::name)
        .def_readwrite("runs", &simulate::Preset::runs);
    sim.def("run_net", &simulate::run_net);
    sim.def("run_process", &simulate::run_process);
    sim.def("preset", &simulate::preset);
    sim.def("run_preset", &simulate::run_preset);

    // features ---------------------------------------------------------------
    auto feat = m.def_submodule("features", "Traffic binning and per-packet features");
    py::class_<features::BinnedFeatures>(feat, "BinnedFeatures")
        .def_readonly("channels", &features::BinnedFeatures::channels)
        .def_readonly("bin_width", &features::BinnedFeatures::bin_width)
        .def_readonly("bin_labels", &features::BinnedFeatures::bin_labels);
    py::class_<features::PacketFeatures>(feat, "PacketFeatures")
        .def_readonly("dataset", &features::PacketFeatures::dataset)
        .def_readonly("skipped", &features::PacketFeatures::skipped);
    feat.def("bin_traffic", &features::bin_traffic, py::arg("records"), py::arg("bin_width") = 1.0);
    feat.def("packet_features", &features::packet_features, py::arg("records"), py::arg("n_mtus") = 2);

    // mprofile ---------------------------------------------------------------
    auto mp = m.def_submodule("mprofile", "Matrix Profile, threshold calibration and detection");
    py::class_<mprofile::ProfileConfig>(mp, "ProfileConfig")
        .def(py::init([](std::size_t m, std::optional<std::size_t> r) {
                 auto c = mprofile::ProfileConfig::with_window(m);
                 if (r) {
                     c.exclusion_radius = *r;
                 }
                 return c;
             }),
             py::arg("m"), py::arg("exclusion_radius") = py::none())
        .def_readwrite("m", &mprofile::ProfileConfig::m)
        .def_readwrite("exclusion_radius", &mprofile::ProfileConfig::exclusion_radius);
    py::class_<mprofile::MatrixProfile>(mp, "MatrixProfile")
        .def_readonly("values", &mprofile::MatrixProfile::values)
        .def_property_readonly("indices",
                               [](const mprofile::MatrixProfile& p) {
                                   std::vector<long long> out;
                                   for (auto i : p.indices) {
                                       out.push_back(i == mprofile::kNoNeighbor ? -1 : static_cast<long long>(i));
                                   }
                                   return out;
                               })
        .def_readonly("config", &mprofile::MatrixProfile::config)
        .def("__len__", &mprofile::MatrixProfile::size);
    py::class_<mprofile::Calibration>(mp, "Calibration")
        .def_readonly("threshold", &mprofile::Calibration::threshold)
        .def_readonly("false_positive_windows", &mprofile::Calibration::false_positive_windows)
        .def_readonly("benign_windows", &mprofile::Calibration::benign_windows)
        .def_property_readonly("attack_intervals", [](const mprofile::Calibration& c) {
            std::vector<std::pair<std::size_t, std::size_t>> out;
            for (const auto& iv : c.attack_intervals) {
                out.emplace_back(iv.first, iv.last);
            }
            return out;
        });
    mp.def("znorm_distance", [](const std::vector<double>& x, const std::vector<double>& y) {
        return mprofile::znorm_distance(x, y);
    });
    mp.def(
        "matrix_profile_fast",
        [](const std::vector<double>& x, std::size_t m, unsigned threads) {
            return mprofile::matrix_profile_fast(x, mprofile::ProfileConfig::with_window(m), threads);
        },
        py::arg("series"), py::arg("m"), py::arg("threads") = 1);
    mp.def(
        "matrix_profile_brute",
        [](const std::vector<double>& x, std::size_t m) {
            return mprofile::matrix_profile_brute(x, mprofile::ProfileConfig::with_window(m));
        },
        py::arg("series"), py::arg("m"));
    mp.def(
        "calibrate_threshold",
        [](const mprofile::MatrixProfile& p, const std::vector<std::string>& labels) {
            return mprofile::calibrate_threshold(p, bin_labels(labels));
        },
        py::arg("profile"), py::arg("bin_labels"));
    mp.def(
        "detect",
        [](const mprofile::MatrixProfile& p, double threshold, AlertSource source, double start, double width,
           const std::string& channel) { return mprofile::detect(p, threshold, source, start, width, channel); },
        py::arg("profile"), py::arg("threshold"), py::arg("source") = AlertSource::OtTraffic,
        py::arg("start_time") = 0.0, py::arg("bin_width") = 1.0, py::arg("channel") = "");
    mp.def("format_profile", &mprofile::format_profile, py::arg("profile"), py::arg("provenance") = Provenance{});
    mp.def("parse_profile", &mprofile::parse_profile);

    // learn ------------------------------------------------------------------
    auto ln = m.def_submodule("learn", "Random Forest, linear SVM, kNN, k-means and metrics");
    py::class_<learn::ForestModel>(ln, "ForestModel")
        .def_readonly("n_trees", &learn::ForestModel::n_trees)
        .def_readonly("feature_subset_size", &learn::ForestModel::feature_subset_size)
        .def("predict", [](const learn::ForestModel& f, const std::vector<double>& row) {
            return learn::predict_forest(f, row);
        });
    py::class_<learn::SvmModel>(ln, "SvmModel")
        .def_readonly("weights", &learn::SvmModel::weights)
        .def_readonly("bias", &learn::SvmModel::bias)
        .def("decision_value",
             [](const learn::SvmModel& s, const std::vector<double>& row) { return s.decision_value(row); })
        .def("predict", [](const learn::SvmModel& s, const std::vector<double>& row) {
            return learn::predict_svm(s, row);
        });
    py::class_<learn::EvalReport>(ln, "EvalReport")
        .def_readonly("tp", &learn::EvalReport::tp)
        .def_readonly("fp", &learn::EvalReport::fp)
        .def_readonly("tn", &learn::EvalReport::tn)
        .def_readonly("fn", &learn::EvalReport::fn)
        .def_readonly("accuracy", &learn::EvalReport::accuracy)
        .def_readonly("precision", &learn::EvalReport::precision)
        .def_readonly("recall", &learn::EvalReport::recall)
        .def_readonly("f1", &learn::EvalReport::f1);
    py::class_<learn::KMeansResult>(ln, "KMeansResult")
        .def_readonly("centroids", &learn::KMeansResult::centroids)
        .def_readonly("assignments", &learn::KMeansResult::assignments)
        .def_readonly("iterations", &learn::KMeansResult::iterations);
    ln.def(
        "train_forest",
        [](const LabeledDataset& d, int n_trees, int max_depth, int min_split, int subset, std::uint64_t seed,
           unsigned threads) {
            learn::ForestParams p{n_trees, max_depth, min_split, subset, threads};
            return learn::train_forest(d, p, RngSeed{seed});
        },
        py::arg("data"), py::arg("n_trees") = 100, py::arg("max_depth") = 16, py::arg("min_samples_split") = 2,
        py::arg("feature_subset_size") = 0, py::arg("seed") = 0, py::arg("threads") = 0);
    ln.def(
        "train_svm",
        [](const LabeledDataset& d, double lambda, int epochs, std::uint64_t seed) {
            return learn::train_svm(d, learn::SvmParams{lambda, epochs}, RngSeed{seed});
        },
        py::arg("data"), py::arg("lambda_") = 1e-4, py::arg("epochs") = 50, py::arg("seed") = 0);
    ln.def(
        "knn_predict",
        [](const LabeledDataset& train, const std::vector<double>& row, std::size_t k) {
            return learn::knn_predict(train, row, k);
        },
        py::arg("train"), py::arg("row"), py::arg("k") = 5);
    ln.def(
        "kmeans",
        [](const std::vector<std::vector<double>>& rows, std::size_t k, std::uint64_t seed) {
            return learn::kmeans(rows, k, RngSeed{seed});
        },
        py::arg("rows"), py::arg("k"), py::arg("seed") = 0);
    ln.def("evaluate", py::overload_cast<const learn::ForestModel&, const LabeledDataset&>(&learn::evaluate));
    ln.def("evaluate", py::overload_cast<const learn::SvmModel&, const LabeledDataset&>(&learn::evaluate));
    ln.def(
        "split",
        [](const LabeledDataset& d, double frac, std::uint64_t seed) { return learn::split(d, frac, RngSeed{seed}); },
        py::arg("data"), py::arg("train_fraction") = 0.7, py::arg("seed") = 0);
    ln.def("forest_to_json", py::overload_cast<const learn::ForestModel&>(&learn::to_json));
    ln.def("svm_to_json", py::overload_cast<const learn::SvmModel&>(&learn::to_json));
    ln.def("forest_from_json", &learn::forest_from_json);
    ln.def("svm_from_json", &learn::svm_from_json);

    // correlate --------------------------------------------------------------
    auto co = m.def_submodule("correlate", "Alert correlation and the operator report");
    py::class_<correlate::Incident>(co, "Incident")
        .def_readonly("id", &correlate::Incident::id)
        .def_readonly("alerts", &correlate::Incident::alerts)
        .def_readonly("start_time", &correlate::Incident::start_time)
        .def_readonly("end_time", &correlate::Incident::end_time)
        .def_readonly("sources", &correlate::Incident::sources)
        .def_property_readonly("severity", &correlate::Incident::severity);
    co.def("correlate", &correlate::correlate, py::arg("streams"), py::arg("window") = correlate::kDefaultWindow);
    co.def("incidents_to_json", &correlate::incidents_to_json);
    co.def(
        "render_report",
        [](const std::vector<correlate::Incident>& incidents, const std::vector<TimeSeries>& series,
           const Provenance& metadata) {
            std::vector<correlate::Chart> charts;
            for (const auto& s : series) {
                charts.push_back({s, std::nullopt});
            }
            return correlate::render_report(incidents, charts, metadata);
        },
        py::arg("incidents"), py::arg("series") = std::vector<TimeSeries>{}, py::arg("metadata") = Provenance{});

    // pipeline ---------------------------------------------------------------
    auto pl = m.def_submodule("pipeline", "End-to-end preset runs");
    py::class_<pipeline::Result>(pl, "Result")
        .def_readonly("capture", &pipeline::Result::capture)
        .def_readonly("forest_eval", &pipeline::Result::forest_eval)
        .def_readonly("svm_eval", &pipeline::Result::svm_eval)
        .def_readonly("incidents", &pipeline::Result::incidents)
        .def_readonly("metadata", &pipeline::Result::metadata)
        .def_property_readonly("thresholds",
                               [](const pipeline::Result& r) {
                                   std::map<std::string, double> out;
                                   for (const auto* group : {&r.traffic, &r.process}) {
                                       for (const auto& [name, a] : *group) {
                                           if (a.calibration) {
                                               out[name] = a.calibration->threshold;
                                           }
                                       }
                                   }
                                   return out;
                               })
        .def("files", &pipeline::render_files)
        .def("write", &pipeline::write);
    pl.def(
        "run",
        [](const std::string& preset, std::uint64_t seed, unsigned threads) {
            pipeline::Options o;
            o.preset = preset;
            o.seed = RngSeed{seed};
            o.threads = threads;
            return pipeline::run(o);
        },
        py::arg("preset") = "ds1", py::arg("seed") = 0, py::arg("threads") = 1);
}
