import math
import random

import pytest

import icsdetect
from icsdetect import learn, modbus, mprofile, simulate


def test_decode_reference_request():
    f = modbus.decode(bytes.fromhex("000100000006110300 6b0003".replace(" ", "")))
    assert (f.transaction_id, f.protocol_id, f.unit_id, f.function_code) == (1, 0, 0x11, 3)
    assert f.data == bytes([0x00, 0x6B, 0x00, 0x03])
    assert modbus.encode(f).hex() == "0001000000061103006b0003"
    assert modbus.describe(f) == "ReadHoldingRegisters"


def test_short_frame_raises_input_error():
    with pytest.raises(icsdetect.InputError):
        modbus.decode(b"\x00\x01\x00")
    assert issubclass(icsdetect.InputError, icsdetect.Error)


def test_distance_hand_case():
    assert math.isclose(mprofile.znorm_distance([1, 2, 3], [3, 2, 1]), math.sqrt(12), abs_tol=1e-9)


def test_fast_matches_brute():
    rng = random.Random(3)
    x = [0.0]
    for _ in range(299):
        x.append(x[-1] + rng.gauss(0, 1))
    fast = mprofile.matrix_profile_fast(x, 8, threads=2)
    brute = mprofile.matrix_profile_brute(x, 8)
    assert len(fast) == len(x) - 8 + 1
    assert max(abs(a - b) for a, b in zip(fast.values, brute.values)) <= 1e-6


def test_short_series_is_a_precondition_failure():
    with pytest.raises(icsdetect.PreconditionError):
        mprofile.matrix_profile_fast([1.0, 2.0, 3.0, 4.0, 5.0], 3)


def test_simulate_and_bin():
    cfg = simulate.NetScenarioConfig()
    cfg.duration = 60.0
    cfg.human_rate = 0.0
    records = simulate.run_net(cfg)
    assert len(records) == 720
    binned = icsdetect.features.bin_traffic(records)
    assert set(binned.channels["packet_count"].values) == {12.0}
    text = icsdetect.format_capture(records, {"seed": "0"})
    assert icsdetect.parse_capture(text)[5].frame == records[5].frame


def test_classifiers_on_blobs():
    rng = random.Random(1)
    rows, labels = [], []
    for i in range(200):
        y = i % 2
        rows.append([rng.gauss(4 * y, 0.5), rng.gauss(4 * y, 0.5)])
        labels.append(y)
    data = icsdetect.LabeledDataset(["a", "b"], rows, labels)
    train, test = learn.split(data, 0.7, seed=2)
    forest = learn.train_forest(train, n_trees=10, seed=2)
    svm = learn.train_svm(train, seed=2)
    assert learn.evaluate(forest, test).f1 >= 0.95
    assert learn.evaluate(svm, test).f1 >= 0.95
    assert learn.knn_predict(train, [4.0, 4.0], k=3) == 1
    assert learn.forest_from_json(learn.forest_to_json(forest)).predict([0.0, 0.0]) == forest.predict([0.0, 0.0])


def test_correlate_two_sources():
    ot = icsdetect.Alert(icsdetect.AlertSource.ot_traffic, 100, 110, 1.0, "")
    proc = icsdetect.Alert(icsdetect.AlertSource.process, 105, 120, 1.0, "")
    incidents = icsdetect.correlate.correlate([[ot], [proc]], 30)
    assert len(incidents) == 1
    assert incidents[0].severity == 2
    assert "1 incidents" in icsdetect.correlate.render_report(incidents)


def test_pipeline_ds1_is_deterministic():
    a = icsdetect.pipeline.run("ds1", seed=1)
    b = icsdetect.pipeline.run("ds1", seed=1)
    assert a.files() == b.files()
    assert a.forest_eval.f1 >= 0.98
    assert "packet_count" in a.thresholds
