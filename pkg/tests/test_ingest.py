import numpy as np
import pytest

import feedsim as fs
from feedsim.ingest import synthesize_records, write_annotation_csv


def rec(task, annotator, label, gold):
    return fs.AnnotationRecord(task, annotator, label, gold)


def test_all_correct_pool_yields_identity():
    records = [
        rec("t1", "a", 1, 1), rec("t2", "a", 2, 2),
        rec("t3", "b", 1, 1), rec("t4", "b", 2, 2),
    ]
    matrix, report = fs.estimate_confusion(records, fs.IngestSettings(), 2)
    assert np.array_equal(matrix.entries, np.eye(2))
    assert report.kept_records == 4
    assert report.dropped_annotators == ()


def test_records_without_gold_are_dropped():
    records = [
        rec("t1", "a", 1, 1), rec("t2", "a", 2, 2),
        rec("t3", "a", 2, None), rec("t4", "a", 1, None),
    ]
    matrix, report = fs.estimate_confusion(records, fs.IngestSettings(), 2)
    assert report.records_without_gold == 2
    assert report.kept_records == 2
    assert np.array_equal(matrix.entries, np.eye(2))


def test_low_participation_annotator_dropped():
    # 300 distinct gold tasks; at 10% an annotator needs 30 of them
    records = []
    for t in range(300):
        records.append(rec(f"t{t}", "steady", 1 + t % 2, 1 + t % 2))
    for t in range(5):
        records.append(rec(f"t{t}", "dabbler", 2, 1))
    matrix, report = fs.estimate_confusion(records, fs.IngestSettings(), 2)
    assert report.gold_task_count == 300
    assert report.dropped_annotators == ("dabbler",)
    assert report.dropped_records == 5
    assert np.array_equal(matrix.entries, np.eye(2))


def test_all_records_dropped_is_an_error():
    records = [rec("t1", "a", 1, None)]
    with pytest.raises(fs.IngestError):
        fs.estimate_confusion(records, fs.IngestSettings(), 2)
    # ten gold tasks: one record meets the 10% participation bar exactly
    records = [rec(f"t{i}", "a", 1 + i % 2, 1 + i % 2) for i in range(10)]
    lonely = [rec("t0", "b", 1, 1)]
    matrix, report = fs.estimate_confusion(records + lonely, fs.IngestSettings(), 2)
    assert "b" not in report.dropped_annotators  # 1 >= 0.1 * 10


def test_empty_gold_class_needs_smoothing():
    records = [rec("t1", "a", 1, 1), rec("t2", "a", 2, 1)]
    with pytest.raises(fs.IngestError):
        fs.estimate_confusion(records, fs.IngestSettings(), 2)
    matrix, _ = fs.estimate_confusion(records, fs.IngestSettings(smoothing=1.0), 2)
    assert matrix.entries[1].tolist() == [0.5, 0.5]
    assert not matrix.violations()


def test_smoothing_pseudocounts():
    records = [rec("t1", "a", 1, 1), rec("t2", "a", 2, 2)]
    matrix, _ = fs.estimate_confusion(records, fs.IngestSettings(smoothing=1.0), 2)
    assert matrix.entries.tolist() == [[2 / 3, 1 / 3], [1 / 3, 2 / 3]]


def test_filter_is_idempotent():
    rng = np.random.default_rng(0)
    records = []
    for t in range(50):
        gold = 1 + t % 3
        for a in range(4):
            label = int(rng.integers(1, 4))
            records.append(rec(f"t{t}", f"a{a}", label, gold))
    records += [rec("t0", "rare", 1, 1)]
    settings = fs.IngestSettings(min_participation=0.2)
    first, report = fs.estimate_confusion(records, settings, 3)
    survivors = [
        r for r in records
        if r.gold_label is not None and r.annotator_id not in report.dropped_annotators
    ]
    second, report2 = fs.estimate_confusion(survivors, settings, 3)
    assert np.array_equal(first.entries, second.entries)
    assert report2.dropped_annotators == ()


def test_settings_validation():
    with pytest.raises(ValueError):
        fs.IngestSettings(min_participation=0.0)
    with pytest.raises(ValueError):
        fs.IngestSettings(smoothing=-1.0)


def test_round_trip_recovery_improves_with_data(ref_config):
    truth = ref_config.confusion
    small = synthesize_records(truth, num_records=10**3, num_tasks=300,
                               num_annotators=30, seed=11)
    large = synthesize_records(truth, num_records=10**5, num_tasks=300,
                               num_annotators=30, seed=11)
    est_small, _ = fs.estimate_confusion(small, fs.IngestSettings(), 5)
    est_large, _ = fs.estimate_confusion(large, fs.IngestSettings(), 5)
    err_small = np.abs(est_small.entries - truth.entries).max()
    err_large = np.abs(est_large.entries - truth.entries).max()
    assert err_large < err_small
    assert err_large <= 0.01
    assert not est_large.violations()


def test_csv_round_trip_with_label_map(tmp_path):
    path = tmp_path / "records.csv"
    path.write_text(
        "task_id,annotator_id,label,gold_label\n"
        "t1,a,pos,pos\n"
        "t2,a,neg,neg\n"
        "t3,b,neg,\n"
    )
    settings = fs.IngestSettings(label_map={"pos": 1, "neg": 2})
    records = fs.read_annotation_csv(path, settings, 2)
    assert records[2].gold_label is None
    matrix, report = fs.estimate_confusion(records, settings, 2)
    assert np.array_equal(matrix.entries, np.eye(2))
    assert report.records_without_gold == 1


def test_csv_write_read_round_trip(tmp_path):
    records = [rec("t1", "a", 1, 1), rec("t2", "b", 2, None)]
    path = tmp_path / "out.csv"
    write_annotation_csv(records, path)
    back = fs.read_annotation_csv(path, fs.IngestSettings(), 2)
    assert back == records


def test_csv_rejects_bad_header_and_labels(tmp_path):
    bad_header = tmp_path / "bad.csv"
    bad_header.write_text("task,worker,label,gold\nt,a,1,1\n")
    with pytest.raises(fs.IngestError):
        fs.read_annotation_csv(bad_header, fs.IngestSettings(), 2)
    bad_label = tmp_path / "bad2.csv"
    bad_label.write_text("task_id,annotator_id,label,gold_label\nt,a,7,1\n")
    with pytest.raises(fs.IngestError):
        fs.read_annotation_csv(bad_label, fs.IngestSettings(), 2)
    not_int = tmp_path / "bad3.csv"
    not_int.write_text("task_id,annotator_id,label,gold_label\nt,a,x,1\n")
    with pytest.raises(fs.IngestError):
        fs.read_annotation_csv(not_int, fs.IngestSettings(), 2)
