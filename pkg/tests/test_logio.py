import io

import numpy as np
import pytest

from modval.errors import (
    DuplicateSubsetKey,
    InconsistentModalityCount,
    ParseError,
)
from modval.logio import (
    demo_log_path,
    format_subset_key,
    ingest,
    parse_subset_key,
    read_contributions_csv,
    read_sample_plan_csv,
    record_to_line,
    write_contributions_csv,
    write_modality_plan_csv,
    write_prediction_log,
    write_sample_plan_csv,
)
from modval.records import ContributionVector
from modval.scheduling import modality_level_plan, sample_level_plan
from modval.valuation import exact_shapley

from conftest import make_record


def write_log(tmp_path, text, name="log.jsonl"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_subset_key_round_trip():
    assert format_subset_key(0b101) == "0,2"
    assert parse_subset_key("0,2", 3) == 0b101
    assert parse_subset_key("1", 2) == 0b10


@pytest.mark.parametrize(
    "key,err",
    [
        ("1,0", ParseError),
        ("0,0", ParseError),
        ("a", ParseError),
        ("0,3", InconsistentModalityCount),
        ("", ParseError),
    ],
)
def test_bad_subset_keys(key, err):
    with pytest.raises(err):
        parse_subset_key(key, 3)


def test_demo_log_ships_with_package():
    records = list(ingest(demo_log_path()))
    assert [r.sample_id for r in records] == ["demo-1", "demo-2", "demo-3"]
    phis = [exact_shapley(r).phi.tolist() for r in records]
    assert phis == [[1.5, 0.5], [1.0, 1.0], [0.0, 0.0]]


def test_write_then_ingest_round_trip(tmp_path):
    records = [make_record(3, [0b001, 0b111], sample_id="x", true_label=4)]
    path = tmp_path / "out.jsonl"
    with open(path, "w", encoding="utf-8") as fh:
        count = write_prediction_log(records, fh, header="modalities: a,b,c")
    assert count == 1
    text = path.read_text()
    assert text.startswith("# modalities: a,b,c\n")
    back = list(ingest(path))
    assert back[0].predictions == records[0].predictions
    assert back[0].true_label == 4


def test_record_to_line_is_canonical(audio_dominant_record):
    line = record_to_line(audio_dominant_record)
    assert (
        line == '{"sample_id":"audio-dominant","true_label":7,"n":2,'
        '"predictions":{"0":7,"1":8,"0,1":7}}'
    )


def test_missing_subset_named_in_error(tmp_path):
    path = write_log(
        tmp_path, '{"sample_id":"s","true_label":0,"n":2,"predictions":{"0":0,"1":0}}\n'
    )
    with pytest.raises(ParseError) as err:
        list(ingest(path))
    assert "'0,1'" in str(err.value)
    assert err.value.lineno == 1


def test_partial_flag_accepts_incomplete(tmp_path):
    path = write_log(
        tmp_path, '{"sample_id":"s","true_label":0,"n":2,"predictions":{"0":0}}\n'
    )
    records = list(ingest(path, allow_partial=True))
    assert not records[0].is_exact


def test_duplicate_key_detected(tmp_path):
    path = write_log(
        tmp_path,
        '{"sample_id":"s","true_label":0,"n":2,'
        '"predictions":{"0":0,"0":1,"1":0,"0,1":0}}\n',
    )
    with pytest.raises(DuplicateSubsetKey):
        list(ingest(path))


def test_out_of_range_key(tmp_path):
    path = write_log(
        tmp_path,
        '{"sample_id":"s","true_label":0,"n":2,'
        '"predictions":{"0":0,"1":0,"0,1":0,"2":0}}\n',
    )
    with pytest.raises(InconsistentModalityCount):
        list(ingest(path))


def test_invalid_json_gives_line_number(tmp_path):
    path = write_log(tmp_path, "ok\n", name="bad.jsonl")
    good = '{"sample_id":"s","true_label":0,"n":1,"predictions":{"0":0}}'
    path.write_text(f"{good}\nnot json\n", encoding="utf-8")
    with pytest.raises(ParseError) as err:
        list(ingest(path))
    assert err.value.lineno == 2


def test_lenient_mode_skips_and_reports(tmp_path):
    good = '{"sample_id":"s","true_label":0,"n":1,"predictions":{"0":0}}'
    path = write_log(tmp_path, f"broken\n{good}\nbroken again\n")
    seen = []
    records = list(ingest(path, strict=False, on_error=seen.append))
    assert len(records) == 1
    assert [e.lineno for e in seen] == [1, 3]


def test_empty_file_is_empty_stream(tmp_path):
    path = write_log(tmp_path, "")
    assert list(ingest(path)) == []
    path = write_log(tmp_path, "# only a comment\n\n")
    assert list(ingest(path)) == []


def test_contributions_csv_round_trip():
    vectors = [
        ContributionVector("a", np.array([1.5, 0.5]), 2.0),
        ContributionVector(
            "b", np.array([0.123456789012345, 1.0]), 2.0,
            method="monte_carlo", num_permutations=64, seed=11,
        ),
    ]
    buf = io.StringIO()
    write_contributions_csv(vectors, buf)
    buf.seek(0)
    back = read_contributions_csv(buf)
    assert back[0].phi.tolist() == [1.5, 0.5]
    assert back[1].phi[0] == 0.123456789012345  # repr round-trips floats
    assert back[1].method == "monte_carlo"
    assert back[1].num_permutations == 64 and back[1].seed == 11


def test_csv_feeds_identical_plan():
    vectors = [
        ContributionVector("a", np.array([0.25, 1.5]), 2.0),
        ContributionVector("b", np.array([0.75, 0.9]), 2.0),
    ]
    direct = sample_level_plan(vectors, "linear")
    buf = io.StringIO()
    write_contributions_csv(vectors, buf)
    buf.seek(0)
    replayed = sample_level_plan(read_contributions_csv(buf), "linear")
    assert direct.n == replayed.n
    assert {k: v.tolist() for k, v in direct.counts.items()} == {
        k: v.tolist() for k, v in replayed.counts.items()
    }


def test_plan_csv_output():
    plan = sample_level_plan(
        [
            ContributionVector("a", np.array([0.5, 1.5]), 2.0),
            ContributionVector("b", np.array([1.5, 0.25]), 2.0),
        ]
    )
    buf = io.StringIO()
    write_sample_plan_csv(plan, buf)
    assert buf.getvalue() == "sample_id,modality,count\na,0,1\nb,1,2\n"

    mplan = modality_level_plan(np.array([1.4, 0.6]), "identity", subset_size=10)
    buf = io.StringIO()
    write_modality_plan_csv(mplan, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "target_modality,probability,subset_size,gap,gap_norm"
    assert lines[1].startswith("1,0.4")


def test_sample_plan_csv_round_trip():
    plan = sample_level_plan(
        [
            ContributionVector("a", np.array([0.5, 1.5]), 2.0),
            ContributionVector("b", np.array([1.5, 0.25]), 2.0),
        ]
    )
    buf = io.StringIO()
    write_sample_plan_csv(plan, buf)
    buf.seek(0)
    back = read_sample_plan_csv(buf, n=2)
    assert {k: v.tolist() for k, v in back.counts.items()} == {
        k: v.tolist() for k, v in plan.counts.items()
    }
    with pytest.raises(ValueError):
        read_sample_plan_csv(io.StringIO("sample_id,modality,count\na,5,1\n"), n=2)
