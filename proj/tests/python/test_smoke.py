import math

import pytest

import selfpref


def test_paired_test_example():
    r = selfpref.paired_test([0.1, 0.2, 0.3])
    assert r["n"] == 3
    assert r["t"] == pytest.approx(2 * math.sqrt(3), abs=1e-9)
    assert r["p"] == pytest.approx(0.5 - r["t"] / (2 * math.sqrt(2 + r["t"] ** 2)), abs=1e-9)


def test_degenerate_input_raises_with_code():
    with pytest.raises(selfpref.SelfprefError) as info:
        selfpref.paired_test([0.0, 0.0, 0.0])
    assert info.value.code == "degenerate_statistic"


def test_binary_entropy():
    assert selfpref.binary_entropy(0.25) == pytest.approx(0.8112781244591328, abs=1e-12)
    assert selfpref.binary_entropy(0.0) == 0.0


def test_simulate_and_audit():
    rs = selfpref.simulate(n_examples=400, beta=0.5, seed=3)
    assert len(rs) == 400 * 4
    report = selfpref.audit(rs)
    assert len(report.rows) == 1
    row = report.rows[0]
    assert row["mean_delta"] > 0
    assert row["p"] < 0.05
    text = report.render("structured")
    again = selfpref.parse_structured_report(text)
    assert again.rows[0]["n"] == row["n"]
    assert "ILSP_orig" in report.render("table")


def test_ingest_round_trip():
    rs = selfpref.simulate(n_examples=20, seed=1)
    parsed, rejections = selfpref.ingest_text(rs.to_jsonl())
    assert rejections == []
    assert len(parsed) == len(rs)
    assert parsed.records[0].s == rs.records[0].s


def test_ingest_rejects_bad_line():
    with pytest.raises(selfpref.SelfprefError) as info:
        selfpref.ingest_text("{not json}\n")
    assert info.value.code == "ingestion"


def test_fixtures():
    rows = selfpref.ilsp_summary_fixture()
    assert sum(r["p"] < 0.05 for r in rows) == 28
    for r in rows:
        assert selfpref.relative_delta(r["ilsp_orig"], r["ilsp_upd"]) == pytest.approx(r["rel_delta"], abs=0.15)
    assert selfpref.entropy_gap_fixture()[-1]["positive"] == 33


def test_cot_parser():
    assert selfpref.parse_cot_verdict("Thinking.\nMy final verdict is $$B$$.") == ("B", None)
    label, failure = selfpref.parse_cot_verdict("no verdict here")
    assert label is None and failure == "no_verdict_marker"


def test_recovery_null():
    s = selfpref.recovery(trials=20, n_examples=300, seed=11)
    assert s["trials"] == 20
    assert all(0.0 <= p <= 1.0 for p in s["p_values"])
    assert s["target"] == 0.0
