from __future__ import annotations

import io
import json
import socket
import threading
from importlib import resources
from pathlib import Path

import pytest

from conftest import trial_division_is_prime
from mixmine import cli
from mixmine.cli import RunConfig, main, run
from mixmine.datasets import derive_modulus, load_dataset, load_fixture, parse_transactions, partition, sizes
from mixmine.exceptions import EmptyDataset, ParseError, TooFewSites
from mixmine.mining import TransactionDB

FIXTURES = Path(__file__).parent / "fixtures"
SEED_HEX = "00112233445566778899"


@pytest.fixture
def demo_path():
    with resources.as_file(resources.files("mixmine.data").joinpath("demo.dat")) as p:
        yield str(p)


class TestDatasets:
    def test_load(self, tmp_path):
        f = tmp_path / "d.dat"
        f.write_text("1 2 3\n2 3\n")
        assert load_dataset(f).transactions == ((1, 2, 3), (2, 3))

    def test_repeated_items_collapse(self):
        assert parse_transactions("1 1 2\n").transactions == ((1, 2),)

    def test_blank_lines_skipped(self):
        assert parse_transactions("\n1\n\n2\n").size == 2

    def test_bad_item_reports_line(self):
        with pytest.raises(ParseError) as info:
            parse_transactions("1 x\n")
        assert info.value.line == 1
        with pytest.raises(ParseError) as info:
            parse_transactions("1\n2\n-3\n")
        assert info.value.line == 3

    def test_empty(self):
        with pytest.raises(EmptyDataset):
            parse_transactions("\n \n")

    def test_partition_sizes(self):
        db = TransactionDB.from_iterable([[i] for i in range(10)])
        assert sizes(partition(db, 3)) == [4, 3, 3]
        assert sizes(partition(db, 3, "contiguous")) == [4, 3, 3]
        assert partition(db, 3, "contiguous")[0].transactions == ((0,), (1,), (2,), (3,))
        with pytest.raises(TooFewSites):
            partition(db, 2)
        with pytest.raises(ValueError):
            partition(db, 3, "zigzag")

    def test_partitions_are_disjoint_and_complete(self):
        db = load_fixture()
        for scheme in ("round_robin", "contiguous"):
            parts = partition(db, 4, scheme)
            assert sorted(t for p in parts for t in p.transactions) == sorted(db.transactions)

    def test_derive_modulus(self):
        assert derive_modulus(100) == 101
        assert derive_modulus(1) == 2
        assert derive_modulus(89) == 97
        for n in range(1, 3000):
            p = derive_modulus(n)
            assert p > n and trial_division_is_prime(p)
            assert not any(trial_division_is_prime(q) for q in range(n + 1, p))


def config(path, **kw):
    base = dict(dataset_path=path, site_count=3, minsup=0.4, minconf=0.6, seed_hex=SEED_HEX)
    base.update(kw)
    return RunConfig(**base)


def test_demo_matches_committed_oracle(demo_path):
    _, report = run(config(demo_path), timestamp=False, out=io.StringIO())
    expected = json.loads((FIXTURES / "demo_oracle.json").read_text())
    assert report["total_transactions"] == expected["total_transactions"]
    assert [{k: e[k] for k in ("items", "count")} for e in report["frequent_itemsets"]] == expected["frequent_itemsets"]
    got_rules = [{k: r[k] for k in ("antecedent", "consequent", "count", "antecedent_count")} for r in report["rules"]]
    assert got_rules == expected["rules"]


def test_report_contents(demo_path, tmp_path):
    out = tmp_path / "r.json"
    buf = io.StringIO()
    code, _ = run(config(demo_path, report_path=str(out)), out=buf)
    data = json.loads(out.read_text())
    assert code == 0
    assert {"parameters", "frequent_itemsets", "rules", "metrics", "reconciliation", "table1", "timestamp"} <= set(data)
    assert SEED_HEX not in out.read_text() and SEED_HEX not in buf.getvalue()
    assert data["parameters"]["modulus"] == 61
    assert "frequent itemsets:" in buf.getvalue()


def test_json_is_deterministic(demo_path, tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert main(["--dataset", demo_path, "--sites", "3", "--seed", SEED_HEX, "--report", str(p), "--no-timestamp"]) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_seed_from_environment(demo_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.SEED_ENV, SEED_HEX)
    assert main(["--dataset", demo_path, "--sites", "3"]) == 0
    assert "frequent itemsets:" in capsys.readouterr().out


@pytest.mark.parametrize(
    "extra, message",
    [
        (["--modulus", "91"], "NotPrime"),
        (["--modulus", "59"], "ModulusTooSmall"),
        (["--sites", "2"], "TooFewSites"),
        (["--seed", "abcd"], "BadSeedLength"),
        (["--bit-length", "4"], "BitLengthTooSmall"),
    ],
)
def test_errors_exit_nonzero(demo_path, capsys, extra, message):
    argv = ["--dataset", demo_path, "--sites", "3", "--seed", SEED_HEX] + extra
    assert main(argv) == 1
    assert message in capsys.readouterr().err


def test_missing_seed(demo_path, monkeypatch, capsys):
    monkeypatch.delenv(cli.SEED_ENV, raising=False)
    assert main(["--dataset", demo_path, "--sites", "3"]) == 1
    assert "seed" in capsys.readouterr().err


def test_missing_dataset_file(tmp_path, capsys):
    assert main(["--dataset", str(tmp_path / "nope.dat"), "--sites", "3", "--seed", SEED_HEX]) == 1


def test_tcp_transport_flag(demo_path):
    _, a = run(config(demo_path, transport="tcp"), timestamp=False, out=io.StringIO())
    _, b = run(config(demo_path), timestamp=False, out=io.StringIO())
    assert a["frequent_itemsets"] == b["frequent_itemsets"] and a["rules"] == b["rules"]


def _free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_distributed_roles(demo_path):
    addr = f"127.0.0.1:{_free_port()}"
    shared = dict(mixer_addr=addr, channel_key_hex="aa" * 16, timeout=10)
    results, errors = {}, []

    def go(name, cfg):
        try:
            results[name] = run(cfg, timestamp=False, out=io.StringIO())[1]
        except Exception as exc:  # surfaced below
            errors.append(exc)

    threads = [threading.Thread(target=go, args=("mixer", config(None, role="mixer", seed_hex=None, **shared)))]
    for i in (1, 2, 3):
        threads.append(threading.Thread(target=go, args=(i, config(demo_path, role="site", site_index=i, **shared))))
    threads[0].start()
    for t in threads[1:]:
        t.start()
    for t in threads:
        t.join(30)
    assert not errors, errors
    _, local = run(config(demo_path), timestamp=False, out=io.StringIO())
    for i in (1, 2, 3):
        assert results[i]["frequent_itemsets"] == local["frequent_itemsets"]
    assert results["mixer"]["finished_round"] == len(local["rounds"]) - 1
    assert "frequent_itemsets" not in results["mixer"]


def test_site_role_needs_channel_key(demo_path, capsys, monkeypatch):
    monkeypatch.delenv(cli.CHANNEL_ENV, raising=False)
    argv = ["--dataset", demo_path, "--sites", "3", "--seed", SEED_HEX, "--role", "site", "--site-index", "1"]
    assert main(argv) == 1
    assert "channel key" in capsys.readouterr().err
