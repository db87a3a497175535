"""Acceptance criteria, one test each.

Every test prints a single ``[criterion N] PASS|FAIL`` line to the terminal,
even under captured output.  Run alone with::

    pytest tests/test_acceptance.py -v
"""

from __future__ import annotations

import contextlib
import io
import json
import os
import random
import time
from importlib import resources

import pytest
from scipy.stats import chisquare

from conftest import random_db
from mixmine.cli import main
from mixmine.costmodel import CostParams, op_counts, payload_proposed, payload_yizhang, reconcile
from mixmine.datasets import derive_modulus, load_fixture, partition
from mixmine.keystream import KeySchedule, Seed
from mixmine.mining import TransactionDB
from mixmine.oracle import brute_force_frequent, merge_partitions
from mixmine.protocol import SessionConfig, UploadMasked, decode_message
from mixmine.securesum import GroupParams, IterationKeys, is_prime, mask, mix, next_prime, unmask
from mixmine.session import run_session

FIXTURE_SEED = Seed.from_hex("00112233445566778899")


@pytest.fixture
def criterion(capsys):
    """Yield a reporter; prints PASS or FAIL with elapsed time when the test ends."""

    @contextlib.contextmanager
    def report(number: int, title: str):
        start = time.perf_counter()
        status = "FAIL"
        try:
            yield
            status = "PASS"
        finally:
            with capsys.disabled():
                print(f"\n[criterion {number}] {status}  {title}  ({time.perf_counter() - start:.2f}s)")

    return report


def fixture_session(transport="inproc", sites=3):
    db = load_fixture()
    dbs = partition(db, sites)
    cfg = SessionConfig(GroupParams(derive_modulus(db.size), 16, sites), 0.4, 0.6, db.items(), FIXTURE_SEED)
    return dbs, run_session(cfg, dbs, transport, timeout=20)


def test_criterion_1_worked_example(criterion):
    with criterion(1, "worked example: alphas (41, 81, 57), mix 179, unmask 18"):
        params = GroupParams(91, 8, 3)
        keys = IterationKeys(0, 23, 4, (17, 11, 10), 38)
        masked = [mask(c, keys, i, params) for i, c in enumerate((5, 7, 6), start=1)]
        assert [m.alpha for m in masked] == [41, 81, 57]
        agg = mix(masked, 3)
        assert agg.epsilon == 179
        assert unmask(agg, keys, params) == 18


def _random_composition(rng, total, parts):
    cuts = sorted(rng.randint(0, total) for _ in range(parts - 1))
    return [b - a for a, b in zip([0] + cuts, cuts + [total])]


def test_criterion_2_round_trip(criterion):
    with criterion(2, "10^4 random secure sums round-trip exactly"):
        rng = random.Random(2)
        start = time.perf_counter()
        for _ in range(10_000):
            p = next_prime(rng.randint(100, 65_520))
            assert 101 <= p <= 65_521 and is_prime(p)
            n = rng.randint(3, 8)
            params = GroupParams(p, 16, n)
            keys = KeySchedule(Seed(rng.randbytes(10)), params).next()
            counts = _random_composition(rng, rng.randint(0, p - 1), n)
            masked = [mask(c, keys, i, params) for i, c in enumerate(counts, start=1)]
            assert unmask(mix(masked, n), keys, params) == sum(counts)
        assert time.perf_counter() - start < 10


def test_criterion_3_oracle_equivalence(criterion):
    with criterion(3, "50 random sessions equal the brute-force oracle"):
        rng = random.Random(3)
        start = time.perf_counter()
        for trial in range(50):
            n = rng.choice([3, 4, 5])
            db = random_db(rng, rng.randint(1, 500), rng.randint(1, 15), rng.uniform(0.15, 0.6))
            dbs = partition(db, n, rng.choice(["round_robin", "contiguous"]))
            minsup, minconf = rng.choice([0.2, 0.4]), rng.choice([0.5, 0.8])
            cfg = SessionConfig(
                GroupParams(derive_modulus(db.size), 16, n), minsup, minconf, db.items(), Seed(rng.randbytes(10))
            )
            got = run_session(cfg, dbs, scheduler_seed=trial)
            merged = merge_partitions(dbs)
            expected = brute_force_frequent(merged, minsup, minconf, universe=merged.items())
            assert got.frequent_dict() == expected.frequents
            assert tuple(got.rules) == expected.rules
        assert time.perf_counter() - start < 60


def test_criterion_4_uniformity(criterion):
    with criterion(4, "masked values are uniform over Z_101 (p > 0.001), directly and as seen by the mixer"):
        start = time.perf_counter()
        rng = random.Random(4)
        p, c, r = 101, 7, 37
        params = GroupParams(p, 16, 3)
        bins = [0] * p
        for _ in range(100_000):
            keys = IterationKeys.from_values(0, r, [rng.randrange(p) for _ in range(3)], p)
            bins[mask(c, keys, 1, params).alpha] += 1
        direct = chisquare(bins).pvalue
        assert direct > 0.001, direct

        # protocol level: site 1 holds 7 transactions containing item 0
        dbs = [TransactionDB.from_iterable([[0]] * c), TransactionDB.from_iterable([[0]]), TransactionDB.from_iterable([[0]])]
        observed = [0] * p
        sessions = 12_000
        for _ in range(sessions):
            cfg = SessionConfig(params, 0.5, 0.5, (0,), Seed(os.urandom(10)))
            result = run_session(cfg, dbs, channel_secret=None, keep_transcript=True)
            for src, _, frame in result.transcript:
                msg = decode_message(frame, params.entry_bytes)
                if src == 1 and isinstance(msg, UploadMasked) and msg.round == 1:
                    observed[msg.alphas[0]] += 1
        assert sum(observed) == sessions >= 10_000
        protocol = chisquare(observed).pvalue
        assert protocol > 0.001, protocol
        assert time.perf_counter() - start < 30


def test_criterion_5_table1(criterion):
    with criterion(5, "cost comparison: 3NH vs 6NH, ratio 0.5, op counts"):
        for n in (1, 3, 5, 10, 100, 10**6):
            for h in (1, 2, 10, 1000, 10**6):
                proposed = payload_proposed(CostParams(n, h, L=2, phi=1))
                yizhang = payload_yizhang(CostParams(n, h, K=3, phi=1))
                assert proposed == 3 * n * h
                assert yizhang == 6 * n * h
                assert proposed / yizhang == 0.5
        ops = op_counts()
        assert (ops["proposed"]["exp"], ops["yizhang"]["exp"]) == (0, 4)
        assert (ops["key_bits"]["proposed"], ops["key_bits"]["yizhang"]) == (80, 1024)


def test_criterion_6_reconciliation(criterion, capsys):
    with criterion(6, "l=16: upload N*H*2 and broadcast N*H*4 bytes per round; broadcast deviation reported"):
        n = 4
        _, result = fixture_session(sites=n)
        rows = reconcile(result.metrics, CostParams(n, 0, L=2), rounds=[(s.round, s.candidate_count) for s in result.rounds])
        assert [row["round"] for row in rows] == [s.round for s in result.rounds]
        for row in rows:
            h = row["candidates"]
            assert row["measured_upload"] == n * h * 2 == row["analytic_upload"]
            assert row["measured_broadcast"] == n * h * 4
            assert row["header_bytes"] > 0
            assert row["broadcast_deviation_pct"] == (300.0 if h else 0.0)
        with capsys.disabled():
            for row in rows:
                print(
                    f"    round {row['round']}: H={row['candidates']} upload={row['measured_upload']} "
                    f"broadcast={row['measured_broadcast']} vs phiHN={row['analytic_broadcast']} "
                    f"({row['broadcast_deviation_pct']:+.0f}%)"
                )


def test_criterion_7_determinism(criterion, tmp_path):
    with criterion(7, "identical runs give byte-identical JSON reports"):
        with resources.as_file(resources.files("mixmine.data").joinpath("demo.dat")) as data:
            outputs = []
            for name in ("a.json", "b.json"):
                path = tmp_path / name
                argv = ["--dataset", str(data), "--sites", "3", "--seed", FIXTURE_SEED.value.hex(), "--report", str(path)]
                with contextlib.redirect_stdout(io.StringIO()):
                    assert main(argv) == 0
                report = json.loads(path.read_text())
                report.pop("timestamp")
                outputs.append(json.dumps(report, indent=2, sort_keys=True).encode())
        assert outputs[0] == outputs[1]
        assert json.loads(outputs[0])["frequent_itemsets"]


def test_criterion_8_transport_equivalence(criterion):
    with criterion(8, "in-process and loopback TCP sessions give the same MiningResult"):
        _, local = fixture_session("inproc")
        _, tcp = fixture_session("tcp")
        assert local == tcp
        assert local.frequents
        assert local.metrics.to_dict() == tcp.metrics.to_dict()
