"""Command line entry point.

    mixmine --dataset data.dat --sites 3 --minsup 0.4 --minconf 0.6 \\
            --seed 00112233445566778899 --transport inproc --report out.json

With ``--transport tcp`` and no ``--role`` the mixer and all sites run in
this process over loopback sockets.  With ``--role mixer`` or
``--role site --site-index I`` the process plays one party of a distributed
run.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass

from . import report as report_mod
from .channel import channel_pair, derive_channel_key
from .datasets import derive_modulus, load_dataset, partition
from .exceptions import MixMineError
from .keystream import DEFAULT_SEED_BYTES, Seed
from .protocol import SessionConfig, new_site
from .securesum import validate_params
from .session import MiningResult, drive_mixer, drive_site, run_session
from .transport import MetricsRecorder, TcpMixerEndpoint, TcpSiteEndpoint, parse_address

log = logging.getLogger("mixmine")

SEED_ENV = "MIXMINE_SEED"
CHANNEL_ENV = "MIXMINE_CHANNEL_KEY"


@dataclass
class RunConfig:
    dataset_path: str | None
    site_count: int
    minsup: float
    minconf: float
    seed_hex: str | None
    bit_length: int = 16
    modulus: int | None = None
    transport: str = "inproc"
    role: str | None = None
    site_index: int | None = None
    mixer_addr: str = "127.0.0.1:7700"
    report_path: str | None = None
    partition: str = "round_robin"
    channel_key_hex: str | None = None
    timeout: float = 30.0
    scheduler_seed: int = 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mixmine", description=__doc__.split("\n\n")[0])
    p.add_argument("--dataset", help="FIMI-style transaction file")
    p.add_argument("--sites", type=int, required=True, help="number of data sites (>= 3)")
    p.add_argument("--minsup", type=float, default=0.4)
    p.add_argument("--minconf", type=float, default=0.6)
    p.add_argument("--seed", help=f"{2 * DEFAULT_SEED_BYTES} hex chars; or set {SEED_ENV}")
    p.add_argument("--modulus", type=int, help="prime modulus (default: next prime above the transaction count)")
    p.add_argument("--bit-length", type=int, default=16)
    p.add_argument("--transport", choices=("inproc", "tcp"), default="inproc")
    p.add_argument("--role", choices=("mixer", "site"))
    p.add_argument("--site-index", type=int)
    p.add_argument("--mixer-addr", default="127.0.0.1:7700", help="HOST:PORT")
    p.add_argument("--partition", choices=("round_robin", "contiguous"), default="round_robin")
    p.add_argument("--channel-key", help=f"hex secret for the site/mixer channels; or set {CHANNEL_ENV}")
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--scheduler-seed", type=int, default=0)
    p.add_argument("--report", help="write the JSON report here")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field from the report")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        dataset_path=args.dataset,
        site_count=args.sites,
        minsup=args.minsup,
        minconf=args.minconf,
        seed_hex=args.seed or os.environ.get(SEED_ENV),
        bit_length=args.bit_length,
        modulus=args.modulus,
        transport=args.transport,
        role=args.role,
        site_index=args.site_index,
        mixer_addr=args.mixer_addr,
        report_path=args.report,
        partition=args.partition,
        channel_key_hex=args.channel_key or os.environ.get(CHANNEL_ENV),
        timeout=args.timeout,
        scheduler_seed=args.scheduler_seed,
    )


def _parameters(cfg: RunConfig, params) -> dict:
    return {
        "dataset": os.path.basename(cfg.dataset_path) if cfg.dataset_path else None,
        "sites": params.site_count,
        "modulus": params.modulus,
        "bit_length": params.bit_length,
        "entry_bytes": params.entry_bytes,
        "minsup": cfg.minsup,
        "minconf": cfg.minconf,
        "transport": cfg.transport,
        "partition": cfg.partition,
    }


def _prepare(cfg: RunConfig):
    if not cfg.dataset_path:
        raise MixMineError("--dataset is required")
    if not cfg.seed_hex:
        raise MixMineError(f"a seed is required (--seed or {SEED_ENV})")
    db = load_dataset(cfg.dataset_path)
    dbs = partition(db, cfg.site_count, cfg.partition)
    modulus = cfg.modulus if cfg.modulus is not None else derive_modulus(db.size)
    params = validate_params(modulus, cfg.bit_length, cfg.site_count, db.size)
    config = SessionConfig(params, cfg.minsup, cfg.minconf, db.items(), Seed.from_hex(cfg.seed_hex))
    return db, dbs, params, config


def _channel_secret(cfg: RunConfig, required: bool) -> bytes | None:
    if cfg.channel_key_hex:
        return bytes.fromhex(cfg.channel_key_hex)
    if required:
        raise MixMineError(f"distributed roles need a channel key (--channel-key or {CHANNEL_ENV})")
    return b""  # random per run


def run(cfg: RunConfig, *, timestamp: bool = True, out=None) -> tuple[int, dict | None]:
    """Execute one CLI invocation.  Returns ``(exit_code, report)``."""
    out = out or sys.stdout
    if cfg.role == "mixer":
        return _run_mixer(cfg, out)
    db, dbs, params, config = _prepare(cfg)
    if cfg.role == "site":
        result = _run_remote_site(cfg, dbs, config)
    else:
        result = run_session(
            config,
            dbs,
            cfg.transport,
            scheduler_seed=cfg.scheduler_seed,
            channel_secret=_channel_secret(cfg, required=False),
            timeout=cfg.timeout,
        )
    rep = report_mod.build_report(result, _parameters(cfg, params), timestamp=timestamp)
    out.write(report_mod.format_text(rep))
    if cfg.report_path:
        with open(cfg.report_path, "w", encoding="utf-8") as fh:
            fh.write(report_mod.dumps(rep))
    return 0, rep


def _run_remote_site(cfg: RunConfig, dbs, config: SessionConfig) -> MiningResult:
    i = cfg.site_index
    if i is None or not 1 <= i <= cfg.site_count:
        raise MixMineError(f"--site-index must be in 1..{cfg.site_count}")
    key = derive_channel_key(_channel_secret(cfg, required=True), i)
    recorder = MetricsRecorder()
    ep = TcpSiteEndpoint(i, parse_address(cfg.mixer_addr), recorder, channel_pair(key, i)[0], cfg.timeout)
    try:
        site = drive_site(ep, new_site(i, dbs[i - 1], config), cfg.timeout)
    finally:
        ep.close()
    return MiningResult(site.frequents, site.rules or [], site.total_size or 0, site.history, recorder.snapshot())


def _run_mixer(cfg: RunConfig, out) -> tuple[int, dict]:
    secret = _channel_secret(cfg, required=True)
    channels = {i: channel_pair(derive_channel_key(secret, i), i)[1] for i in range(1, cfg.site_count + 1)}
    entry = (cfg.bit_length + 7) // 8
    recorder = MetricsRecorder()
    ep = TcpMixerEndpoint(parse_address(cfg.mixer_addr), cfg.site_count, recorder, channels, record_received=True)
    log.info("mixer listening on %s:%s", *ep.address)
    try:
        ep.accept_all(cfg.timeout)
        state = drive_mixer(ep, cfg.site_count, entry, cfg.timeout)
    finally:
        ep.close()
    rep = {"role": "mixer", "finished_round": state.finished_round, "metrics": recorder.snapshot().to_dict()}
    out.write(json.dumps(rep, indent=2) + "\n")
    if cfg.report_path:
        with open(cfg.report_path, "w", encoding="utf-8") as fh:
            fh.write(report_mod.dumps(rep))
    return 0, rep


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        code, _ = run(config_from_args(args), timestamp=not args.no_timestamp)
    except (MixMineError, OSError, ValueError) as exc:
        print(f"mixmine: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return code


if __name__ == "__main__":
    sys.exit(main())
