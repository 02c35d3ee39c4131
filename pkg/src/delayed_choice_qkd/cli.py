"""Command-line harness: ``run``, ``oracle`` and ``sweep``.

Exit status of ``run``: 0 when the session is accepted, 2 when Bob's check
rejects it (eavesdropping suspected), 1 on a usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Iterator, Optional, Sequence

from . import oracle
from .adversary import EveStrategy, MeasBasis
from .protocol import DEFAULT_ALPHA, run_session, write_transcript

EXIT_ACCEPTED = 0
EXIT_ERROR = 1
EXIT_REJECTED = 2


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    n: int = 4000
    seed: int = 0
    p_loss: float = 0.0
    eve: EveStrategy = EveStrategy()
    alpha: float = DEFAULT_ALPHA
    compare_key_fraction: Optional[float] = None
    out: Optional[str] = None
    transcript: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        if isinstance(self.eve, str):
            try:
                self.eve = EveStrategy.parse(self.eve)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        if not isinstance(self.n, int) or self.n < 1:
            raise ConfigError(f"n must be a positive integer, got {self.n!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed!r}")
        if not 0.0 <= self.p_loss <= 1.0:
            raise ConfigError(f"p_loss must lie in [0, 1], got {self.p_loss!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if self.compare_key_fraction is not None and not 0.0 <= self.compare_key_fraction <= 1.0:
            raise ConfigError(f"compare_key_fraction must lie in [0, 1], got {self.compare_key_fraction!r}")
        if self.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.workers!r}")

    @classmethod
    def from_sources(cls, file_values: dict, overrides: dict) -> "RunConfig":
        """Merge a flat JSON config with command-line values; flags win."""
        known = {f.name for f in fields(cls)}
        unknown = set(file_values) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        merged = dict(file_values)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**merged)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dcqkd", description="Delayed-choice interferometer key distribution simulator.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="Run one seeded session and write its report.")
    r.add_argument("--config", help="flat JSON file with run settings; flags override it")
    r.add_argument("--n", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--p-loss", dest="p_loss", type=float)
    r.add_argument("--eve", help="none | intercept:<route|interference>:<p>")
    r.add_argument("--alpha", type=float, help="significance level of the one-splitter test")
    r.add_argument(
        "--compare-key-fraction",
        dest="compare_key_fraction",
        type=float,
        help="publicly compare this fraction of sifted bits (off by default)",
    )
    r.add_argument("--out", help="JSON report path (stdout when omitted)")
    r.add_argument("--transcript", help="CSV transcript path")
    r.add_argument("--workers", type=int, help="worker processes for round generation")

    o = sub.add_parser("oracle", help="Print the exact outcome table for every standard cell.")
    o.add_argument("--p-loss", dest="p_loss", default="0", help="exact loss probability, e.g. 3/10")
    o.add_argument("--json", action="store_true", help="emit the JSON cell-table artifact")
    o.add_argument("--out", help="write the JSON artifact here")

    s = sub.add_parser("sweep", help="Grid over interception and loss, one JSON line per point.")
    s.add_argument("--basis", choices=[b.value for b in MeasBasis], default="route")
    s.add_argument("--p-intercept", dest="p_intercept", type=_float_list, default=[0.0, 0.25, 0.5, 1.0])
    s.add_argument("--p-loss", dest="p_loss", type=_float_list, default=[0.0])
    s.add_argument("--n", type=int, default=4000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    s.add_argument("--compare-key-fraction", dest="compare_key_fraction", type=float)
    s.add_argument("--out", help="JSON-lines output path (stdout when omitted)")
    return p


def cmd_run(args: argparse.Namespace) -> int:
    file_values = {}
    if args.config:
        with open(args.config) as fh:
            file_values = json.load(fh)
        if not isinstance(file_values, dict):
            raise ConfigError("config file must hold a flat JSON object")
    overrides = {
        k: getattr(args, k)
        for k in ("n", "seed", "p_loss", "eve", "alpha", "compare_key_fraction", "out", "transcript", "workers")
    }
    cfg = RunConfig.from_sources(file_values, overrides)
    report = run_session(
        cfg.n,
        cfg.eve,
        cfg.p_loss,
        cfg.seed,
        alpha=cfg.alpha,
        compare_key_fraction=cfg.compare_key_fraction,
        workers=cfg.workers,
    )
    text = report.to_json()
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if cfg.transcript:
        write_transcript(report.records, cfg.transcript)

    v = report.verification
    status = "accepted" if report.accepted else "REJECTED"
    key_len = len(report.alice_key) if report.alice_key is not None else 0
    print(
        f"{status}: n_both={v.n_both} det2={v.n_both_det2} "
        f"one-splitter p={v.p_value_uniform:.3g} key_length={key_len}",
        file=sys.stderr,
    )
    return EXIT_ACCEPTED if report.accepted else EXIT_REJECTED


def format_table(rows: Sequence[dict]) -> str:
    head = ("eve", "alice", "bob", "p_det1", "p_det2", "p_noclick")
    width = {h: max(len(h), *(len(str(r[h])) for r in rows)) for h in head}
    lines = ["  ".join(h.ljust(width[h]) for h in head)]
    lines.append("  ".join("-" * width[h] for h in head))
    for r in rows:
        lines.append("  ".join(str(r[h]).ljust(width[h]) for h in head))
    return "\n".join(lines) + "\n"


def cmd_oracle(args: argparse.Namespace) -> int:
    try:
        p_loss = Fraction(args.p_loss)
    except ValueError:
        raise ConfigError(f"bad --p-loss {args.p_loss!r}") from None
    if not 0 <= p_loss <= 1:
        raise ConfigError(f"p_loss must lie in [0, 1], got {args.p_loss}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(oracle.cell_table_json(p_loss))
    if args.json:
        sys.stdout.write(oracle.cell_table_json(p_loss))
    else:
        sys.stdout.write(format_table(oracle.cell_table(p_loss)))
    return 0


def sweep_points(
    basis: MeasBasis,
    p_intercepts: Sequence[float],
    p_losses: Sequence[float],
    n: int,
    seed: int,
    alpha: float = DEFAULT_ALPHA,
    compare_key_fraction: Optional[float] = None,
) -> Iterator[dict]:
    """One summary per (p_loss, p_intercept) grid point, all sharing ``seed``."""
    for p_loss in p_losses:
        for p in p_intercepts:
            eve = EveStrategy(basis, p) if p > 0 else EveStrategy.none()
            rep = run_session(
                n, eve, p_loss, seed, alpha=alpha, compare_key_fraction=compare_key_fraction
            )
            v = rep.verification
            yield {
                "basis": basis.value,
                "p_intercept": p,
                "p_loss": p_loss,
                "n": n,
                "seed": seed,
                "accepted": rep.accepted,
                "n_both": v.n_both,
                "n_both_det2": v.n_both_det2,
                "n_one": v.n_one,
                "n_one_det1": v.n_one_det1,
                "p_value_uniform": v.p_value_uniform,
                "n_key_rounds": rep.n_key_rounds,
                "sifted_agreement": rep.sifted_agreement,
                "oracle_detection_probability": float(oracle.detection_probability(eve, v.n_both)),
                "oracle_key_error_rate": float(oracle.key_error_rate(eve)),
            }


def cmd_sweep(args: argparse.Namespace) -> int:
    for name, values in (("p_intercept", args.p_intercept), ("p_loss", args.p_loss)):
        if not values or any(not 0.0 <= x <= 1.0 for x in values):
            raise ConfigError(f"{name} values must lie in [0, 1]")
    RunConfig(n=args.n, seed=args.seed, alpha=args.alpha, compare_key_fraction=args.compare_key_fraction)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        for point in sweep_points(
            MeasBasis(args.basis), args.p_intercept, args.p_loss, args.n, args.seed,
            args.alpha, args.compare_key_fraction,
        ):
            out.write(json.dumps(point, sort_keys=True) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": cmd_run, "oracle": cmd_oracle, "sweep": cmd_sweep}[args.cmd]
    try:
        return handler(args)
    except (ConfigError, OSError, json.JSONDecodeError) as exc:
        print(f"dcqkd {args.cmd}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
