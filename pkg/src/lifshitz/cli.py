"""Command-line experiment runner.

Every run resolves its config, names its outputs by a hash of that config
and writes a ``.meta.json`` next to them.  Exit status: 0 ok, 1 invalid
input, 2 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np
import pydantic
import scipy

from . import __version__
from .bounds import certified_ids_bound, scan_realizations
from .config import config_hash, load_config, load_raw
from .eigensolve import ConvergenceError
from .ids import IdsEstimate, estimate_ids, fit_lifshitz_exponent
from .potentials import check_hypothesis_a
from .randomness import large_deviation_empirical, large_deviation_hoeffding, mean_cutoff

log = logging.getLogger("lifshitz")

SUBCOMMANDS = ("ids", "fit", "bounds", "certify", "check-hyp", "ld")
# CLI flags that map onto the active subcommand's section
SECTION_FLAGS = {"seed": "seed", "samples": "samples"}


class OutputConflict(RuntimeError):
    pass


def _csv_text(rows: list[dict], fields: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: ("" if row.get(k) is None else repr(row[k]) if isinstance(row[k], float) else row[k]) for k in fields})
    return buf.getvalue()


def write_once(path: Path, text: str) -> Path:
    """Write ``text`` unless ``path`` exists; existing files must match exactly."""
    if path.exists():
        if path.read_text() != text:
            raise OutputConflict(f"{path} exists with different content; refusing to overwrite")
        log.info("unchanged: %s", path)
        return path
    path.write_text(text)
    return path


def _versions() -> dict:
    return {
        "lifshitz": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "pydantic": pydantic.VERSION,
    }


def run_ids(cfg, threads: int):
    sec = cfg.ids
    est = estimate_ids(
        cfg.model.build(),
        _distribution(cfg),
        sec.L,
        sec.m,
        sec.grid.energies(),
        sec.samples,
        sec.seed,
        sec.shift,
        threads=threads,
    )
    rows = list(est.rows())
    return {"csv": _csv_text(rows, ["E", "n_hat", "ci_half", "R", "L", "m", "seed"])}, {"seed": sec.seed}


def run_fit(cfg, threads: int):
    sec = cfg.fit
    fit = fit_lifshitz_exponent(IdsEstimate.from_csv(sec.csv), sec.E0)
    return {"json": json.dumps({"source": sec.csv, "E0": sec.E0, **fit.to_dict()}, indent=2) + "\n"}, {}


BOUNDS_FIELDS = [
    "r", "seed", "L", "s_l", "s_l_tilde", "m1", "m2", "e2_lower", "temple", "harmonic_term",
    "chain_lower", "simplified", "applicable", "numeric_E1", "slack", "sound",
]


def run_bounds(cfg, threads: int):
    sec = cfg.bounds
    dist = _distribution(cfg)
    dist.require_unit_support()
    rows = scan_realizations(sec.alpha, dist, sec.L_values, sec.samples, sec.seed, sec.m)
    summary = {
        "seed": sec.seed,
        "temple_positive": sum(1 for r in rows if r["temple"] is not None and r["temple"] > 0),
        "thirring_positive": sum(1 for r in rows if r["simplified"] > 0),
        "unsound": sum(1 for r in rows if r["sound"] is False),
    }
    return {"csv": _csv_text(rows, BOUNDS_FIELDS)}, summary


CERTIFY_FIELDS = [
    "E", "alpha", "beta", "L_chosen", "free_count", "mu_tilde", "ld_threshold", "ld_factor", "bound", "valid", "invalid_reasons",
]


def run_certify(cfg, threads: int):
    sec = cfg.certify
    dist = _distribution(cfg)
    rows = []
    for E in sec.energies.energies():
        row = certified_ids_bound(float(E), sec.alpha, sec.beta, dist, sharp=sec.sharp).to_dict()
        row["invalid_reasons"] = "; ".join(row["invalid_reasons"])
        rows.append(row)
    return {"csv": _csv_text(rows, CERTIFY_FIELDS)}, {}


def run_check_hyp(cfg, threads: int):
    sec = cfg.check_hyp
    report = check_hypothesis_a(cfg.model.build(), sec.n_lam, sec.n_x)
    return {"json": json.dumps({"model": cfg.model.kind, **report.to_dict()}, indent=2) + "\n"}, {"passes": report.passes}


LD_FIELDS = ["L", "threshold", "hits", "R", "estimate", "ci_low", "ci_high", "ci_half", "hoeffding", "dominated"]


def run_ld(cfg, threads: int):
    sec = cfg.ld
    dist = _distribution(cfg)
    mu = mean_cutoff(dist)
    threshold = mu / 2.0 if sec.threshold is None else sec.threshold
    rows = []
    for L in sec.L_values:
        est = large_deviation_empirical(dist, L, threshold, sec.samples, sec.seed)
        hoeff = large_deviation_hoeffding(mu, L, threshold) if threshold < mu else None
        rows.append(
            {
                "L": L,
                "threshold": threshold,
                "hits": est.hits,
                "R": est.samples,
                "estimate": est.estimate,
                "ci_low": est.ci_low,
                "ci_high": est.ci_high,
                "ci_half": est.ci_half,
                "hoeffding": hoeff,
                "dominated": None if hoeff is None else bool(est.estimate <= hoeff + est.ci_half),
            }
        )
    return {"csv": _csv_text(rows, LD_FIELDS)}, {"seed": sec.seed, "mu_tilde": mu}


RUNNERS = {
    "ids": run_ids,
    "fit": run_fit,
    "bounds": run_bounds,
    "certify": run_certify,
    "check-hyp": run_check_hyp,
    "ld": run_ld,
}


def _distribution(cfg):
    if cfg.distribution is None:
        raise ValueError("config has no [distribution] section")
    return cfg.distribution.build()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lifshitz", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="TOML config or a previous run's .meta.json")
        p.add_argument("--seed", type=int, help="override the section's seed")
        p.add_argument("--samples", type=int, help="override the section's sample count")
        p.add_argument("--out-dir", default=".", help="directory for output files")
        p.add_argument("--threads", type=int, default=1, help="worker threads (does not change results)")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE", help="dotted config key")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    name = args.subcommand
    section = name.replace("-", "_")
    try:
        raw = load_raw(args.config) if args.config else {}
        overrides = list(args.override)
        for flag, key in SECTION_FLAGS.items():
            value = getattr(args, flag)
            if value is not None:
                overrides.append(f"{section if name != 'check-hyp' else name}.{key}={value}")
        cfg = load_config(raw=raw, overrides=overrides)
        cfg.section(name)
        resolved = cfg.resolved()
        digest = config_hash(name, resolved)[:12]
        outputs, summary = RUNNERS[name](cfg, max(1, args.threads))
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        stem = f"{name}-{digest}"
        written = [str(write_once(out_dir / f"{stem}.{ext}", text)) for ext, text in outputs.items()]
        meta = {
            "subcommand": name,
            "config_hash": digest,
            "config": resolved,
            "versions": _versions(),
            "outputs": [Path(p).name for p in written],
            "summary": summary,
        }
        write_once(out_dir / f"{stem}.meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    except ConvergenceError as exc:
        print(f"error: numerical non-convergence: {exc}", file=sys.stderr)
        return 2
    except (pydantic.ValidationError, ValueError, OSError, OutputConflict, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for p in written:
        print(p)
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
