"""Command-line front end.

Subcommands: disk-demo, scan, chsh, pathology, events gen, events match.
Every run resolves its full configuration (hard defaults, then the optional
key = value config file, then explicit flags), executes, writes its outputs
into --out, and drops a manifest.json recording the command line, the
resolved configuration and its hash, the seed, and the output names.
Re-running the manifest's argv reproduces every CSV byte for byte. Exit
codes: 0 success, 1 runtime failure, 2 usage error.

Calibration parameters (thresholds, noise widths, efficiencies) are never
silent: each subcommand's --help states them with their defaults, and the
resolved values always land in the manifest.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .disks import (
    AssumeFixed,
    AssumeRandom,
    AssumeZero,
    BothKnown,
    IntegrateOver,
    KnowledgePolicy,
    SamplingMode,
    build_bell_special,
    build_param_disks,
    build_singlet_disk,
    disk_to_text,
    joint_pmf_from_splits,
    policy_is_per_trial,
    sample_disk_many,
    sample_param_setup,
    sample_separated,
    split_disk,
    split_to_text,
    tabulate_outcomes,
)
from .domain import TWO_PI, JointPmf, NoCoincidencesError, SingletKind, correlation
from .eventio import GeneratorConfig, generate_streams, match_files
from .optics import FixedBasisSource, IsotropicSource, StationConfig
from .scan import (
    STANDARD_CHSH_ANGLES,
    ScanConfig,
    chsh_report_from_tables,
    default_b_angles,
    default_chsh_configs,
    pathology_probe,
    run_chsh,
    run_scan,
    scan_result_csv,
    scan_summary_text,
)

SCAN_PRESETS = {
    "figure6": {"ta": 0.5, "tb": 0.5, "alpha": 0.0},
    "figure7": {"ta": 0.5, "tb": 0.92, "alpha": 0.0},
    "figure8-left": {"ta": 0.5, "tb": 0.75, "alpha": 0.0},
    "figure8-right": {"ta": 0.5, "tb": 0.75, "alpha": math.pi / 4},
}

_KINDS = {
    "correlated": SingletKind.CORRELATED,
    "anticorrelated": SingletKind.ANTICORRELATED,
}


def _fmt(x) -> str:
    if x is None:
        return "nan"
    return repr(float(x))


def _fingerprint(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


def _write_manifest(
    out_dir: Path,
    command: str,
    argv: list[str],
    seed: int | None,
    config: dict,
    outputs: list[str],
) -> None:
    doc = {
        "tool": "eprblab",
        "version": __version__,
        "command": command,
        "argv": argv,
        "seed": seed,
        "config": config,
        "config_sha256": _fingerprint(config),
        "outputs": sorted(outputs),
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


class _Resolver:
    """Parameter resolution: explicit flag > config-file entry > default."""

    def __init__(self, config_path: str | None):
        self.cp = None
        if config_path:
            cp = configparser.ConfigParser()
            if not cp.read(config_path):
                raise FileNotFoundError(f"config file not found: {config_path}")
            self.cp = cp

    def get(self, flag_value, section: str, key: str, default, cast=float):
        if flag_value is not None:
            return flag_value
        if self.cp is not None and self.cp.has_option(section, key):
            return cast(self.cp.get(section, key))
        return default


def _station_flags(p: argparse.ArgumentParser, scanned_b: bool) -> None:
    p.add_argument("--ta", type=float, help="station A detection threshold (default 0.5)")
    p.add_argument("--tb", type=float, help="station B detection threshold (default 0.5)")
    p.add_argument("--noise-a", type=float, help="station A channel noise sigma (default 0)")
    p.add_argument("--noise-b", type=float, help="station B channel noise sigma (default 0)")
    p.add_argument("--efficiency-a", type=float, help="station A efficiency in (0,1] (default 1)")
    p.add_argument("--efficiency-b", type=float, help="station B efficiency in (0,1] (default 1)")
    if scanned_b:
        p.add_argument("--alpha", type=float, help="station A analyzer angle, rad (default 0)")


def _source_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--source",
        choices=["isotropic", "fixed-hv"],
        help="pair source model (default isotropic)",
    )
    p.add_argument("--basis", type=float, help="fixed-hv basis angle, rad (default 0)")


def _common_flags(p: argparse.ArgumentParser, default_out: str) -> None:
    p.add_argument("--seed", type=int, help="random seed, u64 (default 0)")
    p.add_argument("--out", default=default_out, help=f"output directory (default {default_out})")
    p.add_argument("--config", help="key = value config file with per-station sections")


def _resolve_stations(args, res: _Resolver, alpha_default: float = 0.0):
    ta = res.get(args.ta, "station_a", "threshold", 0.5)
    tb = res.get(args.tb, "station_b", "threshold", 0.5)
    na = res.get(args.noise_a, "station_a", "noise_sigma", 0.0)
    nb = res.get(args.noise_b, "station_b", "noise_sigma", 0.0)
    ea = res.get(args.efficiency_a, "station_a", "efficiency", 1.0)
    eb = res.get(args.efficiency_b, "station_b", "efficiency", 1.0)
    alpha = res.get(getattr(args, "alpha", None), "station_a", "angle", alpha_default)
    return ta, tb, na, nb, ea, eb, alpha


def _resolve_source(args, res: _Resolver):
    name = res.get(args.source, "source", "model", "isotropic", cast=str)
    basis = res.get(args.basis, "source", "basis", 0.0)
    if name == "fixed-hv":
        return FixedBasisSource(basis=basis), name, basis
    return IsotropicSource(), name, basis


def _pmf_line(p: JointPmf) -> str:
    return ",".join(_fmt(x) for x in p.as_tuple())


def _policy(name: str | None, value: float | None) -> KnowledgePolicy:
    table = {
        "both-known": BothKnown,
        "assume-zero": AssumeZero,
        "assume-random": AssumeRandom,
        "integrate": IntegrateOver,
    }
    name = name or "assume-zero"
    if name == "assume-fixed":
        if value is None:
            raise ValueError("--policy assume-fixed needs --policy-value")
        return AssumeFixed(value=value)
    return table[name]()


# --- disk-demo ---------------------------------------------------------------

def _cmd_disk_demo(args, argv: list[str]) -> int:
    res = _Resolver(args.config)
    seed = res.get(args.seed, "run", "seed", 0, cast=int)
    n = res.get(args.n, "run", "n", 100_000, cast=int)
    kind = _KINDS[args.kind]
    out = _out_dir(args)
    theta = args.theta
    alpha = args.alpha
    beta = args.beta
    outputs: list[str] = []
    disk_texts: dict[str, str] = {}
    exact: JointPmf | None = None

    if args.figure in ("1", "2", "3"):
        disk = build_singlet_disk(theta, kind)
        target = disk.implied_pmf()
        if args.figure == "1":
            lams = np.random.default_rng(seed).uniform(0.0, TWO_PI, n)
            a, b = sample_disk_many(disk, lams)
            counts = tabulate_outcomes(a, b, n)
            disk_texts["disk.txt"] = disk_to_text(disk)
        else:
            da, db = split_disk(disk)
            mode = (
                SamplingMode.SHARED_LAMBDA
                if args.figure == "2"
                else SamplingMode.INDEPENDENT_LAMBDAS
            )
            counts = sample_separated(da, db, mode, n, seed)
            disk_texts["disk_a.txt"] = split_to_text(da)
            disk_texts["disk_b.txt"] = split_to_text(db)
    elif args.figure in ("4", "5"):
        target = build_singlet_disk(alpha - beta, kind).implied_pmf()
        if args.figure == "4":
            policy_a: KnowledgePolicy = BothKnown()
            policy_b: KnowledgePolicy = BothKnown()
        else:
            policy_a = _policy(args.policy_a or args.policy, args.policy_value)
            policy_b = _policy(args.policy_b or args.policy, args.policy_value)
        counts = sample_param_setup(alpha, beta, policy_a, policy_b, kind, n, seed)
        if not (policy_is_per_trial(policy_a) or policy_is_per_trial(policy_b)):
            da, db = build_param_disks(alpha, beta, policy_a, policy_b, kind)
            disk_texts["disk_a.txt"] = split_to_text(da)
            disk_texts["disk_b.txt"] = split_to_text(db)
    else:  # special
        da, db = build_bell_special(alpha)
        target = build_singlet_disk(alpha, SingletKind.ANTICORRELATED).implied_pmf()
        counts = sample_separated(da, db, SamplingMode.SHARED_LAMBDA, n, seed)
        exact = joint_pmf_from_splits(da, db)
        disk_texts["disk_a.txt"] = split_to_text(da)
        disk_texts["disk_b.txt"] = split_to_text(db)

    empirical = counts.to_pmf()
    lines = [
        f"figure = {args.figure}",
        f"kind = {args.kind}",
        f"theta = {_fmt(theta)}",
        f"alpha = {_fmt(alpha)}",
        f"beta = {_fmt(beta)}",
        f"n = {n}",
        f"seed = {seed}",
        f"n_pp = {counts.n_pp}",
        f"n_pm = {counts.n_pm}",
        f"n_mp = {counts.n_mp}",
        f"n_mm = {counts.n_mm}",
        f"empirical_pmf = {_pmf_line(empirical)}",
        f"target_pmf = {_pmf_line(target)}",
        f"tv_distance = {_fmt(empirical.tv_distance(target))}",
    ]
    if exact is not None:
        lines.append(f"exact_pmf = {_pmf_line(exact)}")
        lines.append(f"exact_tv_distance = {_fmt(exact.tv_distance(target))}")
    (out / "summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    outputs.append("summary.txt")
    for name, text in disk_texts.items():
        (out / name).write_text(text, encoding="utf-8")
        outputs.append(name)

    config = {
        "figure": args.figure,
        "kind": args.kind,
        "theta": theta,
        "alpha": alpha,
        "beta": beta,
        "policy": args.policy,
        "policy_a": args.policy_a,
        "policy_b": args.policy_b,
        "policy_value": args.policy_value,
        "n": n,
        "seed": seed,
    }
    _write_manifest(out, "disk-demo", argv, seed, config, outputs)
    return 0


# --- scan ----------------------------------------------------------------------

def _cmd_scan(args, argv: list[str]) -> int:
    res = _Resolver(args.config)
    preset = SCAN_PRESETS.get(args.preset, {})
    if args.ta is None and "ta" in preset:
        args.ta = preset["ta"]
    if args.tb is None and "tb" in preset:
        args.tb = preset["tb"]
    if args.alpha is None and "alpha" in preset:
        args.alpha = preset["alpha"]
    seed = res.get(args.seed, "run", "seed", 0, cast=int)
    steps = res.get(args.steps, "run", "steps", 33, cast=int)
    pairs = res.get(args.pairs, "run", "pairs_per_step", 100_000, cast=int)
    ta, tb, na, nb, ea, eb, alpha = _resolve_stations(args, res)
    source, source_name, basis = _resolve_source(args, res)

    cfg = ScanConfig(
        source=source,
        station_a=StationConfig(angle=alpha, threshold=ta, noise_sigma=na, efficiency=ea),
        station_b=StationConfig(angle=0.0, threshold=tb, noise_sigma=nb, efficiency=eb),
        b_angles=default_b_angles(steps),
        pairs_per_step=pairs,
        seed=seed,
    )
    result = run_scan(cfg)

    config = {
        "preset": args.preset,
        "source": source_name,
        "basis": basis,
        "alpha": alpha,
        "ta": ta,
        "tb": tb,
        "noise_a": na,
        "noise_b": nb,
        "efficiency_a": ea,
        "efficiency_b": eb,
        "steps": steps,
        "pairs_per_step": pairs,
        "seed": seed,
    }
    out = _out_dir(args)
    (out / "scan.csv").write_text(scan_result_csv(result), encoding="utf-8")
    (out / "summary.txt").write_text(
        scan_summary_text(result, _fingerprint(config)), encoding="utf-8"
    )
    _write_manifest(out, "scan", argv, seed, config, ["scan.csv", "summary.txt"])
    return 0


# --- chsh ------------------------------------------------------------------------

CHSH_CSV_HEADER = "setting,angle_a_rad,angle_b_rad,n_pp,n_pm,n_mp,n_mm,coincidences,E,stderr"


def _chsh_csv(report) -> str:
    lines = [CHSH_CSV_HEADER]
    names = (("ab", "ab_prime"), ("a_prime_b", "a_prime_b_prime"))
    for i in (0, 1):
        for j in (0, 1):
            t = report.tables[i][j]
            lines.append(
                f"{names[i][j]},{_fmt(report.angles_a[i])},{_fmt(report.angles_b[j])},"
                f"{t.n_pp},{t.n_pm},{t.n_mp},{t.n_mm},{t.coincidences},"
                f"{_fmt(report.e_values[i][j])},{_fmt(report.stderrs[i][j])}"
            )
    return "\n".join(lines) + "\n"


def _cmd_chsh(args, argv: list[str]) -> int:
    res = _Resolver(args.config)
    seed = res.get(args.seed, "run", "seed", 0, cast=int)
    pairs = res.get(args.pairs, "run", "pairs_per_setting", 100_000, cast=int)
    ta, tb, na, nb, ea, eb, _ = _resolve_stations(args, res)
    source, source_name, basis = _resolve_source(args, res)
    a, a2, b, b2 = STANDARD_CHSH_ANGLES
    angle_a = args.angle_a if args.angle_a is not None else a
    angle_a2 = args.angle_a2 if args.angle_a2 is not None else a2
    angle_b = args.angle_b if args.angle_b is not None else b
    angle_b2 = args.angle_b2 if args.angle_b2 is not None else b2

    pair_a, pair_b = default_chsh_configs(
        t_a=ta, t_b=tb, noise_a=na, noise_b=nb, efficiency_a=ea, efficiency_b=eb
    )
    pair_a = (replace(pair_a[0], angle=angle_a), replace(pair_a[1], angle=angle_a2))
    pair_b = (replace(pair_b[0], angle=angle_b), replace(pair_b[1], angle=angle_b2))
    report = run_chsh(source, pair_a, pair_b, pairs, seed)

    config = {
        "source": source_name,
        "basis": basis,
        "ta": ta,
        "tb": tb,
        "noise_a": na,
        "noise_b": nb,
        "efficiency_a": ea,
        "efficiency_b": eb,
        "angles_a": [angle_a, angle_a2],
        "angles_b": [angle_b, angle_b2],
        "pairs_per_setting": pairs,
        "seed": seed,
    }
    out = _out_dir(args)
    (out / "chsh.csv").write_text(_chsh_csv(report), encoding="utf-8")
    summary = [
        f"s = {_fmt(report.s)}",
        f"abs_s = {_fmt(report.abs_s)}",
        f"se_s = {_fmt(report.se_s)}",
        f"seed = {seed}",
        f"config_sha256 = {_fingerprint(config)}",
    ]
    (out / "summary.txt").write_text("\n".join(summary) + "\n", encoding="utf-8")
    _write_manifest(out, "chsh", argv, seed, config, ["chsh.csv", "summary.txt"])
    return 0


# --- pathology ---------------------------------------------------------------------

def _cmd_pathology(args, argv: list[str]) -> int:
    res = _Resolver(args.config)
    seed = res.get(args.seed, "run", "seed", 0, cast=int)
    steps = res.get(args.steps, "run", "steps", 33, cast=int)
    pairs = res.get(args.pairs, "run", "pairs_per_step", 10_000, cast=int)
    ta, tb, na, nb, ea, eb, alpha = _resolve_stations(args, res, alpha_default=math.pi / 4)
    basis = res.get(args.basis, "source", "basis", 0.0)

    report = pathology_probe(
        basis=basis,
        alpha=alpha,
        station_a=StationConfig(angle=0.0, threshold=ta, noise_sigma=na, efficiency=ea),
        station_b=StationConfig(angle=0.0, threshold=tb, noise_sigma=nb, efficiency=eb),
        b_angles=default_b_angles(steps),
        pairs_per_step=pairs,
        seed=seed,
    )
    config = {
        "basis": basis,
        "alpha": alpha,
        "ta": ta,
        "tb": tb,
        "noise_a": na,
        "noise_b": nb,
        "efficiency_a": ea,
        "efficiency_b": eb,
        "steps": steps,
        "pairs_per_step": pairs,
        "seed": seed,
    }
    out = _out_dir(args)
    lines = ["b_angle_rad,match_fixed_basis,match_isotropic"]
    for f, i in zip(report.fixed_scan.steps, report.isotropic_scan.steps):
        lines.append(f"{_fmt(f.b_angle)},{_fmt(f.match_probability)},{_fmt(i.match_probability)}")
    (out / "pathology.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    summary = [
        f"basis = {_fmt(report.basis)}",
        f"alpha = {_fmt(report.alpha)}",
        f"a_double_rate = {_fmt(report.a_double_rate)}",
        f"a_single_rate = {_fmt(report.a_single_rate)}",
        f"a_miss_rate = {_fmt(report.a_miss_rate)}",
        f"max_match_deviation = {_fmt(report.max_match_deviation)}",
        f"seed = {seed}",
        f"config_sha256 = {_fingerprint(config)}",
    ]
    (out / "summary.txt").write_text("\n".join(summary) + "\n", encoding="utf-8")
    _write_manifest(out, "pathology", argv, seed, config, ["pathology.csv", "summary.txt"])
    return 0


# --- events ----------------------------------------------------------------------

def _parse_pair(text: str, flag: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"{flag} wants two comma-separated angles, got {text!r}")
    return float(parts[0]), float(parts[1])


def _cmd_events_gen(args, argv: list[str]) -> int:
    res = _Resolver(args.config)
    seed = res.get(args.seed, "run", "seed", 0, cast=int)
    rate = res.get(args.rate, "run", "rate", 10_000.0)
    jitter = res.get(args.jitter, "run", "jitter", 10e-9)
    duration = res.get(args.duration, "run", "duration", 1.0)
    ta, tb, na, nb, ea, eb, _ = _resolve_stations(args, res)
    source, source_name, basis = _resolve_source(args, res)
    a, a2, b, b2 = STANDARD_CHSH_ANGLES
    settings_a = _parse_pair(args.angles_a, "--angles-a") if args.angles_a else (a, a2)
    settings_b = _parse_pair(args.angles_b, "--angles-b") if args.angles_b else (b, b2)

    cfg = GeneratorConfig(
        source=source,
        station_a=StationConfig(angle=0.0, threshold=ta, noise_sigma=na, efficiency=ea),
        station_b=StationConfig(angle=0.0, threshold=tb, noise_sigma=nb, efficiency=eb),
        settings_a=settings_a,
        settings_b=settings_b,
        mean_rate=rate,
        jitter_sigma=jitter,
    )
    out = _out_dir(args)
    streams = generate_streams(cfg, duration, seed, out / "events_a.csv", out / "events_b.csv")
    truth_lines = ["a_row,b_row"]
    truth_lines.extend(f"{ia},{ib}" for ia, ib in streams.truth)
    (out / "truth.csv").write_text("\n".join(truth_lines) + "\n", encoding="utf-8")

    config = {
        "source": source_name,
        "basis": basis,
        "ta": ta,
        "tb": tb,
        "noise_a": na,
        "noise_b": nb,
        "efficiency_a": ea,
        "efficiency_b": eb,
        "settings_a": list(settings_a),
        "settings_b": list(settings_b),
        "rate": rate,
        "jitter": jitter,
        "duration": duration,
        "seed": seed,
    }
    summary = [
        f"n_pairs = {streams.n_pairs}",
        f"records_a = {len(streams.events_a)}",
        f"records_b = {len(streams.events_b)}",
        f"truth_pairs = {len(streams.truth)}",
        f"seed = {seed}",
        f"config_sha256 = {_fingerprint(config)}",
    ]
    (out / "summary.txt").write_text("\n".join(summary) + "\n", encoding="utf-8")
    _write_manifest(
        out,
        "events gen",
        argv,
        seed,
        config,
        ["events_a.csv", "events_b.csv", "truth.csv", "summary.txt"],
    )
    return 0


MATCH_CSV_HEADER = "setting_a,setting_b,n_pp,n_pm,n_mp,n_mm,singles_a,singles_b,E"


def _cmd_events_match(args, argv: list[str]) -> int:
    result = match_files(args.a, args.b, args.window)
    out = _out_dir(args)
    lines = [MATCH_CSV_HEADER]
    for (sa, sb), t in sorted(result.tables.items()):
        try:
            e: float | None = correlation(t)
        except NoCoincidencesError:
            e = None
        lines.append(
            f"{sa},{sb},{t.n_pp},{t.n_pm},{t.n_mp},{t.n_mm},{t.singles_a},{t.singles_b},{_fmt(e)}"
        )
    (out / "matched.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    a, a2, b, b2 = STANDARD_CHSH_ANGLES
    try:
        s: float | None = chsh_report_from_tables(result.tables, (a, a2), (b, b2)).s
    except NoCoincidencesError:
        s = None
    config = {"a": str(args.a), "b": str(args.b), "window_ns": args.window}
    summary = [
        f"window_ns = {args.window}",
        f"n_matched = {result.n_matched}",
        f"s = {_fmt(s)}",
        f"abs_s = {_fmt(abs(s) if s is not None else None)}",
        f"config_sha256 = {_fingerprint(config)}",
    ]
    (out / "summary.txt").write_text("\n".join(summary) + "\n", encoding="utf-8")
    _write_manifest(out, "events match", argv, None, config, ["matched.csv", "summary.txt"])
    return 0


# --- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eprblab",
        description="Deterministic two-station polarization-correlation lab.",
    )
    parser.add_argument("--version", action="version", version=f"eprblab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "disk-demo",
        help="sample a disk-embodied joint distribution in one of six setups",
        description=(
            "Figures: 1 joint disk, 2 split disks + shared draw, 3 split disks"
            " + independent draws, 4 setting-difference disks with both"
            " settings known, 5 per-side setting guesses via knowledge"
            " policies, special: the fixed-remote-setting offset construction."
        ),
    )
    p.add_argument("--figure", required=True, choices=["1", "2", "3", "4", "5", "special"])
    p.add_argument("--theta", type=float, default=math.pi / 8,
                   help="relative angle for figures 1-3 (default pi/8)")
    p.add_argument("--alpha", type=float, default=0.0,
                   help="station A setting for figures 4/5/special (default 0)")
    p.add_argument("--beta", type=float, default=0.0,
                   help="station B setting for figures 4/5 (default 0)")
    p.add_argument("--kind", choices=sorted(_KINDS), default="anticorrelated",
                   help="pair preparation (default anticorrelated)")
    p.add_argument("--policy", choices=["both-known", "assume-zero", "assume-fixed",
                                        "assume-random", "integrate"],
                   help="figure-5 knowledge policy for both sides (default assume-zero)")
    p.add_argument("--policy-a", choices=["both-known", "assume-zero", "assume-fixed",
                                          "assume-random", "integrate"],
                   help="override figure-5 policy for side A")
    p.add_argument("--policy-b", choices=["both-known", "assume-zero", "assume-fixed",
                                          "assume-random", "integrate"],
                   help="override figure-5 policy for side B")
    p.add_argument("--policy-value", type=float,
                   help="assumed remote setting for assume-fixed")
    p.add_argument("--n", type=int, help="trials (default 100000)")
    _common_flags(p, "disk-demo-out")
    p.set_defaults(func=_cmd_disk_demo)

    p = sub.add_parser("scan", help="sweep station B over [0, pi] and tabulate")
    p.add_argument("--preset", choices=sorted(SCAN_PRESETS),
                   help="bind thresholds and A angle: figure6 = 0.5/0.5, figure7 ="
                        " 0.5/0.92, figure8-left = 0.5/0.75 alpha 0, figure8-right"
                        " = 0.5/0.75 alpha pi/4")
    _station_flags(p, scanned_b=True)
    _source_flags(p)
    p.add_argument("--steps", type=int, help="scan steps over [0, pi] (default 33)")
    p.add_argument("--pairs", type=int, help="pairs per step (default 100000)")
    _common_flags(p, "scan-out")
    p.set_defaults(func=_cmd_scan)

    p = sub.add_parser("chsh", help="four-setting CHSH run")
    _station_flags(p, scanned_b=False)
    _source_flags(p)
    p.add_argument("--angle-a", type=float, help="setting a (default 0)")
    p.add_argument("--angle-a2", type=float, help="setting a' (default pi/4)")
    p.add_argument("--angle-b", type=float, help="setting b (default pi/8)")
    p.add_argument("--angle-b2", type=float, help="setting b' (default 3*pi/8)")
    p.add_argument("--pairs", type=int, help="pairs per setting (default 100000)")
    _common_flags(p, "chsh-out")
    p.set_defaults(func=_cmd_chsh)

    p = sub.add_parser("pathology", help="fixed-basis source probe with A at alpha")
    p.add_argument("--basis", type=float, help="source basis angle (default 0)")
    _station_flags(p, scanned_b=True)
    p.add_argument("--steps", type=int, help="scan steps (default 33)")
    p.add_argument("--pairs", type=int, help="pairs per step (default 10000)")
    _common_flags(p, "pathology-out")
    p.set_defaults(func=_cmd_pathology)

    p = sub.add_parser("events", help="time-tagged event-file pipeline")
    esub = p.add_subparsers(dest="events_command", required=True)

    g = esub.add_parser("gen", help="generate per-side time-tag streams")
    g.add_argument("--rate", type=float, help="mean pair rate, pairs/s (default 10000)")
    g.add_argument("--jitter", type=float, help="per-side latency sigma, s (default 10e-9)")
    g.add_argument("--duration", type=float, help="run length, s (default 1.0)")
    g.add_argument("--angles-a", help="two comma-separated A settings (default 0,pi/4)")
    g.add_argument("--angles-b", help="two comma-separated B settings (default pi/8,3pi/8)")
    _station_flags(g, scanned_b=False)
    _source_flags(g)
    _common_flags(g, "events-out")
    g.set_defaults(func=_cmd_events_gen)

    m = esub.add_parser("match", help="window-match two streams into count tables")
    m.add_argument("--a", required=True, help="station A events CSV")
    m.add_argument("--b", required=True, help="station B events CSV")
    m.add_argument("--window", required=True, type=int, help="coincidence window, ns")
    m.add_argument("--out", default="match-out", help="output directory (default match-out)")
    m.set_defaults(func=_cmd_events_match)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, argv)
    except Exception as exc:  # runtime failure contract: exit 1, message on stderr
        print(f"eprblab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
