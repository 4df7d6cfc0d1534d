"""Command-line front end: ``codesmooth <command> [options]``.

Options can also come from a ``key=value`` config file (``--config``); flags
given on the command line take precedence. Exit status is 0 when every check
passed, 1 when a check failed and 2 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from collections.abc import Callable
from pathlib import Path

import numpy as np

from codesmooth import codes as codes_mod
from codesmooth import exponents, lpn, smoothing
from codesmooth.distributions import (
    BITS,
    NATS,
    LogBase,
    NoiseModel,
    dense_limit_override,
)
from codesmooth.errors import CodesmoothError
from codesmooth.gf import PackedVector
from codesmooth.report import csv_preamble, envelope, to_json

OUT_DIR_ENV = "CODESMOOTH_OUT_DIR"


class UsageError(Exception):
    pass


# -- value parsers ----------------------------------------------------------------


def int_list(text: str) -> list[int]:
    """``"2..6"``, ``"2,4,8"`` or ``"5"``."""
    out: list[int] = []
    for part in str(text).split(","):
        part = part.strip()
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def float_list(text: str) -> list[float]:
    return [float(x) for x in str(text).split(",") if x.strip()]


def k_spec(text: str):
    return "all" if str(text).strip() == "all" else int_list(text)


def boolean(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def grid_spec(text: str) -> list[float]:
    """``"0.5..12:0.25"`` or a comma list."""
    if ".." in text:
        span, _, step = text.partition(":")
        lo, hi = (float(x) for x in span.split(".."))
        step_f = float(step or 0.25)
        count = int(round((hi - lo) / step_f))
        return [lo + i * step_f for i in range(count + 1)]
    return float_list(text)


def parse_noise(text: str) -> NoiseModel:
    kind, _, arg = text.partition(":")
    if kind == "bernoulli":
        return NoiseModel.bernoulli(float(arg))
    if kind == "uniform":
        return NoiseModel.uniform()
    if kind == "point":
        return NoiseModel.point_mass(PackedVector.from_string(arg))
    raise ValueError(f"unknown noise spec {text!r}")


Option = tuple[Callable, object, str]

OPTIONS: dict[str, dict[str, Option]] = {
    "verify-averaging": {
        "family": (str, None, "linear | extended | selfdual | qc"),
        "n": (int_list, "2..4", "code lengths, e.g. 2..6"),
        "k": (k_spec, "all", "dimensions or 'all'"),
        "q": (int_list, "2", "field orders"),
        "t": (int_list, "4", "family parameter t for selfdual and qc"),
        "alpha": (int_list, "2,3", "orders split into tuples (extended family)"),
        "functions": (int, "5", "random test functions per grid point"),
    },
    "smooth-scan": {
        "n": (int_list, "8,12,16,20", "code lengths"),
        "alpha": (float, "3", "Renyi order"),
        "noise": (parse_noise, "bernoulli:0.25", "bernoulli:R | uniform | point:BITS"),
        "rate": (float, None, "fixed rate (overrides rate-offset)"),
        "rate_offset": (float, "0.05", "rate above the threshold 1 - H_alpha(W)/n"),
        "samples": (int, "2000", "Monte Carlo codes per row beyond the budget"),
        "budget": (int, "65536", "largest ensemble averaged exhaustively"),
        "expect": (str, "none", "none | decay | no-decay"),
    },
    "exponent": {
        "p": (float_list, "0.45,0.55", "symbol probabilities"),
        "R": (float, "0.9", "rate"),
        "alpha": (int, "50", "integer order"),
        "grid": (grid_spec, "0.5..12:0.25", "x grid for the concavity table"),
        "csv": (str, None, "path for the (x, f, f', f'') table"),
        "include_trivial": (boolean, "false", "count the all-ones partition"),
    },
    "lpn params": {
        "n": (int, "1024", "instance length"),
        "k": (int, "32", "instance dimension"),
        "eps": (float, "0.1", "epsilon"),
        "eta": (float, "0.1", "eta"),
        "C": (float, "1", "exponent constant"),
    },
    "lpn simulate": {
        "n": (int, "12", "instance length"),
        "k": (int, "4", "instance dimension"),
        "t": (int, "3", "error weight"),
        "r": (float, "0.2", "multiplier bias"),
        "alpha": (float, "1.5", "Renyi order"),
        "draws": (int, "1000", "sampled reductions checked against the identity"),
    },
    "lpn entropy-check": {
        "n": (int, "6", "length"),
        "t_weight": (int, "3", "weight of the parity support"),
        "r": (float, "0.3", "bias"),
        "alpha": (float_list, "2", "Renyi orders reported"),
    },
    "codes enumerate": {
        "family": (str, "linear", "linear | selfdual | qc"),
        "n": (int, "4", "length (linear)"),
        "k": (int, "2", "dimension (linear)"),
        "q": (int, "2", "field order (linear)"),
        "t": (int, "4", "family parameter"),
        "limit": (int, None, "stop after this many codes"),
    },
    "codes count": {
        "family": (str, "linear", "linear | selfdual | qc"),
        "n": (int, "4", "length (linear)"),
        "k": (int, "2", "dimension (linear)"),
        "q": (int, "2", "field order (linear)"),
        "t": (int, "4", "family parameter"),
    },
}

GLOBAL_DEFAULTS = {"seed": "0", "base": None, "dense_limit": "26", "out": None}


def load_config(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def _add_globals(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--seed", default=d, help="RNG seed (default 0)")
    p.add_argument("--base", default=d, choices=["bits", "nats"], help="log base of reported values")
    p.add_argument("--dense-limit", dest="dense_limit", default=d, help="largest n for dense tables (default 26)")
    p.add_argument("--out", default=d, help=f"output file (default: ${OUT_DIR_ENV}/<command>.<ext> or stdout)")
    p.add_argument("--config", default=d, help="key=value config file; flags win")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="codesmooth", description="Exact code-smoothing experiments.")
    _add_globals(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)
    groups: dict[str, argparse._SubParsersAction] = {}
    for name, opts in OPTIONS.items():
        if " " in name:
            head, tail = name.split(" ")
            if head not in groups:
                hp = sub.add_parser(head, help=f"{head} subcommands")
                groups[head] = hp.add_subparsers(dest="subcommand", required=True)
            p = groups[head].add_parser(tail)
        else:
            p = sub.add_parser(name)
        _add_globals(p, suppress=True)
        for key, (_, default, help_text) in opts.items():
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, default=None, help=f"{help_text} (default {default})")
    return parser


def resolve(args: argparse.Namespace) -> tuple[str, dict, dict]:
    """Merge defaults, config file and flags; returns (command, typed options, string config)."""
    command = args.command + (f" {args.subcommand}" if getattr(args, "subcommand", None) else "")
    spec = OPTIONS[command]
    raw: dict[str, object] = {k: v for k, v in GLOBAL_DEFAULTS.items()}
    raw.update({k: d for k, (_, d, _) in spec.items()})
    config_path = getattr(args, "config", None)
    if config_path:
        for key, value in load_config(config_path).items():
            if key not in raw:
                raise UsageError(f"unknown config key {key!r} for {command}")
            raw[key] = value
    for key in list(raw):
        value = getattr(args, key, None)
        if value is not None:
            raw[key] = value
    if raw["base"] is None:
        raw["base"] = "nats" if command == "exponent" else "bits"
    typed: dict[str, object] = {}
    try:
        typed["seed"] = int(raw["seed"])
        typed["dense_limit"] = int(raw["dense_limit"])
        typed["base"] = LogBase.parse(str(raw["base"]))
        typed["out"] = raw["out"]
        for key, (conv, _, _) in spec.items():
            typed[key] = None if raw[key] is None else conv(raw[key])
    except (ValueError, CodesmoothError) as exc:
        raise UsageError(str(exc)) from exc
    config = {k: (None if v is None else str(v)) for k, v in raw.items()}
    return command, typed, config


# -- commands ---------------------------------------------------------------------


def _functions(count: int, size: int, rng: np.random.Generator) -> list[np.ndarray]:
    return [rng.random(size) for _ in range(count)]


def cmd_verify_averaging(o: dict) -> tuple[dict, bool]:
    family = o["family"]
    rng = np.random.Generator(np.random.Philox(o["seed"]))
    rows: list[dict] = []
    if family == "linear":
        for q in o["q"]:
            for n in o["n"]:
                ks = range(n + 1) if o["k"] == "all" else [k for k in o["k"] if k <= n]
                for k in ks:
                    for f in _functions(o["functions"], q**n, rng):
                        rows.append(smoothing.verify_averaging_linear(n, k, q, f).to_dict())
    elif family == "extended":
        for n in o["n"]:
            ks = range(n + 1) if o["k"] == "all" else [k for k in o["k"] if k <= n]
            for alpha in o["alpha"]:
                splits = [c for r in (2, 3) for c in smoothing.positive_compositions(alpha, r)]
                for k in ks:
                    for f in _functions(o["functions"], 2**n, rng):
                        for split in splits:
                            rows.append(smoothing.verify_extended_averaging(n, k, 2, split, f).to_dict())
    elif family == "selfdual":
        for t in o["t"]:
            for f in [lambda v: 1.0] + _functions(o["functions"], 4**t, rng):
                rows.append(smoothing.verify_averaging_self_dual(t, f).to_dict())
            if rows[-1]["skipped"] is None:
                rows[-1]["extra"]["census"] = _self_dual_census(t)
    elif family == "qc":
        for t in o["t"]:
            if not codes_mod.qc_balance_condition(t):
                rows.append(smoothing.verify_averaging_qc(t, None).to_dict())
                continue
            for f in [lambda v: 1.0] + _functions(o["functions"], 4**t, rng):
                rows.append(smoothing.verify_averaging_qc(t, f).to_dict())
            samples = None if t <= 7 else 10_000
            rows[-1]["extra"]["census"] = smoothing.qc_membership_census(t, samples, o["seed"])
    else:
        raise UsageError(f"unknown family {family!r}")
    live = [r for r in rows if r["skipped"] is None]
    ok = all(r["holds"] for r in live)
    return {"family": family, "rows": rows, "checked": len(live),
            "failed": sum(1 for r in live if not r["holds"]), "all_hold": ok}, ok


def _self_dual_census(t: int) -> dict:
    ens = codes_mod.EnsembleSpec.self_dual(t)
    hist = codes_mod.membership_histogram(ens)
    n = 2 * t
    de = [v for v in range(1, (1 << n) - 1) if bin(v).count("1") % 4 == 0]
    mults = sorted({int(hist[v]) for v in de})
    return {"codes": ens.size(), "expected_codes": codes_mod.self_dual_doubly_even_count(t),
            "doubly_even_multiplicities": mults,
            "expected_multiplicity": codes_mod.self_dual_containing_count(t),
            "all_contain_ones": int(hist[(1 << n) - 1]) == ens.size()}


def cmd_smooth_scan(o: dict) -> tuple[list[smoothing.ScanRow], dict, bool]:
    noise: NoiseModel = o["noise"]
    alpha = o["alpha"]
    if o["rate"] is not None:
        rule = smoothing.fixed_rate(o["rate"])
        rate = o["rate"]
    else:
        probe = max(o["n"])
        rate = smoothing.rate_threshold(probe, alpha, noise) + o["rate_offset"] if noise.is_iid else None
        if rate is None:
            raise UsageError("rate-offset needs i.i.d. noise; pass --rate")
        rule = smoothing.rate_at_least(rate)
    with dense_limit_override(max(o["dense_limit"], 1)):
        rows = smoothing.smoothing_scan(o["n"], rule, alpha, noise, samples=o["samples"], seed=o["seed"],
                                        budget=o["budget"])
    decreasing = smoothing.strictly_decreasing(rows)
    summary = {"rate": rate, "strictly_decreasing": decreasing}
    ok = {"none": True, "decay": decreasing, "no-decay": not decreasing}.get(o["expect"])
    if ok is None:
        raise UsageError(f"unknown expectation {o['expect']!r}")
    return rows, summary, ok


def cmd_exponent(o: dict) -> tuple[dict, str, bool]:
    p = exponents.SymbolDistribution.of(o["p"], o["base"])
    closed = exponents.dominant_exponent_closed(o["alpha"], o["R"], p, o["include_trivial"])
    brute = None
    if o["alpha"] <= exponents.MAX_BRUTE_ALPHA:
        brute = exponents.dominant_exponent_bruteforce(o["alpha"], o["R"], p, o["include_trivial"]).to_dict()
    conc = exponents.concavity_report(o["R"], p, o["grid"])
    result = {"closed": closed.to_dict(), "bruteforce": brute,
              "concavity": {"concave": conc.concave, "derivative_agrees": conc.derivative_agrees,
                            "max_second": conc.max_second, "max_derivative_error": conc.max_derivative_error}}
    ok = conc.concave and conc.derivative_agrees and closed.agreement is not False
    return result, conc.to_csv(), ok


def cmd_lpn(sub: str, o: dict) -> tuple[dict, bool]:
    scale = 1.0 if o["base"] == BITS else math.log(2)
    if sub == "params":
        params = lpn.reduction_param_calculator(o["n"], o["k"], o["eps"], o["eta"], o["C"])
        return params.to_dict(), abs(params.C_roundtrip - o["C"]) <= 1e-10
    if sub == "simulate":
        inst = lpn.sample_adp_instance(o["n"], o["k"], o["t"], o["seed"])
        div = lpn.exact_reduction_divergence(inst.G, inst.e, o["r"], o["alpha"])
        dec = lpn.conditional_decomposition_check(inst.G, inst.e, o["r"], o["alpha"]) if o["t"] > 0 else None
        joint = lpn.reduction_joint(inst.G, inst.e, o["r"])
        k = inst.k
        b1 = math.fsum(joint[1 << k:])
        p = lpn.flip_probability(o["r"], inst.t)
        rng = np.random.Generator(np.random.Philox(o["seed"] + 1))
        identity_ok = True
        for _ in range(o["draws"]):
            s = lpn.reduce_sample(inst, o["r"], rng)
            identity_ok &= s.b == (s.a.dot(inst.x) if k else 0) ^ s.v.dot(inst.e)
        result = {
            "instance": lpn.instance_to_text(inst),
            "divergence": div.value * scale,
            "statistical_distance": lpn.reduction_statistical_distance(inst.G, inst.e, o["r"]),
            "b_marginal": b1, "flip_probability": p, "b_marginal_error": abs(b1 - p),
            "decomposition": None if dec is None else {**dec, "direct": dec["direct"] * scale,
                                                       "decomposed": dec["decomposed"] * scale,
                                                       "abs_diff": dec["abs_diff"] * scale},
            "identity_draws": o["draws"], "identity_holds": bool(identity_ok),
        }
        ok = identity_ok and abs(b1 - p) <= 1e-14 and (dec is None or dec["agrees"])
        return result, ok
    n, w = o["n"], o["t_weight"]
    if not 1 <= w <= n:
        raise UsageError("t-weight must lie in 1..n")
    rep = lpn.entropy_rate_check(n, PackedVector(n, (1 << w) - 1), o["r"], tuple(o["alpha"]))
    if o["base"] == NATS:
        for row in rep["rows"]:
            for key in ("forced_entropy", "expected", "conditional_entropy", "difference"):
                if row[key] is not None:
                    row[key] *= scale
    return rep, rep["forced_matches"]


def _family_ensemble(o: dict) -> codes_mod.EnsembleSpec:
    fam = o["family"]
    if fam == "linear":
        return codes_mod.EnsembleSpec.all_linear(o["n"], o["k"], o["q"])
    if fam == "selfdual":
        return codes_mod.EnsembleSpec.self_dual(o["t"])
    if fam == "qc":
        return codes_mod.EnsembleSpec.quasi_cyclic(o["t"])
    raise UsageError(f"unknown family {fam!r}")


def cmd_codes(sub: str, o: dict) -> tuple[str | dict, bool]:
    ens = _family_ensemble(o)
    if sub == "count":
        result = {"ensemble": ens.describe(), "count": ens.size()}
        if ens.family is codes_mod.Family.QUASI_CYCLIC:
            result["formula"] = 2 ** (o["t"] - 1) - 1
            result["balance_condition"] = codes_mod.qc_balance_condition(o["t"])
        elif ens.family is codes_mod.Family.SELF_DUAL_DOUBLY_EVEN:
            result["formula"] = codes_mod.self_dual_doubly_even_count(o["t"])
        return result, True
    if ens.family is codes_mod.Family.SELF_DUAL_DOUBLY_EVEN:
        stream = codes_mod.enumerate_self_dual_doubly_even(o["t"], limit=o["limit"])
    else:
        stream = iter(ens)
    chosen = []
    for code in stream:
        if o["limit"] is not None and len(chosen) >= o["limit"]:
            break
        chosen.append(code)
    return codes_mod.ensemble_to_text(chosen), True


# -- entry point ------------------------------------------------------------------


def _write(text: str, target: str | None, default_name: str) -> None:
    if target is None and os.environ.get(OUT_DIR_ENV):
        target = str(Path(os.environ[OUT_DIR_ENV]) / default_name)
    if target is None:
        sys.stdout.write(text)
        return
    path = Path(target)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    try:
        command, o, config = resolve(args)
        stem = command.replace(" ", "-")
        seed, base = o["seed"], str(o["base"])
        with dense_limit_override(o["dense_limit"]):
            if command == "verify-averaging":
                result, ok = cmd_verify_averaging(o)
                _write(to_json(envelope(command, config, seed, base, result)), o["out"], stem + ".json")
            elif command == "smooth-scan":
                rows, summary, ok = cmd_smooth_scan(o)
                text = csv_preamble(command, config, seed, base) + f"# strictly_decreasing={summary['strictly_decreasing']}\n"
                _write(text + smoothing.scan_to_csv(rows), o["out"], stem + ".csv")
            elif command == "exponent":
                result, table, ok = cmd_exponent(o)
                _write(to_json(envelope(command, config, seed, base, result)), o["out"], stem + ".json")
                if o["csv"]:
                    _write(csv_preamble(command, config, seed, base) + table, o["csv"], stem + ".csv")
            elif command.startswith("lpn"):
                result, ok = cmd_lpn(command.split()[1], o)
                _write(to_json(envelope(command, config, seed, base, result)), o["out"], stem + ".json")
            else:
                result, ok = cmd_codes(command.split()[1], o)
                if isinstance(result, str):
                    _write(result, o["out"], stem + ".txt")
                else:
                    _write(to_json(envelope(command, config, seed, base, result)), o["out"], stem + ".json")
    except (UsageError, CodesmoothError) as exc:
        print(f"codesmooth: {exc}", file=sys.stderr)
        return 2
    return 0 if ok else 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
