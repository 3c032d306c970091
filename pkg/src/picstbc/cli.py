"""Command-line front end: ``picstbc {list-codes,check,simulate,sweep-theta}``.

Exit status: 0 on success (or when both criteria pass), 1 when a criterion
fails or a simulation hits an undecodable channel, 2 on usage or config
errors.
"""

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .codes import FACTORIES, build_registry, get_code, parse_code_spec
from .constellation import constellation_by_name
from .criteria import check_full_rank, check_group_independence
from .decoders import DECODERS
from .equivchan import GroupingScheme
from .errors import GroupUndecodable, InsufficientData, PicError
from .simulator import SimConfig, estimate_coding_gain, estimate_diversity_order, run_sweep, sweep_theta

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

# config-file key -> (SimConfig field, parser)
_SIM_KEYS = {
    "decoder": ("decoder", str),
    "grouping": ("grouping", str),
    "const": ("constellation", str),
    "nr": ("n_r", int),
    "seed": ("seed", int),
    "workers": ("workers", int),
    "min_errors": ("min_block_errors", int),
    "max_trials": ("max_trials", int),
    "chunk_size": ("chunk_size", int),
    "noise_scale": ("noise_scale", float),
    "ordering": ("ordering", str),
}


class UsageError(Exception):
    pass


def parse_range(text):
    """``"14:2:26"`` -> ``(14.0, 16.0, ..., 26.0)``; a single number or a comma list also works."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"range {text!r} must be start:step:stop")
        start, step, stop = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise UsageError(f"range {text!r} must have a positive step and stop >= start")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 12) for i in range(count))
    return tuple(float(v) for v in text.split(","))


def read_config_file(path):
    """Flat ``key = value`` file (``#`` comments), or a JSON run manifest."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json":
        manifest = json.loads(text)
        cfg = manifest.get("config", manifest)
        out = {"_config": cfg}
        if "theta_grid" in manifest:
            out["_theta_grid"] = manifest["theta_grid"]
        return out
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, value = line.partition("=")
        if not eq:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        values[key.strip().replace("-", "_")] = value.strip().strip('"')
    return values


def _code_spec(code, theta=None, alpha=None):
    label, params = parse_code_spec(code)
    if label not in FACTORIES:
        raise UsageError(f"unknown code {label!r}; known: {', '.join(sorted(FACTORIES))}")
    if theta is not None:
        params["theta"] = float(theta)
    if alpha is not None:
        params["alpha"] = complex(alpha)
    get_code(label, **params)  # validates parameter names
    if not params:
        return label
    return label + ":" + ",".join(f"{k}={v!r}" for k, v in sorted(params.items()))


def build_sim_config(args):
    """Merge defaults, the optional config file and explicit flags (flags win)."""
    merged = {}
    if args.config:
        merged.update(read_config_file(args.config))
    base = merged.pop("_config", None)
    theta_grid = merged.pop("_theta_grid", None)
    for key in ("code", "theta", "alpha", "snr", "window", "grid", "family") + tuple(_SIM_KEYS):
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    fields = dict(base) if base else {}
    try:
        if "code" in merged or "theta" in merged or "alpha" in merged:
            code = merged.get("code") or fields.get("code") or "alamouti"
            fields["code"] = _code_spec(str(code), merged.get("theta"), merged.get("alpha"))
        if "snr" in merged:
            fields["snr_db"] = parse_range(str(merged["snr"]))
        for key, (name, conv) in _SIM_KEYS.items():
            if key in merged:
                fields[name] = conv(merged[key])
        if fields.get("grouping"):
            GroupingScheme.parse(fields["grouping"])
        if "constellation" in fields:
            constellation_by_name(fields["constellation"])
        config = SimConfig.from_dict(fields)
        code = get_code(config.code)
        scheme = GroupingScheme.parse(config.grouping) if config.grouping else code.default_grouping
        if scheme.n != code.n:
            raise UsageError(f"grouping {scheme} does not cover the {code.n} symbols of {code.label}")
    except UsageError:
        raise
    except (ValueError, KeyError, TypeError, PicError) as exc:
        raise UsageError(str(exc).strip("'\"")) from None
    window = parse_range(str(merged["window"])) if "window" in merged else None
    if theta_grid is not None and "grid" not in merged:
        grid = tuple(theta_grid)
    else:
        grid = parse_range(str(merged.get("grid", "0.1:0.05:1.5")))
    return config, window, grid, merged.get("family")


def _window_pair(window):
    if window is None:
        return None
    if len(window) < 2:
        raise UsageError("window needs lo:step:hi or lo,hi")
    return (window[0], window[-1])


def _manifest(command, config, start, outputs, **extra):
    return {
        "command": command,
        "tool_version": __version__,
        "config": config.to_dict(),
        "seed": config.seed,
        "start": start.isoformat(),
        "end": datetime.now(timezone.utc).isoformat(),
        "outputs": [str(p) for p in outputs],
        **extra,
    }


def _write_manifest(path, manifest):
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _gnuplot_script(csv_path, title):
    return "\n".join([
        "set datafile separator ','",
        "set logscale y",
        "set format y '10^{%L}'",
        "set grid",
        "set xlabel 'SNR (dB)'",
        "set ylabel 'SER'",
        f"set title '{title}'",
        f"plot '{csv_path}' using 1:5:7 skip 1 with yerrorlines title 'SER', \\",
        f"     '{csv_path}' using 1:6 skip 1 with linespoints title 'BLER'",
        "",
    ])


def cmd_list_codes(args):
    print(f"{'label':<12} {'n_t':>3} {'t':>3} {'n':>3} {'rate':>6}  grouping")
    for label, code in build_registry().items():
        print(f"{label:<12} {code.n_t:>3} {code.t:>3} {code.n:>3} {code.rate:>6.3f}  {code.default_grouping}")
    return EXIT_OK


def cmd_check(args):
    try:
        code = get_code(_code_spec(args.code, args.theta, args.alpha))
        scheme = GroupingScheme.parse(args.grouping) if args.grouping else code.default_grouping
        if scheme.n != code.n:
            raise UsageError(f"grouping {scheme} does not cover the {code.n} symbols of {code.label}")
        A = constellation_by_name(args.const)
    except UsageError:
        raise
    except (ValueError, KeyError, TypeError, PicError) as exc:
        raise UsageError(str(exc).strip("'\"")) from None
    print(f"code {code.spec}, grouping {scheme}, {A.label}, n_r={args.nr}")
    rank = check_full_rank(code, A, budget=args.budget, rng=args.seed)
    indep = check_group_independence(code, scheme, n_r=args.nr, random_trials=args.trials, rng=args.seed)
    rows = []
    for rep in (rank, indep):
        print(rep.summary())
        if not rep.passed:
            rows.append((rep.name, rep.witness))
    if "domains_agree" in rank.details:
        print(f"codeword and channel domain verdicts agree: {rank.details['domains_agree']}")
    if rows and args.witness_csv:
        with open(args.witness_csv, "w", newline="\n") as f:
            f.write("criterion,index,real,imag\n")
            for name, w in rows:
                for i, v in enumerate(np.asarray(w).ravel()):
                    f.write(f"{name},{i},{v.real:.17g},{v.imag:.17g}\n")
        print(f"witness written to {args.witness_csv}")
    return EXIT_OK if rank.passed and indep.passed else EXIT_FAIL


def cmd_simulate(args):
    config, window, _, _ = build_sim_config(args)
    out = Path(args.out)
    start = datetime.now(timezone.utc)
    status = EXIT_OK
    try:
        result = run_sweep(config)
    except GroupUndecodable as exc:
        result = exc.partial
        print(f"group decoding failed: {exc}; channel h = {np.array2string(exc.h, precision=6)}", file=sys.stderr)
        status = EXIT_FAIL
    result.write_csv(out)
    outputs = [out]
    if args.gnuplot:
        Path(args.gnuplot).write_text(_gnuplot_script(out.name, config.code))
        outputs.append(Path(args.gnuplot))
    manifest_path = out.with_name(out.name + ".manifest.json")
    _write_manifest(manifest_path, _manifest("simulate", config, start, outputs))
    for p in result.points:
        print(f"{p.snr_db:6.2f} dB  trials {p.trials:>10}  SER {p.ser:.4e}  BLER {p.bler:.4e}  +-{p.ci95:.2e}")
    if status == EXIT_OK:
        D = config.n_r * get_code(config.code).n_t
        win = _window_pair(window)
        try:
            print(f"diversity slope: {estimate_diversity_order(result, window=win):.3f}")
        except InsufficientData as exc:
            print(f"diversity slope: n/a ({exc})")
        try:
            print(f"coding gain (D={D}): {estimate_coding_gain(result, D, window=win):.6g}")
        except InsufficientData as exc:
            print(f"coding gain: n/a ({exc})")
    print(f"wrote {out} and {manifest_path}")
    return status


def cmd_sweep_theta(args):
    config, window, grid, family = build_sim_config(args)
    family = family or parse_code_spec(config.code)[0]
    if family not in ("code_2x3", "code_4x6"):
        family = "code_2x3"
    config = config.replace(code=family)
    out = Path(args.out)
    start = datetime.now(timezone.utc)
    try:
        table = sweep_theta(family, grid, config, window=_window_pair(window))
    except GroupUndecodable as exc:
        print(f"group decoding failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except InsufficientData as exc:
        print(f"coding gain unavailable: {exc}", file=sys.stderr)
        return EXIT_FAIL
    with open(out, "w", newline="\n") as f:
        f.write("theta,coding_gain,cg_low,cg_high\n")
        for p in table:
            f.write(f"{p.theta:.17g},{p.coding_gain:.17g},{p.interval[0]:.17g},{p.interval[1]:.17g}\n")
    manifest_path = out.with_name(out.name + ".manifest.json")
    _write_manifest(manifest_path, _manifest("sweep-theta", config, start, [out],
                                             family=family, theta_grid=list(grid)))
    for p in table:
        print(f"theta {p.theta:.4f}  C_g {p.coding_gain:.6g}")
    best = max(table, key=lambda p: p.coding_gain)
    print(f"argmax theta: {best.theta:.4f}")
    print(f"wrote {out} and {manifest_path}")
    return EXIT_OK


def _add_sim_flags(p):
    p.add_argument("--config", help="key = value file, or a JSON manifest from an earlier run")
    p.add_argument("--code", help="code label, optionally with parameters (label:key=value)")
    p.add_argument("--theta", type=float, help="rotation angle for code_2x3 / code_4x6")
    p.add_argument("--alpha", type=complex, help="rotation for qostbc_rot")
    p.add_argument("--decoder", choices=DECODERS)
    p.add_argument("--grouping", help='groups split by "|", indices by ",", e.g. "0,1|2,3"')
    p.add_argument("--const", help="constellation, e.g. qam4")
    p.add_argument("--nr", type=int, help="receive antennas")
    p.add_argument("--snr", help="SNR grid in dB, start:step:stop")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, help="worker processes (0 = all CPUs)")
    p.add_argument("--min-errors", dest="min_errors", type=int, help="block errors per SNR point")
    p.add_argument("--max-trials", dest="max_trials", type=int)
    p.add_argument("--chunk-size", dest="chunk_size", type=int)
    p.add_argument("--noise-scale", dest="noise_scale", type=float)
    p.add_argument("--ordering", help='SIC ordering: "auto" or a permutation such as "1,0"')
    p.add_argument("--window", help="SNR window for the slope fit, lo:step:hi or lo,hi")


def build_parser():
    parser = argparse.ArgumentParser(prog="picstbc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list-codes", help="show the built-in codes")
    p.set_defaults(func=cmd_list_codes)

    p = sub.add_parser("check", help="test the full-rank and group-independence conditions")
    p.add_argument("--code", required=True)
    p.add_argument("--theta", type=float)
    p.add_argument("--alpha", type=complex)
    p.add_argument("--grouping")
    p.add_argument("--const", default="qam4")
    p.add_argument("--nr", type=int, default=1)
    p.add_argument("--budget", type=int, default=100_000, help="difference vectors to test")
    p.add_argument("--trials", type=int, default=10_000, help="random channels for independence")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--witness-csv", dest="witness_csv", help="write failure witnesses here")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="Monte Carlo SER/BLER sweep")
    _add_sim_flags(p)
    p.add_argument("--out", default="sim.csv")
    p.add_argument("--gnuplot", help="also write a gnuplot script plotting the CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep-theta", help="coding gain against the rotation angle")
    _add_sim_flags(p)
    p.add_argument("--family", choices=("code_2x3", "code_4x6"))
    p.add_argument("--grid", help="theta grid start:step:stop (default 0.1:0.05:1.5)")
    p.add_argument("--out", default="theta.csv")
    p.set_defaults(func=cmd_sweep_theta)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
