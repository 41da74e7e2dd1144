"""``qkd-pulseopt`` command line.

Data goes to standard output (``evaluate``, ``montecarlo``); progress lines
are prefixed with ``# `` so piped CSV stays parseable. Errors are one line on
standard error: ``error: <kind>: <message>``.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import experiments as ex
from .config import COMMANDS, ConfigError, RunConfig, describe_defaults, parse_config
from .io import TapFileError, read_taps, write_taps
from .mode_overlap import mode_overlap
from .montecarlo import SimConfig, simulate_transmission, validate_excess_noise, write_symbols_csv
from .optimizers import OptimizationError, optimize
from .pulse_shaping import TapVector, rrc_taps
from .security_rate import SKR_CSV_COLUMNS, secret_key_rate

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_CHECK_FAILED = 0, 1, 2, 3

# flag -> config key
_FLAG_KEYS = {
    "n_bar": "n_bar",
    "n_ch": "n_ch",
    "beta": "beta",
    "roll_off": "roll_off",
    "distance": "distance_km",
    "tau_ch": "tau_ch",
    "sps": "sps",
    "taps": "num_taps",
    "tx_taps": "tx_num_taps",
    "rx_taps": "rx_num_taps",
    "tx": "tx_file",
    "rx": "rx_file",
    "init": "init_file",
    "method": "method",
    "max_iterations": "max_iterations",
    "seed": "seed",
    "threads": "threads",
    "output_dir": "output_dir",
    "output": "output",
    "num_symbols": "num_symbols",
    "num_points": "num_points",
    "symbols_csv": "symbols_csv",
    "conditional": "conditional",
}


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any config key; VALUE is parsed as JSON when possible",
    )
    p.add_argument("--threads", type=int, help="worker processes (env QKD_PULSEOPT_THREADS)")
    p.add_argument("-o", "--output-dir", help="directory for output files")
    p.add_argument("--output", help="explicit output file (rrc)")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-bar", type=float, help="mean photon number per symbol")
    p.add_argument("--n-ch", type=float, help="channel excess noise (photon units)")
    p.add_argument("--beta", type=float, help="reconciliation efficiency")
    p.add_argument("--roll-off", type=float)
    p.add_argument("--distance", type=float, help="fiber length in km")
    p.add_argument("--tau-ch", type=float, help="channel transmittance (overrides --distance)")
    p.add_argument("--sps", type=int, help="samples per symbol")
    p.add_argument("--taps", type=int, help="number of taps for rrc")
    p.add_argument("--tx-taps", type=int, help="transmit filter length")
    p.add_argument("--rx-taps", type=int, help="receive filter length")
    p.add_argument("--tx", help="transmit tap JSON file")
    p.add_argument("--rx", help="receive tap JSON file")
    p.add_argument("--init", help="initial taps for optimize")
    p.add_argument("--method", choices=("reinforce", "gradient"))
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--num-symbols", type=int)
    p.add_argument("--num-points", type=int)
    p.add_argument("--symbols-csv", help="montecarlo: dump per-symbol streams here")
    p.add_argument("--conditional", choices=("corrected", "printed"))
    p.add_argument("--clamp", action="store_true", help="clamp negative SKR to zero in output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkd-pulseopt",
        description="Mode-mismatch analysis and transmit pulse optimization for GG02 CV-QKD.",
        epilog="configuration keys and defaults:\n" + describe_defaults(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "rrc": "write a root-raised-cosine tap file",
        "evaluate": "print one SKR report row for a tx/rx pair",
        "optimize": "optimize the transmit taps; writes taps JSON and trace CSV",
        "sweep": "SKR versus distance tables (fig1, fig2)",
        "kse-grid": "key spectral efficiency over roll-off and n_bar (fig3)",
        "freqresp": "amplitude response table (fig4)",
        "montecarlo": "simulate the link and check the analytic excess noise",
    }
    for name in COMMANDS:
        _common(sub.add_parser(name, help=helps[name], description=helps[name]))
    return parser


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def config_from_args(args: argparse.Namespace) -> RunConfig:
    text = None
    if args.config is not None:
        try:
            text = args.config.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from None
    overrides = {"command": args.command}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = _parse_value(value)
    for attr, key in _FLAG_KEYS.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = value
    if args.clamp:
        overrides["clamp_skr"] = True
    return parse_config(text, overrides)


def _progress(msg: str):
    print(f"# {msg}", flush=True)


def _tx(cfg: RunConfig) -> TapVector:
    if cfg.tx_file:
        return read_taps(cfg.tx_file)
    return rrc_taps(cfg.roll_off, cfg.sps, cfg.tx_num_taps)


def _rx(cfg: RunConfig) -> TapVector:
    if cfg.rx_file:
        return read_taps(cfg.rx_file)
    return rrc_taps(cfg.roll_off, cfg.sps, cfg.rx_num_taps)


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_rrc(cfg: RunConfig) -> int:
    n = cfg.num_taps if cfg.num_taps is not None else cfg.rx_num_taps
    taps = rrc_taps(cfg.roll_off, cfg.sps, n)
    path = Path(cfg.output) if cfg.output else _outdir(cfg) / f"{taps.label}.json"
    write_taps(taps, path)
    _progress(f"wrote {path}")
    return EXIT_OK


def cmd_evaluate(cfg: RunConfig) -> int:
    tx, rx = _tx(cfg), _rx(cfg)
    report = secret_key_rate(mode_overlap(tx, rx), cfg.link_params(), cfg.distance_km)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(SKR_CSV_COLUMNS)
    writer.writerow(report.csv_row(clamp=cfg.clamp_skr))
    return EXIT_OK


def cmd_optimize(cfg: RunConfig) -> int:
    rx = _rx(cfg)
    init = read_taps(cfg.init_file) if cfg.init_file else None
    trace = optimize(cfg.optimizer_config(init), rx, cfg.link_params())
    out = _outdir(cfg)
    write_taps(trace.final_taps, out / "optimized_taps.json")
    trace.write_csv(out / "trace.csv")
    _progress(
        f"method={trace.method} iterations={len(trace.iteration)} status={trace.status} "
        f"skr={trace.final_report.skr_bits_per_symbol!r}"
    )
    _progress(f"wrote {out / 'optimized_taps.json'} and {out / 'trace.csv'}")
    return EXIT_OK


def _clamped(rows, clamp):
    if not clamp:
        return rows
    return [dict(r, skr=max(r["skr"], 0.0), kse=max(r["kse"], 0.0)) for r in rows]


def cmd_sweep(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    spec = cfg.sweep_spec()
    rows = ex.sweep_distance(spec, threads=cfg.threads)
    ex.write_table(out / ex.FIG1_CSV, ex.SWEEP_COLUMNS, _clamped(rows, cfg.clamp_skr))
    _progress(f"wrote {out / ex.FIG1_CSV} ({len(rows)} rows)")
    if cfg.noise_sweep:
        noise_spec = replace(
            spec, roll_offs=spec.roll_offs[:1], n_bars=spec.n_bars[:1], n_chs=cfg.noise_sweep
        )
        rows = ex.sweep_distance(noise_spec, threads=cfg.threads)
        ex.write_table(out / ex.FIG2_CSV, ex.SWEEP_COLUMNS, _clamped(rows, cfg.clamp_skr))
        _progress(f"wrote {out / ex.FIG2_CSV} ({len(rows)} rows)")
    return EXIT_OK


def cmd_kse_grid(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    rows = ex.sweep_kse_grid(cfg.sweep_spec(), cfg.kse_distance_km, threads=cfg.threads)
    ex.write_table(out / ex.FIG3_CSV, ex.SWEEP_COLUMNS, _clamped(rows, cfg.clamp_skr))
    _progress(f"wrote {out / ex.FIG3_CSV} ({len(rows)} rows)")
    return EXIT_OK


def cmd_freqresp(cfg: RunConfig) -> int:
    filters = [
        rrc_taps(cfg.roll_off, cfg.sps, cfg.tx_num_taps),
        rrc_taps(cfg.roll_off, cfg.sps, cfg.rx_num_taps),
    ]
    if cfg.tx_file:
        filters.append(read_taps(cfg.tx_file))
    filters.extend(read_taps(p) for p in cfg.filter_files)
    out = _outdir(cfg)
    columns, rows = ex.filter_response_report(filters, cfg.num_points)
    ex.write_table(out / ex.FIG4_CSV, columns, rows)
    _progress(f"wrote {out / ex.FIG4_CSV} ({len(rows)} rows)")
    return EXIT_OK


def cmd_montecarlo(cfg: RunConfig) -> int:
    sim = SimConfig(cfg.num_symbols, cfg.seed, _tx(cfg), _rx(cfg), cfg.link_params())
    result = validate_excess_noise(sim, cfg.mc_tolerance)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(["quantity", "analytic", "empirical"])
    writer.writerow(["isi_variance", repr(result.analytic_isi_variance), repr(result.empirical_isi_variance)])
    writer.writerow(["gain", repr(result.analytic_gain), repr(result.empirical_gain)])
    writer.writerow(
        ["noise_variance", repr(result.analytic_noise_variance), repr(result.empirical_noise_variance)]
    )
    verdict = "PASS" if result.passed else "FAIL"
    _progress(f"isi rel_error={result.rel_error!r} tolerance={result.tolerance!r} {verdict}")
    print(verdict)
    if cfg.symbols_csv:
        write_symbols_csv(simulate_transmission(sim), cfg.symbols_csv)
        _progress(f"wrote {cfg.symbols_csv}")
    return EXIT_OK if result.passed else EXIT_CHECK_FAILED


_COMMANDS = {
    "rrc": cmd_rrc,
    "evaluate": cmd_evaluate,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "kse-grid": cmd_kse_grid,
    "freqresp": cmd_freqresp,
    "montecarlo": cmd_montecarlo,
}


def _fail(kind: str, msg: str, code: int) -> int:
    print(f"error: {kind}: {' '.join(str(msg).split())}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        return _fail("config", exc, EXIT_CONFIG)
    try:
        return _COMMANDS[cfg.command](cfg)
    except TapFileError as exc:
        return _fail("taps", exc, EXIT_CONFIG)
    except OSError as exc:
        return _fail("io", f"{exc.filename or ''} {exc.strerror or exc}", EXIT_RUNTIME)
    except (ValueError, OptimizationError) as exc:
        return _fail("runtime", exc, EXIT_RUNTIME)


if __name__ == "__main__":
    sys.exit(main())
