"""Command-line front end for reproducible estimation runs.

Subcommands: ``fit``, ``decompose``, ``gcv``, ``simulate`` and
``group-stats``. Options can come from a flat TOML config file
(``--config``) with command-line flags taking precedence; every run
writes a ``manifest.json`` embedding the fully resolved configuration.

Exit codes: 0 success, 1 computational failure (e.g. a rank-deficient
system), 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - version dependent
    import tomli as tomllib

from . import __version__
from .clr import discrete_clr, inv_clr
from .decomposition import decompose, independent_coeffs, interaction_coeffs
from .exceptions import ClrSplineError, ConfigError, ParseError
from .ingest import (
    build_histogram,
    impute_zeros,
    read_coeffs,
    read_histogram,
    read_samples,
    write_coeffs,
    write_grid,
    write_histogram,
    write_samples,
    write_vector_block,
)
from .knots import KnotConfig
from .simulate import BetaParams, accept_reject, run_bin_sweep, run_knot_sweep
from .smoother import (
    PenaltyConfig,
    TensorBasisSpec,
    ZBCoeffs,
    eval_spline,
    fit,
    gcv_scan,
    zb_to_b,
)

_DEFAULTS: dict = {
    "seed": 0,
    "out": "clrspline-out",
    "grid": 101,
    "bins": [10, 10],
    "degrees": [2, 2],
    "penalty": [1, 1],
    "knots": [3, 3],
    "x_knots": None,
    "y_knots": None,
    "domain_x": None,
    "domain_y": None,
    "rho": None,
    "rho_grid": None,
    "marginal_rho": 0.0,
    "samples": None,
    "histogram": None,
    "coeffs": None,
    "params": [3.0, 3.0, 3.0],
    "count": 3000,
    "envelope": None,
    "sweep": None,
    "sweep_values": None,
    "replicates": 20,
}


def _pair(text: str, cast):
    parts = [p for p in text.split(",") if p.strip() != ""]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated values, got {text!r}")
    return [cast(p) for p in parts]


def _int_pair(text: str):
    return _pair(text, int)


def _float_pair(text: str):
    return _pair(text, float)


def _float_list(text: str):
    return [float(p) for p in text.split(",") if p.strip() != ""]


def _int_list(text: str):
    return [int(p) for p in text.split(",") if p.strip() != ""]


def _rho_grid_spec(text: str):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("--rho-grid wants lo,hi,count")
    return [float(parts[0]), float(parts[1]), int(parts[2])]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clrspline",
        description="Bivariate density estimation via zero-integral spline smoothing",
    )
    parser.add_argument("--version", action="version", version=f"clrspline {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, help="flat TOML config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--grid", type=int, help="output grid resolution per axis")

    def basis_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--bins", type=_int_pair, metavar="m,n")
        p.add_argument("--degrees", type=_int_pair, metavar="k,l")
        p.add_argument("--penalty", type=_int_pair, metavar="p,q")
        p.add_argument("--knots", type=_int_pair, metavar="g,h", help="interior knot counts")
        p.add_argument("--x-knots", type=_float_list, metavar="t1,t2,...", help="explicit interior knots")
        p.add_argument("--y-knots", type=_float_list, metavar="t1,t2,...")
        p.add_argument("--domain-x", type=_float_pair, metavar="a,b")
        p.add_argument("--domain-y", type=_float_pair, metavar="c,d")
        p.add_argument("--rho", type=float, help="explicit smoothing weight (skips the scan)")
        p.add_argument("--rho-grid", type=_rho_grid_spec, metavar="lo,hi,count", help="log-spaced scan grid")
        p.add_argument(
            "--marginal-rho", type=float,
            help="optional smoothness weight on the marginal blocks (default off)",
        )

    p_fit = sub.add_parser("fit", help="fit a density from samples or a histogram")
    common(p_fit)
    basis_flags(p_fit)
    p_fit.add_argument("--samples", type=Path)
    p_fit.add_argument("--histogram", type=Path)

    p_dec = sub.add_parser("decompose", help="split a fitted spline into its parts")
    common(p_dec)
    p_dec.add_argument("--coeffs", type=Path, help="coefficient CSV (zero-integral form)")

    p_gcv = sub.add_parser("gcv", help="scan smoothing weights over one or more datasets")
    common(p_gcv)
    basis_flags(p_gcv)
    p_gcv.add_argument("--samples", type=Path)
    p_gcv.add_argument(
        "--histogram", type=Path, action="append", help="repeatable for multiple datasets"
    )

    p_sim = sub.add_parser("simulate", help="generate beta samples and run ISE sweeps")
    common(p_sim)
    basis_flags(p_sim)
    p_sim.add_argument("--params", type=_float_list, metavar="a0,a1,a2")
    p_sim.add_argument("--count", type=int)
    p_sim.add_argument("--envelope", type=float)
    p_sim.add_argument("--sweep", choices=["bins", "knots"])
    p_sim.add_argument("--sweep-values", type=_int_list, metavar="v1,v2,...")
    p_sim.add_argument("--replicates", type=int)

    p_grp = sub.add_parser("group-stats", help="coefficient-wise mean and SD over fits")
    common(p_grp)
    p_grp.add_argument("coeff_files", nargs="+", type=Path)

    return parser


def _resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(_DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path is not None:
        if not Path(config_path).exists():
            raise ConfigError(f"config file not found: {config_path}")
        with open(config_path, "rb") as handle:
            try:
                loaded = tomllib.load(handle)
            except tomllib.TOMLDecodeError as exc:
                raise ConfigError(f"bad config file {config_path}: {exc}") from exc
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in cfg:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    cfg["command"] = args.command
    if getattr(args, "coeff_files", None):
        cfg["coeff_files"] = [str(p) for p in args.coeff_files]
    return cfg


def _jsonable(value):
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    return value


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def _prepare_out(cfg: dict) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "manifest.json", {"version": __version__, "config": cfg})
    return out


def _require_file(path, what: str) -> Path:
    if path is None:
        raise ConfigError(f"missing {what}")
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{what} not found: {path}")
    return path


def _axis_config(cfg: dict, axis: str, fallback_domain: tuple[float, float]) -> KnotConfig:
    domain = cfg[f"domain_{axis}"] or fallback_domain
    explicit = cfg[f"{axis}_knots"]
    degree = int(cfg["degrees"][0 if axis == "x" else 1])
    if explicit is not None:
        return KnotConfig(float(domain[0]), float(domain[1]), tuple(explicit), degree)
    count = int(cfg["knots"][0 if axis == "x" else 1])
    return KnotConfig.equidistant(float(domain[0]), float(domain[1]), count, degree)


def _load_field(cfg: dict):
    """Resolve input data into (histogram, clr field) plus domain fallbacks."""
    if cfg["histogram"] is not None:
        hist = read_histogram(_require_file(cfg["histogram"], "histogram file"))
    elif cfg["samples"] is not None:
        samples = read_samples(_require_file(cfg["samples"], "samples file"))
        if cfg["domain_x"] is not None:
            samples.x_range = (float(cfg["domain_x"][0]), float(cfg["domain_x"][1]))
        if cfg["domain_y"] is not None:
            samples.y_range = (float(cfg["domain_y"][0]), float(cfg["domain_y"][1]))
        m, n = (int(v) for v in cfg["bins"])
        hist = build_histogram(samples, m, n)
    else:
        raise ConfigError("need --samples or --histogram")
    hist = impute_zeros(hist)
    field = discrete_clr(hist)
    x_domain = (hist.x_mid[0] - hist.x_width / 2, hist.x_mid[-1] + hist.x_width / 2)
    y_domain = (hist.y_mid[0] - hist.y_width / 2, hist.y_mid[-1] + hist.y_width / 2)
    return hist, field, x_domain, y_domain


def _rho_grid(cfg: dict) -> np.ndarray:
    if cfg["rho_grid"] is not None:
        lo, hi, count = cfg["rho_grid"]
        if count < 1 or lo <= 0 or hi <= 0:
            raise ConfigError("rho grid needs positive bounds and count >= 1")
        return np.logspace(np.log10(float(lo)), np.log10(float(hi)), int(count))
    # default scan bracket around the optima seen in practice
    return np.logspace(-6, 1, 25)


def _output_grids(spec: TensorBasisSpec, coeffs: ZBCoeffs, n: int):
    xs = np.linspace(spec.x.lo, spec.x.hi, n)
    ys = np.linspace(spec.y.lo, spec.y.hi, n)
    surface = eval_spline(spec, coeffs, xs, ys)
    return xs, ys, surface


def _write_curve(path: Path, rhos: np.ndarray, columns: dict[str, np.ndarray]) -> None:
    header = ",".join(["rho"] + list(columns))
    lines = [header]
    for i, rho in enumerate(rhos):
        cells = [f"{rho:.17g}"] + [f"{col[i]:.17g}" for col in columns.values()]
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")


def cmd_fit(cfg: dict) -> int:
    hist, field, x_domain, y_domain = _load_field(cfg)
    spec = TensorBasisSpec(_axis_config(cfg, "x", x_domain), _axis_config(cfg, "y", y_domain))
    p, q = (int(v) for v in cfg["penalty"])
    marginal_rho = float(cfg["marginal_rho"])
    out = _prepare_out(cfg)
    scanned = cfg["rho"] is None
    if scanned:
        scan = gcv_scan(
            spec, field.values, hist.x_mid, hist.y_mid, p, q, _rho_grid(cfg), marginal_rho
        )
        result = scan.best_fit
        _write_curve(out / "gcv_curve.csv", scan.rhos, {"gcv": scan.gcv_values})
    else:
        result = fit(
            spec,
            field.values,
            hist.x_mid,
            hist.y_mid,
            PenaltyConfig(p, q, float(cfg["rho"]), marginal_rho),
        )
    write_coeffs(out / "coeffs_zb.csv", spec, result.coeffs)
    write_coeffs(out / "coeffs_b.csv", spec, zb_to_b(spec, result.coeffs))
    xs, ys, surface = _output_grids(spec, result.coeffs, int(cfg["grid"]))
    write_grid(out / "clr_field.csv", xs, ys, surface)
    density = inv_clr(xs, ys, surface)
    write_grid(out / "density.csv", xs, ys, density.values)
    _write_json(
        out / "fit_summary.json",
        {
            "rho": result.rho,
            "gcv": result.gcv,
            "hat_trace": result.hat_trace,
            "rss": result.rss,
            "n_obs": result.n_obs,
            "scanned": scanned,
            "basis": {"n_zb_x": spec.n_zb_x, "n_zb_y": spec.n_zb_y, "dim": spec.dim},
        },
    )
    print(f"fit: rho={result.rho:g} gcv={result.gcv:.6g} -> {out}")
    return 0


def cmd_decompose(cfg: dict) -> int:
    path = _require_file(cfg["coeffs"], "coefficient file")
    spec, coeffs = read_coeffs(path)
    if not isinstance(coeffs, ZBCoeffs):
        raise ConfigError(f"{path} does not hold zero-integral coefficients")
    out = _prepare_out(cfg)
    result = decompose(spec, coeffs)
    write_coeffs(out / "interaction.csv", spec, ZBCoeffs(
        result.interactive, np.zeros(spec.n_zb_x), np.zeros(spec.n_zb_y)
    ))
    write_vector_block(out / "x_marginal.csv", spec, result.marginal_x, "x_marginal")
    write_vector_block(out / "y_marginal.csv", spec, result.marginal_y, "y_marginal")
    n = int(cfg["grid"])
    for name, part in (
        ("interaction", interaction_coeffs(coeffs)),
        ("independent", independent_coeffs(coeffs)),
    ):
        xs, ys, surface = _output_grids(spec, part, n)
        write_grid(out / f"{name}_clr.csv", xs, ys, surface)
        density = inv_clr(xs, ys, surface)
        write_grid(out / f"{name}_density.csv", xs, ys, density.values)
    _write_json(
        out / "decomposition_summary.json",
        {
            "norm_interactive": result.norm_int,
            "norm_independent": result.norm_ind,
            "norm_total": result.norm_total,
            "dependence_ratio": result.dependence_ratio,
        },
    )
    print(
        f"decompose: |int|={result.norm_int:.6g} |ind|={result.norm_ind:.6g} "
        f"ratio={result.dependence_ratio:.4f} -> {out}"
    )
    return 0


def cmd_gcv(cfg: dict) -> int:
    paths = cfg["histogram"]
    if paths is None and cfg["samples"] is None:
        raise ConfigError("need --samples or at least one --histogram")
    if paths is not None and not isinstance(paths, list):
        paths = [paths]
    rhos = _rho_grid(cfg)
    p, q = (int(v) for v in cfg["penalty"])
    datasets = []
    if paths is not None:
        for path in paths:
            hist = impute_zeros(read_histogram(_require_file(path, "histogram file")))
            datasets.append((Path(path).stem, hist))
    else:
        hist, _, _, _ = _load_field(cfg)
        datasets.append((Path(cfg["samples"]).stem, hist))
    curves = np.empty((len(datasets), rhos.size))
    best = {}
    spec = None
    for row, (name, hist) in enumerate(datasets):
        field = discrete_clr(hist)
        x_domain = (hist.x_mid[0] - hist.x_width / 2, hist.x_mid[-1] + hist.x_width / 2)
        y_domain = (hist.y_mid[0] - hist.y_width / 2, hist.y_mid[-1] + hist.y_width / 2)
        spec = TensorBasisSpec(_axis_config(cfg, "x", x_domain), _axis_config(cfg, "y", y_domain))
        scan = gcv_scan(spec, field.values, hist.x_mid, hist.y_mid, p, q, rhos)
        curves[row] = scan.gcv_values
        best[name] = scan.best_rho
    mean_curve = curves.mean(axis=0)
    mean_best = float(rhos[int(np.nanargmin(mean_curve))])
    out = _prepare_out(cfg)
    columns = {name: curves[row] for row, (name, _) in enumerate(datasets)}
    columns["mean"] = mean_curve
    _write_curve(out / "gcv_curve.csv", rhos, columns)
    _write_json(
        out / "gcv_summary.json",
        {"per_dataset_best": best, "mean_curve_best": mean_best, "rho_grid": rhos},
    )
    print(f"gcv: mean-curve argmin rho={mean_best:g} -> {out}")
    return 0


def cmd_simulate(cfg: dict) -> int:
    params = BetaParams(*(float(v) for v in cfg["params"]))
    out = _prepare_out(cfg)
    sample = accept_reject(
        params, int(cfg["count"]), cfg["envelope"], seed=int(cfg["seed"])
    )
    write_samples(out / "samples.csv", sample)
    m, n = (int(v) for v in cfg["bins"])
    hist = build_histogram(sample, m, n)
    write_histogram(out / "histogram.csv", hist)
    summary: dict = {"accept_rate": sample.accept_rate, "n_proposed": sample.n_proposed}
    if cfg["sweep"] is not None:
        values = cfg["sweep_values"]
        if values is None:
            values = [6, 8, 10, 13, 16, 20] if cfg["sweep"] == "bins" else list(range(1, 11))
        kwargs = dict(
            n_replicates=int(cfg["replicates"]),
            seed=int(cfg["seed"]),
            rho=float(cfg["rho"]) if cfg["rho"] is not None else 1e-3,
            degrees=tuple(int(v) for v in cfg["degrees"]),
            orders=tuple(int(v) for v in cfg["penalty"]),
            n_samples=int(cfg["count"]),
        )
        if cfg["envelope"] is not None:
            kwargs["bound"] = float(cfg["envelope"])
        if cfg["sweep"] == "bins":
            result = run_bin_sweep(
                params, bin_counts=values,
                n_interior=tuple(int(v) for v in cfg["knots"]), **kwargs,
            )
        else:
            result = run_knot_sweep(params, knot_counts=values, bins=m, **kwargs)
        write_grid(
            out / f"ise_{cfg['sweep']}.csv",
            np.asarray(values, dtype=float),
            np.arange(result.table.shape[0], dtype=float),
            result.table.T,
        )
        summary[f"{cfg['sweep']}_sweep"] = result.summary()
    _write_json(out / "simulate_summary.json", summary)
    print(f"simulate: {sample.points.shape[0]} points, accept rate {sample.accept_rate:.4f} -> {out}")
    return 0


def cmd_group_stats(cfg: dict) -> int:
    files = cfg.get("coeff_files", [])
    if len(files) < 2:
        raise ConfigError("group-stats needs at least two coefficient files")
    spec = None
    blocks = []
    for path in files:
        this_spec, coeffs = read_coeffs(_require_file(path, "coefficient file"))
        if not isinstance(coeffs, ZBCoeffs):
            raise ConfigError(f"{path} does not hold zero-integral coefficients")
        if spec is None:
            spec = this_spec
        elif this_spec != spec:
            raise ConfigError(f"{path} uses a different basis configuration")
        blocks.append(coeffs.packed())
    stack = np.stack(blocks)
    mean_coeffs = ZBCoeffs.from_packed(stack.mean(axis=0))
    sd_packed = stack.std(axis=0, ddof=1)
    sd_packed[-1, -1] = 0.0  # corner is structurally zero
    sd_coeffs = ZBCoeffs.from_packed(sd_packed)
    out = _prepare_out(cfg)
    n = int(cfg["grid"])
    for name, coeffs in (("mean", mean_coeffs), ("sd", sd_coeffs)):
        write_coeffs(out / f"{name}_zb.csv", spec, coeffs)
        xs, ys, surface = _output_grids(spec, coeffs, n)
        write_grid(out / f"{name}_clr.csv", xs, ys, surface)
        write_grid(out / f"{name}_density.csv", xs, ys, inv_clr(xs, ys, surface).values)
    _write_json(
        out / "group_summary.json",
        {"n_inputs": len(files), "files": [str(f) for f in files]},
    )
    print(f"group-stats: {len(files)} inputs -> {out}")
    return 0


_COMMANDS = {
    "fit": cmd_fit,
    "decompose": cmd_decompose,
    "gcv": cmd_gcv,
    "simulate": cmd_simulate,
    "group-stats": cmd_group_stats,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        cfg = _resolve_config(args)
        return _COMMANDS[args.command](cfg)
    except (ConfigError, ParseError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ClrSplineError as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
