"""Command line front end: tabulate conditional signal statistics.

Exit codes: 0 success, 1 configuration error, 2 numerical failure
(truncation, grid, failed verification). Errors are written to stderr
as one line of JSON.
"""

from __future__ import annotations

import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import click
import numpy as np

from . import __version__, analytic
from .errors import ConfigError, GridTooNarrowError, NumericalError, UndefinedMandelQ, WeakOPAError
from .measurement import condition_on_idler, ensemble_to_density
from .observables import GridSpec, moments, photon_distribution, quadrature_distribution, wigner
from .params import SchemeParams
from .verify import DEFAULT_ALPHAS, DEFAULT_ETAS, DEFAULT_RS, VERIFY_TAIL_TOL, run_checks

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2

DEFAULT_ALPHA = 5.0
DEFAULT_R = 1.5
DEFAULT_TAIL_TOL = 1e-12
FIGURE_ETAS = (0.1, 0.33, 0.66, 1.0)
MANDEL_ETAS = tuple(round(0.05 * k, 2) for k in range(1, 21))
QUAD_GRID = GridSpec(-5.0, 25.0, 0.01)
WIGNER_STEP = 0.1
# the Q < 0.5 reading applies above this efficiency
HIGH_ETA = 0.9
Q_HIGH_ETA_BOUND = 0.5

_CONFIG_KEYS = {"alpha", "r", "eta", "ndet", "nmax", "tail_tol", "grid", "im_grid", "out", "format", "jobs"}


@dataclass
class RunConfig:
    alpha: float
    r: float
    etas: tuple
    n_det: int
    n_max: int | None
    tail_tol: float
    grid: GridSpec | None
    im_grid: GridSpec | None
    out: str | None
    fmt: str
    jobs: int


@dataclass
class Table:
    command: str
    columns: list[str]
    rows: list[tuple] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    summary: list[str] = field(default_factory=list)


# ---------------------------------------------------------------- config


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    data = {k.replace("-", "_"): v for k, v in data.items()}
    unknown = sorted(set(data) - _CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return data


def _merged(ctx: click.Context, values: dict, file_values: dict) -> dict:
    """Flags given on the command line win over the file, the file over defaults."""
    out = dict(values)
    for name, value in file_values.items():
        source = ctx.get_parameter_source(name)
        if source in (None, click.core.ParameterSource.DEFAULT):
            out[name] = value
    return out


def _as_float(name, value) -> float:
    if isinstance(value, bool):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number, got {value!r}") from None


def _as_int(name, value) -> int | None:
    if value is None:
        return None
    if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be an integer, got {value!r}") from None


def _as_floats(name, value) -> tuple:
    items = value if isinstance(value, (list, tuple)) else [value]
    return tuple(_as_float(name, v) for v in items)


def _as_grid(name, value) -> GridSpec | None:
    if value is None:
        return None
    try:
        if isinstance(value, str):
            return GridSpec.parse(value)
        return GridSpec(*(float(v) for v in value)).validated()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: {exc}") from None


def _run_config(ctx: click.Context, values: dict, default_etas) -> RunConfig:
    v = _merged(ctx, values, _load_config(values.get("config")))
    etas = _as_floats("eta", v["eta"]) if v["eta"] else tuple(default_etas)
    fmt = v["format"]
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")
    jobs = _as_int("jobs", v["jobs"])
    if jobs < 1:
        raise ConfigError(f"jobs must be positive, got {jobs}")
    cfg = RunConfig(
        alpha=_as_float("alpha", v["alpha"]),
        r=_as_float("r", v["r"]),
        etas=etas,
        n_det=_as_int("ndet", v["ndet"]),
        n_max=_as_int("nmax", v["nmax"]),
        tail_tol=_as_float("tail_tol", v["tail_tol"]),
        grid=_as_grid("grid", v["grid"]),
        im_grid=_as_grid("im_grid", v["im_grid"]),
        out=v["out"],
        fmt=fmt,
        jobs=jobs,
    )
    for eta in cfg.etas:
        # fail on any bad combination before starting the sweep
        _params(cfg, eta)
    return cfg


def _params(cfg: RunConfig, eta: float) -> SchemeParams:
    return SchemeParams(cfg.alpha, cfg.r, eta, n_det=cfg.n_det, n_max=cfg.n_max, tail_tol=cfg.tail_tol)


# ---------------------------------------------------------------- output


def _cell(value) -> str:
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return "%.16e" % float(value)


def _json_cell(value):
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return int(value)
    value = float(value)
    return value if math.isfinite(value) else None


def render(table: Table, fmt: str) -> str:
    if fmt == "json":
        doc = {
            "provenance": table.provenance,
            "columns": table.columns,
            "rows": [[_json_cell(c) for c in row] for row in table.rows],
            "summary": table.summary,
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"
    lines = [f"# {k}={v}" for k, v in table.provenance.items()]
    lines.append(",".join(table.columns))
    lines.extend(",".join(_cell(c) for c in row) for row in table.rows)
    lines.extend(f"# summary {s}" for s in table.summary)
    return "\n".join(lines) + "\n"


def _provenance(cfg: RunConfig, command: str, used: dict) -> dict:
    return {
        "tool": "weakopa",
        "version": __version__,
        "command": command,
        "alpha": repr(cfg.alpha),
        "r": repr(cfg.r),
        "eta": ";".join(repr(e) for e in cfg.etas),
        "n_det": cfg.n_det,
        "n_max": "auto" if cfg.n_max is None else cfg.n_max,
        "n_max_used": ";".join(f"{e!r}:{n}" for e, n in used.items()),
        "tail_tol": repr(cfg.tail_tol),
    }


def _emit(table: Table, cfg: RunConfig):
    text = render(table, cfg.fmt)
    if cfg.out:
        try:
            with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            raise ConfigError(f"cannot write {cfg.out}: {exc.strerror}") from None
        for line in table.summary:
            click.echo(line)
    else:
        click.echo(text, nl=False)


# ---------------------------------------------------------------- sweeps


def _sweep(cfg: RunConfig, work):
    """Apply ``work(eta)`` to every eta, in parallel if asked, keeping the order."""
    if cfg.jobs == 1 or len(cfg.etas) == 1:
        return [work(eta) for eta in cfg.etas]
    with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
        return list(pool.map(work, cfg.etas))


def _state(cfg: RunConfig, eta: float):
    p = _params(cfg, eta)
    rho = ensemble_to_density(condition_on_idler(p))
    ctx = analytic.ClosedFormContext.from_params(p) if cfg.n_det == 0 else None
    return p, rho, ctx


def _nan_like(x) -> np.ndarray:
    return np.full(np.shape(x), math.nan)


def _quadrature_job(cfg: RunConfig):
    def work(eta):
        _, rho, ctx = _state(cfg, eta)
        dist = quadrature_distribution(rho, cfg.grid or QUAD_GRID, auto_widen=cfg.grid is None)
        exact = analytic.quad_pdf(ctx, dist.coords) if ctx else _nan_like(dist.coords)
        line = (
            f"eta={eta:g} argmax_numeric={dist.argmax():.6f} "
            f"width2_numeric={2.0 * dist.variance():.6f} norm_residual={dist.norm_residual:.3e}"
        )
        if ctx:
            line += (
                f" peak_analytic={analytic.quad_peak(ctx):.6f}"
                f" width2_analytic={analytic.quad_width2(ctx):.6f}"
            )
        rows = [(eta, x, pn, pa) for x, pn, pa in zip(dist.coords.tolist(), dist.values.tolist(), exact.tolist())]
        return rho.n_max, rows, line

    return work


def _photons_job(cfg: RunConfig):
    def work(eta):
        _, rho, ctx = _state(cfg, eta)
        dist = photon_distribution(rho)
        n = dist.coords
        exact = analytic.photon_pmf(ctx, n) if ctx else _nan_like(n)
        mom = moments(rho)
        line = f"eta={eta:g} argmax_numeric={int(dist.argmax())} mean_numeric={mom.mean_n:.6f}"
        if ctx:
            line += (
                f" argmax_analytic={int(np.argmax(exact))}"
                f" mean_analytic={analytic.mean_photons(ctx):.6f}"
            )
        rows = [(eta, int(k), pn, pa) for k, pn, pa in zip(n.tolist(), dist.values.tolist(), exact.tolist())]
        return rho.n_max, rows, line

    return work


def _mandel_job(cfg: RunConfig):
    def work(eta):
        _, rho, ctx = _state(cfg, eta)
        q_num = moments(rho).mandel_q
        q_exact = math.nan
        if ctx:
            try:
                q_exact = analytic.mandel_q(ctx)
            except UndefinedMandelQ:
                pass
        return rho.n_max, [(eta, q_num, q_exact)], None

    return work


def _mandel_summary(rows) -> list[str]:
    etas = np.array([r[0] for r in rows])
    q = np.array([r[1] for r in rows])
    order = np.argsort(etas, kind="stable")
    q_sorted = q[order]
    lines = [f"monotone_decreasing={str(bool(np.all(np.diff(q_sorted) < 0))).lower()}"]
    high = etas > HIGH_ETA
    if high.any():
        q_high = float(np.max(q[high]))
        lines.append(
            f"max_q_above_eta_{HIGH_ETA:g}={q_high:.6e} "
            f"below_{Q_HIGH_ETA_BOUND:g}={str(q_high < Q_HIGH_ETA_BOUND).lower()}"
        )
    return lines


def _auto_wigner_ranges(rho, step: float, widen: float = 1.0) -> tuple[GridSpec, GridSpec]:
    """Rectangle around <a> wide enough for a displaced thermal state of the same <n>."""
    r = rho.rho
    n = np.arange(r.shape[0])
    mean_a = complex(np.sum(np.sqrt(n[1:]) * np.diagonal(r, 1)))
    mean_n = float(np.real(np.sum(n * np.diagonal(r))))
    n_th = max(mean_n - abs(mean_a) ** 2, 0.0)
    # the thermal Gaussian falls below 1e-13 at |d|^2 = 15 (2 n_th + 1)
    half = widen * (math.sqrt(15.0 * (2.0 * n_th + 1.0)) + 2.0)
    lo = step * math.floor((mean_a.real - half) / step)
    hi = step * math.ceil((mean_a.real + half) / step)
    im = step * math.ceil((abs(mean_a.imag) + half) / step)
    return GridSpec(lo, hi, step), GridSpec(-im, im, step)


def _wigner_job(cfg: RunConfig):
    def work(eta):
        _, rho, ctx = _state(cfg, eta)
        step = (cfg.grid or cfg.im_grid or GridSpec(0.0, 1.0, WIGNER_STEP)).step
        if cfg.grid and cfg.im_grid:
            grid = wigner(rho, cfg.grid, cfg.im_grid)
        else:
            for widen in (1.0, 1.5, 2.25):
                re_auto, im_auto = _auto_wigner_ranges(rho, step, widen)
                try:
                    grid = wigner(rho, cfg.grid or re_auto, cfg.im_grid or im_auto)
                    break
                except GridTooNarrowError:
                    if widen == 2.25:
                        raise
        re, im = grid.re, grid.im
        gamma = re[None, :] + 1j * im[:, None]
        exact = analytic.wigner_gaussian(ctx, gamma) if ctx else _nan_like(gamma)
        center, peak = grid.peak()
        line = (
            f"eta={eta:g} center_numeric=({center.real:.6f},{center.imag:.6f}) "
            f"peak_numeric={peak:.6e} min_numeric={float(grid.values.min()):.3e}"
        )
        if ctx:
            c = analytic.wigner_center(ctx)
            err = float(np.max(np.abs(grid.values - exact)))
            line += (
                f" center_analytic=({c.real:.6f},{c.imag:.6f})"
                f" peak_analytic={analytic.wigner_peak(ctx):.6e} max_abs_error={err:.3e}"
            )
        rows = [
            (eta, float(re[j]), float(im[i]), float(grid.values[i, j]), float(exact[i, j]))
            for i in range(im.size)
            for j in range(re.size)
        ]
        return rho.n_max, rows, line

    return work


def _tabulate(cfg: RunConfig, command: str, columns, job) -> Table:
    results = _sweep(cfg, job(cfg))
    table = Table(command, columns)
    used = {}
    for eta, (n_max, rows, line) in zip(cfg.etas, results):
        used[eta] = n_max
        table.rows.extend(rows)
        if line:
            table.summary.append(line)
    table.provenance = _provenance(cfg, command, used)
    return table


# ---------------------------------------------------------------- commands


def _common(default_etas):
    def decorate(f):
        options = [
            click.option("--config", type=click.Path(dir_okay=False), default=None,
                         help="JSON file with any of the options below; flags override it."),
            click.option("--alpha", default=DEFAULT_ALPHA, show_default=True, help="Coherent seed amplitude."),
            click.option("--r", "r", default=DEFAULT_R, show_default=True, help="Amplifier gain parameter."),
            click.option("--eta", multiple=True, type=float,
                         help=f"Idler detector efficiency, repeatable [default: {', '.join(map(str, default_etas))}]."),
            click.option("--ndet", default=0, show_default=True, help="Registered idler photon count."),
            click.option("--nmax", default=None, type=int, help="Fock cutoff [default: automatic]."),
            click.option("--tail-tol", "tail_tol", default=DEFAULT_TAIL_TOL, show_default=True,
                         help="Largest probability the cutoff may leave out."),
            click.option("--grid", default=None, help="Sampling grid min:max:step (Re gamma for wigner)."),
            click.option("--im-grid", "im_grid", default=None, help="Im gamma grid min:max:step (wigner only)."),
            click.option("--out", default=None, type=click.Path(dir_okay=False), help="Output file [default: stdout]."),
            click.option("--format", "format", default="csv", type=click.Choice(["csv", "json"]), show_default=True),
            click.option("--jobs", default=1, show_default=True, help="Worker threads for the eta sweep."),
        ]
        for opt in reversed(options):
            f = opt(f)
        return click.pass_context(f)

    return decorate


@click.group()
@click.version_option(__version__, prog_name="weakopa")
def cli():
    """Signal statistics after an idler measurement on a seeded amplifier."""


@cli.command()
@_common(FIGURE_ETAS)
def quadrature(ctx, **values):
    """Quadrature distribution, numeric and closed form, per eta."""
    cfg = _run_config(ctx, values, FIGURE_ETAS)
    table = _tabulate(cfg, "quadrature", ["eta", "x", "p_numeric", "p_analytic"], _quadrature_job)
    _emit(table, cfg)


@cli.command()
@_common(FIGURE_ETAS)
def photons(ctx, **values):
    """Photon-number distribution, numeric and closed form, per eta."""
    cfg = _run_config(ctx, values, FIGURE_ETAS)
    table = _tabulate(cfg, "photons", ["eta", "n", "p_numeric", "p_analytic"], _photons_job)
    _emit(table, cfg)


@cli.command()
@_common(MANDEL_ETAS)
def mandel(ctx, **values):
    """Mandel Q against detector efficiency."""
    cfg = _run_config(ctx, values, MANDEL_ETAS)
    table = _tabulate(cfg, "mandel", ["eta", "q_numeric", "q_analytic"], _mandel_job)
    table.summary = _mandel_summary(table.rows)
    _emit(table, cfg)


@cli.command("wigner")
@_common(FIGURE_ETAS)
def wigner_cmd(ctx, **values):
    """Wigner function on a grid around the state, per eta."""
    cfg = _run_config(ctx, values, FIGURE_ETAS)
    table = _tabulate(cfg, "wigner", ["eta", "re_gamma", "im_gamma", "w_numeric", "w_analytic"], _wigner_job)
    _emit(table, cfg)


@cli.command()
@click.option("--config", type=click.Path(dir_okay=False), default=None, help="JSON file; flags override it.")
@click.option("--alpha", multiple=True, type=float, help="Sweep values of alpha, repeatable.")
@click.option("--r", "r", multiple=True, type=float, help="Sweep values of r, repeatable.")
@click.option("--eta", multiple=True, type=float, help="Sweep values of eta, repeatable.")
@click.option("--ndet", default=0, show_default=True)
@click.option("--nmax", default=None, type=int)
@click.option("--tail-tol", "tail_tol", default=VERIFY_TAIL_TOL, show_default=True)
@click.option("--out", default=None, type=click.Path(dir_okay=False))
@click.pass_context
def verify(ctx, **values):
    """Run the consistency checks and print one JSON line per check."""
    v = _merged(ctx, values, _load_config(values.get("config")))
    n_det = _as_int("ndet", v["ndet"])
    tail_tol = _as_float("tail_tol", v["tail_tol"])
    n_max = _as_int("nmax", v["nmax"])
    SchemeParams(1.0, 1.0, 1.0, n_det=n_det, n_max=n_max, tail_tol=tail_tol)
    results = run_checks(
        alphas=_as_floats("alpha", v["alpha"]) if v["alpha"] else DEFAULT_ALPHAS,
        rs=_as_floats("r", v["r"]) if v["r"] else DEFAULT_RS,
        etas=_as_floats("eta", v["eta"]) if v["eta"] else DEFAULT_ETAS,
        n_det=n_det,
        tail_tol=tail_tol,
        n_max=n_max,
    )
    passed = all(res.passed for res in results)
    lines = [json.dumps(res.as_dict(), sort_keys=True) for res in results]
    lines.append(json.dumps({"all_passed": passed, "version": __version__, "tail_tol": tail_tol}, sort_keys=True))
    text = "\n".join(lines) + "\n"
    if v["out"]:
        with open(v["out"], "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    click.echo(text, nl=False)
    return EXIT_OK if passed else EXIT_NUMERICAL


def _fail(kind: str, message: str, code: int) -> int:
    click.echo(json.dumps({"error": kind, "message": message, "exit_code": code}), err=True)
    return code


def main(argv=None) -> int:
    """Run the CLI and translate failures into the documented exit codes."""
    try:
        rv = cli.main(args=argv, prog_name="weakopa", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        return _fail("config", "aborted", EXIT_CONFIG)
    except click.ClickException as exc:
        return _fail("config", exc.format_message(), EXIT_CONFIG)
    except NumericalError as exc:
        return _fail("numerical", f"{type(exc).__name__}: {exc}", EXIT_NUMERICAL)
    except (WeakOPAError, ValueError) as exc:
        return _fail("config", str(exc), EXIT_CONFIG)
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
