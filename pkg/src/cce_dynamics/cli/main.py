"""
Command-line front end.

Subcommands: run, metrics, plot, bench, lp (strongest | contour | welfare) and
games (list | dump-tree). Exit codes: 0 success, 1 any runtime or input error,
2 configuration errors (the offending key is named on stderr).
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional
import json
import logging
import time

import numpy as np
import pandas as pd
import typer
from pydantic import ValidationError

from cce_dynamics.config import BENCH_HORIZON, BENCH_OUT_DIR, LOG_FORMAT, LOG_LEVEL, PROJECTION_TOL
from cce_dynamics.data_models.experiment import CHECKER_NAMES, ExperimentConfig
from cce_dynamics.data_models.game import BimatrixGame
from cce_dynamics.data_models.run import InitMode, RunConfig, Trace
from cce_dynamics.errors import CceDynamicsError, ConfigError
from cce_dynamics.services.cce_lp_service import cce_contour, max_welfare_cce, strongest_cce
from cce_dynamics.services.dynamics_service import run
from cce_dynamics.services.efg_benchmarks import BENCHMARK_BUILDERS
from cce_dynamics.services.efg_service import dump_tree
from cce_dynamics.services.game_catalog_service import default_init, list_games, resolve_game
from cce_dynamics.services.game_service import auto_learning_rate, normalize, utility_bounds
from cce_dynamics.services.inequality_service import (
    check_balanced,
    check_dichotomy,
    check_rvu,
    check_stability,
)
from cce_dynamics.services.metrics_service import cce_report
from cce_dynamics.services.plot_service import PlotKind, plot_trace_csv
from cce_dynamics.services.trace_export_service import load_trace, save_trace, trace_frame, write_csv

logger = logging.getLogger(__name__)

CHECK_COLUMNS = ["checker", "t", "slack", "violated", "detail"]
BENCH_COLUMNS = [
    "game", "status", "eta", "horizon", "nash_gap_initial", "nash_gap_last",
    "cce_gap", "strong_eps", "wall_time_s", "error",
]
DEFAULT_CHECK_EPS = 0.05

app = typer.Typer(add_completion=False, help="OMD / OGD dynamics, equilibrium gaps and CCE programs for bimatrix games.")
lp_app = typer.Typer(add_completion=False, help="Coarse correlated equilibrium linear programs (normal-form games).")
games_app = typer.Typer(add_completion=False, help="Built-in games.")
app.add_typer(lp_app, name="lp")
app.add_typer(games_app, name="games")


# --- configuration -------------------------------------------------------------------------


def read_config_file(path: Path) -> Dict[str, str]:
    """Flat key=value file; `#` starts a comment, blank lines are ignored."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    values: Dict[str, str] = {}
    for number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {number} of {path} is not key=value: '{raw.strip()}'", key=line)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in ExperimentConfig.model_fields:
            raise ConfigError(f"unknown config key '{key}' in {path}", key=key)
        if key in values:
            raise ConfigError(f"config key '{key}' given twice in {path}", key=key)
        values[key] = value
    return values


def build_experiment(values: Dict[str, object]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(values)
    except ValidationError as exc:
        first = exc.errors()[0]
        key = str(first["loc"][0]) if first["loc"] else None
        raise ConfigError(f"invalid value for '{key}': {first['msg']}", key=key) from exc


def parse_config_file(path: Path) -> ExperimentConfig:
    return build_experiment(read_config_file(path))


def _merged_config(config: Optional[Path], **flags) -> ExperimentConfig:
    values: Dict[str, object] = dict(read_config_file(config)) if config else {}
    values.update({key: value for key, value in flags.items() if value is not None})
    return build_experiment(values)


def _guarded(action: Callable[[], int]) -> None:
    try:
        code = action()
    except ConfigError as exc:
        typer.echo(f"config error: {exc}", err=True)
        raise typer.Exit(code=2)
    except (CceDynamicsError, ValueError, FileNotFoundError) as exc:
        typer.echo(f"error: {exc}", err=True)
        raise typer.Exit(code=1)
    raise typer.Exit(code=code)


# --- shared pipeline pieces ----------------------------------------------------------------


def _prepare_game(cfg: ExperimentConfig) -> BimatrixGame:
    game = resolve_game(cfg.game, cfg.treeplex_x, cfg.treeplex_y)
    if cfg.normalize:
        game, _ = normalize(game)
    return game


def _run_config(cfg: ExperimentConfig, game: BimatrixGame, init: str) -> RunConfig:
    eta = auto_learning_rate(game) if cfg.eta == "auto" else float(cfg.eta)
    return RunConfig(
        eta=eta,
        horizon=cfg.horizon,
        init_mode=InitMode.parse(init),
        record_secondary=cfg.record_secondary,
        projection_tol=cfg.projection_tol or PROJECTION_TOL,
    )


def run_checks(trace: Trace, game: BimatrixGame, names: List[str], eps: float = DEFAULT_CHECK_EPS) -> pd.DataFrame:
    """One row per checker: worst prefix, its slack and whether it counts as a violation."""
    rows = []
    for name in names:
        if name == "dichotomy":
            report = check_dichotomy(trace, game, eps)
            rows.append(
                {
                    "checker": name,
                    "t": trace.horizon,
                    "slack": -max(report.reg_x_final, report.reg_y_final),
                    "violated": report.strict_bound_holds is False,
                    "detail": f"horn={report.horn_observed.value} compliant={report.theorem_compliant}",
                }
            )
            continue
        if name == "rvu":
            report = check_rvu(trace, game)
        elif name == "stability":
            s_a, s_b, _ = utility_bounds(game)
            report = check_stability(trace, trace.config.eta, utility_scale=max(s_a, s_b))
        elif name == "balanced":
            report = check_balanced(trace, game)
        else:
            raise ConfigError(f"unknown checker '{name}' (choose from {', '.join(CHECKER_NAMES)})", key="checks")
        rows.append(
            {
                "checker": name,
                "t": report.worst_t,
                "slack": report.worst_slack,
                "violated": report.violated,
                "detail": f"tolerance={report.tolerance:.3g}",
            }
        )
    return pd.DataFrame(rows, columns=CHECK_COLUMNS)


def _seed_path(path: Path, seed: int) -> Path:
    return path.with_name(f"{path.stem}_seed{seed}{path.suffix}")


# --- commands as plain functions -----------------------------------------------------------


def cmd_run(cfg: ExperimentConfig) -> int:
    """Run the dynamics and write the per-iteration trace CSV (one per seed when seeds are given)."""
    game = _prepare_game(cfg)
    if cfg.seeds:
        jobs = [(f"random:{seed}", _seed_path(cfg.out, seed), seed) for seed in cfg.seeds]
    else:
        jobs = [(cfg.init or default_init(cfg.game), cfg.out, None)]

    for init, out, seed in jobs:
        run_cfg = _run_config(cfg, game, init)
        trace = run(game, run_cfg)
        write_csv(trace_frame(trace, game), out)
        typer.echo(f"Wrote trace of {game.name} (eta={run_cfg.eta:.6g}, T={run_cfg.horizon}) to {out}")
        if cfg.iterates_out is not None:
            iterates = cfg.iterates_out if seed is None else _seed_path(cfg.iterates_out, seed)
            save_trace(trace, iterates)
        if cfg.checks:
            checks = run_checks(trace, game, cfg.checks)
            checks_path = out.with_name(f"{out.stem}_checks.csv")
            write_csv(checks, checks_path)
            if checks["violated"].any():
                logger.warning("Checker violations on %s: %s", game.name, list(checks.loc[checks["violated"], "checker"]))
    return 0


def cmd_metrics(
    trace_path: Path,
    game_name: str,
    checks: List[str],
    eps: float = DEFAULT_CHECK_EPS,
    normalize_game: bool = False,
    out: Optional[Path] = None,
) -> int:
    """Gap report of a saved trace plus the requested checkers; exit 1 if any checker is violated."""
    trace = load_trace(trace_path)
    game = resolve_game(game_name)
    if normalize_game:
        game, _ = normalize(game)
    report = cce_report(trace, game)
    typer.echo(report.model_dump_json(indent=2))
    table = run_checks(trace, game, checks, eps)
    if not table.empty:
        typer.echo(table.to_string(index=False))
    if out is not None:
        write_csv(table, out)
    return 1 if table["violated"].any() else 0


def cmd_plot(trace_csv: Path, kind: PlotKind, out: Path) -> int:
    plot_trace_csv(trace_csv, kind, out)
    typer.echo(f"Wrote {PlotKind(kind).value} plot to {out}")
    return 0


def _bench_one(name: str, horizon: int, out_dir: Path) -> Dict[str, object]:
    row: Dict[str, object] = {"game": name, "status": "failed", "horizon": horizon, "error": ""}
    started = time.perf_counter()
    try:
        game = resolve_game(name)
        cfg = ExperimentConfig(game=name, eta="auto", horizon=horizon)
        run_cfg = _run_config(cfg, game, default_init(name))
        trace = run(game, run_cfg)
        report = cce_report(trace, game)
        write_csv(trace_frame(trace, game), out_dir / f"{name}.csv")
        row.update(
            status="ok",
            eta=run_cfg.eta,
            nash_gap_initial=report.nash_gap_initial,
            nash_gap_last=report.nash_gap_last,
            cce_gap=report.cce_gap,
            strong_eps=report.strong_eps,
        )
    except (CceDynamicsError, ValueError) as exc:
        logger.warning("Benchmark %s failed: %s", name, exc)
        row["error"] = str(exc)
    row["wall_time_s"] = time.perf_counter() - started
    return row


def cmd_bench(names: List[str], cfg: ExperimentConfig, workers: int = 1) -> int:
    """
    Run each named game at eta = auto for cfg.horizon iterations.

    Per-game traces go next to the summary CSV at cfg.out. Failures are
    recorded in the summary and give exit code 1 once every game has run.
    """
    out_dir = cfg.out.parent
    args = [(name, cfg.horizon, out_dir) for name in names]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_bench_one, *zip(*args)))
    else:
        rows = [_bench_one(*a) for a in args]
    summary = pd.DataFrame(rows).reindex(columns=BENCH_COLUMNS)
    write_csv(summary, cfg.out)
    typer.echo(summary.to_string(index=False))
    return 0 if (summary["status"] == "ok").all() else 1


# --- typer wiring --------------------------------------------------------------------------


@app.callback()
def main(
    log_level: str = typer.Option(LOG_LEVEL, "--log-level", help="Logging level (DEBUG, INFO, WARNING, ...)."),
) -> None:
    logging.basicConfig(level=getattr(logging, log_level.upper(), logging.WARNING), format=LOG_FORMAT)


@app.command("run")
def run_command(
    config: Optional[Path] = typer.Option(None, "--config", help="key=value experiment file; flags override it."),
    game: Optional[str] = typer.Option(None, help="Game name or matrix file (see `games list`)."),
    eta: Optional[str] = typer.Option(None, help="Learning rate, or 'auto' for 1/(2 max ||A||, ||B||)."),
    horizon: Optional[int] = typer.Option(None, help="Number of iterations T."),
    init: Optional[str] = typer.Option(None, help="uniform | vertex:i,j | random:seed"),
    seeds: Optional[str] = typer.Option(None, help="Comma-separated seeds; one random-init run and CSV per seed."),
    out: Optional[Path] = typer.Option(None, help="Trace CSV path."),
    iterates_out: Optional[Path] = typer.Option(None, help="Also save raw iterates (.npz) for `metrics`."),
    checks: Optional[str] = typer.Option(None, help="Comma-separated checkers: rvu,stability,balanced,dichotomy."),
    normalize_game: Optional[bool] = typer.Option(None, "--normalize/--no-normalize", help="Rescale utilities to norm <= 1."),
    record_secondary: Optional[bool] = typer.Option(None, "--record-secondary/--no-record-secondary"),
    treeplex_x: Optional[Path] = typer.Option(None, help="Treeplex file replacing X's simplex."),
    treeplex_y: Optional[Path] = typer.Option(None, help="Treeplex file replacing Y's simplex."),
) -> None:
    """
    Run OGD and write a trace CSV.

    Columns: t, reg_x, reg_y, nash_gap, cce_gap, sigma_x, sigma_y, step_norm_x,
    step_norm_y, avg_nash_gap (one row per iteration t = 1..T).
    """
    _guarded(
        lambda: cmd_run(
            _merged_config(
                config,
                game=game,
                eta=eta,
                horizon=horizon,
                init=init,
                seeds=seeds,
                out=out,
                iterates_out=iterates_out,
                checks=checks,
                normalize=normalize_game,
                record_secondary=record_secondary,
                treeplex_x=treeplex_x,
                treeplex_y=treeplex_y,
            )
        )
    )


@app.command("metrics")
def metrics_command(
    trace: Path = typer.Option(..., "--trace", help="Iterates file written by `run --iterates-out`."),
    game: str = typer.Option(..., "--game", help="Game the trace was recorded on."),
    check: str = typer.Option("", "--check", help="Comma-separated checkers: rvu,stability,balanced,dichotomy."),
    eps: float = typer.Option(DEFAULT_CHECK_EPS, help="eps for the dichotomy checker."),
    normalize_game: bool = typer.Option(False, "--normalize/--no-normalize"),
    out: Optional[Path] = typer.Option(None, help="Checker CSV (checker, t, slack, violated, detail)."),
) -> None:
    """Gap report of a saved trace and inequality checks."""
    names = [c.strip() for c in check.split(",") if c.strip()]
    _guarded(lambda: cmd_metrics(trace, game, names, eps, normalize_game, out))


@app.command("plot")
def plot_command(
    trace_csv: Path = typer.Argument(..., help="Trace CSV written by `run`."),
    kind: PlotKind = typer.Option(PlotKind.REGRET, help="regret | gap"),
    out: Path = typer.Option(Path("out/plot.svg"), help="SVG output path."),
) -> None:
    """SVG line chart of a trace CSV."""
    _guarded(lambda: cmd_plot(trace_csv, kind, out))


@app.command("bench")
def bench_command(
    games: str = typer.Option(",".join(BENCHMARK_BUILDERS), help="Comma-separated game names."),
    horizon: int = typer.Option(BENCH_HORIZON, help="Iterations per game."),
    out: Path = typer.Option(BENCH_OUT_DIR / "summary.csv", help="Summary CSV; traces are written next to it."),
    workers: int = typer.Option(1, help="Games run in parallel processes when > 1."),
) -> None:
    """
    Benchmark suite at eta = auto.

    Summary columns: game, status, eta, horizon, nash_gap_initial, nash_gap_last,
    cce_gap, strong_eps, wall_time_s, error.
    """
    names = [g.strip() for g in games.split(",") if g.strip()]
    _guarded(lambda: cmd_bench(names, ExperimentConfig(eta="auto", horizon=horizon, out=out), workers))


def _lp_game(game: str, use_normalized: bool) -> BimatrixGame:
    resolved = resolve_game(game)
    if use_normalized:
        resolved, _ = normalize(resolved)
    return resolved


def _format_mu(mu: np.ndarray) -> str:
    return json.dumps(np.round(mu, 6).tolist())


@lp_app.command("strongest")
def lp_strongest(
    game: str = typer.Option("example-3x3", "--game"),
    use_normalized: bool = typer.Option(False, "--use-normalized", help="Solve on normalized utilities."),
) -> None:
    """Largest eps for which an eps-strong CCE exists."""

    def action() -> int:
        result = strongest_cce(_lp_game(game, use_normalized))
        typer.echo(f"eps_star={result.eps_star:.6f}")
        typer.echo(f"mu={_format_mu(result.mu)}")
        return 0

    _guarded(action)


@lp_app.command("contour")
def lp_contour(
    game: str = typer.Option("example-3x3", "--game"),
    grid: int = typer.Option(60, help="Grid points per utility axis."),
    out: Path = typer.Option(Path("out/contour.csv"), help="CSV with columns w_x, w_y, eps_star (NaN if infeasible)."),
    at_least: bool = typer.Option(False, "--at-least", help="Guarantee at least, not exactly, each utility."),
    use_normalized: bool = typer.Option(False, "--use-normalized"),
) -> None:
    """Largest CCE incentive parameter over a grid of utility pairs."""

    def action() -> int:
        write_csv(cce_contour(_lp_game(game, use_normalized), grid, at_least), out)
        typer.echo(f"Wrote {grid}x{grid} contour to {out}")
        return 0

    _guarded(action)


@lp_app.command("welfare")
def lp_welfare(
    game: str = typer.Option("example-3x3", "--game"),
    use_normalized: bool = typer.Option(False, "--use-normalized"),
) -> None:
    """Largest social welfare attainable by a CCE."""

    def action() -> int:
        result = max_welfare_cce(_lp_game(game, use_normalized))
        typer.echo(f"welfare={result.welfare:.6f} unconstrained_max={result.unconstrained_max:.6f}")
        typer.echo(f"mu={_format_mu(result.mu)}")
        return 0

    _guarded(action)


@games_app.command("list")
def games_list() -> None:
    for name in list_games():
        typer.echo(name)


@games_app.command("dump-tree")
def games_dump_tree(
    name: str = typer.Argument(..., help="Benchmark name."),
    max_nodes: Optional[int] = typer.Option(None, help="Stop the listing after this many nodes."),
) -> None:
    """Plain-text listing of a benchmark's game tree."""

    def action() -> int:
        if name not in BENCHMARK_BUILDERS:
            raise ValueError(f"unknown benchmark '{name}' (choose from {', '.join(BENCHMARK_BUILDERS)})")
        typer.echo(dump_tree(BENCHMARK_BUILDERS[name](), max_nodes=max_nodes), nl=False)
        return 0

    _guarded(action)


if __name__ == "__main__":
    app()
