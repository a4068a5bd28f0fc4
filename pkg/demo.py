"""Public CLI entrypoint.

Commands:
  run       - run OGD on a game and write the per-iteration trace CSV
  metrics   - gap report and inequality checks of a saved trace
  plot      - SVG line chart of a trace CSV
  bench     - extensive-form benchmark suite at eta = auto
  lp        - strongest / utility-contour / max-welfare CCE programs
  games     - list built-in games, dump benchmark trees

This file wraps the typer application in `cce_dynamics.cli.main`. Without
typer installed only a single run is available, through argparse.
"""
from __future__ import annotations

import os
import sys
sys.path.append(os.path.join(os.path.dirname(__file__), "src"))
from pathlib import Path

try:
    import typer
except Exception:
    typer = None

from cce_dynamics.data_models.run import InitMode, RunConfig
from cce_dynamics.services.dynamics_service import run
from cce_dynamics.services.game_catalog_service import default_init, resolve_game
from cce_dynamics.services.game_service import auto_learning_rate
from cce_dynamics.services.trace_export_service import trace_frame, write_csv


def run_once(
    game: str = "example-3x3",
    eta: str = "0.1",
    horizon: int = 1000,
    init: str = "",
    out: str = "out/trace.csv",
) -> None:
    print(f"Resolving game {game}...")
    resolved = resolve_game(game)
    step = auto_learning_rate(resolved) if eta == "auto" else float(eta)
    cfg = RunConfig(eta=step, horizon=horizon, init_mode=InitMode.parse(init or default_init(game)))

    print(f"Running OGD: eta={step:.6g}, T={horizon}...")
    trace = run(resolved, cfg)
    frame = trace_frame(trace, resolved)
    write_csv(frame, Path(out))
    last = frame.iloc[-1]
    print(f"Final regrets: X {last['reg_x']:.4f}, Y {last['reg_y']:.4f}; CCE gap {last['cce_gap']:.4f}")
    print(f"Wrote {out}")


if __name__ == "__main__":
    if typer:
        from cce_dynamics.cli.main import app

        app()
    else:
        # Fallback to argparse
        import argparse
        parser = argparse.ArgumentParser()
        parser.add_argument("--game", default="example-3x3")
        parser.add_argument("--eta", default="0.1")
        parser.add_argument("--horizon", type=int, default=1000)
        parser.add_argument("--init", default="")
        parser.add_argument("--out", default="out/trace.csv")

        args, _ = parser.parse_known_args()
        run_once(args.game, args.eta, args.horizon, args.init, args.out)
