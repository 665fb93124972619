"""Command-line entry point: list problems, run adaptive experiments,
compare strategies, drive the 1D lab, and run the acceptance suite.

Exit codes for `run`: 0 when the tolerance was reached, 2 when the step
budget ran out, 1 on errors.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click
import numpy as np

from . import lab1d as lab
from .driver import RunConfig, run as run_driver
from .problems import CATALOG_NAMES, catalog


def _out_dir(out):
    return Path(out or os.environ.get("LANDSCAPE_HP_OUT", "."))


@click.group()
def main():
    """hp-adaptive eigenpair solver driven by the landscape function."""


@main.command("list")
def list_cmd():
    """Print the problem catalog."""
    for name in CATALOG_NAMES:
        click.echo(name)


def _run_options(f):
    opts = [
        click.option("--problem", required=True),
        click.option("--M", "-M", "m_pairs", default=1, show_default=True,
                     help="cluster size"),
        click.option("--j", "j_target", default=1, show_default=True,
                     help="target index for strategy ER"),
        click.option("--tol", default=1e-4, show_default=True),
        click.option("--nmax", default=50, show_default=True),
        click.option("--r", default=10.0, show_default=True,
                     help="marking fraction, percent"),
        click.option("--tol-ana", default=0.25, show_default=True),
        click.option("--gamma", default=10.0, show_default=True),
        click.option("--seed", default=0, show_default=True),
        click.option("--pause", default=0, show_default=True),
        click.option("--picard-threshold", default=30, show_default=True),
        click.option("--mr-threshold", default=4000.0, show_default=True),
        click.option("--workers", default=1, show_default=True),
        click.option("--dump-meshes", is_flag=True),
        click.option("--out", default=None, help="output directory "
                     "(default: $LANDSCAPE_HP_OUT or .)"),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _make_config(problem, strategy, m_pairs, j_target, tol, nmax, r, tol_ana,
                 gamma, seed, pause, picard_threshold, mr_threshold, workers):
    return RunConfig(problem=problem, strategy=strategy, M=m_pairs,
                     j=j_target, tol=tol, n_max=nmax, r=r, tol_ana=tol_ana,
                     gamma=gamma, seed=seed, pause=pause,
                     picard_threshold=picard_threshold,
                     mr_threshold=mr_threshold, workers=workers)


@main.command("run")
@click.option("--strategy", default="LR", show_default=True)
@_run_options
def run_cmd(strategy, problem, m_pairs, j_target, tol, nmax, r, tol_ana,
            gamma, seed, pause, picard_threshold, mr_threshold, workers,
            dump_meshes, out):
    """One adaptive run; writes <problem>_<strategy>_<seed>.{jsonl,csv}."""
    try:
        cfg = _make_config(problem, strategy, m_pairs, j_target, tol, nmax,
                           r, tol_ana, gamma, seed, pause, picard_threshold,
                           mr_threshold, workers)
        log = run_driver(cfg, out_dir=_out_dir(out), dump_meshes=dump_meshes)
    except Exception as exc:   # noqa: BLE001 - CLI boundary
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    rec = log.final
    click.echo(f"{log.terminal}: {len(log.records)} steps, dof {rec.dof}, "
               f"envelope {rec.eta_max_rel:.3e}")
    sys.exit(0 if log.terminal == "tol" else 2)


@main.command("compare")
@click.option("--strategies", default="LR,CR-sum", show_default=True,
              help="comma-separated strategy list")
@_run_options
def compare_cmd(strategies, problem, m_pairs, j_target, tol, nmax, r,
                tol_ana, gamma, seed, pause, picard_threshold, mr_threshold,
                workers, dump_meshes, out):
    """Run several strategies on one problem with shared settings."""
    worst = 0
    for strategy in strategies.split(","):
        try:
            cfg = _make_config(problem, strategy.strip(), m_pairs, j_target,
                               tol, nmax, r, tol_ana, gamma, seed, pause,
                               picard_threshold, mr_threshold, workers)
            log = run_driver(cfg, out_dir=_out_dir(out),
                             dump_meshes=dump_meshes)
        except Exception as exc:   # noqa: BLE001 - CLI boundary
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
        rec = log.final
        click.echo(f"{strategy}: {log.terminal}, {len(log.records)} steps, "
                   f"dof {rec.dof}, envelope {rec.eta_max_rel:.3e}")
        worst = max(worst, 0 if log.terminal == "tol" else 2)
    sys.exit(worst)


@main.command("lab1d")
@click.option("--n-sub", default=32, show_default=True)
@click.option("--vmax", default=8000.0, show_default=True)
@click.option("--ndof", default=4096, show_default=True)
@click.option("--pairs", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", default=None)
def lab1d_cmd(n_sub, vmax, ndof, pairs, seed, out):
    """1D validation lab: envelope check, Fourier expansion, peak census."""
    try:
        V = (lab.ZERO_POTENTIAL if vmax == 0
             else lab.random_potential(n_sub, 0.0, vmax, seed))
        res = lab.solve_1d(V, ndof, pairs)
        viol = lab.envelope_check(res)
        errs = lab.reconstruction_errors(res, min(pairs, 50))
        census = lab.ground_state_census(res)
    except Exception as exc:   # noqa: BLE001 - CLI boundary
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"envelope max violation: {viol:.3e} "
               f"(tolerance {1e-3 * res.u.max():.3e})")
    click.echo(f"reconstruction rel error, N={len(errs)}: {errs[-1]:.3e}")
    click.echo(f"landscape peaks: {len(census)}")
    for mtc in census:
        click.echo(f"  peak x={mtc.peak_x:.4f} -> pair {mtc.pair_index + 1} "
                   f"(peak x={mtc.psi_peak_x:.4f}, dist {mtc.distance:.4f})")
    out_path = _out_dir(out)
    out_path.mkdir(parents=True, exist_ok=True)
    n_partial = tuple(sorted({min(n, pairs) for n in (1, 5, 25)}))
    figs = lab.figure_data(res, n_show=min(5, pairs), N_partial=n_partial)
    for name, (hdr, arr) in figs.items():
        fn = out_path / f"lab1d_{name}_{seed}.csv"
        np.savetxt(fn, arr, delimiter=",", header=hdr, comments="")
        click.echo(f"wrote {fn}")
    sys.exit(0)


@main.command("accept")
@click.argument("pytest_args", nargs=-1)
def accept_cmd(pytest_args):
    """Run the acceptance suite (requires pytest and the repo checkout)."""
    import subprocess
    root = Path(__file__).resolve().parents[2]
    test = root / "tests" / "test_acceptance.py"
    if not test.exists():
        click.echo("acceptance tests not found (installed without repo); "
                   "run pytest tests/test_acceptance.py from a checkout",
                   err=True)
        sys.exit(1)
    raise SystemExit(subprocess.call(
        [sys.executable, "-m", "pytest", "-v", str(test), *pytest_args]))


if __name__ == "__main__":
    main()
