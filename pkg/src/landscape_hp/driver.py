"""Outer adaptive loops: single-pair, cluster, landscape-driven, and paused
variants, with per-step metric logging (JSONL + flat CSV).
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from . import adapt
from .adapt import (DEFAULT_P_MAX, DEFAULT_R, DEFAULT_TOL_ANA, plan_dump)
from .assembly import (DGSpace, ProblemSpec, assemble_mass, assemble_source,
                       assemble_stiffness, prolong)
from .eigensolve import (EigenpairSet, factorize, lowest_eigenpairs,
                         picard_refine, solve_landscape)
from .estimators import eta_eigenpairs, eta_landscape
from .problems import ReferenceData, catalog

STRATEGIES = ("ER", "CR-sum", "CR-max", "LR", "MR", "LR-paused")


@dataclass
class RunConfig:
    problem: str
    strategy: str = "LR"
    M: int = 1                      # cluster size (CR/LR/MR)
    j: int = 1                      # target index (ER)
    tol: float = 1e-4               # relative-envelope tolerance
    n_max: int = 50
    r: float = DEFAULT_R            # marking fraction, percent
    tol_ana: float = DEFAULT_TOL_ANA
    gamma: float = 10.0
    seed: int = 0
    pause: int = 0                  # steps skipped between eigensolves
    picard_threshold: int = 30      # switch to Picard at <= this many
    mr_threshold: float = 4000.0    # MR: switch LR -> CR-sum past this DOF
    absolute_tol: bool = False      # stop on max eta2 instead of relative
    workers: int = 1
    p_max: int = DEFAULT_P_MAX
    source: object = None           # overrides the catalog's f for L u = f
    eig_tol: float = 1e-9           # algebraic eigensolver tolerance

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; "
                             f"choose from {', '.join(STRATEGIES)}")
        if self.tol < 0 or self.n_max < 1 or self.pause < 0:
            raise ValueError("need tol >= 0, n_max >= 1, pause >= 0")
        if self.mr_threshold <= 0:
            raise ValueError("mr_threshold must be positive")
        if self.M < 1 or self.j < 1:
            raise ValueError("need M >= 1 and j >= 1")
        if not 0 < self.r <= 100:
            raise ValueError("marking fraction r must be in (0, 100]")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def n_pairs(self) -> int:
        return self.j if self.strategy == "ER" else self.M


@dataclass
class StepRecord:
    step: int
    dof: int
    eta_land2: float               # NaN when the strategy skips the landscape
    lambdas: list
    eta2_eig: list
    eta_max_rel: float             # envelope: max_j eta2_j / lambda_j
    eta2_eig_max: float
    err_max_rel: float             # NaN without reference eigenvalues
    n_unconverged: int
    eig_called: bool
    wall_seconds: float
    cpu_seconds: float
    eig_cpu_seconds: float

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        d["lambdas"] = [float(v) for v in self.lambdas]
        d["eta2_eig"] = [float(v) for v in self.eta2_eig]
        return d


@dataclass
class RunLog:
    config: RunConfig
    records: list = field(default_factory=list)
    terminal: str = "max-steps"    # "tol" | "max-steps"

    @property
    def final(self) -> StepRecord:
        return self.records[-1]

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def basename(self) -> str:
        s = self.config.strategy.replace("(", "").replace(")", "")
        return f"{self.config.problem}_{s}_{self.config.seed}"

    def to_jsonl(self) -> str:
        cfg = dataclasses.asdict(self.config)
        cfg.pop("source")
        lines = [json.dumps({"config": cfg, "terminal": self.terminal},
                            sort_keys=True)]
        lines += [json.dumps(r.to_json(), sort_keys=True)
                  for r in self.records]
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        # timing fields live in the JSONL log only: the CSV must be
        # byte-identical across reruns with the same flags and seed
        m = len(self.records[0].lambdas)
        hdr = ["step", "dof", "eta_land2", "eta2_eig_max", "eta_max_rel",
               "err_max_rel", "n_unconverged", "eig_called"]
        hdr += [f"lambda_{j+1}" for j in range(m)]
        hdr += [f"eta2_{j+1}" for j in range(m)]
        rows = [",".join(hdr)]
        for r in self.records:
            vals = [str(r.step), str(r.dof), repr(float(r.eta_land2)),
                    repr(float(r.eta2_eig_max)), repr(float(r.eta_max_rel)),
                    repr(float(r.err_max_rel)), str(r.n_unconverged),
                    str(int(r.eig_called))]
            vals += [repr(float(v)) for v in r.lambdas]
            vals += [repr(float(v)) for v in r.eta2_eig]
            rows.append(",".join(vals))
        return "\n".join(rows) + "\n"

    def write(self, out_dir) -> tuple:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        jl = out / (self.basename() + ".jsonl")
        cs = out / (self.basename() + ".csv")
        jl.write_text(self.to_jsonl())
        cs.write_text(self.to_csv())
        return jl, cs


def metrics(log: RunLog, exact=None) -> list:
    """Per-step metric table (list of dicts) with optional exact errors.

    exact: ReferenceData or array of reference eigenvalues; when shorter
    than the cluster, exact columns cover the known prefix only.
    """
    if isinstance(exact, ReferenceData):
        exact = exact.values()
    table = []
    for r in log.records:
        lam = np.array(r.lambdas)
        eta2 = np.array(r.eta2_eig)
        row = {"step": r.step, "dof": r.dof,
               "eta2_eig": eta2.tolist(),
               "rel_bound": (eta2 / lam).tolist(),
               "eta_max_rel": r.eta_max_rel,
               "cpu_seconds": r.cpu_seconds}
        if exact is not None and len(exact) > 0:
            k = min(len(lam), len(exact))
            ex = np.asarray(exact)[:k]
            row["err_rel"] = (np.abs(lam[:k] - ex) / ex).tolist()
            row["e_max_rel"] = float(np.max(np.abs(lam[:k] - ex) / ex))
        table.append(row)
    return table


class _Dumper:
    def __init__(self, out_dir, base, enabled):
        self.dir = Path(out_dir) if (enabled and out_dir) else None
        self.base = base
        if self.dir:
            self.dir.mkdir(parents=True, exist_ok=True)

    def step(self, n, mesh, space, indicators, plan=None, regularity=None):
        if not self.dir:
            return
        (self.dir / f"{self.base}_step{n:03d}.mesh").write_text(mesh.dump())
        for ind in indicators:
            path = self.dir / f"{self.base}_step{n:03d}_{ind.tag}.ind"
            path.write_text(ind.dump(space, regularity))
        if plan is not None:
            (self.dir / f"{self.base}_step{n:03d}.plan").write_text(
                plan_dump(plan))


def _exact_err(lambdas, ref: ReferenceData) -> float:
    ref_map = ref.by_index() if ref is not None else {}
    errs = [abs(lambdas[j] - ref_map[j + 1]) / ref_map[j + 1]
            for j in range(len(lambdas)) if (j + 1) in ref_map]
    return max(errs) if errs else float("nan")


def _warm_restart(K, M_mass, prev: EigenpairSet, space_prev, space,
                  refine_idx, fact, tol) -> EigenpairSet:
    """Picard path: carry the previous pairs over and polish the stragglers.

    Prolongation is exact (nested spaces); a Rayleigh-Ritz projection of
    the carried subspace refreshes all values for free, then per-pair
    Picard sweeps re-solve only the pairs in refine_idx. Pairs outside
    refine_idx keep their carried (Ritz-projected) values.
    """
    X = prolong(prev.vectors, space_prev, space)
    d = M_mass.diagonal()
    G = (X * d[:, None]).T @ X
    X = np.linalg.solve(np.linalg.cholesky(G), X.T).T
    A = X.T @ (K @ X)
    theta, Y = np.linalg.eigh(0.5 * (A + A.T))
    X = X @ Y
    R = K @ X - d[:, None] * X * theta[None, :]
    res = np.sqrt(np.einsum("ij,ij->j", R, R / d[:, None]))
    start = EigenpairSet(theta, X, res, np.ones(prev.m, bool))
    out = picard_refine(K, M_mass, start, refine_idx,
                        tol=max(tol, 1e-4), max_iter=30, fact=fact)
    # The carried pairs only feed error estimation and the termination
    # *candidate* check; termination itself always goes through a fresh
    # full solve, so estimator-grade residuals (1e-4) suffice here.
    # Deflation against carried (not re-solved) neighbors floors the
    # attainable residual; a full solve takes over when even the
    # estimator-grade target fails.
    worst = max(out.residuals[j] / abs(out.values[j]) for j in refine_idx)
    if worst > 1e-2:
        return None
    return out


def run(cfg: RunConfig, out_dir=None, dump_meshes: bool = False) -> RunLog:
    """One adaptive run; writes logs to out_dir when given.

    With workers=1 the linear-algebra thread pools are pinned to one
    thread so reruns are bit-reproducible (threaded BLAS reductions can
    reorder floating-point sums between runs).
    """
    with threadpool_limits(limits=cfg.workers if cfg.workers == 1 else None):
        return _run(cfg, out_dir, dump_meshes)


def _run(cfg: RunConfig, out_dir=None, dump_meshes: bool = False) -> RunLog:
    spec, mesh, ref = catalog(cfg.problem, seed=cfg.seed,
                              source=cfg.source)
    if cfg.gamma != spec.gamma:
        spec = dataclasses.replace(spec, gamma=cfg.gamma)
    strategy = cfg.strategy
    needs_landscape = strategy in ("LR", "MR", "LR-paused")
    m = cfg.n_pairs
    log = RunLog(cfg)
    dumper = _Dumper(out_dir, log.basename(), dump_meshes)

    space_prev = None
    pairs_prev = None
    last_eta2 = None
    last_lam = None
    last_rel = None
    last_unconv = m
    ncv_hint = None
    pause_ctr = 0
    t_wall0 = time.perf_counter()
    t_cpu0 = time.process_time()

    for step in range(1, cfg.n_max + 1):
        space = DGSpace(mesh)
        K = assemble_stiffness(mesh, spec, space)
        M_mass = assemble_mass(mesh, space)
        fact = factorize(K)

        # landscape solve (every step for landscape-driven strategies)
        ind_land = None
        u_h = None
        if needs_landscape:
            b = assemble_source(mesh, spec.source, space)
            u_h = solve_landscape(fact, b)
            ind_land = eta_landscape(space, spec, u_h)

        # eigensolve: always, except on paused steps
        if strategy == "LR-paused" and step > 1:
            eig_active = pause_ctr >= cfg.pause
            pause_ctr = 0 if eig_active else pause_ctr + 1
        else:
            eig_active = True
            pause_ctr = 0

        def fresh_solve():
            nonlocal eig_cpu, ncv_hint
            t0 = time.process_time()
            out = lowest_eigenpairs(K, M_mass, m, tol_resid=cfg.eig_tol,
                                    seed=cfg.seed, fact=fact, ncv0=ncv_hint)
            eig_cpu += time.process_time() - t0
            ncv_hint = out.ncv_used
            return out

        eig_cpu = 0.0
        if eig_active:
            picard_used = False
            pairs = None
            # the refiner needs ~15 backsolves per pair at estimator-grade
            # tolerance; a full solve costs about ncv backsolves, so the
            # switch pays off only when few pairs are left ("small enough"
            # is also an economic question)
            viable = 0 < last_unconv * 15 <= (ncv_hint or 10 ** 9)
            if (strategy == "LR-paused" and pairs_prev is not None
                    and last_rel is not None and viable
                    and last_unconv <= cfg.picard_threshold):
                refine_idx = [int(k) for k in np.where(last_rel >= cfg.tol)[0]]
                t0 = time.process_time()
                pairs = _warm_restart(K, M_mass, pairs_prev, space_prev,
                                      space, refine_idx, fact, cfg.eig_tol)
                eig_cpu += time.process_time() - t0
                picard_used = pairs is not None
            if pairs is None:
                pairs = fresh_solve()
            inds_eig = eta_eigenpairs(space, spec, pairs.values,
                                      pairs.vectors)
            eta2 = np.array([ind.total for ind in inds_eig])
            if picard_used and (eta2 / pairs.values).max() < 1.2 * cfg.tol:
                # near or past the tolerance with carried pairs: confirm
                # with a full solve so the termination decision and the
                # reported spectrum never depend on carried iterates (the
                # 1.2x margin absorbs estimator noise in the carried pairs)
                pairs = fresh_solve()
                inds_eig = eta_eigenpairs(space, spec, pairs.values,
                                          pairs.vectors)
                eta2 = np.array([ind.total for ind in inds_eig])
            last_eta2 = eta2
            last_lam = pairs.values.copy()
            pairs_prev, space_prev = pairs, space
        else:
            pairs = pairs_prev

        rel = last_eta2 / last_lam
        last_rel = rel
        if strategy == "ER":
            envelope = float(rel[cfg.j - 1])
            eta2_max = float(last_eta2[cfg.j - 1])
        else:
            envelope = float(rel.max())
            eta2_max = float(last_eta2.max())
        last_unconv = int(np.count_nonzero(rel >= cfg.tol))

        log.records.append(StepRecord(
            step=step, dof=space.ndof,
            eta_land2=float(ind_land.total) if ind_land else float("nan"),
            lambdas=last_lam.tolist(), eta2_eig=last_eta2.tolist(),
            eta_max_rel=envelope, eta2_eig_max=eta2_max,
            err_max_rel=_exact_err(last_lam, ref),
            n_unconverged=last_unconv, eig_called=eig_active,
            wall_seconds=time.perf_counter() - t_wall0,
            cpu_seconds=time.process_time() - t_cpu0,
            eig_cpu_seconds=eig_cpu))

        stop_val = eta2_max if cfg.absolute_tol else envelope
        if eig_active and stop_val < cfg.tol:
            log.terminal = "tol"
            dumper.step(step, mesh, space,
                        [ind_land] if ind_land else list(inds_eig))
            break

        # plan the next space
        if strategy == "ER":
            plan = adapt.plan_single_eig(space, inds_eig[cfg.j - 1],
                                         pairs.vectors[:, cfg.j - 1],
                                         r=cfg.r, tol_ana=cfg.tol_ana)
        elif strategy in ("CR-sum", "CR-max") or (
                strategy == "MR" and space.ndof > cfg.mr_threshold):
            phi_list = [pairs.vectors[:, j] for j in range(m)]
            planner = (adapt.plan_cluster_max if strategy == "CR-max"
                       else adapt.plan_cluster_sum)
            plan = planner(space, inds_eig, phi_list,
                           r=cfg.r, tol_ana=cfg.tol_ana)
        else:   # LR, LR-paused, or MR before the switch
            plan = adapt.plan_landscape(space, ind_land, u_h,
                                        r=cfg.r, tol_ana=cfg.tol_ana)

        dumper.step(step, mesh, space,
                    [i for i in ([ind_land] if ind_land else [])], plan)
        mesh = adapt.enforce_local_properties(plan, mesh, p_max=cfg.p_max)

    if out_dir is not None:
        log.write(out_dir)
    return log


def run_single(cfg: RunConfig, **kw) -> RunLog:
    if cfg.strategy != "ER":
        raise ValueError("run_single requires strategy ER")
    return run(cfg, **kw)


def run_cluster(cfg: RunConfig, **kw) -> RunLog:
    if cfg.strategy not in ("CR-sum", "CR-max"):
        raise ValueError("run_cluster requires strategy CR-sum or CR-max")
    return run(cfg, **kw)


def run_landscape(cfg: RunConfig, **kw) -> RunLog:
    if cfg.strategy not in ("LR", "MR"):
        raise ValueError("run_landscape requires strategy LR or MR")
    return run(cfg, **kw)


def run_landscape_paused(cfg: RunConfig, **kw) -> RunLog:
    if cfg.strategy != "LR-paused":
        raise ValueError("run_landscape_paused requires strategy LR-paused")
    return run(cfg, **kw)
