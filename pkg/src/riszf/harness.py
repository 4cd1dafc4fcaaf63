"""Batch sweep runner: seeded Monte Carlo trials over a config grid.

A grid point is one (scheme, phase rule, M, N, tau) combination. Channel
draws are keyed by the (M, N, tau) slice and the trial index only, so
every scheme and phase rule sees the same realizations and curve
comparisons are paired. Spawn-key layout under the master seed, fixed as
a reproducibility contract:

    (dims_index, trial, 0) -> channel draw
    (dims_index, trial, 1) -> estimation error draw
    (dims_index, trial, 2) -> random phase rule
    (dims_index, trial, 3) -> alternating-optimization starting point

Results merge deterministically by grid-point position, so serial and
parallel runs emit byte-identical files.
"""

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product

import numpy as np

from .beamform import (
    RankDeficiencyError,
    bs_ris_zf_precoder,
    bs_ue_zf_precoder,
    normalize_power,
)
from .channel import apply_estimation_error, derive_seed, sample_channels, spawn_rng
from .metrics import (
    TRIAL_CSV_HEADER,
    TrialResult,
    nulling_residual,
    rank_q2,
    sinr_exact,
    sum_rate,
    trial_csv_row,
)
from .phaseopt import (
    PhaseConfig,
    UndefinedPhaseError,
    asymptotic_phase_config_bs_ue_zf,
    asymptotic_phases_and_sinr_bs_ris_zf,
    optimal_phases_bs_ris_zf,
    optimal_phases_bs_ue_zf,
    random_phases,
)
from .sysconfig import (
    BS_RIS_ZF,
    BS_UE_ZF,
    ChannelModelConfig,
    RunConfig,
    SystemConfig,
    validate_config,
    with_dimensions,
)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_FLAGGED = 3

STATUS_OK = "ok"
STATUS_SKIPPED = "skipped"
STATUS_FLAGGED = "flagged"

FAILURE_FLAG_FRACTION = 0.2

SUMMARY_CSV_HEADER = (
    "scheme,phase_rule,M,N,csi_tau,status,trials,failures,"
    "mean_sum_rate,stderr_sum_rate,analytic_sum_rate,analytic_stderr,note"
)
PLOTDATA_CSV_HEADER = "curve,M,mean_rate,stderr"


@dataclass(frozen=True)
class GridPoint:
    index: int
    dims_index: int
    scheme: str
    phase_rule: str
    M: int
    N: int
    tau: float


@dataclass(frozen=True)
class PointSummary:
    scheme: str
    phase_rule: str
    M: int
    N: int
    tau: float
    status: str
    trials: int
    failures: int
    mean_sum_rate: float
    stderr_sum_rate: float
    analytic_sum_rate: float
    analytic_stderr: float
    note: str = ""


@dataclass(frozen=True)
class SweepSummary:
    points: tuple
    trials: tuple

    @property
    def flagged(self) -> bool:
        return any(p.status == STATUS_FLAGGED for p in self.points)


def enumerate_grid(run: RunConfig) -> list[GridPoint]:
    """Fixed enumeration order: schemes, then rules, then (M, N, tau)."""
    dims = list(product(run.sweep_M, run.sweep_N, run.csi_tau))
    points = []
    for scheme, rule in product(run.schemes, run.phase_rules):
        for d, (M, N, tau) in enumerate(dims):
            points.append(
                GridPoint(
                    index=len(points),
                    dims_index=d,
                    scheme=scheme,
                    phase_rule=rule,
                    M=M,
                    N=N,
                    tau=tau,
                )
            )
    return points


def _design_phases(
    point: GridPoint,
    chs_hat,
    master_seed: int,
    trial: int,
) -> tuple[PhaseConfig, float]:
    """Phase shifts for one trial from the (possibly estimated) channels."""
    cfg = chs_hat.cfg
    if point.phase_rule == "random":
        seed = derive_seed(master_seed, point.dims_index, trial, 2)
        return random_phases(cfg, seed), 0.0
    if point.phase_rule == "optimal":
        if point.scheme == BS_UE_ZF:
            init_seed = derive_seed(master_seed, point.dims_index, trial, 3)
            pc, _ = optimal_phases_bs_ue_zf(chs_hat, init_seed=init_seed)
            return pc, 0.0
        return optimal_phases_bs_ris_zf(chs_hat), 0.0
    if point.phase_rule == "asymptotic":
        if point.scheme == BS_UE_ZF:
            pc, art = asymptotic_phase_config_bs_ue_zf(chs_hat)
            return pc, art.fixed_point_residual
        R_list = [chs_hat.R] * cfg.K
        phases = np.empty((cfg.K, cfg.N))
        for k in range(cfg.K):
            phases[k], _, _ = asymptotic_phases_and_sinr_bs_ris_zf(
                chs_hat.h_block(k),
                R_list,
                cfg.K,
                cfg.U_d,
                k,
                cfg.noise_variance_blocked[k],
            )
        return PhaseConfig(phases=phases, origin="asymptotic"), 0.0
    raise ValueError(f"unknown phase rule {point.phase_rule!r}")


def _analytic_sum_rate(chs, cfg: SystemConfig) -> float:
    """Large-M sum rate: blocked UEs at their SINR ceilings, direct UEs
    at the interference-free 1/sigma^2 the RIS-side nulling guarantees."""
    R_list = [chs.R] * cfg.K
    total = 0.0
    for k in range(cfg.K):
        _, _, sinr_star = asymptotic_phases_and_sinr_bs_ris_zf(
            chs.h_block(k),
            R_list,
            cfg.K,
            cfg.U_d,
            k,
            cfg.noise_variance_blocked[k],
        )
        total += math.log2(1.0 + sinr_star)
    for u in range(cfg.U_d):
        total += math.log2(1.0 + 1.0 / cfg.noise_variance_direct[u])
    return total


def _point_skip_note(cfg: SystemConfig, ch: ChannelModelConfig, point: GridPoint):
    report = validate_config(cfg, ch, point.scheme)
    if not report.ok:
        return "; ".join(f"{c.name}: {c.detail}" for c in report.failures)
    if point.phase_rule == "asymptotic" and any(l != 1 for l in cfg.L):
        return "asymptotic phase rule needs one UE per RIS"
    return None


def run_point(
    point: GridPoint,
    cfg: SystemConfig,
    ch: ChannelModelConfig,
    run: RunConfig,
) -> tuple[PointSummary, list[TrialResult]]:
    """All trials for one grid point; failures recorded, never averaged."""
    cfg_point = with_dimensions(cfg, point.M, point.N)
    note = _point_skip_note(cfg_point, ch, point)
    if note is not None:
        return (
            PointSummary(
                scheme=point.scheme,
                phase_rule=point.phase_rule,
                M=point.M,
                N=point.N,
                tau=point.tau,
                status=STATUS_SKIPPED,
                trials=0,
                failures=0,
                mean_sum_rate=math.nan,
                stderr_sum_rate=math.nan,
                analytic_sum_rate=math.nan,
                analytic_stderr=math.nan,
                note=note,
            ),
            [],
        )

    want_analytic = (
        point.scheme == BS_RIS_ZF and cfg_point.power_mode == "paper_literal"
    )
    results: list[TrialResult] = []
    analytic_vals: list[float] = []
    failures = 0
    for t in range(run.trials):
        rng = spawn_rng(run.master_seed, point.dims_index, t, 0)
        seed_tag = derive_seed(run.master_seed, point.dims_index, t, 0)
        chs = sample_channels(cfg_point, ch, rng)
        try:
            chs_hat = apply_estimation_error(
                chs, point.tau, derive_seed(run.master_seed, point.dims_index, t, 1)
            )
            pc, fp_residual = _design_phases(point, chs_hat, run.master_seed, t)
            if point.scheme == BS_UE_ZF:
                W = bs_ue_zf_precoder(chs_hat, pc.phases)
            else:
                W = bs_ris_zf_precoder(chs_hat)
            W, _ = normalize_power(W, cfg_point)
            sb, sd = sinr_exact(chs, pc, W, cfg_point)
            if want_analytic:
                analytic_vals.append(_analytic_sum_rate(chs, cfg_point))
        except (RankDeficiencyError, UndefinedPhaseError, np.linalg.LinAlgError):
            failures += 1
            continue
        sinrs = np.concatenate([sb, sd])
        results.append(
            TrialResult(
                sinr_blocked=sb,
                sinr_direct=sd,
                rates=np.log2(1.0 + sinrs),
                sum_rate=sum_rate(sinrs),
                nulling_residual=nulling_residual(chs, pc, W, cfg_point),
                fixed_point_residual=fp_residual,
                rank_q2=rank_q2(chs),
                seed=seed_tag,
                trial=t,
                scheme=point.scheme,
                phase_rule=point.phase_rule,
                M=point.M,
                N=point.N,
                K=cfg_point.K,
                U_d=cfg_point.U_d,
                csi_tau=point.tau,
            )
        )

    status = STATUS_OK
    note_text = ""
    if failures > FAILURE_FLAG_FRACTION * run.trials:
        status = STATUS_FLAGGED
        note_text = f"{failures} of {run.trials} trials failed"
    mean, stderr = _mean_stderr([r.sum_rate for r in results])
    a_mean, a_stderr = _mean_stderr(analytic_vals)
    return (
        PointSummary(
            scheme=point.scheme,
            phase_rule=point.phase_rule,
            M=point.M,
            N=point.N,
            tau=point.tau,
            status=status,
            trials=len(results),
            failures=failures,
            mean_sum_rate=mean,
            stderr_sum_rate=stderr,
            analytic_sum_rate=a_mean,
            analytic_stderr=a_stderr,
            note=note_text,
        ),
        results,
    )


def _mean_stderr(values) -> tuple[float, float]:
    if not values:
        return math.nan, math.nan
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    if arr.size < 2:
        return mean, 0.0
    return mean, float(arr.std(ddof=1) / math.sqrt(arr.size))


def _run_point_star(args):
    return run_point(*args)


def run_sweep(
    run: RunConfig, cfg: SystemConfig, ch: ChannelModelConfig
) -> SweepSummary:
    """Execute the whole grid; identical output for any thread count."""
    points = enumerate_grid(run)
    tasks = [(p, cfg, ch, run) for p in points]
    if run.threads > 1:
        with ProcessPoolExecutor(max_workers=run.threads) as pool:
            outcomes = list(pool.map(_run_point_star, tasks))
    else:
        outcomes = [run_point(*t) for t in tasks]
    summaries = tuple(s for s, _ in outcomes)
    trials = tuple(r for _, rs in outcomes for r in rs)
    return SweepSummary(points=summaries, trials=trials)


def _fmt(x: float) -> str:
    if isinstance(x, float) and math.isnan(x):
        return ""
    return repr(float(x))


def _summary_row(p: PointSummary) -> str:
    note = p.note.replace(",", ";").replace("\n", " ")
    return ",".join(
        [
            p.scheme,
            p.phase_rule,
            str(p.M),
            str(p.N),
            repr(float(p.tau)),
            p.status,
            str(p.trials),
            str(p.failures),
            _fmt(p.mean_sum_rate),
            _fmt(p.stderr_sum_rate),
            _fmt(p.analytic_sum_rate),
            _fmt(p.analytic_stderr),
            note,
        ]
    )


def _curve_label(rule: str, N: int, tau: float) -> str:
    return f"{rule}_N{N}_tau{float(tau)!r}"


def _plotdata_lines(points, scheme: str) -> list[str]:
    lines = [PLOTDATA_CSV_HEADER]
    rows = [p for p in points if p.scheme == scheme and p.trials > 0]
    for p in rows:
        lines.append(
            ",".join(
                [
                    _curve_label(p.phase_rule, p.N, p.tau),
                    str(p.M),
                    _fmt(p.mean_sum_rate),
                    _fmt(p.stderr_sum_rate),
                ]
            )
        )
    seen = set()
    for p in rows:
        key = (p.M, p.N, p.tau)
        if key in seen or math.isnan(p.analytic_sum_rate):
            continue
        seen.add(key)
        lines.append(
            ",".join(
                [
                    _curve_label("analytic", p.N, p.tau),
                    str(p.M),
                    _fmt(p.analytic_sum_rate),
                    _fmt(p.analytic_stderr),
                ]
            )
        )
    return lines


def emit_outputs(summary: SweepSummary, out_dir: str) -> list[str]:
    """Write summary.csv, trials.csv, and per-scheme plot data files."""
    os.makedirs(out_dir, exist_ok=True)
    written = []

    path = os.path.join(out_dir, "summary.csv")
    lines = [SUMMARY_CSV_HEADER] + [_summary_row(p) for p in summary.points]
    _write_lines(path, lines)
    written.append(path)

    path = os.path.join(out_dir, "trials.csv")
    lines = [TRIAL_CSV_HEADER] + [trial_csv_row(t) for t in summary.trials]
    _write_lines(path, lines)
    written.append(path)

    for scheme in (BS_UE_ZF, BS_RIS_ZF):
        if not any(p.scheme == scheme for p in summary.points):
            continue
        path = os.path.join(out_dir, f"plotdata_{scheme}.csv")
        _write_lines(path, _plotdata_lines(summary.points, scheme))
        written.append(path)
    return written


def _write_lines(path: str, lines: list[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
