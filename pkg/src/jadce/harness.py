"""Monte-Carlo harness: single trials, axis sweeps and the canonical figure
sweeps, with a fixed seed discipline and a flat CSV/JSON result schema.

Seed discipline: trial i draws its scenario, channel, noise and pilot from
sub-streams of one SeedSequence keyed by the trial seed, so every algorithm
run with the same (config, seed) consumes the identical quantized frame. Trial
seeds within a sweep are base_seed + i at every point, which keeps common
random numbers across points and algorithms.
"""

from __future__ import annotations

import csv
import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import oamp_mmv_single, swomp
from .channel import assemble_H
from .config import SystemConfig
from .frontend import build_frame
from .pilot import make_pilot
from .scenario import place_devices, power_control, sample_activity
from .tsoamp import DetectionResult, run_tsoamp

NMSE_FLOOR_DB = -120.0
WORKERS_ENV = "JADCE_WORKERS"

ALGORITHMS = {
    "tsoamp": run_tsoamp,
    "oampmmv": oamp_mmv_single,
    "swomp": swomp,
}

# config overrides applied on top of the base profile for ablation ids
ALGO_OVERRIDES = {
    "tsoamp": {},
    "oampmmv": {},
    "swomp": {},
    "tsoamp-nosub": {"N_sub": 1},
    "tsoamp-lowres": {"n_hires": 0},
    "tsoamp-noavg": {"common_support": False},
}


def resolve_algorithm(algo: str):
    if algo not in ALGO_OVERRIDES:
        raise ValueError(f"unknown algorithm '{algo}' (have: {sorted(ALGO_OVERRIDES)})")
    solver = ALGORITHMS[algo.split("-")[0]]
    return solver, ALGO_OVERRIDES[algo]


@dataclass
class TrialMetrics:
    algorithm: str
    seed: int
    aer: float
    nmse: float | None      # linear ratio ||H - H_hat||^2 / ||H||^2, None when ||H|| = 0
    runtime_s: float
    n_iter1: int
    n_iter2: int
    clamp_events: dict
    finite: bool

    @property
    def nmse_db(self) -> float | None:
        if self.nmse is None:
            return None
        if self.nmse <= 0.0:
            return NMSE_FLOOR_DB
        return max(10.0 * np.log10(self.nmse), NMSE_FLOOR_DB)


def compute_metrics(alpha: np.ndarray, alpha_hat: np.ndarray,
                    H: np.ndarray, H_hat: np.ndarray) -> tuple[float, float | None]:
    aer = float(np.mean(np.abs(alpha_hat - alpha)))
    den = float(np.sum(np.abs(H) ** 2))
    if den == 0.0:
        return aer, None
    return aer, float(np.sum(np.abs(H - H_hat) ** 2) / den)


def build_trial_frame(cfg: SystemConfig, seed: int):
    """Deterministic (frame, pilot, truth) for one trial seed."""
    ss = np.random.SeedSequence(seed)
    rng_scen, rng_noise, rng_pilot = (np.random.default_rng(c) for c in ss.spawn(3))
    placement = place_devices(cfg, rng_scen)
    activity = sample_activity(cfg, rng_scen)
    powers = power_control(cfg, placement.d_mid)
    chan = assemble_H(activity, placement, powers, cfg)
    pilot = make_pilot(cfg.M, cfg.K, rng_pilot)
    frame = build_frame(cfg, chan, pilot, rng_noise)
    return frame, pilot, chan, activity


def run_trial(cfg: SystemConfig, algo: str, seed: int) -> TrialMetrics:
    solver, overrides = resolve_algorithm(algo)
    cfg_a = cfg.replace(**overrides) if overrides else cfg
    frame, pilot, chan, activity = build_trial_frame(cfg_a, seed)
    t0 = time.perf_counter()
    res: DetectionResult = solver(frame, pilot, cfg_a)
    runtime = time.perf_counter() - t0
    aer, nmse = compute_metrics(activity.alpha, res.alpha_hat, chan.H, res.H_hat)
    finite = bool(np.all(np.isfinite(res.H_hat))
                  and np.all(np.isfinite(res.lambda_final))
                  and (res.X_hat is None or np.all(np.isfinite(res.X_hat))))
    return TrialMetrics(algorithm=algo, seed=seed, aer=aer, nmse=nmse,
                        runtime_s=runtime, n_iter1=res.n_iter1,
                        n_iter2=res.n_iter2, clamp_events=res.clamp_events,
                        finite=finite)


# -- sweeps -----------------------------------------------------------------

AXES = ("M", "P_t", "N_r", "d", "n_hires")


def apply_axis(cfg: SystemConfig, axis: str, value: float) -> SystemConfig:
    if axis == "M":
        return cfg.replace(M=int(value))
    if axis == "P_t":
        return cfg.replace(P_t=float(value))
    if axis == "N_r":
        ratio = cfg.G_r // cfg.N_r
        return cfg.replace(N_r=int(value), G_r=int(value) * ratio)
    if axis == "d":
        # devices concentrated around d; scattered paths keep the default
        # 200 m of extra admissible length beyond the device band
        return cfg.replace(d_los_range=(value - 5.0, value + 5.0),
                           d_nlos_range=(value - 5.0, value + 205.0))
    if axis == "n_hires":
        return cfg.replace(n_hires=int(value))
    raise ValueError(f"unknown sweep axis '{axis}' (have: {AXES})")


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)   # dicts with the CSV schema keys
    meta: dict = field(default_factory=dict)

    def extend(self, other: "ResultTable") -> None:
        self.rows.extend(other.rows)


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def emit(table: ResultTable, csv_path: str) -> tuple[str, str]:
    """Write the flat CSV and a JSON mirror (rows plus config echo)."""
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["axis", "value", "algorithm", "metric", "mean", "stderr", "trials"])
        for row in table.rows:
            writer.writerow([row["axis"], _fmt(row["value"]), row["algorithm"],
                             row["metric"], _fmt(row["mean"]), _fmt(row["stderr"]),
                             row["trials"]])
    json_path = os.path.splitext(csv_path)[0] + ".json"
    with open(json_path, "w") as fh:
        json.dump({"meta": table.meta, "rows": table.rows}, fh, indent=2)
    return csv_path, json_path


def load_table(csv_path: str) -> list[dict]:
    with open(csv_path, newline="") as fh:
        return [dict(row) for row in csv.DictReader(fh)]


def _worker_count(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return 1


def _run_point(args):
    cfg, algo, seed = args
    return run_trial(cfg, algo, seed)


def sweep(cfg: SystemConfig, axis: str, values, algos, trials: int, seed: int,
          workers: int | None = None) -> ResultTable:
    """Mean/stderr rows for every (axis point, algorithm, metric)."""
    values = list(values)
    algos = list(algos)
    jobs = []
    for value in values:
        cfg_v = apply_axis(cfg, axis, value)
        for algo in algos:
            for i in range(trials):
                jobs.append((cfg_v, algo, seed + i))
    nworkers = _worker_count(workers)
    if nworkers > 1:
        with ProcessPoolExecutor(max_workers=nworkers) as pool:
            results = list(pool.map(_run_point, jobs, chunksize=4))
    else:
        results = [_run_point(j) for j in jobs]

    table = ResultTable(meta={"axis": axis, "values": values, "algorithms": algos,
                              "trials": trials, "seed": seed,
                              "config": cfg.to_dict(), "config_hash": cfg.hash()})
    idx = 0
    for value in values:
        for algo in algos:
            batch = results[idx:idx + trials]
            idx += trials
            if not all(m.finite for m in batch):
                raise RuntimeError(f"non-finite estimate at {axis}={value}, algo={algo}")
            table.rows.extend(_summarize(axis, value, algo, batch))
    return table


def _summarize(axis: str, value, algo: str, batch: list[TrialMetrics]) -> list[dict]:
    n = len(batch)
    aer = np.array([m.aer for m in batch])
    rows = [{
        "axis": axis, "value": value, "algorithm": algo, "metric": "aer",
        "mean": float(aer.mean()),
        "stderr": float(aer.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
        "trials": n,
    }]
    ratios = np.array([m.nmse for m in batch if m.nmse is not None])
    if len(ratios):
        mean_ratio = float(ratios.mean())
        se_ratio = float(ratios.std(ddof=1) / np.sqrt(len(ratios))) if len(ratios) > 1 else 0.0
        if mean_ratio <= 0.0:
            mean_db, se_db = NMSE_FLOOR_DB, 0.0
        else:
            mean_db = max(10.0 * np.log10(mean_ratio), NMSE_FLOOR_DB)
            se_db = 10.0 / np.log(10.0) * se_ratio / mean_ratio
        rows.append({"axis": axis, "value": value, "algorithm": algo,
                     "metric": "nmse_db", "mean": mean_db, "stderr": se_db,
                     "trials": len(ratios)})
    # wall-clock statistics stay on TrialMetrics; keeping them out of the
    # table is what makes repeat runs byte-identical
    return rows


# -- canonical figure sweeps ------------------------------------------------

FIGURE_IDS = ("aer_vs_m", "aer_vs_pt", "nmse_vs_m", "nmse_vs_pt",
              "gains_vs_m_nr", "nmse_vs_d", "metrics_vs_hires")


def canonical_figures(cfg: SystemConfig, out_dir: str, trials: int, seed: int,
                      workers: int | None = None) -> dict:
    """Run the five canonical sweeps and write one CSV per sweep plus a
    manifest mapping figure ids to the CSV that feeds them."""
    os.makedirs(out_dir, exist_ok=True)
    std_algos = ["tsoamp", "oampmmv", "swomp"]
    sweeps = {
        "m_sweep": ("M", [20, 30, 40, 50, 60], std_algos),
        "pt_sweep": ("P_t", [-10, -5, 0, 5, 10], std_algos),
        "nr_sweep": ("N_r", [64, 96, 128, 192], ["tsoamp", "oampmmv"]),
        "d_sweep": ("d", [20, 50, 100, 200], ["tsoamp", "tsoamp-nosub"]),
        "hires_sweep": ("n_hires", [0, 4, 8, cfg.N_r], ["tsoamp"]),
    }
    tables = {}
    paths = {}
    for name, (axis, values, algos) in sweeps.items():
        tables[name] = sweep(cfg, axis, values, algos, trials, seed, workers)
        paths[name] = os.path.join(out_dir, name + ".csv")
        emit(tables[name], paths[name])
    gains = ResultTable(meta={"combined": ["m_sweep", "nr_sweep"],
                              "config": cfg.to_dict(), "seed": seed})
    gains.extend(tables["m_sweep"])
    gains.extend(tables["nr_sweep"])
    paths["gains"] = os.path.join(out_dir, "gains.csv")
    emit(gains, paths["gains"])

    manifest = {
        "aer_vs_m": paths["m_sweep"],
        "aer_vs_pt": paths["pt_sweep"],
        "nmse_vs_m": paths["m_sweep"],
        "nmse_vs_pt": paths["pt_sweep"],
        "gains_vs_m_nr": paths["gains"],
        "nmse_vs_d": paths["d_sweep"],
        "metrics_vs_hires": paths["hires_sweep"],
    }
    manifest_path = os.path.join(out_dir, "manifest.json")
    with open(manifest_path, "w") as fh:
        json.dump({"figures": manifest, "seed": seed, "trials": trials,
                   "config": cfg.to_dict()}, fh, indent=2)
    return manifest
