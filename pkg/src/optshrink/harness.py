"""Monte-Carlo runner regenerating the denoising experiments as CSV tables.

Seed derivation: the trial ``t`` at grid index ``g`` draws from
``PCG64(SeedSequence(seed, spawn_key=(g, t)))``, so every (grid, trial) pair
gets fresh, non-overlapping randomness and results do not depend on the order
in which trials execute.
"""
import csv
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import integrate

from . import __version__, _kernels
from .asymptotics import limiting_mse, predict_spike, spike_location
from .dtransform import MpParams, mp_density
from .linalg import RNG_NAME, SignalSpec, ValidationError, sample_gaussian_matrix, sample_mask, svd
from .oracle import exact_squared_error, oracle_diagonal, oracle_weights, rank_regularized_weights
from .shrinkage import eym_weights, optshrink, svt_weights

log = logging.getLogger(__name__)

EXPERIMENTS = ("weights-vs-theta", "mse-vs-rhat", "relmse-accuracy", "missing-data", "shrinkers", "svt-compare")

DEFAULT_GRIDS = {
    "weights-vs-theta": [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0],
    "mse-vs-rhat": [1, 2, 3, 4, 5],
    "relmse-accuracy": [1.0, 2.0, 4.0, 8.0],
    "missing-data": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
    "shrinkers": [0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0],
    "svt-compare": [0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0],
}

# fixed spikes for experiments that do not sweep theta
DEFAULT_THETAS = {
    "mse-vs-rhat": [10.0],
    "missing-data": [2.0],
    "relmse-accuracy": [],
}

CSV_HEADER = ["sweep", "estimator", "mean_weight", "mean_nse", "stderr", "predicted"]


@dataclass
class ExperimentConfig:
    experiment: str
    n: int = 400
    m: int = 400
    trials: int = 100
    seed: int = 0
    grid: list = None
    thetas: list = None
    lambdas: list = field(default_factory=lambda: [1.0, 2.0])
    threads: int = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValidationError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if self.n < 2 or self.m < 2:
            raise ValidationError("n and m must be >= 2")
        if self.n > self.m:
            self.n, self.m = self.m, self.n
        if self.grid is None:
            self.grid = list(DEFAULT_GRIDS[self.experiment])
        if not self.grid:
            raise ValidationError("grid must be nonempty")
        if self.thetas is None:
            self.thetas = list(DEFAULT_THETAS.get(self.experiment, []))
        self.grid = [float(g) for g in self.grid]
        self.thetas = [float(t) for t in self.thetas]
        self.lambdas = [float(x) for x in self.lambdas]

    @property
    def mp(self):
        return MpParams(c=self.n / self.m, p=1.0)


@dataclass
class ResultRow:
    sweep: float
    estimator: str
    mean_weight: float
    mean_nse: float
    stderr: float
    predicted: float
    trials: int = 0
    flagged: int = 0


def trial_rng(seed, grid_index, trial):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(grid_index, trial))))


def _worker_count(config):
    env = os.environ.get("OPTSHRINK_THREADS")
    cap = int(env) if env else (os.cpu_count() or 1)
    want = config.threads if config.threads else cap
    return max(1, min(want, cap))


# -- per-trial simulation -----------------------------------------------------


def _observe(signal, n, m, rng, p=1.0):
    noise = sample_gaussian_matrix(n, m, 1.0 / m, rng)
    obs = signal.matrix() + noise
    if p < 1.0:
        obs = obs * sample_mask(n, m, p, rng)
    return obs


def _evaluate(target, factors, estimators, diag):
    """SE of each weight vector against ``target``; returns label -> (w1, se, flagged)."""
    out = {}
    for label, weights, flagged in estimators:
        if weights is None:
            out[label] = (np.nan, np.nan, True)
            continue
        w1 = float(weights.weights[0]) if len(weights) else 0.0
        out[label] = (w1, exact_squared_error(target, factors, weights, diag), flagged)
    return out


def _optshrink_entry(factors, r_hat):
    try:
        rep = optshrink(factors, r_hat)
    except ValidationError:
        return ("optshrink", None, True), None
    return ("optshrink", rep.weights, bool(rep.metadata["poleFlags"])), rep


def _run_trial(config, grid_index, trial):
    rng = trial_rng(config.seed, grid_index, trial)
    x = config.grid[grid_index]
    n, m = config.n, config.m
    exp = config.experiment

    if exp in ("weights-vs-theta", "shrinkers", "svt-compare"):
        signal = SignalSpec.random([x], n, m, rng)
        factors = svd(_observe(signal, n, m, rng))
        diag = oracle_diagonal(signal, factors)
        entry, _ = _optshrink_entry(factors, 1)
        ests = [entry, ("eym", eym_weights(factors, 1), False), ("oracle", oracle_weights(diag, 1), False)]
        if exp != "weights-vs-theta":
            ests += [(f"svt-{lam:g}", svt_weights(factors, lam), False) for lam in config.lambdas]
        res = _evaluate(signal, factors, ests, diag)
        norm = x * x
        return {k: (w, se / norm, f) for k, (w, se, f) in res.items()}

    if exp == "mse-vs-rhat":
        r_hat = int(x)
        signal = SignalSpec.random(config.thetas, n, m, rng)
        factors = svd(_observe(signal, n, m, rng))
        diag = oracle_diagonal(signal, factors)
        entry, _ = _optshrink_entry(factors, r_hat)
        ests = [
            entry,
            ("eym", eym_weights(factors, r_hat), False),
            ("oracle", oracle_weights(diag, r_hat), False),
            ("oracle-rr", rank_regularized_weights(diag, r_hat), False),
        ]
        res = _evaluate(signal, factors, ests, diag)
        norm = float(np.sum(signal.thetas**2))
        return {k: (w, se / norm, f) for k, (w, se, f) in res.items()}

    if exp == "relmse-accuracy":
        thetas = sorted(config.thetas + [x], reverse=True)
        signal = SignalSpec.random(thetas, n, m, rng)
        factors = svd(_observe(signal, n, m, rng))
        diag = oracle_diagonal(signal, factors)
        entry, rep = _optshrink_entry(factors, signal.rank)
        res = _evaluate(signal, factors, [entry], diag)
        norm = float(np.sum(signal.thetas**2))
        w, se, f = res["optshrink"]
        rel = rep.rel_mse_estimate if rep is not None else np.nan
        return {"optshrink": (w, se / norm, f), "relmse-estimate": (w, rel, f)}

    if exp == "missing-data":
        p = x
        signal = SignalSpec.random(config.thetas, n, m, rng)
        factors = svd(_observe(signal, n, m, rng, p=p))
        # the data-driven weights approximate p*S; divide by p to denoise S
        target = SignalSpec(p * signal.thetas, signal.left, signal.right)
        diag = oracle_diagonal(target, factors)
        r = signal.rank
        entry, _ = _optshrink_entry(factors, r)
        ests = [entry, ("eym", eym_weights(factors, r), False), ("oracle", oracle_weights(diag, r), False)]
        res = _evaluate(target, factors, ests, diag)
        norm = float(np.sum(target.thetas**2))
        return {k: (w / p, se / norm, f) for k, (w, se, f) in res.items()}

    raise ValidationError(f"unknown experiment {exp!r}")


# -- asymptotic overlays ------------------------------------------------------


def _svt_bulk_energy(lam, mp, count):
    """count * E[(t - lam)_+^2] under the noise singular-value law."""
    lo = max(lam, mp.lower_edge)
    if lo >= mp.edge:
        return 0.0
    val, _ = integrate.quad(lambda t: (t - lam) ** 2 * mp_density(t, mp), lo, mp.edge, limit=200)
    return count * val


def _predicted(config, x, label):
    mp = config.mp
    exp = config.experiment
    b = mp.edge
    q = config.n

    if exp in ("weights-vs-theta", "shrinkers", "svt-compare"):
        pred = predict_spike(x, mp)
        if label in ("optshrink", "oracle"):
            w = pred.w_opt_limit
        elif label == "eym":
            w = pred.rho
        else:
            w = max(pred.rho - float(label.split("-", 1)[1]), 0.0)
        if exp != "svt-compare":
            return w
        se = limiting_mse([x], [w], mp, assume_delocalization=True)
        if label.startswith("svt-"):
            se += _svt_bulk_energy(float(label.split("-", 1)[1]), mp, q - 1)
        return se / (x * x)

    if exp == "mse-vs-rhat":
        r_hat = int(x)
        thetas = np.asarray(config.thetas)
        preds = [predict_spike(t, mp) for t in thetas]
        if label == "eym":
            w = [pr.rho for pr in preds][:r_hat] + [b] * max(r_hat - thetas.size, 0)
        else:
            w = [pr.w_opt_limit for pr in preds][:r_hat]
        return limiting_mse(thetas, w, mp, assume_delocalization=True) / float(np.sum(thetas**2))

    if exp == "relmse-accuracy":
        thetas = np.asarray(sorted(config.thetas + [x], reverse=True))
        w = [predict_spike(t, mp).w_opt_limit for t in thetas]
        return limiting_mse(thetas, w, mp, assume_delocalization=True) / float(np.sum(thetas**2))

    if exp == "missing-data":
        mp = MpParams(c=mp.c, p=x)
        pred = predict_spike(config.thetas[0], mp)
        if label == "eym":
            return pred.rho / x
        return pred.w_opt_limit / x

    return np.nan


# -- driver -------------------------------------------------------------------


def simulate_trials(config: ExperimentConfig) -> list:
    """Raw per-trial outcomes, one list per grid point.

    Each trial is a dict ``label -> (leading weight, normalized SE, flagged)``.
    """
    tasks = [(g, t) for g in range(len(config.grid)) for t in range(config.trials)]
    workers = _worker_count(config)
    log.info("running %s: %d tasks on %d worker(s)", config.experiment, len(tasks), workers)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda gt: _run_trial(config, *gt), tasks))
    else:
        results = [_run_trial(config, g, t) for g, t in tasks]
    return [results[g * config.trials : (g + 1) * config.trials] for g in range(len(config.grid))]


def aggregate(config: ExperimentConfig, trials: list) -> list:
    rows = []
    for x, chunk in zip(config.grid, trials):
        for label in sorted(chunk[0]):
            w = np.array([c[label][0] for c in chunk], dtype=np.float64)
            nse = np.array([c[label][1] for c in chunk], dtype=np.float64)
            flagged = int(sum(bool(c[label][2]) for c in chunk))
            stderr = float(np.std(nse, ddof=1) / np.sqrt(nse.size)) if nse.size > 1 else 0.0
            try:
                pred = float(_predicted(config, x, label))
            except ValidationError:
                pred = np.nan
            rows.append(ResultRow(x, label, float(np.mean(w)), float(np.mean(nse)), stderr, pred, len(chunk), flagged))
    rows.sort(key=lambda r: (r.sweep, r.estimator))
    return rows


def run_experiment(config: ExperimentConfig) -> list:
    return aggregate(config, simulate_trials(config))


def _fmt(x):
    return f"{x:.10g}"


def write_csv(rows, path):
    rows = sorted(rows, key=lambda r: (r.sweep, r.estimator))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in rows:
            writer.writerow([_fmt(r.sweep), r.estimator, _fmt(r.mean_weight), _fmt(r.mean_nse), _fmt(r.stderr), _fmt(r.predicted)])


def read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            ResultRow(
                float(d["sweep"]), d["estimator"], float(d["mean_weight"]), float(d["mean_nse"]),
                float(d["stderr"]), float(d["predicted"]),
            )
            for d in reader
        ]


def write_sidecar(config, rows, path):
    meta = {
        "config": asdict(config),
        "rng": RNG_NAME,
        "seed": config.seed,
        "seedDerivation": "PCG64(SeedSequence(seed, spawn_key=(grid_index, trial)))",
        "version": __version__,
        "kernelBackend": _kernels.backend_name(),
        "flaggedRows": [
            {"sweep": r.sweep, "estimator": r.estimator, "flagged": r.flagged} for r in rows if r.flagged
        ],
    }
    meta["config"].pop("threads", None)
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
