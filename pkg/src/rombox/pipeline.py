"""End-to-end study: sample, simulate, reduce both spaces, optimize.

The campaign mirrors a full design study around a pluggable oracle:

1. a Halton design over the parameter box,
2. one full-order observation per point -- time-resolved oracles are
   shortcut through the spectral forecaster (fit on a few early
   snapshots, read the regime), steady oracles report their field
   directly,
3. a POD-with-interpolation surrogate over the full parameter space,
4. gradient samples -> covariance -> active subspace of the scalar
   objective,
5. a second design stratified along the active direction, with its own
   surrogate over the 1-d active variable,
6. surrogate-based minimization and a single audited truth evaluation.

Every expensive stage streams its results into an append-only CSV
ledger under the output directory, so an interrupted run resumes
without recomputing finished samples, and two runs of the same config
produce byte-identical reports.  Wall-clock numbers go to a sidecar
file (``timings.json``) because they are the one legitimately
nondeterministic output.
"""

import json
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import dmd, podi
from .config import DEFAULT_CONFIG, merge_defaults
from .errors import ConfigError, NumericsError, OracleError
from .oracles import has_capability
from .sampling import derive_seed, sample_box
from .subspace import (
    estimate_covariance,
    estimate_gradients,
    fit_subspace,
    project,
    sample_active,
    surrogate_g,
)

__all__ = [
    "CampaignConfig",
    "CampaignReport",
    "OptimizeResult",
    "sample_full",
    "run_campaign",
    "optimize",
    "audit",
]

REPORT_SCHEMA = "rombox/report-v1"


@dataclass(frozen=True)
class CampaignConfig:
    """Validated campaign settings (see ``rombox --schema`` for docs)."""

    seed: int
    output_dir: str
    n_pod: int
    n_pod_as: int
    active_dim: object
    gradient_scheme: str
    fd_step: float
    neighbors: object
    skip_tolerance: float
    workers: int
    dmd_settings: dict
    podi_rank: object
    podi_interp: str
    optimizer_budget: int
    optimizer_surrogate: str
    oracle_spec: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, cfg):
        """Build from a (possibly partial) config mapping; defaults fill gaps."""
        cfg = merge_defaults(cfg)
        camp = cfg["campaign"]
        out = cls(
            seed=int(cfg["seed"]),
            output_dir=str(cfg["output_dir"]),
            n_pod=int(camp["n_pod"]),
            n_pod_as=int(camp["n_pod_as"]),
            active_dim=camp["active_dim"],
            gradient_scheme=str(camp["gradient_scheme"]),
            fd_step=float(camp["fd_step"]),
            neighbors=camp["neighbors"],
            skip_tolerance=float(camp["skip_tolerance"]),
            workers=int(camp["workers"]),
            dmd_settings=dict(camp["dmd"]),
            podi_rank=camp["podi"]["rank"],
            podi_interp=str(camp["podi"]["interp"]),
            optimizer_budget=int(camp["optimizer"]["budget"]),
            optimizer_surrogate=str(camp["optimizer"]["surrogate"]),
            oracle_spec=dict(cfg.get("oracle", {})),
        )
        if out.n_pod < 2 or out.n_pod_as < 2:
            raise ConfigError("n_pod and n_pod_as must be >= 2")
        if not 0.0 < out.skip_tolerance <= 1.0:
            raise ConfigError("skip_tolerance must lie in (0, 1]")
        if out.optimizer_budget < 10:
            raise ConfigError("optimizer budget must be >= 10")
        if out.gradient_scheme not in ("analytic", "central-fd", "local-linear"):
            raise ConfigError(f"unknown gradient scheme '{out.gradient_scheme}'")
        if out.optimizer_surrogate not in ("auto", "podi-functional", "active-g"):
            raise ConfigError(f"unknown surrogate kind '{out.optimizer_surrogate}'")
        return out


@dataclass
class OptimizeResult:
    mu_star: np.ndarray
    value: float
    trace: list  # (mu tuple, surrogate value) per evaluation


@dataclass
class CampaignReport:
    """Everything the study produced, minus wall-clock (kept separately)."""

    decay_full: list
    decay_as: list
    as_spectrum: list
    w1: list
    optimizer: OptimizeResult
    audit_true_value: float
    audit_gap: float
    n_skipped: int
    n_fallback: int
    config_echo: dict
    timings: dict = field(default_factory=dict)

    def to_json_dict(self):
        """Deterministic report content; excludes timings and paths."""
        return {
            "schema": REPORT_SCHEMA,
            "config": self.config_echo,
            "decay_full": self.decay_full,
            "decay_as": self.decay_as,
            "as_spectrum": self.as_spectrum,
            "w1": self.w1,
            "optimizer": {
                "mu_star": [float(v) for v in self.optimizer.mu_star],
                "surrogate_value": self.optimizer.value,
                "trace": [
                    {"mu": list(mu), "surrogate": val}
                    for mu, val in self.optimizer.trace
                ],
            },
            "audit": {
                "true_value": self.audit_true_value,
                "relative_gap": self.audit_gap,
            },
            "n_skipped": self.n_skipped,
            "n_fallback": self.n_fallback,
        }

    def save(self, output_dir):
        path = os.path.join(output_dir, "report.json")
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")
        with open(os.path.join(output_dir, "timings.json"), "w") as fh:
            json.dump(self.timings, fh, sort_keys=True, indent=1)
            fh.write("\n")
        return path


def sample_full(box, n, seed):
    """Halton design over the physical box (stage 1 of the campaign)."""
    return sample_box(box.lower, box.upper, n, seed=derive_seed(seed, "full-sampling"))


# ---------------------------------------------------------------------------
# append-only CSV ledgers


class _Ledger:
    """One stage's results: ``id`` plus a fixed-width float row per line.

    Rows are kept as their original text so resuming appends produce
    byte-identical files.  A malformed trailing line (killed mid-write)
    is dropped and recomputed.
    """

    def __init__(self, path, schema, columns):
        self.path = path
        self.schema = schema
        self.columns = columns
        self.rows = {}
        self._lines = {}
        if os.path.exists(path):
            self._load()

    def _load(self):
        valid = []
        with open(self.path) as fh:
            lines = fh.read().splitlines()
        for line in lines:
            if not line or line.startswith("#") or line.startswith("id,"):
                continue
            parts = line.split(",")
            try:
                key = int(parts[0])
                values = [float(v) for v in parts[1:]]
            except ValueError:
                continue  # partial trailing line
            if len(values) != len(self.columns):
                continue
            self.rows[key] = values
            self._lines[key] = line
            valid.append(key)
        # rewrite in case a partial tail was dropped
        self._rewrite(sorted(valid))

    def _header(self):
        return f"# schema: {self.schema}\n" + "id," + ",".join(self.columns) + "\n"

    def _rewrite(self, keys):
        with open(self.path, "w") as fh:
            fh.write(self._header())
            for key in keys:
                fh.write(self._lines[key] + "\n")

    def append(self, key, values):
        if key in self.rows:
            return
        values = [float(v) for v in values]
        line = f"{int(key)}," + ",".join(repr(v) for v in values)
        exists = os.path.exists(self.path)
        with open(self.path, "a") as fh:
            if not exists:
                fh.write(self._header())
            fh.write(line + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        self.rows[key] = values
        self._lines[key] = line

    def missing(self, keys):
        return [k for k in keys if k not in self.rows]


def _write_field_file(path, field_values):
    with open(path, "w") as fh:
        for v in field_values:
            fh.write(f"{float(v)!r}\n")


def _evaluate_in_order(keys, fn, workers):
    """Yield (key, outcome) pairs in key order; outcome = (ok, payload)."""

    def safe(key):
        try:
            return True, fn(key)
        except Exception as exc:  # deliberate: one bad sample must not kill the run
            return False, exc

    if workers <= 1:
        for key in keys:
            yield key, safe(key)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            yield from zip(keys, pool.map(safe, keys))


# ---------------------------------------------------------------------------
# campaign stages


class _Observable:
    """The campaign's scalar objective and field observation of one oracle.

    Wraps the configured observation path: time-resolved oracles are
    forecast to their regime state, steady oracles answer directly.  The
    scalar is the oracle's field functional applied to the observed
    field whenever possible, so gradients and surrogates see exactly the
    quantity the campaign records.
    """

    def __init__(self, oracle, settings):
        self.oracle = oracle
        self.box = oracle.box
        s = settings
        enabled = s.get("enabled", "auto")
        if enabled == "auto":
            self.use_dmd = has_capability(oracle, "time_series")
        else:
            self.use_dmd = bool(enabled)
        if self.use_dmd and not has_capability(oracle, "time_series"):
            raise ConfigError("dmd.enabled set but the oracle has no time series")
        if not self.use_dmd and not has_capability(oracle, "field"):
            raise ConfigError("oracle provides neither fields nor time series")
        self.settings = s

    def field(self, mu):
        if self.use_dmd:
            s = self.settings
            series = self.oracle.time_series(
                mu,
                n_snapshots=int(s["n_snapshots"]),
                dt=float(s["dt"]),
                t0=float(s["t0"]),
            )
            model = dmd.fit(series, s["rank"], mode_kind=s["mode_kind"])
            est = dmd.regime_value(
                model, horizon=float(s["horizon"]), window=int(s["window"])
            )
            return est.value
        return np.asarray(self.oracle.field(mu), dtype=float)

    def value_of_field(self, field_values, mu):
        if has_capability(self.oracle, "field_functional"):
            return float(self.oracle.field_functional(field_values))
        return float(self.oracle.value(mu))

    def value(self, mu):
        """Scalar objective along the observation path (used by stencils)."""
        return self.value_of_field(self.field(mu), mu)

    def gradient(self, mu):
        return self.oracle.gradient(mu)


def _observe_stage(observable, tag, mus, out_dir, config):
    """Evaluate fields+values for every row of ``mus``, ledger-backed."""
    stage_dir = os.path.join(out_dir, tag)
    fields_dir = os.path.join(stage_dir, "fields")
    os.makedirs(fields_dir, exist_ok=True)
    p = mus.shape[1]
    ledger = _Ledger(
        os.path.join(stage_dir, "values.csv"),
        f"rombox/{tag}-values-v1",
        [f"mu_{j}" for j in range(p)] + ["f"],
    )
    all_keys = list(range(len(mus)))
    todo = [
        k
        for k in all_keys
        if k not in ledger.rows
        or not os.path.exists(os.path.join(fields_dir, f"sample_{k:05d}.csv"))
    ]

    def observe(key):
        mu = mus[key]
        field_values = observable.field(mu)
        value = observable.value_of_field(field_values, mu)
        return field_values, value

    skipped = []
    for key, (ok, payload) in _evaluate_in_order(todo, observe, config.workers):
        if not ok:
            skipped.append((key, payload))
            continue
        field_values, value = payload
        _write_field_file(
            os.path.join(fields_dir, f"sample_{key:05d}.csv"), field_values
        )
        # append is a no-op for a key whose value row survived but whose
        # field file had to be rebuilt
        ledger.append(key, list(mus[key]) + [value])
    if skipped:
        with open(os.path.join(stage_dir, "skips.csv"), "w") as fh:
            fh.write("id,error\n")
            for key, exc in skipped:
                fh.write(f"{key},{type(exc).__name__}: {exc}\n")
    good = [k for k in all_keys if k in ledger.rows]
    if len(good) < config.skip_tolerance * len(all_keys):
        raise OracleError(
            f"stage '{tag}': only {len(good)}/{len(all_keys)} samples succeeded "
            f"(tolerance {config.skip_tolerance:.0%})"
        )
    fields = np.stack(
        [
            np.loadtxt(os.path.join(fields_dir, f"sample_{k:05d}.csv"), ndmin=1)
            for k in good
        ],
        axis=1,
    )
    values = np.array([ledger.rows[k][-1] for k in good])
    return good, fields, values, len(skipped)


def _gradient_stage(observable, mus_norm, values, out_dir, config):
    """Gradient ledger at the (normalized) full design points."""
    p = mus_norm.shape[1]
    ledger = _Ledger(
        os.path.join(out_dir, "gradients.csv"),
        "rombox/gradients-v1",
        [f"z_{j}" for j in range(p)] + ["f"] + [f"g_{j}" for j in range(p)],
    )
    keys = list(range(len(mus_norm)))
    scheme = config.gradient_scheme
    if scheme == "local-linear":
        todo = ledger.missing(keys)
        if todo:
            samples = estimate_gradients(
                observable,
                mus_norm,
                scheme="local-linear",
                n_neighbors=config.neighbors,
                values=values,
            )
            for key in todo:
                s = samples[key]
                ledger.append(key, list(s.mu) + [s.value] + list(s.grad))
        skipped = 0
    else:

        def one(key):
            return estimate_gradients(
                observable,
                mus_norm[key : key + 1],
                scheme=scheme,
                h=config.fd_step,
                values=values[key : key + 1],
            )[0]

        skipped = 0
        for key, (ok, payload) in _evaluate_in_order(
            ledger.missing(keys), one, config.workers
        ):
            if not ok:
                skipped += 1
                continue
            ledger.append(key, list(payload.mu) + [payload.value] + list(payload.grad))
    good = [k for k in keys if k in ledger.rows]
    if len(good) < config.skip_tolerance * len(keys):
        raise OracleError(
            f"gradient stage: only {len(good)}/{len(keys)} samples succeeded"
        )
    from .subspace import GradientSample

    samples = [
        GradientSample(
            mu=np.array(ledger.rows[k][:p]),
            grad=np.array(ledger.rows[k][p + 1 :]),
            value=ledger.rows[k][p],
        )
        for k in good
    ]
    return samples, skipped


def optimize(fn, box, budget, seed=0):
    """Seeded Halton screen, then bounded Nelder-Mead from the screen's best.

    Half the budget screens, half polishes.  Queries are clamped to the
    box, every evaluation lands in the trace, and the whole procedure is
    deterministic given the seed.
    """
    if budget < 10:
        raise ValueError("budget must be >= 10")
    trace = []

    def record(mu):
        mu = np.clip(np.asarray(mu, dtype=float), box.lower, box.upper)
        value = float(fn(mu))
        if not np.isfinite(value):
            raise NumericsError(f"surrogate returned {value} at {mu}")
        trace.append((tuple(float(v) for v in mu), value))
        return value

    n_screen = budget // 2
    screen = sample_box(box.lower, box.upper, n_screen, seed=derive_seed(seed, "screen"))
    screen_values = [record(mu) for mu in screen]
    best = int(np.argmin(screen_values))
    minimize(
        record,
        screen[best],
        method="Nelder-Mead",
        bounds=list(zip(box.lower, box.upper)),
        options={
            "maxfev": budget - n_screen,
            "xatol": 1e-8,
            "fatol": 1e-12,
        },
    )
    mus, values = zip(*trace)
    winner = int(np.argmin(values))
    return OptimizeResult(
        mu_star=np.array(mus[winner]), value=float(values[winner]), trace=trace
    )


def audit(oracle, mu_star, surrogate_value):
    """One full-order evaluation at the optimizer's answer."""
    true_value = float(oracle.value(np.asarray(mu_star, dtype=float)))
    gap = abs(surrogate_value - true_value) / (1e-12 + abs(true_value))
    return true_value, gap


def _config_echo(config: CampaignConfig):
    echo = {
        "seed": config.seed,
        "n_pod": config.n_pod,
        "n_pod_as": config.n_pod_as,
        "active_dim": config.active_dim,
        "gradient_scheme": config.gradient_scheme,
        "fd_step": config.fd_step,
        "skip_tolerance": config.skip_tolerance,
        "dmd": config.dmd_settings,
        "podi": {"rank": config.podi_rank, "interp": config.podi_interp},
        "optimizer": {
            "budget": config.optimizer_budget,
            "surrogate": config.optimizer_surrogate,
        },
        "oracle": config.oracle_spec,
    }
    return echo


def run_campaign(oracle, config: CampaignConfig) -> CampaignReport:
    """Execute (or resume) the full study and leave a report on disk."""
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    observable = _Observable(oracle, config.dmd_settings)
    if config.gradient_scheme == "analytic" and not has_capability(oracle, "gradient"):
        raise ConfigError("analytic gradient scheme needs an oracle gradient")
    box = oracle.box
    timings = {}
    clock = time.perf_counter

    # stage 1+2: full design and observations
    t0 = clock()
    mus_full = sample_full(box, config.n_pod, config.seed)
    good_full, fields_full, values_full, skipped_full = _observe_stage(
        observable, "full", mus_full, out, config
    )
    timings["full_observations"] = clock() - t0

    # stage 3: full-space surrogate and its spectrum
    t0 = clock()
    mus_norm_good = box.normalize(mus_full[good_full])
    podi_full = podi.build(
        podi.ParametricSnapshotSet(
            parameters=mus_norm_good, snapshots=fields_full
        ),
        config.podi_rank,
        scheme=config.podi_interp,
    )
    decay_full = podi.decay_report(podi_full)
    podi.save_decay_csv(podi_full, os.path.join(out, "decay_full.csv"))
    timings["podi_full"] = clock() - t0

    # stage 4: gradients and the active subspace
    t0 = clock()
    grad_samples, skipped_grad = _gradient_stage(
        observable, mus_norm_good, values_full, out, config
    )
    covariance = estimate_covariance(grad_samples)
    subspace = fit_subspace(covariance, config.active_dim)
    _write_spectrum_files(out, subspace)
    timings["active_subspace"] = clock() - t0

    # stage 5: active-direction resampling and its surrogate
    t0 = clock()
    active = sample_active(
        subspace, box, config.n_pod_as, seed=derive_seed(config.seed, "as-sampling")
    )
    good_as, fields_as, values_as, skipped_as = _observe_stage(
        observable, "active", active.points, out, config
    )
    ys = project(subspace, active.normalized[good_as])
    podi_as = podi.build(
        podi.ParametricSnapshotSet(parameters=ys, snapshots=fields_as),
        config.podi_rank,
        scheme="auto" if config.podi_interp == "auto" else config.podi_interp,
    )
    decay_as = podi.decay_report(podi_as)
    podi.save_decay_csv(podi_as, os.path.join(out, "decay_as.csv"))
    timings["podi_active"] = clock() - t0

    # stage 6: minimize over the reduced surrogate
    t0 = clock()
    surrogate_kind = config.optimizer_surrogate
    if surrogate_kind == "auto":
        surrogate_kind = (
            "podi-functional"
            if has_capability(oracle, "field_functional")
            else "active-g"
        )
    if surrogate_kind == "podi-functional":
        if not has_capability(oracle, "field_functional"):
            raise ConfigError("podi-functional surrogate needs a field functional")

        def scalar_surrogate(mu):
            y = project(subspace, box.normalize(mu))
            return oracle.field_functional(podi.evaluate(podi_as, y))

    else:
        g = surrogate_g(subspace, box.normalize(mus_full[good_full]), values_full)

        def scalar_surrogate(mu):
            return g(project(subspace, box.normalize(mu))[0])

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        opt = optimize(
            scalar_surrogate,
            box,
            config.optimizer_budget,
            seed=derive_seed(config.seed, "optimizer"),
        )
    true_value, gap = audit(oracle, opt.mu_star, opt.value)
    timings["optimize"] = clock() - t0

    report = CampaignReport(
        decay_full=[[i, v] for i, v in decay_full],
        decay_as=[[i, v] for i, v in decay_as],
        as_spectrum=[float(v) for v in subspace.eigenvalues],
        w1=[[float(v) for v in row] for row in subspace.w1],
        optimizer=opt,
        audit_true_value=true_value,
        audit_gap=gap,
        n_skipped=skipped_full + skipped_grad + skipped_as,
        n_fallback=int(active.fallback.sum()),
        config_echo=_config_echo(config),
        timings=timings,
    )
    report.save(out)
    return report


def _write_spectrum_files(out, subspace):
    with open(os.path.join(out, "as_spectrum.csv"), "w") as fh:
        fh.write("# schema: rombox/as-spectrum-v1\n")
        fh.write("index,eigenvalue\n")
        for i, lam in enumerate(subspace.eigenvalues, start=1):
            fh.write(f"{i},{float(lam)!r}\n")
    with open(os.path.join(out, "w1.csv"), "w") as fh:
        fh.write("# schema: rombox/w1-v1\n")
        fh.write("component," + ",".join(f"w1_{j}" for j in range(subspace.active_dim)) + "\n")
        for i, row in enumerate(subspace.w1):
            fh.write(f"{i}," + ",".join(repr(float(v)) for v in row) + "\n")
