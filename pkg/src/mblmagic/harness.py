"""Disorder-ensemble orchestration, deterministic seeding, persistence.

Seeding: every realization r derives independent streams from a
splitmix64-style hash of (base_seed, r, stream_tag), so disorder,
initial-state randomness and Pauli sampling never share a stream.
Aggregation reduces in ascending realization order, which makes the
output byte-identical regardless of worker count.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import models, propagate, qstate

SCHEMA_VERSION = 1

_MASK = (1 << 64) - 1
STREAM_DISORDER = 1
STREAM_STATE = 2
STREAM_SAMPLING = 3

CSV_COLUMNS = (
    "model,L,W,xi,state,sre_method,n_real,t,"
    "M2_mean,M2_sem,S_mean,S_sem,WZ_mean,WZ_sem"
)


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def mix_seed(*parts: int) -> int:
    """64-bit hash mix of integer parts (order-sensitive)."""
    x = 0
    for p in parts:
        x = _splitmix64((x ^ int(p)) & _MASK)
    return x


@dataclass(frozen=True)
class RunConfig:
    model: str  # 'tfim' or 'lbit'
    L: int
    W: float = 1.0  # disorder strength (TFIM) or l-bit field scale
    g: float = 1.0
    xi: float = 0.5
    max_order: int = 3
    field_dist: str = "uniform"
    state_family: str = "z-random"
    alpha: float = 1.0  # hamming decay rate
    mid_spectrum: bool | None = None  # default: True for TFIM, False for l-bit
    n_candidates: int = 100
    t_min: float = 0.1
    t_max: float = 2e4
    per_decade: int = 10
    observables: tuple[str, ...] = ("m2", "s")
    sre_method: str = "exact"
    sre_samples: int = 15000
    n_realizations: int = 1000
    base_seed: int = 0

    def __post_init__(self):
        if self.model not in ("tfim", "lbit"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")
        if self.sre_method == "exact" and "m2" in self.observables and self.L > 13:
            raise ValueError("exact SRE requires L <= 13")

    def model_params(self):
        if self.model == "tfim":
            return models.TfimParams(self.L, self.W, self.g)
        return models.LBitParams(self.L, self.xi, self.max_order, self.field_dist, self.W)

    def wants_mid_spectrum(self) -> bool:
        if self.mid_spectrum is not None:
            return self.mid_spectrum
        return self.model == "tfim"

    def physics_hash(self) -> str:
        """Hash of everything but base_seed / n_realizations (the merge
        compatibility key)."""
        d = asdict(self)
        d.pop("base_seed")
        d.pop("n_realizations")
        d["observables"] = list(d["observables"])
        blob = json.dumps(d, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class EnsembleRecord:
    config: RunConfig
    config_hash: str
    times: np.ndarray
    m2_mean: np.ndarray | None
    m2_sem: np.ndarray | None
    s_mean: np.ndarray | None
    s_sem: np.ndarray | None
    wz_mean: np.ndarray | None
    wz_sem: np.ndarray | None
    n_realizations: int
    n_ok: int
    failures: list  # (realization index, seed, message)
    wall_time: float
    schema_version: int = SCHEMA_VERSION

    @property
    def single_realization(self) -> bool:
        return self.n_ok == 1

    def equals(self, other: "EnsembleRecord") -> bool:
        def arr_eq(a, b):
            if a is None or b is None:
                return a is None and b is None
            return np.array_equal(a, b)

        return (
            self.config == other.config
            and self.config_hash == other.config_hash
            and arr_eq(self.times, other.times)
            and all(
                arr_eq(getattr(self, f_), getattr(other, f_))
                for f_ in ("m2_mean", "m2_sem", "s_mean", "s_sem", "wz_mean", "wz_sem")
            )
            and self.n_realizations == other.n_realizations
            and self.n_ok == other.n_ok
            and self.failures == other.failures
            and self.schema_version == other.schema_version
        )


def _initial_state(config: RunConfig, realization, rng):
    """Build the initial state for one realization.

    Returns (state_or_angles, angles_or_None)."""
    L = config.L
    if config.state_family == "hamming":
        center = int(rng.integers(0, 1 << L))
        return qstate.make_hamming_state(L, config.alpha, center), None
    if config.wants_mid_spectrum():
        state, _, angles = qstate.select_mid_spectrum_state(
            realization, config.state_family, config.n_candidates, rng
        )
        return state, angles
    angles = qstate.named_state_angles(config.state_family, L, rng)
    return qstate.make_product_state(angles), angles


def run_realization(config: RunConfig, r: int) -> propagate.TimeSeries:
    """Simulate realization index r of the given config."""
    dseed = mix_seed(config.base_seed, r, STREAM_DISORDER)
    params = config.model_params()
    if config.model == "tfim":
        realization = models.sample_tfim(params, dseed)
    else:
        realization = models.sample_lbit(params, dseed)
    state_rng = np.random.default_rng(mix_seed(config.base_seed, r, STREAM_STATE))
    state, angles = _initial_state(config, realization, state_rng)
    grid = propagate.make_time_grid(config.t_min, config.t_max, config.per_decade)
    if config.sre_method == "product":
        if angles is None:
            raise ValueError("product fast path requires a product-state family")
        state = angles
    sampling_rng = np.random.default_rng(
        mix_seed(config.base_seed, r, STREAM_SAMPLING)
    )
    return propagate.evolve_and_measure(
        realization,
        state,
        grid,
        observables=config.observables,
        sre_method=config.sre_method,
        sre_samples=config.sre_samples,
        sampling_rng=sampling_rng,
        seed=dseed,
    )


def _run_one(args):
    config, r = args
    try:
        ts = run_realization(config, r)
        return r, {name: getattr(ts, name) for name in config.observables}, None
    except Exception as exc:  # noqa: BLE001 - failure containment per realization
        return r, None, f"{type(exc).__name__}: {exc}"


def run_ensemble(config: RunConfig, n_workers: int = 1) -> EnsembleRecord:
    """Run all realizations, aggregate mean and standard error per time.

    Failed realizations are recorded (with their seeds) and skipped;
    the reduction order is always ascending realization index."""
    t0 = time.time()
    tasks = [(config, r) for r in range(config.n_realizations)]
    if n_workers > 1:
        import multiprocessing as mp

        with mp.get_context("fork").Pool(n_workers) as pool:
            results = pool.map(_run_one, tasks)
    else:
        results = [_run_one(t) for t in tasks]
    results.sort(key=lambda x: x[0])

    grid = propagate.make_time_grid(config.t_min, config.t_max, config.per_decade)
    collected = {name: [] for name in config.observables}
    failures = []
    for r, data, err in results:
        if err is not None:
            failures.append((r, mix_seed(config.base_seed, r, STREAM_DISORDER), err))
            continue
        for name in config.observables:
            collected[name].append(data[name])

    n_ok = len(next(iter(collected.values()))) if collected else 0
    means, sems = {}, {}
    for name in ("m2", "s", "wz"):
        if name in config.observables and n_ok > 0:
            stack = np.stack(collected[name], axis=0)
            means[name] = stack.mean(axis=0)
            if n_ok > 1:
                sems[name] = stack.std(axis=0, ddof=1) / np.sqrt(n_ok)
            else:
                sems[name] = np.zeros(stack.shape[1])
        else:
            means[name] = None
            sems[name] = None

    return EnsembleRecord(
        config=config,
        config_hash=config.physics_hash(),
        times=grid.times,
        m2_mean=means["m2"],
        m2_sem=sems["m2"],
        s_mean=means["s"],
        s_sem=sems["s"],
        wz_mean=means["wz"],
        wz_sem=sems["wz"],
        n_realizations=config.n_realizations,
        n_ok=n_ok,
        failures=failures,
        wall_time=time.time() - t0,
    )


# ---------------------------------------------------------------------------
# persistence


def _fmt(x) -> str:
    return "nan" if x is None else repr(float(x))


def save_record(record: EnsembleRecord, path: str) -> None:
    """CSV aggregate rows with a JSON header block (lines starting '#')."""
    cfg = asdict(record.config)
    cfg["observables"] = list(cfg["observables"])
    header = {
        "schema_version": record.schema_version,
        "config": cfg,
        "config_hash": record.config_hash,
        "n_realizations": record.n_realizations,
        "n_ok": record.n_ok,
        "failures": [list(f) for f in record.failures],
        "package_version": __import__("mblmagic").__version__,
    }
    c = record.config
    lines = [f"# mblmagic-record {json.dumps(header)}", CSV_COLUMNS]
    for j, t in enumerate(record.times):
        row = [
            c.model,
            str(c.L),
            repr(float(c.W)),
            repr(float(c.xi)) if c.model == "lbit" else "nan",
            c.state_family,
            c.sre_method,
            str(record.n_ok),
            repr(float(t)),
            _fmt(None if record.m2_mean is None else record.m2_mean[j]),
            _fmt(None if record.m2_sem is None else record.m2_sem[j]),
            _fmt(None if record.s_mean is None else record.s_mean[j]),
            _fmt(None if record.s_sem is None else record.s_sem[j]),
            _fmt(None if record.wz_mean is None else record.wz_mean[j]),
            _fmt(None if record.wz_sem is None else record.wz_sem[j]),
        ]
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_record(path: str) -> EnsembleRecord:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or not lines[0].startswith("# mblmagic-record "):
        raise ValueError(f"{path}: not an mblmagic record file")
    header = json.loads(lines[0][len("# mblmagic-record ") :])
    if header.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(
            f"{path}: schema version {header.get('schema_version')} != {SCHEMA_VERSION}"
        )
    if len(lines) < 2 or lines[1] != CSV_COLUMNS:
        raise ValueError(f"{path}: missing or wrong CSV header")
    cfg_dict = dict(header["config"])
    cfg_dict["observables"] = tuple(cfg_dict["observables"])
    config = RunConfig(**cfg_dict)

    n_expected = len(
        propagate.make_time_grid(config.t_min, config.t_max, config.per_decade).times
    )
    rows = [ln.split(",") for ln in lines[2:] if ln]
    if len(rows) != n_expected:
        raise ValueError(f"{path}: truncated record ({len(rows)}/{n_expected} rows)")

    def col(i):
        vals = np.array([float(r[i]) for r in rows])
        return None if np.all(np.isnan(vals)) else vals

    return EnsembleRecord(
        config=config,
        config_hash=header["config_hash"],
        times=np.array([float(r[7]) for r in rows]),
        m2_mean=col(8),
        m2_sem=col(9),
        s_mean=col(10),
        s_sem=col(11),
        wz_mean=col(12),
        wz_sem=col(13),
        n_realizations=header["n_realizations"],
        n_ok=header["n_ok"],
        failures=[tuple(f) for f in header["failures"]],
        wall_time=0.0,  # timing is run metadata, not part of the record
        schema_version=header["schema_version"],
    )


def merge_records(a: EnsembleRecord, b: EnsembleRecord) -> EnsembleRecord:
    """Pool two ensembles with matching physics hashes (exact pooled
    mean / standard error algebra)."""
    if a.config_hash != b.config_hash:
        raise ValueError("cannot merge records with different config hashes")
    n1, n2 = a.n_ok, b.n_ok
    n = n1 + n2

    def pool(mean1, sem1, mean2, sem2):
        if mean1 is None:
            return None, None
        m = (n1 * mean1 + n2 * mean2) / n
        ss1 = sem1**2 * n1 * max(n1 - 1, 0)
        ss2 = sem2**2 * n2 * max(n2 - 1, 0)
        ss = ss1 + ss2 + n1 * (mean1 - m) ** 2 + n2 * (mean2 - m) ** 2
        sem = np.sqrt(ss / (n - 1) / n) if n > 1 else np.zeros_like(m)
        return m, sem

    m2 = pool(a.m2_mean, a.m2_sem, b.m2_mean, b.m2_sem)
    s = pool(a.s_mean, a.s_sem, b.s_mean, b.s_sem)
    wz = pool(a.wz_mean, a.wz_sem, b.wz_mean, b.wz_sem)
    return replace(
        a,
        m2_mean=m2[0],
        m2_sem=m2[1],
        s_mean=s[0],
        s_sem=s[1],
        wz_mean=wz[0],
        wz_sem=wz[1],
        n_realizations=a.n_realizations + b.n_realizations,
        n_ok=n,
        failures=a.failures + b.failures,
        wall_time=a.wall_time + b.wall_time,
    )
