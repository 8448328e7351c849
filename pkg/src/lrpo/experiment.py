"""Seeded experiments, parameter calibration and reports."""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import asdict, dataclass, field, replace
from itertools import product
from typing import Sequence

import numpy as np

from .diffusion import ClusterEngine
from .errors import UsageError, ValidationError
from .generators import GENERATORS, generate
from .graph import Graph, OracleHandle
from .oracle import LocalOracle
from .partition import cut_fraction, global_partition, size_bound, validate_partition
from .randomness import Params, SeedBundle


class ExperimentViolation(ValidationError):
    """An invariant failed during an experiment; ``dump`` holds the counterexample."""

    def __init__(self, message: str, dump: dict) -> None:
        super().__init__(message)
        self.dump = dump


@dataclass
class ExperimentSpec:
    generator: str
    n: int
    params: Params | None = None  # None: PRACTICAL defaults for the graph's d
    seeds: int = 10
    rng_seed: int = 0
    shuffle_labels: bool = True
    oracle_checks: int = 2  # random local-oracle queries cross-checked per run

    def __post_init__(self) -> None:
        if self.generator not in GENERATORS:
            raise UsageError(f"unknown generator {self.generator!r}")
        if self.n < 1 or self.seeds < 0 or self.oracle_checks < 0:
            raise UsageError("n must be positive and counts nonnegative")

    def graph(self) -> Graph:
        return generate(self.generator, self.n, self.rng_seed, shuffle=self.shuffle_labels)

    def resolved_params(self, g: Graph) -> Params:
        return self.params if self.params is not None else Params.practical(g.d)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["params"] = self.params.to_dict() if self.params is not None else None
        return out


@dataclass
class RunRecord:
    seed_index: int
    seed_digest: str
    cut_edges: int
    cut_fraction: float
    max_component: int
    components: int
    charge: int
    neighbor_queries: int
    label_queries: int
    max_queries_per_call: int
    oracle_checked: int
    seed_bits: int
    seconds: float = field(default=0.0, compare=False)


def _quantiles(xs: Sequence[float]) -> dict[str, float]:
    if not xs:
        return {}
    a = np.asarray(xs, dtype=float)
    return {
        "mean": float(a.mean()),
        "min": float(a.min()),
        "median": float(np.median(a)),
        "q2_3": float(np.quantile(a, 2 / 3)),
        "max": float(a.max()),
    }


@dataclass
class Report:
    spec: ExperimentSpec
    params: Params
    runs: list[RunRecord]

    def values(self, key: str) -> list[float]:
        return [getattr(r, key) for r in self.runs]

    def summary(self) -> dict:
        keys = ("cut_fraction", "max_component", "charge", "max_queries_per_call")
        out = {k: _quantiles(self.values(k)) for k in keys}
        out["runs"] = len(self.runs)
        out["seed_bits"] = self.runs[0].seed_bits if self.runs else 0
        return out

    def to_jsonl(self, timings: bool = False) -> str:
        """One JSON object per run, then a summary line.  Byte-identical across
        reruns unless ``timings`` adds wall-clock seconds."""
        lines = []
        for r in sorted(self.runs, key=lambda r: r.seed_index):
            row = asdict(r)
            if not timings:
                row.pop("seconds")
            lines.append(json.dumps(row, sort_keys=True))
        head = {"spec": self.spec.to_dict(), "params": self.params.to_dict(), "summary": self.summary()}
        lines.append(json.dumps(head, sort_keys=True))
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        cols = [f for f in RunRecord.__dataclass_fields__ if f != "seconds"]
        w = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for r in sorted(self.runs, key=lambda r: r.seed_index):
            w.writerow(asdict(r))
        return buf.getvalue()


def seed_stream(params: Params, g: Graph, count: int, rng_seed: int) -> list[SeedBundle]:
    rng = np.random.default_rng([rng_seed, 0x5EED])
    return [SeedBundle.random(params, g.N, g.n, rng) for _ in range(count)]


def run_once(
    g: Graph,
    seeds: SeedBundle,
    params: Params,
    *,
    engine: ClusterEngine | None = None,
    oracle_checks: int = 0,
    rng: np.random.Generator | None = None,
    seed_index: int = 0,
) -> RunRecord:
    t0 = time.perf_counter()
    result = global_partition(g, seeds, params, engine)
    problems = validate_partition(g, result, size_bound(params))
    if problems:
        raise ExperimentViolation(problems[0], {"problems": problems, "seed_hex": seeds.to_bytes().hex()})
    handle = OracleHandle(g)
    oracle = LocalOracle(handle, seeds, params)
    checked = 0
    if oracle_checks and g.n:
        rng = rng or np.random.default_rng(seed_index)
        for u in rng.choice(np.asarray(g.labels), size=min(oracle_checks, g.n), replace=False).tolist():
            local = sorted(oracle.find_partition(u))
            if local != result.component(u):
                raise ExperimentViolation(
                    f"local oracle disagrees at vertex {u}",
                    {"vertex": u, "local": local, "global": result.component(u), "seed_hex": seeds.to_bytes().hex()},
                )
            checked += 1
    stats = oracle.stats()
    return RunRecord(
        seed_index=seed_index,
        seed_digest=seeds.digest(),
        cut_edges=len(result.cut_edges),
        cut_fraction=cut_fraction(g, len(result.cut_edges)),
        max_component=result.max_component,
        components=len(result.components),
        charge=result.charge,
        neighbor_queries=stats.neighbor_queries,
        label_queries=stats.label_queries,
        max_queries_per_call=stats.max_per_call,
        oracle_checked=checked,
        seed_bits=seeds.ledger().total_bits,
        seconds=time.perf_counter() - t0,
    )


def run_experiment(spec: ExperimentSpec, g: Graph | None = None, engine: ClusterEngine | None = None) -> Report:
    g = g or spec.graph()
    params = spec.resolved_params(g)
    engine = engine or ClusterEngine(g, params)
    rng = np.random.default_rng([spec.rng_seed, 0x0AC1E])
    runs = [
        run_once(g, sb, params, engine=engine, oracle_checks=spec.oracle_checks, rng=rng, seed_index=i)
        for i, sb in enumerate(seed_stream(params, g, spec.seeds, spec.rng_seed))
    ]
    return Report(spec, params, runs)


# -- calibration ------------------------------------------------------------

# Scanned in this order; phi is the outer loop and runs from loose to tight, so
# a tighter target can only stop at the same point or a later one.
LATTICE = {
    "phi": (0.45, 0.4, 0.35, 0.3, 0.25, 0.2, 0.15),
    "rho": (0.01, 0.005),
    "beta": (0.45, 0.4),
    "delta": (0.1, 0.05),
    "ell": (20,),
}


def lattice_points(d: int, lattice: dict | None = None) -> list[Params]:
    lat = {**LATTICE, **(lattice or {})}
    return [
        Params.practical(d, phi=phi, rho=rho, beta=beta, delta=delta, ell=ell)
        for phi, rho, beta, delta, ell in product(lat["phi"], lat["rho"], lat["beta"], lat["delta"], lat["ell"])
    ]


@dataclass
class CalibrationPoint:
    params: Params
    median_cut_fraction: float
    max_component: int
    ok: bool


@dataclass
class CalibrationResult:
    generator: str
    n: int
    target: float
    params: Params | None
    tried: list[CalibrationPoint]

    @property
    def ok(self) -> bool:
        return self.params is not None

    def to_json(self) -> dict:
        return {
            "generator": self.generator,
            "n": self.n,
            "target": self.target,
            "ok": self.ok,
            "params": self.params.to_dict() if self.params else None,
            "tried": [
                {"params": p.params.to_dict(), "median_cut_fraction": p.median_cut_fraction,
                 "max_component": p.max_component, "ok": p.ok}
                for p in self.tried
            ],
        }


def calibrate(
    generator: str,
    n: int,
    target_cut_fraction: float,
    *,
    seeds: int = 5,
    rng_seed: int = 0,
    lattice: dict | None = None,
) -> CalibrationResult:
    """First lattice point whose median cut fraction over ``seeds`` runs is at most
    the target, with every component within ``ell/rho``.  Deterministic."""
    if not 0 < target_cut_fraction <= 1:
        raise UsageError("target must lie in (0, 1]")
    g = generate(generator, n, rng_seed, shuffle=True)
    tried = []
    for params in lattice_points(g.d, lattice):
        engine = ClusterEngine(g, params)
        cfs, biggest = [], 0
        for sb in seed_stream(params, g, seeds, rng_seed):
            res = global_partition(g, sb, params, engine)
            cfs.append(cut_fraction(g, len(res.cut_edges)))
            biggest = max(biggest, res.max_component)
        med = float(np.median(cfs)) if cfs else 0.0
        ok = med <= target_cut_fraction and biggest <= size_bound(params)
        tried.append(CalibrationPoint(params, med, biggest, ok))
        if ok:
            return CalibrationResult(generator, n, target_cut_fraction, params, tried)
    return CalibrationResult(generator, n, target_cut_fraction, None, tried)


def with_params(spec: ExperimentSpec, params: Params) -> ExperimentSpec:
    return replace(spec, params=params)
