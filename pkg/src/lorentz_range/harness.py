"""Deterministic corpora, experiment orchestration and frozen empirical constants.

Randomness comes from splitmix64. Sample ``i`` of a corpus draws from its own
stream seeded with ``seed ^ i`` (64-bit), so corpora are bit-identical across
runs, platforms and thread counts.
"""
from __future__ import annotations

import json
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .calderon import (apply_S, check_hilbert_domination, eval_S_of_step,
                       hilbert_rearrangement_estimate)
from .concave import ConcaveFn
from .errors import BadSpec
from .optimal_range import (boundedness_probe, check_phi0_maximality, criterion_continuous,
                            criterion_discrete, psi_function, psi_limit_check, witness_general,
                            witness_indicator)
from .rearrangement import DecreasingStep, IntervalSet, StepFn, rearrange
from .reports import ExperimentReport
from .spectral import (LipschitzFn, commutator_identity_check, identity_scale, lipschitz_probe,
                       truncation_range_probe, weak_l1_probe)

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64_scalar(state: int) -> tuple[int, int]:
    """One step of the reference generator: returns (new_state, output)."""
    state = (state + GOLDEN_GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


class SplitMix64:
    """Counter form of splitmix64: output k is mix(seed + k * gamma)."""

    def __init__(self, seed: int):
        self.seed = int(seed) & MASK64
        self.counter = 0

    def next_u64(self, n: int) -> np.ndarray:
        k = np.arange(self.counter + 1, self.counter + n + 1, dtype=np.uint64)
        self.counter += n
        z = np.uint64(self.seed) + k * np.uint64(GOLDEN_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))

    def uniform(self, n: int) -> np.ndarray:
        """Doubles in [0, 1) from the top 53 bits."""
        return (self.next_u64(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, n: int) -> np.ndarray:
        """Box-Muller pairs."""
        m = (n + 1) // 2
        u1 = 1.0 - self.uniform(m)
        u2 = self.uniform(m)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.empty(2 * m)
        z[0::2] = r * np.cos(2.0 * math.pi * u2)
        z[1::2] = r * np.sin(2.0 * math.pi * u2)
        return z[:n]

    def integer(self, lo: int, hi: int) -> int:
        """Uniform integer in [lo, hi]."""
        return lo + int(self.uniform(1)[0] * (hi - lo + 1))

    def log_uniform(self, n: int, lo_exp: float, hi_exp: float) -> np.ndarray:
        return 10.0 ** (lo_exp + (hi_exp - lo_exp) * self.uniform(n))


CORPUS_KINDS = ("step_functions", "signed_step_functions", "interval_sets", "gaussian_matrices",
                "hermitian_matrices", "hermitian_pairs", "lipschitz_functions", "positive_reals")

DEFAULT_PARAMS = {
    "step_functions": {"decades": 6, "max_layers": 8, "alpha_decades": 2},
    "signed_step_functions": {"decades": 4, "max_pieces": 8},
    "interval_sets": {"decades": 4, "max_intervals": 6},
    "gaussian_matrices": {"dim": 64},
    "hermitian_matrices": {"dim": 16},
    "hermitian_pairs": {"dim": 8},
    "lipschitz_functions": {"knots": 5},
    "positive_reals": {"decades": 8},
}


@dataclass(frozen=True)
class Corpus:
    kind: str
    seed: int
    size: int
    params: dict = field(default_factory=dict)

    def resolved_params(self) -> dict:
        return {**DEFAULT_PARAMS.get(self.kind, {}), **self.params}

    def descriptor(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, "size": self.size, "params": self.resolved_params()}


def _step(rng: SplitMix64, p: dict) -> DecreasingStep:
    n = rng.integer(1, p["max_layers"])
    d = p["decades"]
    u = rng.log_uniform(n, -d / 2, d / 2)
    a = rng.log_uniform(n, -p["alpha_decades"] / 2, p["alpha_decades"] / 2)
    return DecreasingStep(a, u)


def _signed_step(rng: SplitMix64, p: dict) -> StepFn:
    n = rng.integer(1, p["max_pieces"])
    d = p["decades"]
    lengths = rng.log_uniform(n, -d / 2, d / 2)
    values = 4.0 * rng.uniform(n) - 2.0
    return StepFn(tuple(np.concatenate([[0.0], np.cumsum(lengths)])), tuple(values))


def _interval_set(rng: SplitMix64, p: dict) -> IntervalSet:
    n = rng.integer(1, p["max_intervals"])
    d = p["decades"]
    gaps = rng.log_uniform(n, -d / 2, d / 2)
    lengths = rng.log_uniform(n, -d / 2, d / 2)
    ends = np.cumsum(gaps + lengths)
    return IntervalSet(tuple(zip((ends - lengths).tolist(), ends.tolist())))


def _gaussian(rng: SplitMix64, n: int) -> np.ndarray:
    z = rng.normal(2 * n * n) / math.sqrt(2.0)
    return (z[0::2] + 1j * z[1::2]).reshape(n, n)


def _hermitian(rng: SplitMix64, n: int) -> np.ndarray:
    G = _gaussian(rng, n)
    return 0.5 * (G + G.conj().T)


def _hermitian_pair(rng: SplitMix64, n: int, degenerate: bool):
    if degenerate:
        # repeated eigenvalues by construction
        Q, _ = np.linalg.qr(_gaussian(rng, n))
        lam = np.floor(4.0 * rng.uniform(n)) - 1.0
        A = (Q * lam) @ Q.conj().T
        A = 0.5 * (A + A.conj().T)
    else:
        A = _hermitian(rng, n)
    return A, _hermitian(rng, n)


def _lipschitz(rng: SplitMix64, p: dict) -> LipschitzFn:
    k = p["knots"]
    x = -2.0 + np.cumsum(0.2 + rng.uniform(k))
    slopes = 2.0 * rng.uniform(k - 1) - 1.0
    slopes = slopes / np.max(np.abs(slopes))
    y0 = rng.uniform(1)[0]
    y = y0 + np.concatenate([[0.0], np.cumsum(slopes * np.diff(x))])
    return LipschitzFn(tuple(x), tuple(y))


def gen_corpus(spec: Corpus) -> list:
    if spec.kind not in CORPUS_KINDS:
        raise BadSpec(f"unknown corpus kind {spec.kind!r}")
    if spec.size < 1:
        raise BadSpec("corpus size must be at least 1")
    p = spec.resolved_params()
    out = []
    for i in range(spec.size):
        rng = SplitMix64(spec.seed ^ i)
        if spec.kind == "step_functions":
            out.append(_step(rng, p))
        elif spec.kind == "signed_step_functions":
            out.append(_signed_step(rng, p))
        elif spec.kind == "interval_sets":
            out.append(_interval_set(rng, p))
        elif spec.kind == "gaussian_matrices":
            out.append(_gaussian(rng, p["dim"]))
        elif spec.kind == "hermitian_matrices":
            out.append(_hermitian(rng, p["dim"]))
        elif spec.kind == "hermitian_pairs":
            out.append(_hermitian_pair(rng, p["dim"], degenerate=(i % 2 == 1)))
        elif spec.kind == "lipschitz_functions":
            out.append(_lipschitz(rng, p))
        else:
            out.append(float(rng.log_uniform(1, -p["decades"] / 2, p["decades"] / 2)[0]))
    return out


def serialize_sample(s) -> object:
    if isinstance(s, np.ndarray):
        return {"re": s.real.tolist(), "im": s.imag.tolist()}
    if isinstance(s, tuple):
        return [serialize_sample(v) for v in s]
    if hasattr(s, "to_dict"):
        return s.to_dict()
    if isinstance(s, IntervalSet):
        return {"intervals": [list(iv) for iv in s.intervals]}
    if isinstance(s, LipschitzFn):
        return {"x": list(s.x), "y": list(s.y)}
    return s


def corpus_bytes(samples) -> bytes:
    return json.dumps([serialize_sample(s) for s in samples], sort_keys=True).encode()


# -- frozen constants --------------------------------------------------------

CONSTANTS_PATH = Path(__file__).with_name("data") / "constants.json"
FROZEN_RTOL = 1e-9
_CONSTANTS_LOCK = threading.Lock()


def load_constants(path=None) -> list[dict]:
    p = Path(path) if path else CONSTANTS_PATH
    if not p.exists():
        return []
    return json.loads(p.read_text())


def frozen_check(name: str, seed: int, descriptor: dict, value: float, path=None, record: bool = True) -> str:
    """Compare against the recorded value; record it when absent. Returns match/mismatch/recorded/missing."""
    with _CONSTANTS_LOCK:
        return _frozen_check_locked(name, seed, descriptor, value, Path(path) if path else CONSTANTS_PATH, record)


def _frozen_check_locked(name, seed, descriptor, value, p: Path, record: bool) -> str:
    entries = load_constants(p)
    for e in entries:
        if e["probe_name"] == name and e["seed"] == seed and e["corpus_descriptor"] == descriptor:
            ok = abs(value - e["value"]) <= FROZEN_RTOL * max(1.0, abs(e["value"]))
            return "match" if ok else "mismatch"
    if not record:
        return "missing"
    entries.append({"probe_name": name, "seed": seed, "corpus_descriptor": descriptor, "value": value})
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(json.dumps(entries, indent=1, sort_keys=True) + "\n")
    return "recorded"


# -- experiments -------------------------------------------------------------

@dataclass
class SuiteConfig:
    seed: int = 42
    phi: dict = field(default_factory=lambda: {"kind": "power", "alpha": 0.5})
    psi: dict | None = None
    experiments: list | None = None
    samples: dict = field(default_factory=dict)
    dim: int = 64
    parallel: bool = False
    constants_path: str | None = None
    record_constants: bool = True

    def phi_fn(self) -> ConcaveFn:
        return ConcaveFn.from_dict(self.phi)

    def psi_fn(self) -> ConcaveFn:
        return ConcaveFn.from_dict(self.psi) if self.psi else psi_function(self.phi_fn())

    def size(self, name: str, default: int) -> int:
        return int(self.samples.get(name, default))

    @classmethod
    def from_dict(cls, d: dict) -> "SuiteConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise BadSpec(f"unknown config keys {sorted(unknown)}")
        return cls(**d)


def _timed(name, corpus, fn):
    start = time.perf_counter()
    samples, passed, notes = fn()
    return ExperimentReport(name, corpus, samples, passed, (time.perf_counter() - start) * 1e3, notes)


def exp_criterion_continuous(cfg: SuiteConfig) -> ExperimentReport:
    def run():
        rep = criterion_continuous(cfg.phi_fn(), cfg.psi_fn())
        return rep.ratios.tolist(), rep.verdict == "bounded_with_c", {"c_estimate": rep.c_estimate, "verdict": rep.verdict}
    return _timed("criterion_continuous", {"phi": cfg.phi, "u_grid": "1e-4..1e4, 81 points"}, run)


def exp_criterion_discrete(cfg: SuiteConfig) -> ExperimentReport:
    N = cfg.size("criterion_discrete", 4096)

    def run():
        rep = criterion_discrete(cfg.phi_fn(), N)
        idx = np.unique(np.geomspace(1, N, 25).astype(int)) - 1
        return rep.ratios[idx].tolist(), rep.verdict == "bounded_with_c", {"c_estimate": rep.c_estimate, "verdict": rep.verdict, "n": (idx + 1).tolist()}
    return _timed("criterion_discrete", {"phi": cfg.phi, "N": N}, run)


def exp_psi_limit(cfg: SuiteConfig) -> ExperimentReport:
    def run():
        rep = psi_limit_check(cfg.phi_fn())
        return list(rep.values), rep.passed, {"slow_decay": rep.slow_decay, "final_over_initial": rep.final_over_initial}
    return _timed("psi_limit", {"phi": cfg.phi}, run)


def _steps(cfg, name, default):
    spec = Corpus("step_functions", cfg.seed, cfg.size(name, default))
    return spec, gen_corpus(spec)


def exp_boundedness(cfg: SuiteConfig) -> ExperimentReport:
    spec, corpus = _steps(cfg, "boundedness", 100)
    rep = boundedness_probe(cfg.phi_fn(), cfg.psi_fn(), corpus, corpus_descriptor=spec.descriptor())
    return rep


def exp_witness_indicator(cfg: SuiteConfig) -> ExperimentReport:
    spec = Corpus("positive_reals", cfg.seed, cfg.size("witness_indicator", 100))

    def run():
        phi = cfg.phi_fn()
        ws = [witness_indicator(phi, u) for u in gen_corpus(spec)]
        return [w.norm / (2.0 * w.psi_u) for w in ws], all(w.passed for w in ws), {}
    return _timed("witness_indicator", spec.descriptor(), run)


def exp_witness_general(cfg: SuiteConfig) -> ExperimentReport:
    spec, corpus = _steps(cfg, "witness_general", 100)

    def run():
        phi, psi = cfg.phi_fn(), cfg.psi_fn()
        ws = [witness_general(x, phi, psi) for x in corpus]
        return [w.norm_y / (8.0 * w.norm_x_psi) for w in ws], all(w.passed for w in ws), {
            "min_domination_margin": min(w.min_margin for w in ws)}
    return _timed("witness_general", spec.descriptor(), run)


def exp_phi0_sandwich(cfg: SuiteConfig) -> ExperimentReport:
    spec, corpus = _steps(cfg, "phi0_sandwich", 200)

    def run():
        reps = [check_phi0_maximality(x) for x in corpus]
        return [r.ratio for r in reps], all(r.passed for r in reps), {"bounds": [1.0, 2.0]}
    return _timed("phi0_sandwich", spec.descriptor(), run)


def measurable_set_ratios(delta: IntervalSet, grid_points: int = 32) -> np.ndarray:
    """S chi_Delta(t) / (2 S chi_(0, m(Delta))(t)) on a grid around the set."""
    ind = delta.indicator()
    m = delta.measure
    hi = delta.intervals[-1][1]
    t = np.geomspace(m * 1e-3, hi * 1e3, grid_points)
    return eval_S_of_step(ind, t) / (2.0 * apply_S(DecreasingStep.indicator(m))(t))


def exp_measurable_set(cfg: SuiteConfig) -> ExperimentReport:
    spec = Corpus("interval_sets", cfg.seed, cfg.size("measurable_set", 200))

    def run():
        r = [float(np.max(measurable_set_ratios(d))) for d in gen_corpus(spec)]
        return r, all(v <= 1.0 + 1e-12 for v in r), {"bound": 1.0}
    return _timed("measurable_set", spec.descriptor(), run)


def exp_s_domination(cfg: SuiteConfig) -> ExperimentReport:
    spec = Corpus("signed_step_functions", cfg.seed, cfg.size("s_domination", 500))

    def run():
        out = []
        for i, x in enumerate(gen_corpus(spec)):
            t = float(SplitMix64((cfg.seed ^ i) ^ 0x5EED).log_uniform(1, -3, 3)[0]) * x.breakpoints[-1]
            bound = apply_S(rearrange(x))(t)
            out.append(abs(eval_S_of_step(x, t)) / bound if bound > 0 else 0.0)
        return out, all(v <= 1.0 + 1e-12 for v in out), {"bound": 1.0}
    return _timed("s_domination", spec.descriptor(), run)


def hilbert_grid(mu: DecreasingStep, points: int = 32) -> np.ndarray:
    return np.geomspace(mu.u[0] * 1e-3, mu.u[-1] * 1e3, points)


def exp_hilbert_domination(cfg: SuiteConfig) -> ExperimentReport:
    spec, corpus = _steps(cfg, "hilbert_domination", 200)

    def run():
        reps = [check_hilbert_domination(x, hilbert_grid(x)) for x in corpus]
        return [r.min_slack for r in reps], all(r.passed for r in reps), {}
    return _timed("hilbert_domination", spec.descriptor(), run)


def hilbert_upper_ratio(x: DecreasingStep, n_samples: int = 4096) -> float:
    """max_j sample_j / S mu(x)((j+1) h): empirical constant in mu(Hx) <~ S mu(x)."""
    est = hilbert_rearrangement_estimate(x.to_step(), n_samples)
    pos = est.positions + est.cell
    return float(np.max(est.values / apply_S(x)(pos)))


def exp_hilbert_upper(cfg: SuiteConfig) -> ExperimentReport:
    spec, corpus = _steps(cfg, "hilbert_upper", 20)

    def run():
        r = [hilbert_upper_ratio(x) for x in corpus]
        return r, True, {"recorded_only": True}
    return _timed("hilbert_upper", spec.descriptor(), run)


def _frozen(cfg, name, descriptor, value):
    status = frozen_check(name, cfg.seed, descriptor, value, cfg.constants_path, cfg.record_constants)
    return status, status in ("match", "recorded")


WEAK_L1_CEILING = 10.0


def exp_weak_l1(cfg: SuiteConfig) -> ExperimentReport:
    spec = Corpus("gaussian_matrices", cfg.seed, cfg.size("weak_l1", 50), {"dim": cfg.dim})

    def run():
        r = [weak_l1_probe(V) for V in gen_corpus(spec)]
        status, ok = _frozen(cfg, "weak_l1", spec.descriptor(), max(r))
        return r, ok and max(r) <= WEAK_L1_CEILING, {"frozen": status, "ceiling": WEAK_L1_CEILING}
    return _timed("weak_l1", spec.descriptor(), run)


def exp_truncation_range(cfg: SuiteConfig) -> ExperimentReport:
    spec = Corpus("gaussian_matrices", cfg.seed, cfg.size("truncation_range", 50), {"dim": cfg.dim})
    rep = truncation_range_probe(gen_corpus(spec), cfg.phi_fn(), cfg.psi_fn(), spec.descriptor())
    desc = {**spec.descriptor(), "phi": cfg.phi}
    status, ok = _frozen(cfg, "truncation_range", desc, rep.max)
    rep.passed = ok
    rep.notes["frozen"] = status
    return rep


def exp_doi_identity(cfg: SuiteConfig) -> ExperimentReport:
    n = cfg.size("doi_identity", 100)
    pairs = Corpus("hermitian_pairs", cfg.seed, n)
    funcs = Corpus("lipschitz_functions", cfg.seed, n)

    def run():
        out = []
        for (A, B), f in zip(gen_corpus(pairs), gen_corpus(funcs)):
            out.append(commutator_identity_check(f, A, B) / identity_scale(f, A, B))
        return out, all(v <= 1e-10 for v in out), {"bound": 1e-10}
    return _timed("doi_identity", {"pairs": pairs.descriptor(), "functions": funcs.descriptor()}, run)


def exp_lipschitz(cfg: SuiteConfig) -> ExperimentReport:
    n = cfg.size("lipschitz", 50)
    mats = Corpus("hermitian_matrices", cfg.seed, 2 * n)
    funcs = Corpus("lipschitz_functions", cfg.seed, n)

    def run():
        phi, psi = cfg.phi_fn(), cfg.psi_fn()
        H = gen_corpus(mats)
        probes = [lipschitz_probe(f, H[2 * i], H[2 * i + 1], phi, psi) for i, f in enumerate(gen_corpus(funcs))]
        r = [p.ratio for p in probes]
        desc = {"matrices": mats.descriptor(), "functions": funcs.descriptor(), "phi": cfg.phi}
        status, ok = _frozen(cfg, "lipschitz", desc, max(r))
        return r, ok, {"frozen": status, "block_ratios": [p.block_ratio for p in probes]}
    return _timed("lipschitz", {"matrices": mats.descriptor(), "functions": funcs.descriptor()}, run)


EXPERIMENTS = {
    "criterion_continuous": exp_criterion_continuous,
    "criterion_discrete": exp_criterion_discrete,
    "psi_limit": exp_psi_limit,
    "boundedness": exp_boundedness,
    "witness_indicator": exp_witness_indicator,
    "witness_general": exp_witness_general,
    "phi0_sandwich": exp_phi0_sandwich,
    "measurable_set": exp_measurable_set,
    "s_domination": exp_s_domination,
    "hilbert_domination": exp_hilbert_domination,
    "hilbert_upper": exp_hilbert_upper,
    "weak_l1": exp_weak_l1,
    "truncation_range": exp_truncation_range,
    "doi_identity": exp_doi_identity,
    "lipschitz": exp_lipschitz,
}


def run_experiment(name: str, cfg: SuiteConfig) -> ExperimentReport:
    try:
        return EXPERIMENTS[name](cfg)
    except Exception as exc:  # failures are data at the suite level
        return ExperimentReport(name, {}, [], False, 0.0, {"error": f"{type(exc).__name__}: {exc}"})


def run_suite(config: SuiteConfig | dict | None = None) -> list[ExperimentReport]:
    cfg = config if isinstance(config, SuiteConfig) else SuiteConfig.from_dict(config or {})
    names = list(EXPERIMENTS) if cfg.experiments is None else list(cfg.experiments)
    unknown = [n for n in names if n not in EXPERIMENTS]
    if unknown:
        raise BadSpec(f"unknown experiments {unknown}")
    # the psi table is cached per phi; build it once before fanning out
    try:
        cfg.psi_fn()
    except Exception:
        pass
    if cfg.parallel and len(names) > 1:
        with ThreadPoolExecutor() as pool:
            return list(pool.map(lambda n: run_experiment(n, cfg), names))
    return [run_experiment(n, cfg) for n in names]


def suite_config_dict(cfg: SuiteConfig) -> dict:
    return asdict(cfg)
