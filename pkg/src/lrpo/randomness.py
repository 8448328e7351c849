"""Short seeds expanded into b-wise independent phase bits, timesteps and samples.

Every random quantity used by the partitioner is read off a degree-``b-1``
polynomial over a prime field ``F_p``.  For uniform coefficients, the values
of such a polynomial at any ``b`` distinct points are independent and uniform
over ``F_p``; thresholding and reducing those values gives b-wise independent
Bernoulli and (nearly) uniform integer draws.

Seed layout (one coefficient word = ``p.bit_length()`` bits)::

    S1(1) = bernoulli_1[c_0..c_{b-1}] . timestep_1[c_0..c_{b-1}]
    ...
    S1(hbar)
    S2    = sampler_1[c_0..c_{b-1}] ... sampler_hbar[c_0..c_{b-1}]
"""

from __future__ import annotations

import enum
import hashlib
import math
import struct
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from sympy import prevprime

from .errors import BudgetError, DomainError, RangeError, ValidationError

UNPHASED = None
SEED_MAGIC = b"LRPO1"


class Mode(str, enum.Enum):
    THEORY = "theory"
    PRACTICAL = "practical"


def _ceil_log2(x: int) -> int:
    return max(int(x) - 1, 0).bit_length()


@dataclass(frozen=True)
class Params:
    """Algorithm parameters.  Use :meth:`practical` or :meth:`theory` to build."""

    epsilon: float
    d: int
    rho: float
    ell: int
    delta: float
    b: int
    hbar: int
    phi: float
    beta: float
    mode: Mode = Mode.PRACTICAL
    sample_budget: int = 64
    ladder_max: int = 0

    def __post_init__(self) -> None:
        for name in ("d", "ell", "b", "hbar", "sample_budget", "ladder_max"):
            val = getattr(self, name)
            if isinstance(val, float) and val.is_integer():
                object.__setattr__(self, name, int(val))
            elif not isinstance(val, int) or isinstance(val, bool):
                raise DomainError(f"{name} must be an integer, got {val!r}")
        if not 0 < self.rho < 1:
            raise DomainError(f"rho must lie in (0,1), got {self.rho}")
        if not 0 <= self.delta <= 1:
            raise DomainError(f"delta must lie in [0,1], got {self.delta}")
        if not 0 < self.beta < 1:
            raise DomainError(f"beta must lie in (0,1), got {self.beta}")
        if self.ell < 0:
            raise DomainError(f"ell must be nonnegative, got {self.ell}")
        if self.b < 1 or self.hbar < 1:
            raise DomainError("b and hbar must be positive")
        if self.sample_budget < 0:
            raise DomainError("sample_budget must be nonnegative")
        if self.ladder_max <= 0:
            object.__setattr__(self, "ladder_max", 2 * math.ceil(1 / self.rho))
        if isinstance(self.mode, str) and not isinstance(self.mode, Mode):
            object.__setattr__(self, "mode", Mode(self.mode))

    @classmethod
    def practical(
        cls,
        d: int,
        *,
        epsilon: float = 0.5,
        rho: float = 0.005,
        ell: int = 20,
        delta: float = 0.1,
        b: int = 16,
        phi: float = 0.35,
        beta: float = 0.4,
        hbar: int | None = None,
        sample_budget: int = 16,
        ladder_max: int = 0,
    ) -> "Params":
        # beta is a free knob here: with beta = epsilon/10 the findr threshold
        # 12 beta^4 |S_h| is below one sample and any single viable sample fixes k_h
        if hbar is None:
            hbar = default_hbar(delta)
        return cls(
            epsilon=epsilon, d=d, rho=rho, ell=ell, delta=delta, b=b, hbar=hbar,
            phi=phi, beta=beta, mode=Mode.PRACTICAL,
            sample_budget=sample_budget, ladder_max=ladder_max,
        )

    @classmethod
    def theory(cls, epsilon: float, d: int, *, rho: float = 0.5, ell: int = 1) -> "Params":
        """Constants from the analysis.  ``rho`` and ``ell`` are free; ``delta``
        is solved from ``delta * ell / rho = epsilon^100 / d^4``."""
        eps = Fraction(str(epsilon))
        beta = eps / 10
        frho = Fraction(str(rho))
        delta = eps**100 / Fraction(d) ** 4 * frho / ell
        b = max(math.ceil(4 * ell / frho), math.ceil(4 / beta**10))
        return cls(
            epsilon=float(eps), d=d, rho=rho, ell=ell, delta=float(delta), b=b,
            hbar=math.ceil(2 / delta), phi=float(eps**10 / d), beta=float(beta),
            mode=Mode.THEORY, sample_budget=math.ceil(1 / beta**10),
        )

    @property
    def viable_need(self) -> int:
        """Good timesteps required for (h,k)-viability: ceil(beta/lg^2(1/beta) * ell)."""
        return math.ceil(self.beta / math.log2(1 / self.beta) ** 2 * self.ell)

    @property
    def findr_fraction(self) -> float:
        return 12 * self.beta**4

    def ladder(self) -> list[int]:
        ks, k = [], 1
        while k <= self.ladder_max:
            ks.append(k)
            k *= 2
        return ks

    def to_dict(self) -> dict:
        out = asdict(self)
        out["mode"] = self.mode.value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "Params":
        data = dict(data)
        data["mode"] = Mode(data.get("mode", "practical"))
        return cls(**data)


def default_hbar(delta: float) -> int:
    return math.ceil(2 / delta) if delta > 0 else 1


def check_theory_params(params: Params, rel_tol: float = 1e-9) -> list[str]:
    """Return the violated THEORY-mode identities (empty when all hold)."""
    problems = []
    eps, d = Fraction(str(params.epsilon)), params.d
    beta = eps / 10
    if not math.isclose(params.beta, float(beta), rel_tol=rel_tol):
        problems.append("beta != epsilon/10")
    if not math.isclose(params.phi, float(eps**10 / d), rel_tol=rel_tol):
        problems.append("phi != epsilon^10/d")
    lhs = params.delta * params.ell / params.rho
    if not math.isclose(lhs, float(eps**100 / Fraction(d) ** 4), rel_tol=rel_tol):
        problems.append("delta*ell/rho != epsilon^100/d^4")
    b_want = max(math.ceil(4 * params.ell / Fraction(str(params.rho))), math.ceil(4 / beta**10))
    if params.b != b_want:
        problems.append("b != max(ceil(4 ell/rho), ceil(4/beta^10))")
    if params.hbar != default_hbar(params.delta):
        problems.append("hbar != ceil(2/delta)")
    return problems


# -- prime field ------------------------------------------------------------

def field_bits(N: int, ell: int) -> int:
    """Coefficient word width for label universe ``N``.

    ``2*ceil(lg N)`` keeps the word size proportional to ``lg N``; the second
    term keeps ``p >= N * ell * 2^10`` so range reduction bias stays below
    ``2^-10``; 31 bits is the floor for small universes.
    """
    return max(2 * _ceil_log2(N), _ceil_log2(N * max(ell, 1)) + 10, 31)


@lru_cache(maxsize=None)
def field_prime(N: int, ell: int) -> int:
    p = int(prevprime(2 ** field_bits(N, ell)))
    assert p > N * max(ell, 1)
    return p


def _mulmod_np(a: np.ndarray, x: np.ndarray, p: int) -> np.ndarray:
    bits = p.bit_length()
    if 2 * bits <= 62:
        return (a * x) % p
    c = 62 - bits
    mask = (1 << c) - 1
    nchunks = -(-bits // c)
    out = np.zeros_like(a)
    for i in range(nchunks - 1, -1, -1):
        chunk = (x >> (i * c)) & mask
        out = ((out << c) % p + a * chunk) % p
    return out


@dataclass(frozen=True)
class PolyHash:
    """``x -> sum_i coeffs[i] * x^i mod p``."""

    p: int
    coeffs: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coeffs", tuple(int(c) for c in self.coeffs))
        if any(not 0 <= c < self.p for c in self.coeffs):
            raise ValidationError("coefficients must lie in [0, p)")

    @property
    def b(self) -> int:
        return len(self.coeffs)

    def __call__(self, x: int) -> int:
        p, acc = self.p, 0
        for c in reversed(self.coeffs):
            acc = (acc * x + c) % p
        return acc

    def many(self, xs: Sequence[int] | np.ndarray) -> np.ndarray:
        """Vectorized evaluation; falls back to Python ints for wide fields."""
        if self.p.bit_length() <= 48:
            x = np.asarray(xs, dtype=np.int64) % self.p
            acc = np.zeros_like(x)
            for c in reversed(self.coeffs):
                acc = (_mulmod_np(acc, x, self.p) + c) % self.p
            return acc
        return np.array([self(int(v)) for v in xs], dtype=object)


# -- seeds -------------------------------------------------------------------

@dataclass(frozen=True)
class SeedS1:
    p: int
    delta: float
    ell: int
    bernoulli: tuple[PolyHash, ...]
    timestep_hashes: tuple[PolyHash, ...]
    threshold: int = field(init=False, repr=False)

    def __post_init__(self) -> None:
        # Bernoulli(delta) as h(v) < floor(delta * p); bias at most 1/p
        object.__setattr__(self, "threshold", math.floor(Fraction(self.delta) * self.p))

    @property
    def hbar(self) -> int:
        return len(self.bernoulli)

    def _check_phase(self, h: int) -> None:
        if not 1 <= h <= self.hbar:
            raise RangeError(f"phase {h} outside [1, {self.hbar}]")

    def phase_bit(self, h: int, v: int) -> bool:
        self._check_phase(h)
        return self.bernoulli[h - 1](v) < self.threshold

    def phase_of(self, v: int) -> int | None:
        thr = self.threshold
        for h, hsh in enumerate(self.bernoulli, start=1):
            if hsh(v) < thr:
                return h
        return UNPHASED

    def phases(self, labels: Sequence[int]) -> np.ndarray:
        """Phase of every label; unphased labels get ``hbar + 1``."""
        out = np.full(len(labels), self.hbar + 1, dtype=np.int64)
        if len(labels) == 0:
            return out
        thr = self.threshold
        pending = np.ones(len(labels), dtype=bool)
        for h, hsh in enumerate(self.bernoulli, start=1):
            hit = pending & (hsh.many(labels) < thr)
            out[hit] = h
            pending &= ~hit
            if not pending.any():
                break
        return out

    def timestep(self, h: int, v: int) -> int:
        self._check_phase(h)
        if self.ell < 1:
            raise DomainError("timesteps need ell >= 1")
        return 1 + self.timestep_hashes[h - 1](v) % self.ell


@dataclass(frozen=True)
class SeedS2:
    p: int
    n: int
    sample_budget: int
    sampler: tuple[PolyHash, ...]

    def sample(self, h: int, j: int) -> int:
        if not 1 <= h <= len(self.sampler):
            raise RangeError(f"phase {h} outside [1, {len(self.sampler)}]")
        if not 1 <= j <= self.sample_budget:
            raise BudgetError(f"draw {j} exceeds sample budget {self.sample_budget}")
        return 1 + self.sampler[h - 1](j) % self.n


def draw_phase_bit(s1: SeedS1, h: int, v: int) -> bool:
    return s1.phase_bit(h, v)


def phase_of(s1: SeedS1, v: int) -> int | None:
    return s1.phase_of(v)


def draw_timestep(s1: SeedS1, h: int, v: int) -> int:
    return s1.timestep(h, v)


def sample_vertex(s2: SeedS2, h: int, j: int) -> int:
    return s2.sample(h, j)


@dataclass(frozen=True)
class RandomnessLedger:
    word_bits: int
    words_S1: int
    words_S2: int
    bits_S1: int
    bits_S2: int
    total_bits: int

    def as_dict(self) -> dict[str, int]:
        return asdict(self)


def ledger_for(params: Params, N: int) -> RandomnessLedger:
    """Closed-form seed length for ``params`` over label universe ``N``."""
    w = field_prime(N, params.ell).bit_length()
    words1 = params.hbar * 2 * params.b
    words2 = params.hbar * params.b
    return RandomnessLedger(w, words1, words2, words1 * w, words2 * w, (words1 + words2) * w)


@dataclass(frozen=True)
class SeedBundle:
    params: Params
    N: int
    n: int
    s1: SeedS1
    s2: SeedS2
    raw: bytes = field(default=b"", compare=False, repr=False)

    @property
    def p(self) -> int:
        return self.s1.p

    def ledger(self) -> RandomnessLedger:
        return ledger(self)

    # construction
    @classmethod
    def from_coefficients(cls, params: Params, N: int, n: int, words: Sequence[int]) -> "SeedBundle":
        p = field_prime(N, params.ell)
        b, hbar = params.b, params.hbar
        need = 3 * hbar * b
        if len(words) != need:
            raise ValidationError(f"expected {need} coefficient words, got {len(words)}")
        it = iter(words)
        take = lambda: PolyHash(p, tuple(next(it) for _ in range(b)))  # noqa: E731
        bern, ts = [], []
        for _ in range(hbar):
            bern.append(take())
            ts.append(take())
        samp = [take() for _ in range(hbar)]
        s1 = SeedS1(p, params.delta, params.ell, tuple(bern), tuple(ts))
        s2 = SeedS2(p, n, params.sample_budget, tuple(samp))
        bundle = cls(params, N, n, s1, s2)
        return replace(bundle, raw=bundle.to_bytes())

    @classmethod
    def from_material(cls, params: Params, N: int, n: int, material: bytes) -> "SeedBundle":
        """Expand arbitrary seed material with SHAKE-256 into coefficient words."""
        p = field_prime(N, params.ell)
        nbytes = (p.bit_length() + 7) // 8 + 8
        count = 3 * params.hbar * params.b
        stream = hashlib.shake_256(material).digest(count * nbytes)
        words = [
            int.from_bytes(stream[i * nbytes:(i + 1) * nbytes], "big") % p for i in range(count)
        ]
        return cls.from_coefficients(params, N, n, words)

    @classmethod
    def random(cls, params: Params, N: int, n: int, rng: np.random.Generator) -> "SeedBundle":
        return cls.from_material(params, N, n, rng.bytes(32))

    @classmethod
    def from_hex(cls, params: Params, N: int, n: int, text: str) -> "SeedBundle":
        """A hex string is either a full seed file or short seed material."""
        data = bytes.fromhex(text.strip())
        if data.startswith(SEED_MAGIC):
            return cls.from_bytes(data)
        return cls.from_material(params, N, n, data)

    def words(self) -> list[int]:
        out: list[int] = []
        for bh, th in zip(self.s1.bernoulli, self.s1.timestep_hashes):
            out.extend(bh.coeffs)
            out.extend(th.coeffs)
        for sh in self.s2.sampler:
            out.extend(sh.coeffs)
        return out

    # serialization
    _HEAD = struct.Struct("<dQdQdQQ")
    _EXT = struct.Struct("<ddQQQQQ")

    def to_bytes(self) -> bytes:
        pr = self.params
        head = self._HEAD.pack(pr.epsilon, pr.d, pr.rho, pr.ell, pr.delta, pr.b, pr.hbar)
        mode = 0 if pr.mode is Mode.PRACTICAL else 1
        ext = self._EXT.pack(pr.phi, pr.beta, pr.sample_budget, self.N, self.n, mode, pr.ladder_max)
        width = (self.p.bit_length() + 7) // 8
        body = b"".join(w.to_bytes(width, "big") for w in self.words())
        return SEED_MAGIC + head + ext + body

    @classmethod
    def from_bytes(cls, data: bytes) -> "SeedBundle":
        if not data.startswith(SEED_MAGIC):
            raise ValidationError("not a seed file (bad magic)")
        off = len(SEED_MAGIC)
        eps, d, rho, ell, delta, b, hbar = cls._HEAD.unpack_from(data, off)
        off += cls._HEAD.size
        phi, beta, budget, N, n, mode, ladder_max = cls._EXT.unpack_from(data, off)
        off += cls._EXT.size
        params = Params(
            epsilon=eps, d=d, rho=rho, ell=ell, delta=delta, b=b, hbar=hbar, phi=phi,
            beta=beta, mode=Mode.PRACTICAL if mode == 0 else Mode.THEORY,
            sample_budget=budget, ladder_max=ladder_max,
        )
        p = field_prime(N, ell)
        width = (p.bit_length() + 7) // 8
        body = data[off:]
        if len(body) != 3 * hbar * b * width:
            raise ValidationError("seed file body has the wrong length")
        words = [int.from_bytes(body[i:i + width], "big") for i in range(0, len(body), width)]
        return cls.from_coefficients(params, N, n, words)

    def digest(self) -> str:
        return hashlib.sha256(self.raw or self.to_bytes()).hexdigest()


def ledger(bundle: SeedBundle) -> RandomnessLedger:
    """Exact bit count of the coefficient words a bundle is built from."""
    w = bundle.p.bit_length()
    words1 = sum(h.b for h in bundle.s1.bernoulli) + sum(h.b for h in bundle.s1.timestep_hashes)
    words2 = sum(h.b for h in bundle.s2.sampler)
    return RandomnessLedger(w, words1, words2, words1 * w, words2 * w, (words1 + words2) * w)


def hashes_uniform_on_tuples(p: int, b: int, points: Iterable[int]) -> bool:
    """Exhaustive check: over all ``p**b`` coefficient vectors, the value tuple at
    ``points`` (distinct, ``len == b``) hits every element of ``F_p^b`` equally often."""
    pts = tuple(points)
    grids = np.meshgrid(*[np.arange(p, dtype=np.int64)] * b, indexing="ij")
    coeffs = [g.ravel() for g in grids]
    vals = []
    for x in pts:
        acc = np.zeros_like(coeffs[0])
        for c in reversed(coeffs):
            acc = (acc * x + c) % p
        vals.append(acc)
    code = np.zeros_like(vals[0])
    for v in vals:
        code = code * p + v
    counts = np.bincount(code, minlength=p**len(pts))
    return bool((counts == counts[0]).all() and counts.sum() == p**b)
