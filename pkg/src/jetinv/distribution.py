"""Generic rank of the distributions spanned by lifted fields on J^r(q)."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .jetcalc import JetCoordinateSystem
from .prolong import VectorFieldJetData, evaluate_lift, generic_lift


class SamplingError(RuntimeError):
    """No point satisfying the guards was found within the budget."""


class RankInconsistencyError(RuntimeError):
    """Per-point ranks disagree too often for a generic rank to be meaningful."""


@dataclass(frozen=True)
class Guard:
    name: str
    magnitude: Callable[[Mapping[str, float]], float]
    margin: float = 1e-2

    def holds(self, p: Mapping[str, float]) -> bool:
        return abs(self.magnitude(p)) > self.margin


def ambient_dimension(m: int, r: int) -> int:
    return JetCoordinateSystem.lagrangian(m, r).dimension


def expected_rank(m: int, r: int) -> int:
    """Full rank for r = 0, 1; corank one on J^2(q)."""
    n = ambient_dimension(m, r)
    return n - 1 if r == 2 else n


def _vec(p, names):
    return np.array([p[n] for n in names])


def default_guards(m: int, r: int, margin: float = 1e-2) -> list[Guard]:
    """Guards defining the generic open set used for order r.

    For r = 2 every index is guarded at once: z, det z_{dy dy},
    z - dy^c z_{dy^c}, each z_{dy^a} and each dy^c.
    """
    sys = JetCoordinateSystem.lagrangian(m, max(r, 0))
    dy = [f"dy{i}" for i in range(1, m + 1)]
    zdy = [sys.canonical("z_" + n) for n in dy] if r >= 1 else []
    guards = [Guard("z", lambda p: p["z"], margin)]
    if r >= 1:
        guards.append(Guard("min|dy|", lambda p: np.min(np.abs(_vec(p, dy))), margin))
        guards.append(Guard("min|z_dy|", lambda p: np.min(np.abs(_vec(p, zdy))), margin))
    if r >= 2:
        zdd = [[sys.canonical("z_" + a + b) for b in dy] for a in dy]

        def det_hess(p):
            return np.linalg.det(np.array([[p[n] for n in row] for row in zdd]))

        guards.append(Guard("det z_dydy", det_hess, margin))
        guards.append(Guard("z - dy.z_dy",
                            lambda p: p["z"] - _vec(p, dy) @ _vec(p, zdy), margin))
    return guards


def sample_point(m: int, r: int, guards: Sequence[Guard] | None,
                 rng: np.random.Generator, budget: int = 10000) -> dict[str, float]:
    """Uniform point of J^r(q) in [-2, 2]^n satisfying every guard."""
    sys = JetCoordinateSystem.lagrangian(m, r)
    guards = default_guards(m, r) if guards is None else guards
    for _ in range(budget):
        p = dict(zip(sys.coordinates, rng.uniform(-2.0, 2.0, sys.dimension).tolist()))
        if all(g.holds(p) for g in guards):
            return p
    raise SamplingError(f"no guarded point found in {budget} draws (m={m}, r={r})")


def span_matrix(m: int, r: int, point: Mapping[str, float], samples: int,
                rng: np.random.Generator) -> np.ndarray:
    """Rows are lifted generic fields at ``point`` for random field data."""
    data = VectorFieldJetData.random(m, rng, size=samples)
    return evaluate_lift(generic_lift(m, r), data, point)


def singular_values(matrix: np.ndarray) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float)
    if not np.all(np.isfinite(matrix)):
        raise ValueError("matrix has non-finite entries")
    return np.linalg.svd(matrix, compute_uv=False)


def numeric_rank(matrix: np.ndarray, tolerance: float = 1e-9) -> int:
    """Number of singular values above ``tolerance`` times the largest one."""
    s = singular_values(matrix)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tolerance * s[0]))


def spectral_gap(s: np.ndarray, rank: int) -> float:
    """Ratio between the last kept and first dropped singular value."""
    if rank == 0 or rank >= len(s):
        return np.inf
    return np.inf if s[rank] == 0.0 else s[rank - 1] / s[rank]


def null_covector(matrix: np.ndarray) -> np.ndarray:
    """Unit covector annihilating the span up to the smallest singular value."""
    _, _, vt = np.linalg.svd(np.asarray(matrix, dtype=float))
    return vt[-1]


@dataclass
class RankExperiment:
    m: int
    r: int
    samples: int | None = None
    points: int = 20
    tolerance: float = 1e-9
    seed: int = 0
    guards: list[Guard] | None = None
    min_gap: float = 1e3
    outlier_fraction: float = 0.1

    def __post_init__(self):
        if self.m < 1 or self.r not in (0, 1, 2):
            raise ValueError("need m >= 1 and r in {0, 1, 2}")
        n = ambient_dimension(self.m, self.r)
        if self.samples is None:
            self.samples = n + 16
        if self.samples < n:
            raise ValueError(f"samples must be at least the ambient dimension {n}")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.points < 1:
            raise ValueError("need at least one point")
        if self.guards is None:
            self.guards = default_guards(self.m, self.r)
        if self.r == 2 and not self.guards:
            raise ValueError("order 2 needs a non-empty guard set")


@dataclass
class RankResult:
    m: int
    r: int
    ambient: int
    expected: int
    rank: int
    ranks: list  # per point; None where the spectral gap was too small
    singular_values: np.ndarray
    seed: int
    points: list = field(default_factory=list, repr=False)
    covectors: list = field(default_factory=list, repr=False)

    @property
    def match(self) -> bool:
        return self.rank == self.expected

    @property
    def agreeing(self) -> int:
        return sum(1 for k in self.ranks if k == self.rank)


def generic_rank(exp: RankExperiment) -> RankResult:
    """Modal rank over guarded random points, with the null covector at each point."""
    rng = np.random.default_rng(exp.seed)
    ambient = ambient_dimension(exp.m, exp.r)
    ranks, pts, covs = [], [], []
    profile = None
    for _ in range(exp.points):
        p = sample_point(exp.m, exp.r, exp.guards, rng)
        mat = span_matrix(exp.m, exp.r, p, exp.samples, rng)
        _, s, vt = np.linalg.svd(mat)
        k = int(np.sum(s > exp.tolerance * s[0])) if s[0] > 0 else 0
        if profile is None:
            profile = s
        pts.append(p)
        covs.append(vt[-1])
        ranks.append(k if spectral_gap(s, k) >= exp.min_gap else None)
    counted = Counter(k for k in ranks if k is not None)
    if not counted:
        raise RankInconsistencyError("every point failed the spectral-gap test")
    modal = max(sorted(counted), key=lambda k: counted[k])
    outliers = exp.points - counted[modal]
    if outliers > exp.outlier_fraction * exp.points:
        raise RankInconsistencyError(
            f"{outliers} of {exp.points} points disagree with the modal rank {modal}: "
            f"{ranks}")
    return RankResult(exp.m, exp.r, ambient, expected_rank(exp.m, exp.r), modal, ranks,
                      profile, exp.seed, pts, covs)
