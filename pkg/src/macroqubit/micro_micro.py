r"""Post-selected correlations between a photon and its amplified twin.

The amplification + detection chain on Bob's side is pulled back onto the
input space spanned by ``{|+>, |->, |0>}`` as three restricted operators
``p_a, p_aperp, p_null``.  Alice measures her photon ideally.  For the
singlet this gives the visibility, the probability of a conclusive event
and, through a seeded sampler, simulated Bell-test tallies.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cloners import ClonerSpec, mean_total_photons, restricted_gen
from .detection import DetectorSpec, analyzer_probs
from .errors import ContractViolation, InvalidArgument

__all__ = [
    "RestrictedOp",
    "VisibilityPoint",
    "ChshReport",
    "Tally",
    "CHSH_SETTINGS",
    "restricted_povm",
    "visibility",
    "visibility_sweep",
    "entanglement_bound",
    "general_povm_visibility",
    "chsh_assess",
    "outcome_probabilities",
    "sample_events",
]

CHSH_LIMIT = 1.0 / math.sqrt(2.0)
# Analyzer probabilities are differences of numbers close to 1, good to a few
# 1e-16 absolute; below this conclusive probability V is not resolvable.
P_FLOOR = 1e-10
# Alice at 0 and pi/4, Bob at pi/8 and 3pi/8 (polarization angles)
CHSH_SETTINGS = ((0.0, math.pi / 8), (0.0, 3 * math.pi / 8), (math.pi / 4, math.pi / 8), (math.pi / 4, 3 * math.pi / 8))
_CHSH_SIGNS = (1, -1, 1, 1)


@dataclass(frozen=True)
class RestrictedOp:
    """Real symmetric 3x3 matrix in the basis ``(|+>, |->, |0>)``."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.shape != (3, 3):
            raise InvalidArgument(f"restricted operator must be 3x3, got {m.shape}")
        if np.max(np.abs(m - m.T)) > 1e-12:
            raise ContractViolation("restricted operator is not Hermitian")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.matrix)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def __getitem__(self, idx):
        return self.matrix[idx]


@dataclass(frozen=True)
class VisibilityPoint:
    mean_NA: float
    V: float
    P_conclusive: float
    strength: float = float("nan")
    kind: str = ""


@dataclass(frozen=True)
class ChshReport:
    V: float
    P_conclusive: float
    PV: float
    S_postselected: float
    S_raw: float
    postselected_violation: bool
    loophole_free_violation: bool


def restricted_povm(spec: ClonerSpec, det: DetectorSpec, order: int | None = None) -> dict:
    """``{"p_a", "p_aperp", "p_null"}`` as :class:`RestrictedOp` from the closed forms."""
    gen = restricted_gen(spec, det.eta, order if order is not None else max(det.theta + 2, 3))
    diag = {"p_a": [], "p_aperp": [], "p_null": []}
    for entry in ("pp", "mm", "oo"):
        out = analyzer_probs(gen, entry, det)
        diag["p_a"].append(out.p_a)
        diag["p_aperp"].append(out.p_aperp)
        diag["p_null"].append(out.p_null)
    # all coherences between |+>, |-> and |0> vanish for these cloners
    return {k: RestrictedOp(np.diag(v)) for k, v in diag.items()}


def _visibility_from_ops(ops):
    pa, pap = ops["p_a"], ops["p_aperp"]
    num = pa[0, 0] + pap[1, 1] - pa[1, 1] - pap[0, 0]
    den = pa[0, 0] + pap[1, 1] + pa[1, 1] + pap[0, 0]
    return (num / den if den > 0 else float("nan")), 0.5 * den


def visibility(spec: ClonerSpec, det: DetectorSpec) -> VisibilityPoint:
    """Singlet visibility and conclusive-event probability for one cloner setting.

    ``V = (pa_++ + pap_-- - pa_-- - pap_++) / (pa_++ + pap_-- + pa_-- + pap_++)``
    and ``P = 1/2 (pa_++ + pap_-- + pa_-- + pap_++)``.  ``V`` is ``nan`` when
    ``P`` is below :data:`P_FLOOR`, where rounding dominates the ratio.
    """
    ops = restricted_povm(spec, det)
    v, p = _visibility_from_ops(ops)
    if not p >= P_FLOOR:
        v = float("nan")
    return VisibilityPoint(mean_total_photons(spec), float(v), float(p), spec.strength, spec.kind)


def visibility_sweep(kind: str, strengths, det: DetectorSpec) -> list:
    return [visibility(ClonerSpec.with_strength(kind, s), det) for s in strengths]


def entanglement_bound(kind: str) -> float:
    """Largest visibility a separable input can produce: 1/3 universal, 1/2 otherwise."""
    kind = ClonerSpec(kind).kind
    return 1.0 / 3.0 if kind == "universal" else 0.5


def general_povm_visibility(eta: float, xi: float) -> float:
    """Post-selection factor ``eta / (eta + xi)`` of a noisy two-outcome detector."""
    if eta < 0 or xi < 0:
        raise InvalidArgument("eta and xi must be non-negative")
    if eta + xi >= 1:
        raise InvalidArgument(f"need eta + xi < 1, got {eta + xi}")
    if eta + xi == 0:
        raise InvalidArgument("eta and xi cannot both vanish")
    return eta / (eta + xi)


def chsh_assess(V: float, P_conclusive: float) -> ChshReport:
    if not 0.0 <= P_conclusive <= 1.0:
        raise InvalidArgument(f"P_conclusive must lie in [0, 1], got {P_conclusive}")
    pv = P_conclusive * V
    s = 2.0 * math.sqrt(2.0)
    return ChshReport(
        V=V,
        P_conclusive=P_conclusive,
        PV=pv,
        S_postselected=s * V,
        S_raw=s * pv,
        postselected_violation=bool(V > CHSH_LIMIT),
        loophole_free_violation=bool(pv > CHSH_LIMIT),
    )


# --------------------------------------------------------------------------
# Monte Carlo


def outcome_probabilities(ops: dict, alpha: float, beta: float) -> np.ndarray:
    """Joint probabilities ``[Alice +/-][Bob a, a_perp, null]`` for one setting.

    Alice finds her photon along ``alpha`` (or orthogonal); the singlet then
    leaves Bob's photon orthogonal to it, which in Bob's basis at ``beta``
    has weight ``sin^2(beta - alpha)`` on ``|+>``.
    """
    s2 = math.sin(beta - alpha) ** 2
    c2 = 1.0 - s2
    out = np.zeros((2, 3))
    for row, (wp, wm) in enumerate(((s2, c2), (c2, s2))):
        for col, name in enumerate(("p_a", "p_aperp", "p_null")):
            op = ops[name]
            out[row, col] = 0.5 * (wp * op[0, 0] + wm * op[1, 1])
    return out


@dataclass
class Tally:
    """Counts ``[setting][Alice +/-][Bob a, a_perp, null]`` with their settings and seed."""

    settings: tuple
    counts: np.ndarray
    seed: int | None = None

    def merge(self, other: "Tally") -> "Tally":
        if tuple(other.settings) != tuple(self.settings):
            raise InvalidArgument("cannot merge tallies over different settings")
        return Tally(self.settings, self.counts + other.counts, self.seed)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def correlation(self, idx: int, postselect: bool = True) -> float:
        c = self.counts[idx]
        same = c[0, 0] + c[1, 1]
        diff = c[0, 1] + c[1, 0]
        den = same + diff if postselect else c.sum()
        return float((same - diff) / den) if den else float("nan")

    def conclusive(self, idx: int) -> int:
        return int(self.counts[idx][:, :2].sum())

    def visibility(self, idx: int) -> float:
        """Empirical ``V`` from ``E = -V cos 2(beta - alpha)``."""
        alpha, beta = self.settings[idx]
        c = math.cos(2 * (beta - alpha))
        if abs(c) < 1e-12:
            raise InvalidArgument("visibility is undefined for orthogonal-looking settings")
        return -self.correlation(idx) / c

    def visibility_stderr(self, idx: int) -> float:
        v, n = self.visibility(idx), self.conclusive(idx)
        c = abs(math.cos(2 * (self.settings[idx][1] - self.settings[idx][0])))
        return math.sqrt(max(1.0 - (v * c) ** 2, 0.0) / n) / c if n else float("nan")

    def chsh(self, postselect: bool = True) -> float:
        """``|E1 - E2 + E3 + E4|`` over :data:`CHSH_SETTINGS` (must be the tally settings)."""
        if tuple(self.settings) != CHSH_SETTINGS:
            raise InvalidArgument("tally was not taken at the CHSH settings")
        return abs(sum(s * self.correlation(i, postselect) for i, s in enumerate(_CHSH_SIGNS)))


SHARD = 1 << 18


def sample_events(spec: ClonerSpec, det: DetectorSpec, settings=CHSH_SETTINGS, count: int = 0,
                  seed: int = 0, workers: int = 1) -> Tally:
    """Draw ``count`` singlet events per setting from the restricted POVM.

    The draw is split into fixed-size shards, each with its own child seed
    of ``SeedSequence(seed)``, so the result does not depend on ``workers``.
    """
    if count < 0:
        raise InvalidArgument("count must be >= 0")
    settings = tuple(tuple(float(x) for x in s) for s in settings)
    for s in settings:
        if len(s) != 2:
            raise InvalidArgument(f"a setting is a pair of angles, got {s!r}")
    counts = np.zeros((len(settings), 2, 3), dtype=np.int64)
    if count == 0 or not settings:
        return Tally(settings, counts, seed)
    ops = restricted_povm(spec, det)
    probs = [outcome_probabilities(ops, a, b).ravel() for a, b in settings]
    n_shards = -(-count // SHARD)
    sizes = [SHARD] * (n_shards - 1) + [count - SHARD * (n_shards - 1)]
    children = np.random.SeedSequence(seed).spawn(len(settings) * n_shards)

    def run(job):
        i, k = divmod(job, n_shards)
        rng = np.random.default_rng(children[job])
        p = np.clip(probs[i], 0.0, None)
        return i, rng.multinomial(sizes[k], p / p.sum())

    jobs = range(len(settings) * n_shards)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    for i, c in results:
        counts[i] += c.reshape(2, 3)
    return Tally(settings, counts, seed)
