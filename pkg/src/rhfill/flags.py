"""Flags, transversality, and Q-divergence for PGL(d, R).

A flag assigns to each index i of a parabolic type an i-dimensional
subspace of R^d, nested along the type.  Flags are stored as orthonormal
bases and compared through orthogonal projectors, which removes the
representative ambiguity.  The attracting flag of a matrix is read off
its singular value decomposition and is well defined exactly when the
type-relevant singular gaps are open; verdicts about sequences are
finite-data judgments with "inconclusive" as an honest third answer.

For d = 2 the flag manifold is the projective line: lines are angles mod
pi, and the projector metric between lines at angles s and t is
|sin(s - t)|.  Limit sets of free groups in this case are enumerated as
reduced words with batched 2x2 arithmetic instead of per-element SVDs,
which keeps million-word clouds cheap.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (BudgetExceededError, GapTooSmallError,
                     InvalidParameterError, TypeMismatchError)
from .groups import (BALL_CAP, FreeAbelianOracle, FreeOracle,
                     FreeProductOracle, GroupOracle, enumerate_ball)
from .tolerances import DEFAULT_TOLS, Tolerances


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class ParabolicType:
    """A parabolic type for PGL(d, R): the subspace dimensions its flags carry.

    indices is a nonempty subset of {1, ..., d-1}; a symmetric type contains
    d - i whenever it contains i.
    """

    d: int
    indices: tuple[int, ...]

    def __post_init__(self):
        if self.d < 2:
            raise InvalidParameterError("parabolic types need d >= 2")
        idx = tuple(sorted({int(i) for i in self.indices}))
        if not idx:
            raise InvalidParameterError("parabolic type needs at least one index")
        if idx[0] < 1 or idx[-1] > self.d - 1:
            raise InvalidParameterError(
                f"type indices must lie in 1..{self.d - 1}, got {idx}")
        object.__setattr__(self, "indices", idx)

    @property
    def symmetric(self) -> bool:
        s = set(self.indices)
        return all(self.d - i in s for i in self.indices)

    def symmetrized(self) -> "ParabolicType":
        s = set(self.indices) | {self.d - i for i in self.indices}
        return ParabolicType(self.d, tuple(sorted(s)))


def line_type() -> ParabolicType:
    """The single parabolic type of PGL(2, R); flags are points of RP^1."""
    return ParabolicType(2, (1,))


class ProjectiveMatrix:
    """An invertible d x d real matrix up to nonzero scale.

    Entries are normalized to unit Frobenius norm with the first nonzero
    entry positive, so equal projective classes get equal entry arrays.
    Rejected when numerically singular (smallest singular value at or below
    the condition tolerance times the largest).
    """

    __slots__ = ("entries", "d")

    def __init__(self, entries, tols: Tolerances = DEFAULT_TOLS):
        m = np.array(entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise InvalidParameterError(
                f"need a square matrix with d >= 2, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise InvalidParameterError("matrix entries must be finite")
        norm = float(np.linalg.norm(m))
        if norm == 0.0:
            raise InvalidParameterError("zero matrix is not projective")
        m /= norm
        flat = m.ravel()
        if flat[np.flatnonzero(flat)[0]] < 0:
            m = -m
        sv = np.linalg.svd(m, compute_uv=False)
        if not sv[-1] > tols.condition * sv[0]:
            raise InvalidParameterError("matrix is numerically singular")
        m.setflags(write=False)
        self.entries = m
        self.d = int(m.shape[0])

    def __matmul__(self, other: "ProjectiveMatrix") -> "ProjectiveMatrix":
        return ProjectiveMatrix(self.entries @ other.entries)

    def inv(self) -> "ProjectiveMatrix":
        return ProjectiveMatrix(np.linalg.inv(self.entries))

    def power(self, n: int) -> "ProjectiveMatrix":
        if n == 0:
            return ProjectiveMatrix(np.eye(self.d))
        return ProjectiveMatrix(np.linalg.matrix_power(self.entries, n))

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.entries, compute_uv=False)

    def same_class(self, other: "ProjectiveMatrix", tol: float = 1e-12) -> bool:
        return self.d == other.d and bool(
            np.allclose(self.entries, other.entries, atol=tol, rtol=0.0))

    def __repr__(self):
        return f"ProjectiveMatrix(d={self.d})"


def as_projective(m) -> ProjectiveMatrix:
    return m if isinstance(m, ProjectiveMatrix) else ProjectiveMatrix(m)


def _orthonormal_span(b: np.ndarray, tols: Tolerances) -> np.ndarray:
    # SVD rather than QR: deterministic orthonormal basis of the column span
    u, s, _ = np.linalg.svd(b, full_matrices=False)
    if not s[-1] > tols.condition * max(s[0], 1.0):
        raise InvalidParameterError("degenerate spanning set for a flag subspace")
    return u


class Flag:
    """Nested subspaces of R^d, one per type index, as orthonormal bases.

    Input bases are reorthonormalized on construction (the subspace, not
    the basis, is the datum); nesting is verified through projectors.
    """

    __slots__ = ("type", "bases")

    def __init__(self, ptype: ParabolicType, bases: dict,
                 tols: Tolerances = DEFAULT_TOLS):
        fixed: dict[int, np.ndarray] = {}
        for i in ptype.indices:
            if i not in bases:
                raise InvalidParameterError(f"flag is missing a basis for index {i}")
            b = np.asarray(bases[i], dtype=float)
            if b.shape != (ptype.d, i):
                raise InvalidParameterError(
                    f"basis for index {i} must be {ptype.d}x{i}, got {b.shape}")
            q = _orthonormal_span(b, tols)
            q.setflags(write=False)
            fixed[i] = q
        for a, b in zip(ptype.indices, ptype.indices[1:]):
            # V_a inside V_b iff projecting V_a onto V_b loses nothing
            defect = fixed[a] - fixed[b] @ (fixed[b].T @ fixed[a])
            if np.linalg.norm(defect, 2) > tols.nesting:
                raise InvalidParameterError(
                    f"flag bases are not nested: V_{a} is not inside V_{b}")
        self.type = ptype
        self.bases = fixed

    def projector(self, i: int) -> np.ndarray:
        b = self.bases[i]
        return b @ b.T

    def apply(self, g) -> "Flag":
        """Image flag under g: matrix times basis, then reorthonormalize."""
        m = g.entries if isinstance(g, ProjectiveMatrix) else np.asarray(g, float)
        return Flag(self.type, {i: m @ b for i, b in self.bases.items()})

    def __repr__(self):
        return f"Flag(d={self.type.d}, indices={self.type.indices})"


def line_flag(angle: float) -> Flag:
    """The RP^1 flag spanned by (cos angle, sin angle)."""
    return Flag(line_type(), {1: [[math.cos(angle)], [math.sin(angle)]]})


def flag_angle(flag: Flag) -> float:
    """Angle in [0, pi) of a d = 2 flag's line."""
    if flag.type.d != 2:
        raise TypeMismatchError("flag_angle needs a d = 2 flag")
    v = flag.bases[1][:, 0]
    return float(np.mod(math.atan2(v[1], v[0]), math.pi))


def random_flag(ptype: ParabolicType, rng: np.random.Generator) -> Flag:
    """A flag of the given type drawn from the rotation-invariant measure."""
    q, _ = np.linalg.qr(rng.standard_normal((ptype.d, ptype.d)))
    return Flag(ptype, {i: q[:, :i] for i in ptype.indices})


def _same_type(xi: Flag, eta: Flag):
    if xi.type != eta.type:
        raise TypeMismatchError(
            f"flags have different types: {xi.type} vs {eta.type}")


# ---------------------------------------------------------------------------
# pointwise operations


def flag_distance(xi: Flag, eta: Flag) -> float:
    """Max over type indices of the spectral norm of the projector difference.

    A genuine metric on flags of a fixed type, invariant under simultaneous
    orthogonal change of basis; for lines in RP^1 it is the sine of the
    angle between them.
    """
    _same_type(xi, eta)
    best = 0.0
    for i in xi.type.indices:
        gap = np.linalg.norm(xi.projector(i) - eta.projector(i), 2)
        best = max(best, float(gap))
    return best


def attracting_flag(g, ptype: ParabolicType,
                    tols: Tolerances = DEFAULT_TOLS) -> tuple[Flag, dict[int, float]]:
    """Flag of leading left-singular subspaces of g, plus the gap report.

    Returns (flag, gaps) with gaps[i] = sigma_i / sigma_{i+1} (1-based).
    Raises GapTooSmallError unless every type-relevant gap clears the
    threshold; at ratio 1 the span of the top i directions is arbitrary.
    Scale-invariant: g and any nonzero multiple give the same flag.
    """
    g = as_projective(g)
    if ptype.d != g.d:
        raise TypeMismatchError(f"type is for d={ptype.d}, matrix has d={g.d}")
    u, s, _ = np.linalg.svd(g.entries)
    gaps = {i: float(s[i - 1] / s[i]) for i in ptype.indices}
    bad = [i for i in ptype.indices if not gaps[i] > tols.gap_threshold]
    if bad:
        raise GapTooSmallError(
            f"singular gap {gaps[bad[0]]:.9g} at index {bad[0]} does not clear "
            f"{tols.gap_threshold}; the flag is ill-defined")
    return Flag(ptype, {i: u[:, :i] for i in ptype.indices}, tols), gaps


def is_transverse(xi: Flag, eta: Flag,
                  tols: Tolerances = DEFAULT_TOLS) -> tuple[bool, float]:
    """Whether V_i of xi and W_{d-i} of eta together span R^d, with margin.

    The margin is the smallest singular value of the stacked basis
    [V_i | W_{d-i}] over all indices i whose complement d - i is also in
    the type; transverse iff the margin clears the tolerance.
    """
    _same_type(xi, eta)
    d = xi.type.d
    paired = [i for i in xi.type.indices if (d - i) in xi.type.indices]
    if not paired:
        raise InvalidParameterError(
            "no index i with d - i in the type; transversality is undefined")
    margin = math.inf
    for i in paired:
        stacked = np.hstack([xi.bases[i], eta.bases[d - i]])
        sv = np.linalg.svd(stacked, compute_uv=False)
        margin = min(margin, float(sv[-1]))
    return margin > tols.transversality, margin


# ---------------------------------------------------------------------------
# sequences


@dataclass(frozen=True)
class DivergenceCertificate:
    """Finite-data verdict on a matrix sequence from its singular gaps.

    gaps[i] is the trajectory sigma_i/sigma_{i+1} along the sequence.  A
    divergent certificate carries the flag of the last entry and, when the
    type is symmetric, of its inverse.
    """

    verdict: str                     # "divergent" | "bounded" | "inconclusive"
    gaps: dict[int, tuple[float, ...]]
    reason: str
    limit_flag: Flag | None = None
    limit_flag_inverse: Flag | None = None


def q_divergence(seq, ptype: ParabolicType,
                 tols: Tolerances = DEFAULT_TOLS) -> DivergenceCertificate:
    """Judge a matrix sequence by its singular-gap trajectories.

    divergent: over the last tail_window entries every type-relevant gap
    strictly increases and clears the flag threshold.  bounded: every
    type-relevant gap stays at or below the threshold over that tail, so
    the sequence never separates directions.  Everything else, including
    sequences shorter than the tail window, is inconclusive; a constant
    hyperbolic sequence, say, is bounded as a set but indistinguishable in
    this data from one about to grow.
    """
    mats = [as_projective(m) for m in seq]
    if not mats:
        raise InvalidParameterError("q_divergence needs a nonempty sequence")
    d = mats[0].d
    if any(m.d != d for m in mats):
        raise TypeMismatchError("mixed dimensions in sequence")
    if ptype.d != d:
        raise TypeMismatchError(f"type is for d={ptype.d}, matrices have d={d}")
    sv = np.array([m.singular_values() for m in mats])
    gaps = {i: tuple(float(x) for x in sv[:, i - 1] / sv[:, i])
            for i in ptype.indices}
    w = tols.tail_window
    if len(mats) < w:
        return DivergenceCertificate(
            "inconclusive", gaps,
            f"sequence shorter than the tail window ({len(mats)} < {w})")
    tails = {i: np.asarray(g[-w:]) for i, g in gaps.items()}
    if all(t.max() <= tols.gap_threshold for t in tails.values()):
        return DivergenceCertificate(
            "bounded", gaps, "tail gaps never clear the flag threshold")
    if all((np.diff(t) > 0).all() and (t > tols.gap_threshold).all()
           for t in tails.values()):
        flag, _ = attracting_flag(mats[-1], ptype, tols)
        inv_flag = None
        if ptype.symmetric:
            inv_flag, _ = attracting_flag(mats[-1].inv(), ptype, tols)
        return DivergenceCertificate(
            "divergent", gaps,
            "tail gaps increase strictly above the flag threshold",
            flag, inv_flag)
    return DivergenceCertificate(
        "inconclusive", gaps,
        "tail gaps neither stay at the threshold nor increase throughout")


# ---------------------------------------------------------------------------
# limit sets


@dataclass
class FlagCloud:
    """Deduplicated attracting flags over a word ball of a representation.

    For d = 2 the cloud is an array of sorted line angles in [0, pi); for
    d >= 3 it is a list of Flag objects.  words_seen counts ball elements
    inspected (identity included); gap_rejections counts those whose gaps
    did not clear the threshold.
    """

    type: ParabolicType
    angles: np.ndarray | None
    flags: list[Flag] | None
    words_seen: int
    gap_rejections: int

    @property
    def size(self) -> int:
        return int(self.angles.size) if self.angles is not None else len(self.flags)

    def hausdorff(self, other: "FlagCloud") -> float:
        if self.type != other.type:
            raise TypeMismatchError("clouds have different flag types")
        if self.angles is not None and other.angles is not None:
            return hausdorff_rp1(self.angles, other.angles)
        if self.size == 0 or other.size == 0:
            raise InvalidParameterError("hausdorff distance needs nonempty clouds")
        sup = 0.0
        for a, b in ((self.flags, other.flags), (other.flags, self.flags)):
            for f in a:
                sup = max(sup, min(flag_distance(f, g) for g in b))
        return sup

    def csv(self) -> str:
        """Angle column for d = 2; flag, index, projector entries otherwise."""
        if self.angles is not None:
            lines = ["angle"]
            lines += [f"{a:.17g}" for a in self.angles]
            return "\n".join(lines) + "\n"
        d = self.type.d
        head = "flag,index," + ",".join(
            f"p{r}{c}" for r in range(d) for c in range(d))
        lines = [head]
        for k, f in enumerate(self.flags):
            for i in self.type.indices:
                row = ",".join(f"{x:.17g}" for x in f.projector(i).ravel())
                lines.append(f"{k},{i},{row}")
        return "\n".join(lines) + "\n"


def _dedup_angles(angles: np.ndarray, resolution: float) -> np.ndarray:
    """Greedy circular dedup of line angles at the given sin-metric resolution."""
    a = np.sort(np.mod(np.asarray(angles, dtype=float), math.pi))
    if a.size <= 1:
        return a
    d = np.diff(a)
    keep = np.concatenate(([True], np.sin(np.minimum(d, math.pi - d)) >= resolution))
    out = a[keep]
    if out.size > 1:
        wrap = math.pi - (out[-1] - out[0])
        if math.sin(min(wrap, math.pi - wrap)) < resolution:
            out = out[:-1]
    return out


def _sup_min_rp1(x: np.ndarray, ys: np.ndarray) -> float:
    # ys sorted; nearest circular neighbor on the period-pi circle
    pad = np.concatenate((ys[-1:] - math.pi, ys, ys[:1] + math.pi))
    pos = np.searchsorted(pad, x)
    near = np.minimum(x - pad[pos - 1], pad[pos] - x)
    return float(np.max(near))


def hausdorff_rp1(a, b) -> float:
    """Hausdorff distance between two nonempty sets of lines in RP^1.

    Arguments are angle arrays (radians, any reals); the underlying metric
    is |sin(s - t)|, matching flag_distance on line flags.
    """
    x = np.mod(np.asarray(a, dtype=float).ravel(), math.pi)
    y = np.mod(np.asarray(b, dtype=float).ravel(), math.pi)
    if x.size == 0 or y.size == 0:
        raise InvalidParameterError("hausdorff distance needs nonempty sets")
    xs, ys = np.sort(x), np.sort(y)
    return math.sin(max(_sup_min_rp1(xs, ys), _sup_min_rp1(ys, xs)))


def _free_rank(oracle: GroupOracle) -> int | None:
    """Rank if the oracle is a free group presented as such, else None."""
    if isinstance(oracle, FreeOracle):
        return oracle.rank
    if isinstance(oracle, FreeAbelianOracle) and oracle.rank == 1:
        return 1
    if isinstance(oracle, FreeProductOracle) and all(
            isinstance(f, FreeAbelianOracle) and f.rank == 1
            for f in oracle.factors):
        return len(oracle.factors)
    return None


def _free_word_count(rank: int, depth: int) -> int:
    k = 2 * rank
    total, layer = 1, 1
    for _ in range(depth):
        layer *= (k - 1) if layer > 1 else k
        total += layer
    return total


def _free2_angles(letters: np.ndarray, depth: int, threshold: float
                  ) -> tuple[np.ndarray, int, int]:
    """Attracting-line angles over all reduced words of length <= depth.

    letters has shape (2r, 2, 2) with letter 2i+1 inverse to letter 2i.
    Words are walked level by level; per word the top singular direction
    and the gap come from closed 2x2 forms, no SVD.
    """
    k = letters.shape[0]
    parts: list[np.ndarray] = []
    seen, rejected = 1, 1          # the identity never clears the threshold
    prods = letters.copy()
    last = np.arange(k)
    for level in range(1, depth + 1):
        if level > 1:
            chunks, labels = [], []
            for j in range(k):
                ok = last != (j ^ 1)   # appending j must not cancel the last letter
                chunks.append(prods[ok] @ letters[j])
                labels.append(np.full(int(ok.sum()), j, dtype=np.int64))
            prods = np.concatenate(chunks)
            last = np.concatenate(labels)
        a, b = prods[:, 0, 0], prods[:, 0, 1]
        c, d = prods[:, 1, 0], prods[:, 1, 1]
        top, mid, bot = a * a + b * b, a * c + b * d, c * c + d * d
        det = np.abs(a * d - b * c)
        lam1 = (top + bot) / 2 + np.sqrt((top - bot) ** 2 / 4 + mid * mid)
        gap = lam1 / det           # sigma_1 / sigma_2, since sigma products = det
        good = gap > threshold
        theta = 0.5 * np.arctan2(2 * mid[good], (top - bot)[good])
        parts.append(np.mod(theta, math.pi))
        seen += prods.shape[0]
        rejected += int(prods.shape[0] - good.sum())
    angles = np.concatenate(parts) if parts else np.empty(0)
    return angles, seen, rejected


def q_limit_set(rep: dict, oracle: GroupOracle, word_depth: int,
                ptype: ParabolicType | None = None,
                tols: Tolerances = DEFAULT_TOLS,
                cap: int = BALL_CAP) -> FlagCloud:
    """Attracting flags of every ball element whose gaps clear the threshold.

    rep maps the oracle's generator names to matrices; the ball of radius
    word_depth is enumerated through the oracle and each element's flag is
    kept when well defined, then the cloud is deduplicated at the dedup
    resolution in flag distance.  Free groups in d = 2 take a batched
    reduced-word route.  Depth 0 gives the empty cloud: the identity has
    no attracting flag.
    """
    if word_depth < 0:
        raise InvalidParameterError("word_depth must be >= 0")
    mats = {n: as_projective(m) for n, m in rep.items()}
    if not mats:
        raise InvalidParameterError("empty representation")
    dims = {m.d for m in mats.values()}
    if len(dims) != 1:
        raise TypeMismatchError("generator matrices have mixed dimensions")
    d = dims.pop()
    if ptype is None:
        if d != 2:
            raise InvalidParameterError("ptype may only be omitted when d = 2")
        ptype = line_type()
    if ptype.d != d:
        raise TypeMismatchError(f"type is for d={ptype.d}, matrices have d={d}")
    if set(mats) != set(oracle.gen_names):
        raise InvalidParameterError(
            f"representation names {sorted(mats)} do not match the oracle's "
            f"generators {sorted(oracle.gen_names)}")

    rank = _free_rank(oracle)
    if d == 2 and rank is not None:
        total = _free_word_count(rank, word_depth)
        if total > cap:
            raise BudgetExceededError("reduced words", cap, total)
        letters = np.empty((2 * rank, 2, 2))
        for i, name in enumerate(oracle.gen_names):
            letters[2 * i] = mats[name].entries
            letters[2 * i + 1] = np.linalg.inv(mats[name].entries)
        raw, seen, rejected = _free2_angles(letters, word_depth,
                                            tols.gap_threshold)
        angles = _dedup_angles(raw, tols.dedup)
        return FlagCloud(ptype, angles, None, seen, rejected)

    elements = enumerate_ball(oracle, word_depth, cap)
    kept: list[Flag] = []
    rejected = 0
    eye = np.eye(d)
    for g in elements:
        m = eye
        for name, power in oracle.syllables(g):
            m = m @ np.linalg.matrix_power(mats[name].entries, power)
        try:
            flag, _ = attracting_flag(ProjectiveMatrix(m, tols), ptype, tols)
        except (GapTooSmallError, InvalidParameterError):
            rejected += 1
            continue
        kept.append(flag)
    if d == 2:
        raw = np.array([flag_angle(f) for f in kept])
        return FlagCloud(ptype, _dedup_angles(raw, tols.dedup), None,
                         len(elements), rejected)
    unique: list[Flag] = []
    for f in kept:
        if all(flag_distance(f, u) >= tols.dedup for u in unique):
            unique.append(f)
    return FlagCloud(ptype, None, unique, len(elements), rejected)


# ---------------------------------------------------------------------------
# interchange formats


def parse_representation(obj: dict) -> dict[str, ProjectiveMatrix]:
    """Parse {generator: row-major matrix of decimal strings} into matrices.

    Strings go through Fraction, so "0.1" means exactly 1/10 before the
    single rounding to float; plain numbers are taken as-is.  Nested rows
    are accepted alongside the flat row-major form.
    """
    if not isinstance(obj, dict) or not obj:
        raise InvalidParameterError("representation must be a nonempty mapping")
    out: dict[str, ProjectiveMatrix] = {}
    dim: int | None = None
    for name, raw in obj.items():
        if not isinstance(raw, (list, tuple)) or not raw:
            raise InvalidParameterError(f"bad matrix for generator {name!r}")
        if isinstance(raw[0], (list, tuple)):
            flat, d = [x for row in raw for x in row], len(raw)
        else:
            flat, d = list(raw), math.isqrt(len(raw))
        if d * d != len(flat):
            raise InvalidParameterError(
                f"matrix for {name!r} is not square: {len(flat)} entries")
        vals = []
        for x in flat:
            if isinstance(x, str):
                try:
                    vals.append(float(Fraction(x)))
                except (ValueError, ZeroDivisionError) as exc:
                    raise InvalidParameterError(
                        f"bad matrix entry {x!r} for {name!r}") from exc
            elif isinstance(x, (int, float)) and not isinstance(x, bool):
                vals.append(float(x))
            else:
                raise InvalidParameterError(
                    f"bad matrix entry {x!r} for {name!r}")
        if dim is None:
            dim = d
        elif d != dim:
            raise InvalidParameterError("generator matrices have mixed sizes")
        out[name] = ProjectiveMatrix(np.array(vals).reshape(d, d))
    return out
