"""Convergence checks for filling families of representations.

A :class:`RepFamily` bundles a base representation with finitely many
deformed members, usually one per filling length, together with the kernel
words that each member is supposed to kill.  The checks in this module
compare members against the base from four angles: the extended filling
condition on a repelling/attracting ball pair, local Hausdorff distance of
windowed matrix sets (the Chabauty picture), Hausdorff convergence of
limit-set clouds, and consistency of limit flags along group-element
sequences that stay close in the cusped metric.  A path-tracking check ties
partial products of automaton paths back to honest cusped geodesics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .automata import Ball, GPath, _contain_exact, _element_matrix, _rep_matrices
from .cusped import (
    ExactCuspedMetric,
    build_cusped_ball,
    depth0_key,
    key_base_element,
    key_depth,
    shortest_path,
)
from .errors import InvalidParameterError, UnsupportedKindError, WindowError
from .flags import flag_distance, line_type, q_divergence, q_limit_set
from .groups import (
    BALL_CAP,
    FillingData,
    GroupElement,
    RelHypPair,
    enumerate_ball,
    format_word,
    make_filling,
    parse_word,
)
from .tolerances import DEFAULT_TOLS, Tolerances

__all__ = [
    "RepFamily",
    "EdfQuery",
    "sanov_generators",
    "elliptic_generators",
    "elliptic_family",
    "constant_family",
    "bundled_edf_queries",
    "edf_condition_check",
    "chabauty_check",
    "limit_set_convergence",
    "fiber_consistency_check",
    "sequences_from_gpaths",
    "gpath_tracking_check",
]


# ---------------------------------------------------------------------------
# representation families


def sanov_generators() -> dict[str, np.ndarray]:
    """The parabolic pair generating a free group by ping-pong."""
    return {
        "a": np.array([[1.0, 2.0], [0.0, 1.0]]),
        "b": np.array([[1.0, 0.0], [2.0, 1.0]]),
    }


def elliptic_generators(n: int) -> dict[str, np.ndarray]:
    """Deform each parabolic into an elliptic of projective order exactly n.

    The deformation multiplies a lower/upper triangular unipotent with
    entry eps = 1 - cos(pi/n) into the parabolic, giving trace 2cos(pi/n);
    the n-th power is -id on the nose, so a^n and b^n die projectively.
    """
    if n < 2:
        raise InvalidParameterError("elliptic order must be at least 2")
    eps = 1.0 - math.cos(math.pi / n)
    base = sanov_generators()
    return {
        "a": base["a"] @ np.array([[1.0, 0.0], [-eps, 1.0]]),
        "b": np.array([[1.0, -eps], [0.0, 1.0]]) @ base["b"],
    }


def _as_matrix(m) -> np.ndarray:
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidParameterError("generator images must be square matrices")
    return arr


def _kernel_deviation(mats: dict[str, np.ndarray], pair: RelHypPair,
                      word: str) -> float:
    """Projective distance of the word's image from the identity."""
    g = parse_word(pair.group, word)
    m = np.eye(next(iter(mats.values())).shape[0])
    for name, e in pair.group.syllables(g):
        m = m @ np.linalg.matrix_power(mats[name], e)
        m = m / math.sqrt(abs(np.linalg.det(m)))
    d = m.shape[0]
    m = m * math.sqrt(d) / np.linalg.norm(m)
    eye = np.eye(d)
    return min(float(np.linalg.norm(m - eye)), float(np.linalg.norm(m + eye)))


class RepFamily:
    """A base representation plus indexed deformations and their kernels.

    ``base`` and each member map generator names to matrices.  ``kernels``
    maps a member index to a per-peripheral kernel spec in the format of
    :func:`make_filling` ({pid: ["a^30"], ...}); every kernel word must die
    projectively in that member to the kernel tolerance, and the induced
    filling supplies exact peripheral orders to the downstream checks.
    Members without a kernel entry are treated as unfilled deformations.
    """

    def __init__(self, pair: RelHypPair, base: dict, members: dict,
                 kernels: dict | None = None,
                 tols: Tolerances = DEFAULT_TOLS):
        self.pair = pair
        self.tols = tols
        self.base = {n: _as_matrix(m) for n, m in base.items()}
        if set(self.base) != set(pair.group.gen_names):
            raise InvalidParameterError(
                "base representation names do not match the pair's generators")
        d = next(iter(self.base.values())).shape[0]
        self.dimension = d
        self.members: dict[int, dict[str, np.ndarray]] = {}
        for idx, rep in members.items():
            rep = {n: _as_matrix(m) for n, m in rep.items()}
            if set(rep) != set(self.base):
                raise InvalidParameterError(
                    f"member {idx} names do not match the base representation")
            if any(m.shape[0] != d for m in rep.values()):
                raise InvalidParameterError(
                    f"member {idx} has matrices of the wrong dimension")
            self.members[int(idx)] = rep
        self.kernel_specs: dict[int, dict] = {}
        self.fillings: dict[int, FillingData] = {}
        for idx, spec in (kernels or {}).items():
            idx = int(idx)
            if idx not in self.members:
                raise InvalidParameterError(f"kernel spec for unknown index {idx}")
            self.kernel_specs[idx] = spec
            self.fillings[idx] = make_filling(pair, spec)
            for words in spec.values():
                for word in words:
                    dev = _kernel_deviation(self.members[idx], pair, word)
                    if dev > tols.kernel:
                        raise InvalidParameterError(
                            f"member {idx} maps kernel word {word!r} at "
                            f"projective distance {dev:.3e} from the identity")

    @property
    def indices(self) -> list[int]:
        return sorted(self.members)

    def rep(self, index: int | None) -> dict[str, np.ndarray]:
        if index is None:
            return self.base
        return self.members[index]

    def filling(self, index: int) -> FillingData | None:
        return self.fillings.get(index)


def elliptic_family(pair: RelHypPair,
                    ns: tuple[int, ...] = (10, 20, 30, 40, 60),
                    tols: Tolerances = DEFAULT_TOLS) -> RepFamily:
    """The bundled elliptic deformations of the parabolic ping-pong pair."""
    if len(pair.peripherals) != 2 or tuple(pair.group.gen_names) != ("a", "b"):
        raise InvalidParameterError(
            "the elliptic family needs the two-generator parabolic pair")
    members = {n: elliptic_generators(n) for n in ns}
    kernels = {n: {0: [f"a^{n}"], 1: [f"b^{n}"]} for n in ns}
    return RepFamily(pair, sanov_generators(), members, kernels, tols)


def constant_family(pair: RelHypPair, rep: dict,
                    ns: tuple[int, ...]) -> RepFamily:
    """Every member equals the base; all comparisons must come out zero."""
    return RepFamily(pair, rep, {n: rep for n in ns})


# ---------------------------------------------------------------------------
# extended filling condition


@dataclass(frozen=True)
class EdfQuery:
    """One filling-condition query: do peripheral images, minus the finite
    exclusion, push every repelling ball into the attracting union?

    ``attracting`` and ``repelling`` are ball tuples (U and K); ``excluded``
    lists group elements exempt from the containment demand.
    """

    peripheral: int
    attracting: tuple[Ball, ...]
    repelling: tuple[Ball, ...]
    excluded: tuple[GroupElement, ...] = ()
    name: str = ""


def bundled_edf_queries(pair: RelHypPair) -> tuple[EdfQuery, EdfQuery]:
    """Symmetric queries for the parabolic pair: U around one fixed line,
    K around the other, excluding the identity and the unit powers.

    The unit powers must be excluded: a^{+-1} moves the opposite fixed
    line only to slope 1/2, which is still outside a 0.3-ball around the
    fixed line of a, so the bare exclusion of the identity fails the base
    hypothesis before any filling enters the picture.
    """
    g = pair.group
    qa = EdfQuery(
        peripheral=0,
        attracting=(Ball(0.0, 0.3),),
        repelling=(Ball(0.5 * math.pi, 0.3),),
        excluded=(g.identity(), g.generator("a", 1), g.generator("a", -1)),
        name="a-side",
    )
    qb = EdfQuery(
        peripheral=1,
        attracting=(Ball(0.5 * math.pi, 0.3),),
        repelling=(Ball(0.0, 0.3),),
        excluded=(g.identity(), g.generator("b", 1), g.generator("b", -1)),
        name="b-side",
    )
    return qa, qb


def _query_margins(mats, pair, query, locals_, skip, tols):
    """Worst containment margin over the non-skipped peripheral elements.

    Returns (rows, min_margin, worst_word); rows hold one entry per tested
    element.  Margins come from the exact arc test, so a negative margin
    is a genuine violation, not a sampling artifact.
    """
    per = pair.peripherals[query.peripheral]
    cache: dict = {}
    rows = []
    min_margin = math.inf
    worst = None
    for loc in locals_:
        if loc in skip:
            continue
        g = per.embed(loc)
        m = _element_matrix(mats, pair.group, g, cache)
        margin = math.inf
        for kb in query.repelling:
            ok, mg = _contain_exact(m, kb, kb.radius, query.attracting)
            margin = min(margin, mg)
        word = format_word(pair.group, g)
        rows.append({"element": word, "margin": margin})
        if margin < min_margin:
            min_margin, worst = margin, word
    return rows, (None if not rows else min_margin), worst


def edf_condition_check(family: RepFamily, query: EdfQuery,
                        enumeration_depth: int = 8,
                        tols: Tolerances = DEFAULT_TOLS) -> dict:
    """Check the extended filling condition and strict peripheral stability.

    The base hypothesis is verified first on the truncated peripheral ball.
    Each filled member is then enumerated through its quotient: when the
    filled peripheral image is finite the enumeration covers every residue
    and the verdict is conclusive; otherwise it falls back to the same
    truncated window as the base.  The strict variant skips only the
    excluded elements themselves, never their whole residues, so a kernel
    word always lands on the identity residue and violates it.
    """
    pair = family.pair
    if family.dimension != 2:
        raise UnsupportedKindError(
            "the filling-condition check is exact-arc only (d = 2)")
    if not 0 <= query.peripheral < len(pair.peripherals):
        raise InvalidParameterError(f"no peripheral with id {query.peripheral}")
    per = pair.peripherals[query.peripheral]
    for g in query.excluded:
        if not per.membership(g):
            raise InvalidParameterError(
                f"excluded element {format_word(pair.group, g)!r} is not in "
                f"peripheral {query.peripheral}")
    for kb in query.repelling:
        for ub in query.attracting:
            sep = (_sin_circdist(float(kb.center), float(ub.center))
                   - kb.radius - ub.radius)
            if sep <= 0:
                raise InvalidParameterError(
                    "repelling and attracting balls are not separated "
                    f"(margin {sep:.4f})")
    if enumeration_depth < 1:
        raise InvalidParameterError("enumeration_depth must be >= 1")

    base_mats = _rep_matrices(family.base, pair, 2)
    excluded_locals = {per.local(g) for g in query.excluded}

    def truncated_run(mats):
        locals_ = per.factor.p_within(enumeration_depth)
        return _query_margins(mats, pair, query, locals_, excluded_locals, tols)

    base_rows, base_min, base_worst = truncated_run(base_mats)
    base_conclusive = per.factor.p_order() is not None
    base_pass = base_min is not None and base_min > 0
    report: dict = {
        "name": "edf-condition",
        "query": query.name or f"peripheral-{query.peripheral}",
        "peripheral": query.peripheral,
        "enumeration_depth": enumeration_depth,
        "excluded": sorted(format_word(pair.group, g) for g in query.excluded),
        "base": {
            "verdict": "pass" if base_pass else "fail",
            "min_margin": base_min,
            "worst_element": base_worst,
            "tested": len(base_rows),
            "conclusive": base_conclusive,
        },
    }

    edf_rows = []
    stability_rows = []
    for idx in family.indices:
        mats = _rep_matrices(family.members[idx], pair, 2)
        filling = family.filling(idx)
        order = None
        if filling is not None:
            order = filling.quotient_pair.peripherals[query.peripheral].factor.p_order()
        if order is None:
            # unfilled or infinite image: same truncated window as the base
            rows, mn, worst = truncated_run(mats)
            verdict = "pass" if (mn is not None and mn > 0) else "fail"
            edf_rows.append({
                "index": idx, "order": None, "tested": len(rows),
                "min_margin": mn, "worst_element": worst,
                "verdict": verdict, "conclusive": False,
            })
            stability_rows.append({
                "index": idx, "tested": len(rows), "min_margin": mn,
                "verdict": verdict, "witness": worst if verdict == "fail" else None,
                "conclusive": False,
            })
            continue
        # enumerate ambient peripheral elements far enough to hit every
        # residue of the finite quotient, then dedup residues
        reach = max(enumeration_depth, order)
        locals_ = per.factor.p_within(reach)
        skip_residues = {filling.project_local(query.peripheral, loc)
                         for loc in excluded_locals}
        seen: dict = {}
        for loc in locals_:
            res = filling.project_local(query.peripheral, loc)
            if res in skip_residues or res in seen:
                continue
            seen[res] = loc
        rows, mn, worst = _query_margins(
            mats, pair, query, list(seen.values()), set(), tols)
        covered = len(seen) + len(skip_residues)
        conclusive = covered >= order
        if not rows:
            verdict = "vacuous"
        elif mn > 0:
            verdict = "pass"
        else:
            verdict = "fail"
        edf_rows.append({
            "index": idx, "order": order, "tested": len(rows),
            "min_margin": mn, "worst_element": worst,
            "verdict": verdict, "conclusive": conclusive,
        })
        # strict stability: only the excluded elements themselves are
        # skipped, so kernel words land on the identity residue
        srows, smn, sworst = _query_margins(
            mats, pair, query, locals_, excluded_locals, tols)
        sverdict = "pass" if (smn is not None and smn > 0) else "fail"
        stability_rows.append({
            "index": idx, "tested": len(srows), "min_margin": smn,
            "verdict": sverdict,
            "witness": sworst if sverdict == "fail" else None,
            "conclusive": conclusive,
        })

    report["edf"] = edf_rows
    report["peripheral_stability"] = stability_rows
    report["stability_implies_edf"] = all(
        s["verdict"] != "pass" or e["verdict"] in ("pass", "vacuous")
        for e, s in zip(edf_rows, stability_rows))
    report["pass"] = (base_pass and
                      all(r["verdict"] in ("pass", "vacuous") for r in edf_rows))
    return report


def _sin_circdist(u: float, v: float) -> float:
    d = abs(u - v) % math.pi
    return math.sin(min(d, math.pi - d))


# ---------------------------------------------------------------------------
# windowed matrix sets (local Hausdorff)


def _det_normed_products(mats: dict[str, np.ndarray], oracle,
                         elements) -> np.ndarray:
    """Unit-determinant images of the elements, one flattened row each.

    Products are cached syllable by syllable, so each element costs one
    prefix lookup and one matrix power regardless of enumeration order.
    """
    d = next(iter(mats.values())).shape[0]
    cache: dict = {GroupElement(()): np.eye(d)}

    def product_of(g: GroupElement) -> np.ndarray:
        m = cache.get(g)
        if m is not None:
            return m
        anchor = product_of(GroupElement(g.word[:-1]))
        tail = np.eye(d)
        for name, e in oracle.syllables(GroupElement(g.word[-1:])):
            tail = tail @ np.linalg.matrix_power(mats[name], e)
        m = anchor @ tail
        m = m / abs(np.linalg.det(m)) ** (1.0 / d)
        cache[g] = m
        return m

    out = np.empty((len(elements), d * d))
    for i, g in enumerate(elements):
        out[i] = product_of(g).reshape(-1)
    return out


def _sign_canonical(rows: np.ndarray) -> np.ndarray:
    """Dedup projectively: flip each row so its first sizable entry is
    positive, then round and unique."""
    sign = np.zeros(len(rows))
    for i in range(rows.shape[1]):
        m = (sign == 0) & (np.abs(rows[:, i]) > 1e-8)
        sign[m] = np.sign(rows[m, i])
    sign[sign == 0] = 1.0
    return np.unique(np.round(rows * sign[:, None], 9), axis=0)


_CHUNK = 2048


def _sup_min(sup_side: np.ndarray, inf_side: np.ndarray,
             radius: float) -> dict:
    """One-sided deviation: sup over windowed rows of the distance to the
    other full set, sign-insensitive so +-m are the same point."""
    windowed = sup_side[np.linalg.norm(sup_side, axis=1) <= radius]
    if len(windowed) == 0 or len(inf_side) == 0:
        return {"distance": 0.0, "points": int(len(windowed))}
    nx = (windowed * windowed).sum(axis=1)
    ny = (inf_side * inf_side).sum(axis=1)
    worst = 0.0
    for i in range(0, len(windowed), _CHUNK):
        gram = np.abs(windowed[i:i + _CHUNK] @ inf_side.T)
        d2 = nx[i:i + _CHUNK, None] + ny[None, :] - 2.0 * gram
        worst = max(worst, float(np.sqrt(np.maximum(d2, 0.0)).min(axis=1).max()))
    return {"distance": worst, "points": int(len(windowed))}


def chabauty_check(family: RepFamily, ball_radius: float = 10.0,
                   word_depth: int = 8, cap: int = BALL_CAP,
                   tols: Tolerances = DEFAULT_TOLS) -> dict:
    """Local Hausdorff comparison of windowed image sets, per member.

    Following the two one-sided convergence criteria, the window applies
    only on the sup side: every base point inside the norm ball must be
    approximated by some member image (windowed or not), and vice versa.
    Truncating both sides would punish matrices that drift across the
    window boundary even as the family converges.  The relative version
    restricts the words to each peripheral subgroup.
    """
    if word_depth < 1:
        raise InvalidParameterError("word_depth must be >= 1")
    if ball_radius <= 0:
        raise InvalidParameterError("ball_radius must be positive")
    pair = family.pair
    elements = enumerate_ball(pair.group, word_depth, cap)
    per_locals = {p.id: [p.embed(loc) for loc in p.factor.p_within(word_depth)]
                  for p in pair.peripherals}

    def image_sets(rep):
        mats = {n: m / abs(np.linalg.det(m)) ** (1.0 / family.dimension)
                for n, m in rep.items()}
        full = _sign_canonical(_det_normed_products(mats, pair.group, elements))
        peri = {pid: _sign_canonical(
                    _det_normed_products(mats, pair.group, els))
                for pid, els in per_locals.items()}
        return full, peri

    base_full, base_peri = image_sets(family.base)
    table = []
    for idx in family.indices:
        rep = family.members[idx]
        mem_full, mem_peri = image_sets(rep)
        a_side = _sup_min(base_full, mem_full, ball_radius)
        b_side = _sup_min(mem_full, base_full, ball_radius)
        row = {
            "index": idx,
            "full": {
                "a_side": a_side["distance"],
                "b_side": b_side["distance"],
                "distance": max(a_side["distance"], b_side["distance"]),
                "windowed_points": a_side["points"],
            },
            "peripheral": {},
        }
        gen_dev = max(
            float(np.linalg.norm(
                rep[n] / abs(np.linalg.det(rep[n])) ** (1.0 / family.dimension)
                - family.base[n]
                / abs(np.linalg.det(family.base[n])) ** (1.0 / family.dimension)))
            for n in family.base)
        row["generator_deviation"] = gen_dev
        for pid in sorted(base_peri):
            pa = _sup_min(base_peri[pid], mem_peri[pid], ball_radius)
            pb = _sup_min(mem_peri[pid], base_peri[pid], ball_radius)
            dist = max(pa["distance"], pb["distance"])
            row["peripheral"][pid] = {
                "a_side": pa["distance"], "b_side": pb["distance"],
                "distance": dist,
                "dominates_generator_deviation": dist >= gen_dev,
            }
        table.append(row)

    fulls = [r["full"]["distance"] for r in table]
    report = {
        "name": "chabauty-window",
        "ball_radius": ball_radius,
        "word_depth": word_depth,
        "indices": family.indices,
        "table": table,
        "decreasing": {
            "full": all(x > y for x, y in zip(fulls, fulls[1:])),
        },
    }
    for pid in sorted(base_peri):
        seq = [r["peripheral"][pid]["distance"] for r in table]
        report["decreasing"][f"peripheral-{pid}"] = all(
            x > y for x, y in zip(seq, seq[1:]))
    report["pass"] = all(report["decreasing"].values()) if len(table) > 1 \
        else bool(table)
    return report


# ---------------------------------------------------------------------------
# limit-set convergence


def limit_set_convergence(family: RepFamily, word_depth: int = 12,
                          screen_powers: int = 7,
                          tols: Tolerances = DEFAULT_TOLS,
                          cap: int = BALL_CAP) -> dict:
    """Hausdorff distance of each member's limit cloud from the base cloud.

    Every representation, base included, must first pass the divergence
    screening on powers of the product of all generators; failing members
    are flagged and excluded from the distance table rather than producing
    meaningless clouds.
    """
    if word_depth < 1:
        raise InvalidParameterError("word_depth must be >= 1")
    if screen_powers < tols.tail_window:
        raise InvalidParameterError(
            f"screen_powers must cover the tail window ({tols.tail_window})")
    pair = family.pair
    if family.dimension != 2:
        raise UnsupportedKindError("limit clouds are implemented for d = 2")
    ptype = line_type()

    def screened(rep) -> bool:
        w = np.eye(2)
        for name in pair.group.gen_names:
            w = w @ rep[name]
        w = w / math.sqrt(abs(np.linalg.det(w)))
        seq = [np.linalg.matrix_power(w, k) for k in range(1, screen_powers + 1)]
        try:
            return q_divergence(seq, ptype, tols).verdict == "divergent"
        except InvalidParameterError:
            # a power too ill-conditioned to certify cannot pass screening
            return False

    if not screened(family.base):
        raise InvalidParameterError(
            "base representation fails divergence screening")
    base_cloud = q_limit_set(family.base, pair.group, word_depth,
                             ptype, tols, cap)
    table = []
    flagged = []
    for idx in family.indices:
        rep = family.members[idx]
        if not screened(rep):
            flagged.append({"index": idx,
                            "reason": "divergence-screening-failed"})
            continue
        cloud = q_limit_set(rep, pair.group, word_depth, ptype, tols, cap)
        table.append({
            "index": idx,
            "d_hausdorff": cloud.hausdorff(base_cloud),
            "cloud_size": cloud.size,
        })
    dists = [r["d_hausdorff"] for r in table]
    return {
        "name": "limit-set-convergence",
        "word_depth": word_depth,
        "base_size": base_cloud.size,
        "table": table,
        "flagged": flagged,
        "decreasing": all(x > y for x, y in zip(dists, dists[1:])),
        "final_distance": dists[-1] if dists else None,
    }


# ---------------------------------------------------------------------------
# fiber consistency


def sequences_from_gpaths(paths) -> list[list[GroupElement]]:
    """Partial-product sequences of automaton paths, identity dropped."""
    return [list(p.partial_products())[1:] for p in paths]


def fiber_consistency_check(rep: dict, pair: RelHypPair, sequences,
                            distance_bound: float = 3.0,
                            tols: Tolerances = DEFAULT_TOLS) -> dict:
    """Sequences that stay close in the cusped metric share a limit flag.

    Each sequence gets a divergence certificate and, when divergent, the
    attracting flag of its last element.  For every pair of divergent
    sequences whose element sets are within ``distance_bound`` of each
    other in Hausdorff cusped distance, the limit flags must agree to the
    fiber tolerance; distant pairs carry no constraint and are only
    reported.
    """
    if not sequences:
        raise InvalidParameterError("need at least one sequence")
    if not rep:
        raise InvalidParameterError("empty representation")
    d = _as_matrix(next(iter(rep.values()))).shape[0]
    if d != 2:
        raise UnsupportedKindError("fiber limits are implemented for d = 2")
    mats = _rep_matrices(rep, pair, d)
    ptype = line_type()
    metric = ExactCuspedMetric(pair)
    cache: dict = {}

    entries = []
    for si, seq in enumerate(sequences):
        seq = list(seq)
        if not seq:
            raise InvalidParameterError(f"sequence {si} is empty")
        ms = [_element_matrix(mats, pair.group, g, cache) for g in seq]
        cert = q_divergence(ms, ptype, tols)
        entries.append({
            "index": si,
            "length": len(seq),
            "verdict": cert.verdict,
            "elements": seq,
            "flag": cert.limit_flag,
        })

    rows = []
    ok_all = True
    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            ei, ej = entries[i], entries[j]
            h = 0.0
            for x in ei["elements"]:
                h = max(h, min(metric.elem_dist(x, y) for y in ej["elements"]))
            for y in ej["elements"]:
                h = max(h, min(metric.elem_dist(x, y) for x in ei["elements"]))
            paired = h <= distance_bound
            row = {"i": i, "j": j, "window_hausdorff": h, "paired": paired}
            if ei["verdict"] != "divergent" or ej["verdict"] != "divergent":
                # no certified limits, nothing to compare: unverified, not failed
                row["flag_distance"] = None
                row["verified"] = False
                row["ok"] = True
            else:
                fd = flag_distance(ei["flag"], ej["flag"])
                row["flag_distance"] = fd
                row["verified"] = True
                row["ok"] = (not paired) or fd <= tols.fiber
            ok_all = ok_all and row["ok"]
            rows.append(row)

    return {
        "name": "fiber-consistency",
        "sequences": [{"index": e["index"], "length": e["length"],
                       "verdict": e["verdict"]} for e in entries],
        "distance_bound": distance_bound,
        "pairs": rows,
        "unverified": sum(1 for r in rows if not r["verified"]),
        "pass": ok_all,
    }


# ---------------------------------------------------------------------------
# path tracking


def gpath_tracking_check(pair: RelHypPair, gpath, radius: int,
                         tols: Tolerances = DEFAULT_TOLS,
                         cap: int = BALL_CAP) -> dict:
    """Partial products of a path stay near the cusped geodesic they track.

    Builds the exact cusped window of the given radius, runs BFS between
    the identity and the final product, and Hausdorff-compares the partial
    products against the Cayley points of that geodesic.  The maximal
    horoball depth along the geodesic is then checked against the additive
    bound (max step cost) + 3 * (Hausdorff distance).
    """
    if isinstance(gpath, GPath):
        products = list(gpath.partial_products())
    else:
        products = list(gpath)
        if not products or not pair.group.is_identity(products[0]):
            products = [pair.group.identity()] + products
    metric = ExactCuspedMetric(pair)
    costs = [metric.elem_cost(g) for g in products]
    if max(costs) > radius:
        worst = products[int(np.argmax(costs))]
        raise WindowError(
            f"partial product {format_word(pair.group, worst)!r} sits at "
            f"cusped distance {max(costs)}, beyond the window radius {radius}")
    steps = [
        metric.elem_cost(pair.group.multiply(pair.group.inverse(u), v))
        for u, v in zip(products, products[1:])
    ]
    step_cost = max(steps) if steps else 0

    window = build_cusped_ball(pair, radius, cap=cap)
    path = shortest_path(window, depth0_key(products[0]),
                         depth0_key(products[-1]))
    keys = path.keys()
    cayley = [key_base_element(pair, k) for k in keys if key_depth(k) == 0]
    h = 0.0
    for g in products:
        h = max(h, min(metric.elem_dist(g, c) for c in cayley))
    for c in cayley:
        h = max(h, min(metric.elem_dist(g, c) for g in products))
    max_depth = max(key_depth(k) for k in keys)
    bound = step_cost + 3.0 * h
    return {
        "name": "gpath-tracking",
        "points": len(products),
        "geodesic_length": path.length,
        "direct_distance": metric.elem_dist(products[0], products[-1]),
        "hausdorff": h,
        "step_cost_max": step_cost,
        "max_geodesic_depth": max_depth,
        "depth_bound": bound,
        "depth_bound_ok": max_depth <= bound,
        "pass": max_depth <= bound,
    }
