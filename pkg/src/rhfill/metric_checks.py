"""Window verification of the coarse-geometry comparison lemmas.

All checks run on a certified cusped window: wherever the truncation
certificate holds, window BFS distances agree with the metric of the
infinite cusped space, so a pass here is a genuine statement about the
group pair, not about the window.
"""
from __future__ import annotations

import math

import numpy as np

from .cusped import (
    CuspedGraph,
    _coset_label,
    build_cusped_ball,
    coned_length,
    horo_pair,
)
from .delta import four_point_delta_sampled
from .errors import WindowError
from .groups import GroupElement, RelHypPair

MIN_LEMMA_RADIUS = 6


def _depth0_indices(window: CuspedGraph) -> np.ndarray:
    return np.flatnonzero(window.depth == 0)


def _horoball_members(window: CuspedGraph) -> dict:
    """Vertex indices of each horoball in the window, keyed by coset label.

    A horoball consists of the interior vertices over one peripheral coset
    together with the depth-zero points of that coset.
    """
    pair = window.pair
    members: dict[str, list[int]] = {}
    for i, key in enumerate(window.vertices):
        if key[0] == "h":
            members.setdefault(window.coset_labels[i], []).append(i)
    for i in _depth0_indices(window):
        g = GroupElement(window.vertices[i][1])
        for pid, per in enumerate(pair.peripherals):
            members.setdefault(_coset_label(pair, pid, per.coset_key(g)),
                               []).append(int(i))
    return {k: np.array(sorted(v)) for k, v in members.items()}


def comparison_lemma_check(window: CuspedGraph) -> dict:
    """On certified depth-zero pairs: len_coned <= d_X <= d_Gamma and the
    distortion bound d_Gamma <= d_X * sqrt(2)^(d_X)."""
    pair = window.pair
    G = pair.group
    D, cert = window.certified_pairs_matrix()
    d0 = _depth0_indices(window)
    elems = [GroupElement(window.vertices[i][1]) for i in d0]
    sub_cert = cert[np.ix_(d0, d0)]
    sub_D = D[np.ix_(d0, d0)]
    checked = 0
    violations = []
    max_ratio = 0.0
    for a in range(len(d0)):
        inv = G.inverse(elems[a])
        row = sub_cert[a]
        for b in range(a + 1, len(d0)):
            if not row[b]:
                continue
            dx = sub_D[a, b]
            w = G.multiply(inv, elems[b])
            dg = G.word_length(w)
            dh = coned_length(pair, w)
            ub = dx * math.sqrt(2.0) ** dx
            checked += 1
            if not (dh <= dx <= dg <= ub + 1e-9):
                violations.append({
                    "u": window.labels[d0[a]], "v": window.labels[d0[b]],
                    "coned": dh, "cusped": float(dx), "word": dg,
                    "distortion_bound": ub})
            if ub > 0:
                max_ratio = max(max_ratio, dg / ub)
    return {
        "name": "comparison",
        "pairs_checked": checked,
        "violations": violations[:10],
        "violation_count": len(violations),
        "max_distortion_ratio": max_ratio,
        "pass": not violations,
    }


def horoball_entry_check(window: CuspedGraph, delta: float,
                         C: int = 2) -> dict:
    """Geodesics with endpoints within C of a horoball H satisfy
    d(z, {x, y}) <= d(z, X - H) + 3C + 7*delta at every point z on them.

    Points z with d(z, {x,y}) <= ceil(d(x,y)/2) <= bound can never violate,
    so whole pairs are discharged by that filter; remaining pairs get the
    full on-a-geodesic scan (z is on some geodesic iff the triangle
    inequality through z is tight).
    """
    D, cert = window.certified_pairs_matrix()
    bound = 3 * C + 7 * delta
    n = window.n_vertices
    all_idx = np.arange(n)
    pairs_checked = 0
    pairs_scanned = 0
    violations = []
    for label, idx_H in _horoball_members(window).items():
        in_H = np.zeros(n, dtype=bool)
        in_H[idx_H] = True
        dist_to_H = D[:, idx_H].min(axis=1)
        near = np.flatnonzero(dist_to_H <= C)
        if len(near) < 2:
            continue
        outside = all_idx[~in_H]
        if len(outside) == 0:
            continue
        d_out = np.zeros(n)
        d_out[idx_H] = D[np.ix_(idx_H, outside)].min(axis=1)
        sub_D = D[np.ix_(near, near)]
        sub_cert = cert[np.ix_(near, near)]
        iu, il = np.triu_indices(len(near), k=1)
        ok = sub_cert[iu, il]
        pairs_checked += int(ok.sum())
        needs_scan = ok & (np.ceil(sub_D[iu, il] / 2.0) > bound)
        for t in np.flatnonzero(needs_scan):
            x, y = int(near[iu[t]]), int(near[il[t]])
            pairs_scanned += 1
            on_geo = D[x] + D[y] == D[x, y]
            d_ends = np.minimum(D[x], D[y])
            bad = on_geo & (d_ends > d_out + bound)
            for z in np.flatnonzero(bad):
                violations.append({
                    "horoball": label,
                    "x": window.labels[x], "y": window.labels[y],
                    "z": window.labels[int(z)],
                    "d_to_ends": float(d_ends[z]),
                    "d_outside": float(d_out[z]),
                    "bound": bound})
    return {
        "name": "horoball-entry",
        "C": C,
        "delta": delta,
        "bound": bound,
        "pairs_checked": pairs_checked,
        "pairs_scanned": pairs_scanned,
        "violations": violations[:10],
        "violation_count": len(violations),
        "pass": not violations,
    }


def _canonical_ray_union(window: CuspedGraph, targets: np.ndarray) -> np.ndarray:
    """Vertices on the canonical (smallest-index tie-break) BFS geodesics
    from the identity to each target."""
    i0 = window.index[("c", ())]
    dist = window.bfs_distances(i0)
    used = set()
    for t in targets:
        cur = int(t)
        while cur != i0:
            if cur in used:
                break
            used.add(cur)
            nbrs = window.neighbors(cur)
            below = nbrs[dist[nbrs] == dist[cur] - 1]
            cur = int(below.min())
    used.add(i0)
    return np.array(sorted(used))


def quasidensity_check(window: CuspedGraph, delta: float,
                       ball_radius: int = 5) -> dict:
    """Every vertex of the radius-``ball_radius`` ball lies within
    8 + 21*delta of some geodesic from id to a sphere-of-radius-R vertex."""
    D = window.distance_matrix()
    dist0 = np.asarray(window.meta["dist_from_id"])
    R = window.meta["radius"]
    if ball_radius > R:
        raise WindowError(f"ball radius {ball_radius} exceeds window radius {R}")
    sphere = np.flatnonzero(dist0 == R)
    if len(sphere) == 0:
        raise WindowError("window has no sphere vertices at its own radius")
    rays = _canonical_ray_union(window, sphere)
    ball = np.flatnonzero(dist0 <= ball_radius)
    dmin = D[np.ix_(ball, rays)].min(axis=1)
    bound = 8 + 21 * delta
    bad = np.flatnonzero(dmin > bound)
    return {
        "name": "quasidensity",
        "delta": delta,
        "bound": bound,
        "ball_radius": ball_radius,
        "ball_size": int(len(ball)),
        "ray_vertices": int(len(rays)),
        "max_distance_to_rays": float(dmin.max()),
        "violations": [window.labels[int(ball[i])] for i in bad[:10]],
        "violation_count": int(len(bad)),
        "pass": len(bad) == 0,
    }


def deep_horoball_isometry_check(window: CuspedGraph, depth_floor: int) -> dict:
    """Certified distances between two depth >= depth_floor vertices of one
    horoball equal the within-horoball closed form."""
    pair = window.pair
    D, cert = window.certified_pairs_matrix()
    checked = 0
    violations = []
    groups: dict = {}
    for i, key in enumerate(window.vertices):
        if key[0] == "h" and key[4] >= depth_floor:
            groups.setdefault((key[1], key[2]), []).append(i)
    for (pid, cw), idx in groups.items():
        per = pair.peripherals[pid]
        for a in range(len(idx)):
            ka = window.vertices[idx[a]]
            for b in range(a + 1, len(idx)):
                kb = window.vertices[idx[b]]
                if not cert[idx[a], idx[b]]:
                    continue
                expected = horo_pair(per.d_local(ka[3], kb[3]), ka[4], kb[4])
                checked += 1
                if D[idx[a], idx[b]] != expected:
                    violations.append({
                        "u": window.labels[idx[a]], "v": window.labels[idx[b]],
                        "window": float(D[idx[a], idx[b]]),
                        "horoball": expected})
    return {
        "name": "deep-horoball-isometry",
        "depth_floor": depth_floor,
        "pairs_checked": checked,
        "violations": violations[:10],
        "violation_count": len(violations),
        "pass": not violations,
    }


def truncation_monotonicity_check(pair: RelHypPair, radius: int) -> dict:
    """Growing the window never changes a certified distance and never
    increases any window distance."""
    small = build_cusped_ball(pair, radius)
    big = build_cusped_ball(pair, radius + 1)
    Ds, cs = small.certified_pairs_matrix()
    Db = big.distance_matrix()
    into_big = np.array([big.index[k] for k in small.vertices])
    Db_sub = Db[np.ix_(into_big, into_big)]
    stable = (Db_sub[cs] == Ds[cs]).all()
    monotone = (Db_sub <= Ds + 1e-9).all()
    return {
        "name": "truncation-monotonicity",
        "radius": radius,
        "certified_pairs": int(cs.sum()),
        "certified_stable": bool(stable),
        "distances_monotone": bool(monotone),
        "pass": bool(stable and monotone),
    }


def verify_metric_lemmas(pair: RelHypPair, radius: int = 6,
                         delta_samples: int = 200_000, seed: int = 0,
                         quasidensity_radius: int = 5) -> dict:
    """Bundle: comparison, horoball-entry, quasidensity and deep-horoball
    checks on one certified window, with a sampled window delta.

    The sampled delta is a lower bound; it appears only on right-hand
    sides here, so passing with it implies passing with the true delta.
    """
    if radius < MIN_LEMMA_RADIUS:
        raise WindowError(
            f"lemma verification needs radius >= {MIN_LEMMA_RADIUS}")
    window = build_cusped_ball(pair, radius)
    est = four_point_delta_sampled(window.distance_matrix(),
                                   samples=delta_samples, seed=seed)
    delta = est.delta
    comparison = comparison_lemma_check(window)
    entry = horoball_entry_check(window, delta, C=2)
    density = quasidensity_check(window, delta,
                                 ball_radius=quasidensity_radius)
    deep = deep_horoball_isometry_check(window,
                                        depth_floor=max(1, math.ceil(delta)))
    report = {
        "radius": radius,
        "vertices": window.n_vertices,
        "edges": window.n_edges,
        "delta": {"value": delta, "mode": est.mode, "checked": est.checked},
        "checks": [comparison, entry, density, deep],
        "pass": all(c["pass"] for c in (comparison, entry, density, deep)),
    }
    return report
