"""Exact group arithmetic for the families the rest of the library builds on.

Every oracle ships a canonical normal form, so equality is literal payload
equality and the word problem is exact:

* free groups: reduced syllable tuples ((gen, exp), ...)
* free abelian: exponent vectors
* finite cyclic: residues
* free products of abelian factors: alternating syllable tuples
* filled quotients: free products of abelian quotients (lattice reduction)

Payloads are nested tuples of ints, hashable and order-free; deterministic
ordering is provided separately through ``sort_key``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable

from .errors import BudgetExceededError, InvalidParameterError, UnsupportedKindError
from .lattices import elementary_divisors, lattice_contains, reduce_mod_rows, row_hermite

ALPHABET = "abcdefghijklmnopqrstuvwxyz"

BALL_CAP = 2_000_000  # default element budget for ball enumeration


@dataclass(frozen=True)
class GroupElement:
    """A group element identified with its canonical normal form."""

    word: Any

    def __repr__(self):
        return f"GroupElement({self.word!r})"


class GroupOracle:
    """Abstract finitely generated group with an exact word problem."""

    kind: str = "abstract"
    gen_names: tuple[str, ...] = ()

    def identity(self) -> GroupElement:
        raise NotImplementedError

    def multiply(self, x: GroupElement, y: GroupElement) -> GroupElement:
        raise NotImplementedError

    def inverse(self, x: GroupElement) -> GroupElement:
        raise NotImplementedError

    def word_length(self, x: GroupElement) -> int:
        raise NotImplementedError

    def generators(self) -> list[GroupElement]:
        """Symmetric generating list, deterministic order."""
        raise NotImplementedError

    def sort_key(self, x: GroupElement):
        raise NotImplementedError

    def syllables(self, x: GroupElement) -> list[tuple[str, int]]:
        """(name, exponent) pairs of the canonical form, for serialization."""
        raise NotImplementedError

    def generator(self, name: str, power: int = 1) -> GroupElement:
        raise NotImplementedError

    def power(self, x: GroupElement, n: int) -> GroupElement:
        if n < 0:
            return self.power(self.inverse(x), -n)
        acc = self.identity()
        base = x
        while n:
            if n & 1:
                acc = self.multiply(acc, base)
            base = self.multiply(base, base)
            n >>= 1
        return acc

    def is_identity(self, x: GroupElement) -> bool:
        return x == self.identity()


# ---------------------------------------------------------------------------
# abelian factor payload API (raw payloads, shared by free products)


class AbelianFactor(GroupOracle):
    """Abelian oracle exposing raw-payload hooks used by free products."""

    def p_identity(self):
        raise NotImplementedError

    def p_add(self, p, q):
        raise NotImplementedError

    def p_neg(self, p):
        raise NotImplementedError

    def p_length(self, p) -> int:
        raise NotImplementedError

    def p_sort_key(self, p):
        raise NotImplementedError

    def p_generators(self) -> list:
        raise NotImplementedError

    def p_within(self, radius: int) -> list:
        """All payloads of word length <= radius, identity included, sorted."""
        raise NotImplementedError

    def p_from_exponents(self, vec: Iterable[int]):
        raise NotImplementedError

    def p_syllables(self, p) -> list[tuple[str, int]]:
        raise NotImplementedError

    def p_order(self) -> int | None:
        raise NotImplementedError

    # GroupElement-level interface in terms of payloads
    def identity(self):
        return GroupElement(self.p_identity())

    def multiply(self, x, y):
        return GroupElement(self.p_add(x.word, y.word))

    def inverse(self, x):
        return GroupElement(self.p_neg(x.word))

    def word_length(self, x):
        return self.p_length(x.word)

    def sort_key(self, x):
        return (self.p_length(x.word), self.p_sort_key(x.word))

    def generators(self):
        return [GroupElement(p) for p in self.p_generators()]

    def syllables(self, x):
        return self.p_syllables(x.word)

    def generator(self, name, power=1):
        if name not in self.gen_names:
            raise InvalidParameterError(f"unknown generator {name!r}")
        vec = [0] * len(self.gen_names)
        vec[self.gen_names.index(name)] = power
        return GroupElement(self.p_from_exponents(vec))


class FreeAbelianOracle(AbelianFactor):
    kind = "free-abelian"

    def __init__(self, rank: int, names: tuple[str, ...] | None = None):
        if rank < 1:
            raise InvalidParameterError("free-abelian rank must be >= 1")
        self.rank = rank
        self.gen_names = tuple(names) if names else tuple(ALPHABET[:rank])
        if len(self.gen_names) != rank:
            raise InvalidParameterError("need one name per generator")

    def p_identity(self):
        return (0,) * self.rank

    def p_add(self, p, q):
        return tuple(a + b for a, b in zip(p, q))

    def p_neg(self, p):
        return tuple(-a for a in p)

    def p_length(self, p):
        return sum(abs(a) for a in p)

    def p_sort_key(self, p):
        return p

    def p_generators(self):
        out = []
        for i in range(self.rank):
            for s in (1, -1):
                vec = [0] * self.rank
                vec[i] = s
                out.append(tuple(vec))
        return out

    def p_within(self, radius):
        out = []

        def rec(prefix, left):
            if len(prefix) == self.rank:
                out.append(tuple(prefix))
                return
            for v in range(-left, left + 1):
                rec(prefix + [v], left - abs(v))

        rec([], radius)
        out.sort(key=lambda p: (self.p_length(p), p))
        return out

    def p_from_exponents(self, vec):
        vec = tuple(vec)
        if len(vec) != self.rank:
            raise InvalidParameterError("exponent vector has wrong rank")
        return vec

    def p_syllables(self, p):
        return [(self.gen_names[i], a) for i, a in enumerate(p) if a != 0]

    def p_order(self):
        return None


class FiniteCyclicOracle(AbelianFactor):
    kind = "finite-cyclic"

    def __init__(self, order: int, names: tuple[str, ...] | None = None):
        if order < 1:
            raise InvalidParameterError("cyclic order must be >= 1")
        self.order = order
        self.gen_names = tuple(names) if names else (ALPHABET[0],)
        if len(self.gen_names) != 1:
            raise InvalidParameterError("cyclic groups have one generator")

    def _signed(self, p):
        # minimal-magnitude signed representative; ties go positive
        return p if 2 * p <= self.order else p - self.order

    def p_identity(self):
        return 0

    def p_add(self, p, q):
        return (p + q) % self.order

    def p_neg(self, p):
        return (-p) % self.order

    def p_length(self, p):
        return min(p, self.order - p)

    def p_sort_key(self, p):
        return (self._signed(p),)

    def p_generators(self):
        if self.order == 1:
            return []
        if self.order == 2:
            return [1]
        return [1, self.order - 1]

    def p_within(self, radius):
        out = [p for p in range(self.order) if self.p_length(p) <= radius]
        out.sort(key=lambda p: (self.p_length(p), self.p_sort_key(p)))
        return out

    def p_from_exponents(self, vec):
        vec = list(vec)
        if len(vec) != 1:
            raise InvalidParameterError("exponent vector has wrong rank")
        return vec[0] % self.order

    def p_syllables(self, p):
        if p == 0:
            return []
        return [(self.gen_names[0], self._signed(p))]

    def p_order(self):
        return self.order


class QuotientAbelianOracle(AbelianFactor):
    """Z^rank modulo the row lattice of ``kernel_rows``.

    Canonical representatives come from Hermite reduction; word lengths (in
    the images of the standard generators) are computed by a lazily grown
    BFS table, which is exact at any radius it has reached.
    """

    kind = "quotient-abelian"

    def __init__(self, rank: int, kernel_rows: list[list[int]],
                 names: tuple[str, ...] | None = None):
        if rank < 1:
            raise InvalidParameterError("rank must be >= 1")
        for row in kernel_rows:
            if len(row) != rank:
                raise InvalidParameterError("kernel vector has wrong rank")
        self.rank = rank
        self.hermite = row_hermite([list(r) for r in kernel_rows], width=rank)
        self.gen_names = tuple(names) if names else tuple(ALPHABET[:rank])
        self.divisors = elementary_divisors([list(r) for r in kernel_rows], width=rank) \
            if kernel_rows else []
        self._dist: dict[tuple, int] = {self.p_identity(): 0}
        self._frontier = [self.p_identity()]
        self._reached = 0

    def p_identity(self):
        return reduce_mod_rows([0] * self.rank, self.hermite)

    def p_add(self, p, q):
        return reduce_mod_rows([a + b for a, b in zip(p, q)], self.hermite)

    def p_neg(self, p):
        return reduce_mod_rows([-a for a in p], self.hermite)

    def _grow(self, radius):
        gens = self.p_generators()
        while self._reached < radius and self._frontier:
            nxt = []
            for p in self._frontier:
                for g in gens:
                    q = self.p_add(p, g)
                    if q not in self._dist:
                        self._dist[q] = self._reached + 1
                        nxt.append(q)
            self._frontier = nxt
            self._reached += 1
        if not self._frontier:
            self._reached = max(self._reached, radius)

    def p_length(self, p):
        if p not in self._dist:
            radius = self._reached
            while p not in self._dist and self._frontier:
                radius += 4
                self._grow(radius)
            if p not in self._dist:
                raise InvalidParameterError(f"payload {p} not in quotient group")
        return self._dist[p]

    def p_sort_key(self, p):
        return p

    def p_generators(self):
        seen, out = set(), []
        for i in range(self.rank):
            for s in (1, -1):
                vec = [0] * self.rank
                vec[i] = s
                q = reduce_mod_rows(vec, self.hermite)
                if q != self.p_identity() and q not in seen:
                    seen.add(q)
                    out.append(q)
        return out

    def p_within(self, radius):
        self._grow(radius)
        out = [p for p, d in self._dist.items() if d <= radius]
        out.sort(key=lambda p: (self._dist[p], p))
        return out

    def p_from_exponents(self, vec):
        vec = list(vec)
        if len(vec) != self.rank:
            raise InvalidParameterError("exponent vector has wrong rank")
        return reduce_mod_rows(vec, self.hermite)

    def p_syllables(self, p):
        return [(self.gen_names[i], a) for i, a in enumerate(p) if a != 0]

    def p_order(self):
        if len(self.hermite) < self.rank:
            return None
        order = 1
        for i, row in enumerate(self.hermite):
            piv = next(x for x in row if x != 0)
            order *= abs(piv)
        return order

    def reduce_ambient(self, vec):
        """Canonical representative of an ambient exponent vector."""
        return reduce_mod_rows(list(vec), self.hermite)


class FreeOracle(GroupOracle):
    """Free group with reduced syllable normal forms ((gen, exp), ...)."""

    kind = "free"

    def __init__(self, rank: int, names: tuple[str, ...] | None = None):
        if rank < 1:
            raise InvalidParameterError("free rank must be >= 1")
        self.rank = rank
        self.gen_names = tuple(names) if names else tuple(ALPHABET[:rank])

    def identity(self):
        return GroupElement(())

    def multiply(self, x, y):
        xs = list(x.word)
        ys = list(y.word)
        while xs and ys and xs[-1][0] == ys[0][0]:
            g, e1 = xs.pop()
            _, e2 = ys.pop(0)
            e = e1 + e2
            if e != 0:
                xs.append((g, e))
                break
        return GroupElement(tuple(xs + ys))

    def inverse(self, x):
        return GroupElement(tuple((g, -e) for g, e in reversed(x.word)))

    def word_length(self, x):
        return sum(abs(e) for _, e in x.word)

    def generators(self):
        out = []
        for i in range(self.rank):
            for s in (1, -1):
                out.append(GroupElement(((i, s),)))
        return out

    def sort_key(self, x):
        return (self.word_length(x), x.word)

    def syllables(self, x):
        return [(self.gen_names[g], e) for g, e in x.word]

    def generator(self, name, power=1):
        if name not in self.gen_names:
            raise InvalidParameterError(f"unknown generator {name!r}")
        if power == 0:
            return self.identity()
        return GroupElement(((self.gen_names.index(name), power),))


class FreeProductOracle(GroupOracle):
    """Free product of abelian factors; syllables alternate between factors."""

    def __init__(self, factors: list[AbelianFactor], kind: str = "free-product"):
        if not factors:
            raise InvalidParameterError("free product needs at least one factor")
        self.factors = list(factors)
        self.kind = kind
        names: list[str] = []
        self._slots: dict[str, tuple[int, str]] = {}
        for fi, f in enumerate(self.factors):
            for n in f.gen_names:
                if n in self._slots:
                    raise InvalidParameterError(f"duplicate generator name {n!r}")
                self._slots[n] = (fi, n)
                names.append(n)
        self.gen_names = tuple(names)

    def identity(self):
        return GroupElement(())

    def multiply(self, x, y):
        xs = list(x.word)
        ys = list(y.word)
        while xs and ys and xs[-1][0] == ys[0][0]:
            fi, p = xs.pop()
            _, q = ys.pop(0)
            s = self.factors[fi].p_add(p, q)
            if s != self.factors[fi].p_identity():
                xs.append((fi, s))
                break
        return GroupElement(tuple(xs + ys))

    def inverse(self, x):
        return GroupElement(tuple((fi, self.factors[fi].p_neg(p))
                                  for fi, p in reversed(x.word)))

    def word_length(self, x):
        return sum(self.factors[fi].p_length(p) for fi, p in x.word)

    def generators(self):
        out = []
        for fi, f in enumerate(self.factors):
            for p in f.p_generators():
                out.append(GroupElement(((fi, p),)))
        return out

    def sort_key(self, x):
        key = tuple((fi,) + tuple_key(self.factors[fi].p_sort_key(p))
                    for fi, p in x.word)
        return (self.word_length(x), key)

    def syllables(self, x):
        out = []
        for fi, p in x.word:
            out.extend(self.factors[fi].p_syllables(p))
        return out

    def generator(self, name, power=1):
        if name not in self._slots:
            raise InvalidParameterError(f"unknown generator {name!r}")
        fi, local = self._slots[name]
        f = self.factors[fi]
        g = f.generator(local, power)
        if f.is_identity(g):
            return self.identity()
        return GroupElement(((fi, g.word),))

    def syllable_list(self, x) -> list[tuple[int, Any]]:
        """(factor index, local payload) pairs; the raw alternating form."""
        return list(x.word)

    def from_syllables(self, sylls: Iterable[tuple[int, Any]]) -> GroupElement:
        acc = self.identity()
        for fi, p in sylls:
            if p == self.factors[fi].p_identity():
                continue
            acc = self.multiply(acc, GroupElement(((fi, p),)))
        return acc


def tuple_key(k):
    return k if isinstance(k, tuple) else (k,)


# ---------------------------------------------------------------------------
# word serialization


def format_word(oracle: GroupOracle, g: GroupElement) -> str:
    """Space-free textual form: 'a^3.b^-2'; the identity is '1'."""
    sylls = oracle.syllables(g)
    if not sylls:
        return "1"
    return ".".join(f"{n}^{e}" for n, e in sylls)


def parse_word(oracle: GroupOracle, text: str) -> GroupElement:
    text = text.strip()
    if text in ("1", ""):
        return oracle.identity()
    acc = oracle.identity()
    for token in text.split("."):
        if "^" in token:
            name, _, exp = token.partition("^")
            try:
                e = int(exp)
            except ValueError as err:
                raise InvalidParameterError(f"bad exponent in {token!r}") from err
        else:
            name, e = token, 1
        acc = oracle.multiply(acc, oracle.generator(name, e))
    return acc


# ---------------------------------------------------------------------------
# descriptors


def make_oracle(spec: dict) -> GroupOracle:
    """Build an oracle from a JSON-style descriptor.

    Kinds: free, free-abelian, finite-cyclic, free-product (of abelian
    factors). Names are assigned from one global alphabet so free-product
    factors never collide.
    """
    used = iter(ALPHABET)

    def build(s: dict, top: bool) -> GroupOracle:
        if not isinstance(s, dict) or "kind" not in s:
            raise UnsupportedKindError(f"bad group descriptor: {s!r}")
        kind = s["kind"]
        if kind == "free":
            rank = int(s.get("rank", 0))
            if rank < 1:
                raise InvalidParameterError("free rank must be >= 1")
            return FreeOracle(rank, tuple(next(used) for _ in range(rank)))
        if kind == "free-abelian":
            rank = int(s.get("rank", 0))
            if rank < 1:
                raise InvalidParameterError("free-abelian rank must be >= 1")
            return FreeAbelianOracle(rank, tuple(next(used) for _ in range(rank)))
        if kind == "finite-cyclic":
            order = int(s.get("order", 0))
            if order < 1:
                raise InvalidParameterError("cyclic order must be >= 1")
            return FiniteCyclicOracle(order, (next(used),))
        if kind == "free-product":
            if not top:
                raise UnsupportedKindError("nested free products are not supported")
            factors = [build(f, False) for f in s.get("factors", [])]
            for f in factors:
                if not isinstance(f, AbelianFactor):
                    raise UnsupportedKindError(
                        "free-product factors must be abelian kinds")
            return FreeProductOracle(factors)
        raise UnsupportedKindError(f"unsupported group kind {kind!r}")

    return build(spec, True)


# ---------------------------------------------------------------------------
# peripheral structure


class PeripheralSubgroup:
    """One peripheral subgroup of a pair: membership, canonical coset keys,
    and the local (suffix) coordinate used by horoballs.

    Every group element factors uniquely as coset_key(g) * embed(local(g)),
    where coset_key strips the maximal peripheral suffix of the normal form.
    """

    def __init__(self, pid: int, factor: AbelianFactor, pair: "RelHypPair"):
        self.id = pid
        self.factor = factor
        self._pair = pair

    def membership(self, g: GroupElement) -> bool:
        w = g.word
        return len(w) == 0 or (len(w) == 1 and w[0][0] == self.id)

    def local(self, g: GroupElement):
        """Local payload of the maximal peripheral suffix."""
        w = g.word
        if w and w[-1][0] == self.id:
            return w[-1][1]
        return self.factor.p_identity()

    def coset_key(self, g: GroupElement) -> GroupElement:
        w = g.word
        if w and w[-1][0] == self.id:
            return GroupElement(w[:-1])
        return g

    def embed(self, local) -> GroupElement:
        if local == self.factor.p_identity():
            return GroupElement(())
        return GroupElement(((self.id, local),))

    def d_local(self, p, q) -> int:
        return self.factor.p_length(self.factor.p_add(p, self.factor.p_neg(q)))

    def generates_check(self, radius: int = 3) -> bool:
        """BFS inside the peripheral using genset-intersection generators."""
        gens = [g for g in self._pair.genset if self.membership(g)
                and not self._pair.group.is_identity(g)]
        locs = [self.local(g) for g in gens]
        seen = {self.factor.p_identity()}
        frontier = [self.factor.p_identity()]
        for _ in range(radius):
            nxt = []
            for p in frontier:
                for q in locs:
                    s = self.factor.p_add(p, q)
                    if s not in seen:
                        seen.add(s)
                        nxt.append(s)
            frontier = nxt
        expected = {p for p in self.factor.p_within(radius)}
        return expected <= seen


class RelHypPair:
    """A group oracle together with its peripheral subgroups and a compatible
    generating set (all generators lie in some peripheral)."""

    def __init__(self, group: FreeProductOracle, peripherals: list[PeripheralSubgroup]):
        self.group = group
        self.peripherals = peripherals
        self.genset = group.generators()

    def syllables(self, g: GroupElement) -> list[tuple[int, Any]]:
        """(peripheral id, local payload) decomposition of the normal form."""
        return self.group.syllable_list(g)

    def peripheral(self, pid: int) -> PeripheralSubgroup:
        return self.peripherals[pid]

    def coset_of(self, pid: int, g: GroupElement) -> tuple[GroupElement, Any]:
        per = self.peripherals[pid]
        return per.coset_key(g), per.local(g)

    def describe(self) -> dict:
        return {
            "kind": self.group.kind,
            "generators": list(self.group.gen_names),
            "peripherals": [
                {"id": p.id, "generators": list(p.factor.gen_names),
                 "order": p.factor.p_order()}
                for p in self.peripherals
            ],
        }


def make_pair(oracle: GroupOracle, peripheral_spec=None) -> RelHypPair:
    """Pair an oracle with peripherals.

    Free-product oracles take their factors as peripherals (the only layout
    the coarse-geometry code supports: every generator must be peripheral).
    A free oracle is re-realized as the free product of rank-one factors,
    one per designated cyclic generator.
    """
    if isinstance(oracle, FreeProductOracle):
        if peripheral_spec not in (None, "factors"):
            idx = list(peripheral_spec.get("factors", []))
            if sorted(idx) != list(range(len(oracle.factors))):
                raise UnsupportedKindError(
                    "peripherals must cover every free-product factor")
        pair = RelHypPair(oracle, [])
        pair.peripherals = [PeripheralSubgroup(i, f, pair)
                            for i, f in enumerate(oracle.factors)]
        return pair
    if isinstance(oracle, FreeOracle):
        names = None
        if peripheral_spec:
            names = list(peripheral_spec.get("cyclic-generators", []))
        if not names:
            names = list(oracle.gen_names)
        if sorted(names) != sorted(oracle.gen_names):
            raise UnsupportedKindError(
                "designated cyclic peripherals must cover every free generator")
        factors = [FreeAbelianOracle(1, (n,)) for n in oracle.gen_names]
        product = FreeProductOracle(factors)
        pair = make_pair(product)
        return pair
    raise UnsupportedKindError(
        f"cannot attach peripherals to oracle kind {oracle.kind!r}")


def standard_f2_pair() -> RelHypPair:
    """(F_2, {<a>, <b>}) realized as a free product of two copies of Z."""
    oracle = make_oracle({"kind": "free-product",
                          "factors": [{"kind": "free-abelian", "rank": 1},
                                      {"kind": "free-abelian", "rank": 1}]})
    return make_pair(oracle)


# ---------------------------------------------------------------------------
# Dehn fillings


class FillingData:
    """A filling of a pair: per-peripheral kernels, the quotient pair, and
    the projection homomorphism (syllable-wise through abelian quotients)."""

    def __init__(self, pair: RelHypPair, kernel_locals: list[list]):
        self.pair = pair
        self.kernel_locals = kernel_locals
        qfactors: list[AbelianFactor] = []
        for per, kernels in zip(pair.peripherals, kernel_locals):
            qfactors.append(_quotient_factor(per.factor, kernels))
        self.quotient_group = FreeProductOracle(qfactors, kind="filled-quotient")
        self.quotient_pair = RelHypPair(self.quotient_group, [])
        self.quotient_pair.peripherals = [
            PeripheralSubgroup(i, f, self.quotient_pair)
            for i, f in enumerate(qfactors)
        ]

    def project_local(self, pid: int, p):
        src = self.pair.peripherals[pid].factor
        dst = self.quotient_group.factors[pid]
        if isinstance(dst, QuotientAbelianOracle):
            return dst.reduce_ambient(p)
        if isinstance(dst, FiniteCyclicOracle) and isinstance(src, FiniteCyclicOracle):
            return p % dst.order
        if isinstance(dst, FiniteCyclicOracle):
            return p[0] % dst.order if isinstance(p, tuple) else p % dst.order
        return p  # trivial kernel: factor unchanged

    def project(self, g: GroupElement) -> GroupElement:
        sylls = [(fi, self.project_local(fi, p)) for fi, p in g.word]
        return self.quotient_group.from_syllables(sylls)

    def kernel_elements(self) -> list[GroupElement]:
        out = []
        for pid, kernels in enumerate(self.kernel_locals):
            per = self.pair.peripherals[pid]
            for p in kernels:
                out.append(per.embed(p))
        return out

    def describe(self) -> dict:
        return {
            "kernels": [
                [format_word(per.factor, GroupElement(p)) for p in kernels]
                for per, kernels in zip(self.pair.peripherals, self.kernel_locals)
            ],
            "quotient": self.quotient_pair.describe(),
        }


def _quotient_factor(factor: AbelianFactor, kernels: list) -> AbelianFactor:
    if not kernels:
        if isinstance(factor, FreeAbelianOracle):
            return FreeAbelianOracle(factor.rank, factor.gen_names)
        if isinstance(factor, FiniteCyclicOracle):
            return FiniteCyclicOracle(factor.order, factor.gen_names)
        raise UnsupportedKindError(f"cannot copy factor kind {factor.kind!r}")
    if isinstance(factor, FreeAbelianOracle):
        rows = [list(p) for p in kernels]
        q = QuotientAbelianOracle(factor.rank, rows, factor.gen_names)
        if factor.rank == 1:
            # rank one quotients are plain cyclic groups; use the fast oracle
            order = q.p_order()
            if order is not None:
                return FiniteCyclicOracle(order, factor.gen_names)
        return q
    if isinstance(factor, FiniteCyclicOracle):
        order = factor.order
        for p in kernels:
            order = _gcd(order, p % factor.order)
        return FiniteCyclicOracle(order if order else 1, factor.gen_names)
    raise UnsupportedKindError(f"cannot fill factor kind {factor.kind!r}")


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return abs(a)


def make_filling(pair: RelHypPair, kernel_spec) -> FillingData:
    """Build a filling from per-peripheral kernel descriptors.

    ``kernel_spec`` maps peripheral id (int or str) to a list of kernel
    generators, each an exponent vector or a word in that peripheral's
    letters ('a^5'). Empty lists give the trivial filling on that factor.
    """
    kernel_locals: list[list] = [[] for _ in pair.peripherals]
    items = kernel_spec.items() if isinstance(kernel_spec, dict) else enumerate(kernel_spec)
    for key, kernels in items:
        pid = int(key)
        if not 0 <= pid < len(pair.peripherals):
            raise InvalidParameterError(f"no peripheral with id {pid}")
        per = pair.peripherals[pid]
        for k in kernels:
            if isinstance(k, str):
                elem = parse_word(per.factor, k)
                local = elem.word
            else:
                local = per.factor.p_from_exponents(list(k))
            if local == per.factor.p_identity():
                continue
            kernel_locals[pid].append(local)
    return FillingData(pair, kernel_locals)


# ---------------------------------------------------------------------------
# enumeration


def enumerate_ball(oracle: GroupOracle, radius: int,
                   cap: int = BALL_CAP) -> list[GroupElement]:
    """All elements of word length <= radius, ordered by (length, sort key)."""
    if radius < 0:
        raise InvalidParameterError("radius must be >= 0")
    gens = oracle.generators()
    seen = {oracle.identity(): 0}
    frontier = [oracle.identity()]
    for layer in range(1, radius + 1):
        nxt = []
        for g in frontier:
            for s in gens:
                h = oracle.multiply(g, s)
                if h not in seen:
                    if len(seen) + len(nxt) >= cap:
                        raise BudgetExceededError("ball elements", cap)
                    seen[h] = layer
                    nxt.append(h)
        frontier = nxt
    out = list(seen)
    out.sort(key=oracle.sort_key)
    return out
