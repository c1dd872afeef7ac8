"""Random CSP instance generation, serialization, and validation.

An instance over n variables with common domain {0, ..., d-1} is a list
of t constraints.  Each constraint owns a scope of k distinct variables
(drawn uniformly, scopes may repeat across constraints) and a set of q
distinct forbidden value tuples (drawn uniformly among the d^k tuples on
that scope).  An assignment satisfies the instance when no constraint's
scope projection lands in its forbidden set.

Forced instances plant a hidden assignment first and then draw each
constraint's forbidden tuples from the d^k - 1 tuples that do NOT match
the hidden assignment's projection, so the hidden assignment satisfies
every constraint by construction.

Tuples are stored base-d encoded: the k values (a_1, ..., a_k) on a
scope (v_1 < ... < v_k) become the integer sum a_i * d^(k-1-i), with the
first (lowest-index) scope variable most significant.

Determinism: each constraint gets its own RNG stream derived by hashing
(label, master seed, constraint index) with SHA-256 and feeding the first
16 bytes to a PCG64 generator.  Streams are independent of generation
order, so identical (params, seed) give byte-identical instances no
matter how the work is scheduled.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, ParseError
from .thresholds import DerivedSizes, ModelParams, RoundingPolicy, derive_sizes

__all__ = [
    "FORMAT_VERSION",
    "Assignment",
    "Constraint",
    "Instance",
    "encode_tuple",
    "decode_tuple",
    "generate",
    "generate_forced",
    "serialize",
    "parse",
    "export_cnf_direct",
    "validate",
]

FORMAT_VERSION = 1

# An assignment is one value per variable, index-aligned.
Assignment = tuple[int, ...]


def encode_tuple(values, d: int) -> int:
    """Base-d encode a k-tuple of values, first position most significant."""
    code = 0
    for v in values:
        code = code * d + int(v)
    return code


def decode_tuple(code: int, d: int, k: int) -> tuple[int, ...]:
    """Invert encode_tuple."""
    out = [0] * k
    for i in range(k - 1, -1, -1):
        out[i] = code % d
        code //= d
    return tuple(out)


@dataclass(frozen=True)
class Constraint:
    """A scope of k distinct variables plus q forbidden tuple codes.

    scope is strictly increasing (the canonical form); nogoods holds the
    base-d codes sorted ascending.
    """

    scope: tuple[int, ...]
    nogoods: tuple[int, ...]

    def nogood_values(self, d: int) -> tuple[tuple[int, ...], ...]:
        """Forbidden tuples decoded to explicit value tuples."""
        k = len(self.scope)
        return tuple(decode_tuple(c, d, k) for c in self.nogoods)


@dataclass(frozen=True)
class Instance:
    """A complete generated instance.

    hidden is the planted assignment for forced instances, None otherwise.
    params records how the instance was derived when known; it is not part
    of equality because a parsed file cannot recover it.
    """

    n: int
    d: int
    k: int
    q: int
    seed: int
    forced: bool
    constraints: tuple[Constraint, ...]
    hidden: Assignment | None = None
    params: ModelParams | None = field(default=None, compare=False)

    @property
    def t(self) -> int:
        return len(self.constraints)


def _stream(label: str, *parts) -> np.random.Generator:
    """Independent RNG stream keyed by a label and integer parts."""
    h = hashlib.sha256()
    h.update(b"rblab-gen-v1")
    h.update(label.encode("ascii"))
    for part in parts:
        h.update(b":")
        h.update(str(int(part)).encode("ascii"))
    seed = int.from_bytes(h.digest()[:16], "big")
    return np.random.Generator(np.random.PCG64(seed))


def _sample_scope(rng: np.random.Generator, n: int, k: int) -> tuple[int, ...]:
    # First k entries of a partial Fisher-Yates shuffle give a uniform
    # ordered k-tuple without materializing a full permutation's swaps.
    arr = list(range(n))
    for j in range(k):
        idx = j + int(rng.integers(0, n - j))
        arr[j], arr[idx] = arr[idx], arr[j]
    return tuple(sorted(arr[:k]))


def _sample_codes(
    rng: np.random.Generator, total: int, q: int, exclude: int | None = None
) -> tuple[int, ...]:
    """Uniform q-subset of [0, total), optionally excluding one code.

    Rejection-samples whichever of the subset and its complement is
    smaller, so expected work stays O(q) for every q.  When a code is
    excluded, sampling happens over a compacted range of size total - 1
    and the results are shifted back around the hole.
    """
    pool = total if exclude is None else total - 1
    if q > pool:
        raise ParameterError(f"cannot draw {q} distinct codes from a pool of {pool}")
    direct = q <= pool // 2
    need = q if direct else pool - q
    chosen: set[int] = set()
    while len(chosen) < need:
        batch = rng.integers(0, pool, size=max(16, need - len(chosen)))
        for v in batch:
            chosen.add(int(v))
            if len(chosen) == need:
                break
    if direct:
        picked = sorted(chosen)
    else:
        picked = [c for c in range(pool) if c not in chosen]
    if exclude is not None:
        picked = [c + 1 if c >= exclude else c for c in picked]
    return tuple(picked)


def _build(
    params: ModelParams,
    seed: int,
    sizes: DerivedSizes,
    hidden: Assignment | None,
) -> Instance:
    n, k = params.n, params.k
    d, q, t = sizes.d, sizes.q, sizes.t
    total = d**k
    constraints = []
    for i in range(t):
        rng = _stream("constraint", seed, i)
        scope = _sample_scope(rng, n, k)
        if hidden is None:
            codes = _sample_codes(rng, total, q)
        else:
            h = encode_tuple((hidden[v] for v in scope), d)
            codes = _sample_codes(rng, total, q, exclude=h)
        constraints.append(Constraint(scope=scope, nogoods=codes))
    return Instance(
        n=n,
        d=d,
        k=k,
        q=q,
        seed=seed,
        forced=hidden is not None,
        constraints=tuple(constraints),
        hidden=hidden,
        params=params,
    )


def _check_seed(seed: int) -> None:
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise ParameterError(f"seed must be a nonnegative integer, got {seed!r}")


def generate(
    params: ModelParams,
    seed: int,
    rounding: RoundingPolicy = RoundingPolicy.HALF_UP,
) -> Instance:
    """Draw an instance from the ensemble, deterministically in (params, seed)."""
    _check_seed(seed)
    sizes = derive_sizes(params, rounding)
    return _build(params, seed, sizes, hidden=None)


def generate_forced(
    params: ModelParams,
    seed: int,
    rounding: RoundingPolicy = RoundingPolicy.HALF_UP,
) -> tuple[Instance, Assignment]:
    """Draw a forced instance plus the hidden assignment that satisfies it."""
    _check_seed(seed)
    sizes = derive_sizes(params, rounding)
    if sizes.q > sizes.d**params.k - 1:
        raise ParameterError(
            f"forced generation needs q <= d^k - 1, got q={sizes.q}"
        )
    hrng = _stream("hidden", seed)
    hidden = tuple(int(v) for v in hrng.integers(0, sizes.d, size=params.n))
    inst = _build(params, seed, sizes, hidden=hidden)
    return inst, hidden


def serialize(instance: Instance) -> str:
    """Render the line-oriented text form.

    Header: ``rb 1 <n> <d> <k> <t> <q> <seed-hex> <forced>``, then per
    constraint one ``c`` line (scope) and q ``x`` lines (forbidden value
    tuples, ascending code order), then for forced instances a final
    ``s`` line with the hidden assignment.
    """
    inst = instance
    lines = [
        f"rb {FORMAT_VERSION} {inst.n} {inst.d} {inst.k} {inst.t} {inst.q} "
        f"{inst.seed:x} {1 if inst.forced else 0}"
    ]
    for con in inst.constraints:
        lines.append("c " + " ".join(str(v) for v in con.scope))
        for code in con.nogoods:
            vals = decode_tuple(code, inst.d, inst.k)
            lines.append("x " + " ".join(str(v) for v in vals))
    if inst.forced:
        if inst.hidden is None:
            raise ParameterError("forced instance is missing its hidden assignment")
        lines.append("s " + " ".join(str(v) for v in inst.hidden))
    return "\n".join(lines) + "\n"


def _parse_ints(tokens: list[str], lineno: int, what: str) -> list[int]:
    out = []
    for tok in tokens:
        try:
            out.append(int(tok))
        except ValueError:
            raise ParseError(f"{what}: {tok!r} is not an integer", lineno) from None
    return out


def parse(text: str) -> Instance:
    """Parse the text form back into an Instance.

    Raises ParseError with a 1-based line number and, for structural
    problems inside a constraint block, the constraint index.
    """
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty input", 1)
    head = lines[0].split()
    if len(head) != 9 or head[0] != "rb":
        raise ParseError("header must be 'rb <ver> <n> <d> <k> <t> <q> <seed> <forced>'", 1)
    if head[1] != str(FORMAT_VERSION):
        raise ParseError(f"unsupported format version {head[1]!r}", 1)
    n, d, k, t, q = _parse_ints(head[2:7], 1, "header")
    try:
        seed = int(head[7], 16)
    except ValueError:
        raise ParseError(f"header: seed {head[7]!r} is not hexadecimal", 1) from None
    if head[-1] not in ("0", "1"):
        raise ParseError(f"header: forced flag must be 0 or 1, got {head[-1]!r}", 1)
    forced = head[-1] == "1"
    if n < 1 or d < 2 or k < 2 or t < 0 or q < 0:
        raise ParseError("header sizes out of range", 1)

    pos = 1
    total = d**k
    constraints = []
    for ci in range(t):
        if pos >= len(lines):
            raise ParseError(f"expected constraint {ci}, found end of input", len(lines))
        toks = lines[pos].split()
        if not toks or toks[0] != "c":
            raise ParseError(f"constraint {ci}: expected a 'c' line", pos + 1)
        scope = _parse_ints(toks[1:], pos + 1, f"constraint {ci} scope")
        if len(scope) != k:
            raise ParseError(
                f"constraint {ci}: scope has {len(scope)} variables, header says k={k}",
                pos + 1,
            )
        if any(not 0 <= v < n for v in scope):
            raise ParseError(f"constraint {ci}: scope variable out of [0, {n})", pos + 1)
        if any(a >= b for a, b in zip(scope, scope[1:])):
            raise ParseError(
                f"constraint {ci}: scope must be strictly increasing", pos + 1
            )
        pos += 1
        codes = []
        for xi in range(q):
            if pos >= len(lines):
                raise ParseError(
                    f"constraint {ci}: expected {q} 'x' lines, found end of input",
                    len(lines),
                )
            xt = lines[pos].split()
            if not xt or xt[0] != "x":
                raise ParseError(f"constraint {ci}: expected an 'x' line", pos + 1)
            vals = _parse_ints(xt[1:], pos + 1, f"constraint {ci} tuple")
            if len(vals) != k:
                raise ParseError(
                    f"constraint {ci}: tuple has {len(vals)} values, need {k}", pos + 1
                )
            if any(not 0 <= v < d for v in vals):
                raise ParseError(
                    f"constraint {ci}: tuple value out of [0, {d})", pos + 1
                )
            codes.append(encode_tuple(vals, d))
            pos += 1
        if len(set(codes)) != len(codes):
            raise ParseError(f"constraint {ci}: duplicate forbidden tuple", pos)
        if any(c >= total for c in codes):
            raise ParseError(f"constraint {ci}: tuple code out of range", pos)
        constraints.append(Constraint(scope=tuple(scope), nogoods=tuple(sorted(codes))))

    hidden = None
    if forced:
        if pos >= len(lines):
            raise ParseError("forced instance is missing its 's' line", len(lines))
        st = lines[pos].split()
        if not st or st[0] != "s":
            raise ParseError("forced instance is missing its 's' line", pos + 1)
        vals = _parse_ints(st[1:], pos + 1, "hidden assignment")
        if len(vals) != n:
            raise ParseError(
                f"hidden assignment has {len(vals)} values, need n={n}", pos + 1
            )
        if any(not 0 <= v < d for v in vals):
            raise ParseError(f"hidden assignment value out of [0, {d})", pos + 1)
        hidden = tuple(vals)
        pos += 1
    while pos < len(lines):
        if lines[pos].strip():
            raise ParseError(f"unexpected trailing content {lines[pos]!r}", pos + 1)
        pos += 1

    return Instance(
        n=n,
        d=d,
        k=k,
        q=q,
        seed=seed,
        forced=forced,
        constraints=tuple(constraints),
        hidden=hidden,
        params=None,
    )


def export_cnf_direct(instance: Instance) -> str:
    """Direct CNF encoding in DIMACS form.

    One boolean per (variable, value) pair, numbered 1 + v*d + a.  Per
    CSP variable an at-least-one clause and C(d,2) at-most-one clauses;
    per forbidden tuple one blocking clause.  The CNF is satisfiable
    exactly when the instance is.
    """
    inst = instance
    n, d = inst.n, inst.d
    nvars = n * d
    nclauses = n * (1 + d * (d - 1) // 2) + sum(len(c.nogoods) for c in inst.constraints)
    out = [f"p cnf {nvars} {nclauses}"]

    def lit(v: int, a: int) -> int:
        return 1 + v * d + a

    for v in range(n):
        out.append(" ".join(str(lit(v, a)) for a in range(d)) + " 0")
        for a in range(d):
            for b in range(a + 1, d):
                out.append(f"-{lit(v, a)} -{lit(v, b)} 0")
    for con in inst.constraints:
        for code in con.nogoods:
            vals = decode_tuple(code, d, inst.k)
            out.append(
                " ".join(f"-{lit(v, a)}" for v, a in zip(con.scope, vals)) + " 0"
            )
    return "\n".join(out) + "\n"


def validate(instance: Instance, params: ModelParams | None = None) -> list[str]:
    """Collect invariant violations; an empty list means the instance is clean.

    With params given, also checks that the realized sizes match what
    derive_sizes would produce.
    """
    inst = instance
    out: list[str] = []
    if inst.n < 1:
        out.append(f"n = {inst.n} < 1")
    if inst.d < 2:
        out.append(f"d = {inst.d} < 2")
    if inst.k < 2:
        out.append(f"k = {inst.k} < 2")
    total = inst.d**inst.k
    for ci, con in enumerate(inst.constraints):
        if len(con.scope) != inst.k:
            out.append(f"constraint {ci}: scope size {len(con.scope)} != k")
        if len(set(con.scope)) != len(con.scope):
            out.append(f"constraint {ci}: duplicate variable in scope")
        if any(a >= b for a, b in zip(con.scope, con.scope[1:])):
            out.append(f"constraint {ci}: scope not strictly increasing")
        if any(not 0 <= v < inst.n for v in con.scope):
            out.append(f"constraint {ci}: scope variable out of range")
        if len(con.nogoods) != inst.q:
            out.append(
                f"constraint {ci}: {len(con.nogoods)} forbidden tuples, expected q={inst.q}"
            )
        if len(set(con.nogoods)) != len(con.nogoods):
            out.append(f"constraint {ci}: duplicate forbidden tuple")
        if any(not 0 <= c < total for c in con.nogoods):
            out.append(f"constraint {ci}: tuple code out of range")
    if inst.forced:
        if inst.hidden is None:
            out.append("forced instance has no hidden assignment")
        else:
            if len(inst.hidden) != inst.n:
                out.append("hidden assignment length != n")
            elif any(not 0 <= v < inst.d for v in inst.hidden):
                out.append("hidden assignment value out of range")
            else:
                for ci, con in enumerate(inst.constraints):
                    code = encode_tuple((inst.hidden[v] for v in con.scope), inst.d)
                    if code in set(con.nogoods):
                        out.append(
                            f"constraint {ci}: hidden assignment hits a forbidden tuple"
                        )
    if params is not None:
        sizes = derive_sizes(params)
        if inst.d != sizes.d:
            out.append(f"d = {inst.d} does not match derived {sizes.d}")
        if inst.q != sizes.q:
            out.append(f"q = {inst.q} does not match derived {sizes.q}")
        if inst.t != sizes.t:
            out.append(f"t = {inst.t} does not match derived {sizes.t}")
        if inst.n != params.n:
            out.append(f"n = {inst.n} does not match params n = {params.n}")
        if inst.k != params.k:
            out.append(f"k = {inst.k} does not match params k = {params.k}")
    return out
