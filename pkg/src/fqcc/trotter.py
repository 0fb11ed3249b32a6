"""Trotter-step synthesis and two-qubit-count reduction heuristics.

A fermionic excitation term is expanded into a set of commuting Pauli
rotations, each synthesized as a basis-change + CNOT-ladder + Rz block.
Adjacent blocks that share a ladder target cancel gates at their boundary,
so the total two-qubit count depends on the string ordering, the choice of
target wire, the labeling of fermion levels, and whether spatially paired
excitations are compressed onto half the register.  This module provides:

- product-formula sequencing (first order, and the recursive even orders),
- ``expand_term``: excitation -> rotation list under a chosen transform,
- ``synth_pauli_exp`` / ``term_circuit``: circuit emission,
- ``intra_order``: exhaustive per-term (ordering, target) optimization with
  an exact additive cost model,
- ``relabel_levels``: greedy level-relabeling over pair-swap permutations,
- ``inter_order``: greedy cross-term concatenation by shared target,
- ``bosonic_reduce``: compression of spatially paired double excitations
  onto one wire per orbital pair, plus the restoration network,
- ``synthesize_ansatz``: the full pipeline with a structured plan report.

The cost model counts, per block, ``2 * (weight - 1)`` CNOTs and, per
boundary between consecutive blocks, a two-CNOT saving on every non-target
wire where both letters are equal and non-identity, or a one-CNOT saving
where they differ and neither is identity.  ``peephole_cancel`` realizes
exactly these savings, so model and circuit agree gate-for-gate.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations

from .circuits import Circuit, metrics, peephole_cancel
from .fermions import FermionOperator, FermionTerm, OrbitalSequence
from .paulis import PauliString
from .transform import Transform

_TOL = 1e-12

# ---------------------------------------------------------------------------
# product-formula sequencing
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class PFConfig:
    """Product-formula shape: expansion order and repetition count."""

    order: int = 1
    steps: int = 1

    def __post_init__(self):
        if self.order != 1 and (self.order < 2 or self.order % 2):
            raise ValueError(f"order must be 1 or an even integer, got {self.order}")
        if self.steps < 1:
            raise ValueError(f"steps must be positive, got {self.steps}")


def suzuki_coefficient(k):
    """Recursive splitting coefficient p_k = 1 / (4 - 4^(1/(2k-1)))."""
    if k < 2:
        raise ValueError("the splitting coefficient is defined for k >= 2")
    return 1.0 / (4.0 - 4.0 ** (1.0 / (2 * k - 1)))


def _suzuki(pairs, order):
    if order == 1:
        return list(pairs)
    if order == 2:
        half = [(label, angle / 2.0) for label, angle in pairs]
        return half + half[::-1]
    p = suzuki_coefficient(order // 2)
    outer = _suzuki([(l, a * p) for l, a in pairs], order - 2)
    middle = _suzuki([(l, a * (1.0 - 4.0 * p)) for l, a in pairs], order - 2)
    return outer + outer + middle + outer + outer


def pf_sequence(pairs, config=PFConfig()):
    """Flatten (label, angle) pairs into one product-formula pass.

    Each input angle is divided by ``config.steps``, expanded at
    ``config.order``, and the resulting block is repeated ``steps`` times.
    Labels are passed through untouched, so callers may sequence Pauli
    strings, excitation names, or any other handle.
    """
    pairs = list(pairs)
    step = [(label, angle / config.steps) for label, angle in pairs]
    block = _suzuki(step, config.order)
    return block * config.steps


# ---------------------------------------------------------------------------
# excitation expansion
# ---------------------------------------------------------------------------

# Four-letter rotation sets are listed in this fixed x/y-word order; any
# other shape falls back to lexicographic word order.
_CANONICAL_WORDS = {
    word: rank
    for rank, word in enumerate(
        ("XXXX", "XXYY", "XYYX", "XYXY", "YYXX", "YXXY", "YXYX", "YYYY")
    )
}


@dataclass(frozen=True, slots=True)
class TrotterTerm:
    """One excitation expanded into equal-magnitude Pauli rotations.

    ``strings`` carry coefficients of exactly +1 or -1; string ``j``
    contributes the rotation exp(-i * angle * sign_j / 2 * P_j).  With
    ``anti`` set the term implements exp(theta * (T - T+)) (the unitary
    cluster convention); otherwise exp(-i * theta / 2 * (T + T+)).
    """

    source: OrbitalSequence | None
    n_qubits: int
    theta: float
    angle: float
    strings: tuple[PauliString, ...]
    eligible_targets: tuple[int, ...]
    anti: bool = False

    def rotations(self):
        """(string, signed angle) pairs in stored order."""
        return tuple((s, self.angle * s.coeff.real) for s in self.strings)

    def wires(self):
        """Sorted union of the string supports."""
        out = set()
        for s in self.strings:
            out.update(s.support)
        return tuple(sorted(out))


def _xy_word(string, xy_wires):
    return "".join(string.letter(q) for q in xy_wires)


def _canonical_string_order(strings):
    xy = sorted(
        q
        for q in strings[0].support
        if all(s.letter(q) in ("X", "Y") for s in strings)
    )

    def rank(s):
        word = _xy_word(s, xy)
        return (_CANONICAL_WORDS.get(word, len(_CANONICAL_WORDS)), word, s.sort_word())

    return tuple(sorted(strings, key=rank))


def expand_term(seq, transform, theta=1.0, *, anti=False):
    """Expand one excitation under ``transform`` into a TrotterTerm.

    Two-body sequences produce exactly eight strings and one-body sequences
    exactly two, all with equal coefficient magnitude; eligibility keeps the
    fermion-label wires whose letter is non-identity in every string.
    """
    n = transform.n_modes
    fwd = seq.term(1.0)
    rev = fwd.adjoint()
    if anti:
        op = FermionOperator(n, [fwd, FermionTerm(-rev.coefficient, rev.ops)])
    else:
        op = FermionOperator(n, [fwd, rev])
    psum = op.to_pauli(transform).simplify()

    expected = 8 if seq.kind == "double" else 2
    raw = psum.strings()
    if len(raw) != expected:
        raise ValueError(
            f"{seq.name} expanded to {len(raw)} strings, expected {expected}"
        )
    signed = []
    magnitudes = []
    for s in raw:
        if anti:
            if abs(s.coeff.real) > 1e-9:
                raise ValueError(f"{seq.name}: expansion is not anti-hermitian")
            rot = -2.0 * s.coeff.imag
        else:
            if abs(s.coeff.imag) > 1e-9:
                raise ValueError(f"{seq.name}: expansion is not hermitian")
            rot = s.coeff.real
        magnitudes.append(abs(rot))
        signed.append(s.with_coeff(1.0 if rot >= 0 else -1.0))
    mag = magnitudes[0]
    if any(abs(m - mag) > 1e-9 for m in magnitudes):
        raise ValueError(f"{seq.name}: unequal rotation magnitudes")

    ordered = _canonical_string_order(tuple(signed))
    labels = sorted(set(seq.indices))
    eligible = tuple(
        t for t in labels if all(s.letter(t) != "I" for s in ordered)
    )
    return TrotterTerm(
        source=seq,
        n_qubits=n,
        theta=theta,
        angle=theta * mag,
        strings=ordered,
        eligible_targets=eligible,
        anti=anti,
    )


# ---------------------------------------------------------------------------
# per-string synthesis
# ---------------------------------------------------------------------------

_WIND = {"X": ("H",), "Y": ("Sdg", "H"), "Z": ()}
_UNWIND = {"X": ("H",), "Y": ("H", "S"), "Z": ()}


def synth_pauli_exp(string, theta, target, n_qubits=None):
    """exp(-i theta/2 * string) as basis changes, a CNOT ladder, and one Rz.

    The ladder folds every other support wire onto ``target``; the block
    uses exactly ``2 * (weight - 1)`` CNOTs.
    """
    n = n_qubits if n_qubits is not None else string.n_qubits
    if string.letter(target) == "I":
        raise ValueError(f"target {target} carries identity in {string.to_text()}")
    circ = Circuit(n)
    _emit_block(circ, string, theta, target)
    return circ


def _emit_block(circ, string, theta, target):
    support = string.support
    for q in support:
        for kind in _WIND[string.letter(q)]:
            circ.add(kind, q)
    for q in support:
        if q != target:
            circ.add("CNOT", q, target)
    circ.add("Rz", target, theta=theta)
    for q in reversed(support):
        if q != target:
            circ.add("CNOT", q, target)
    for q in reversed(support):
        for kind in _UNWIND[string.letter(q)]:
            circ.add(kind, q)


def term_circuit(term, ordering=None, target=None, n_qubits=None):
    """Blocks for every rotation of ``term``, sharing one ladder target.

    ``ordering`` permutes the stored strings; ``target`` defaults to the
    first eligible wire.  A term with no eligible target falls back to
    per-string targets (the highest support wire of each string).
    """
    n = n_qubits if n_qubits is not None else term.n_qubits
    circ = Circuit(n)
    order = tuple(ordering) if ordering is not None else tuple(range(len(term.strings)))
    if sorted(order) != list(range(len(term.strings))):
        raise ValueError(f"ordering {order} is not a permutation")
    if target is None and term.eligible_targets:
        target = term.eligible_targets[0]
    for j in order:
        string = term.strings[j]
        angle = term.angle * string.coeff.real
        t = target if target is not None else max(string.support)
        _emit_block(circ, string, angle, t)
    return circ


# ---------------------------------------------------------------------------
# cost model
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class CostBreakdown:
    """Additive CNOT accounting for one (ordering, target) realization."""

    letter_counts: tuple[int, ...]
    two_cnot_savings: tuple[int, ...]
    one_cnot_savings: tuple[int, ...]

    @property
    def base(self):
        return sum(2 * (n - 1) for n in self.letter_counts)

    @property
    def saved(self):
        return sum(2 * m + n for m, n in zip(self.two_cnot_savings, self.one_cnot_savings))

    @property
    def total(self):
        return self.base - self.saved


@dataclass(frozen=True, slots=True)
class IntraChoice:
    ordering: tuple[int, ...]
    target: int | None
    breakdown: CostBreakdown

    @property
    def cost(self):
        return self.breakdown.total


@dataclass(frozen=True, slots=True)
class IntraResult:
    """All cost-minimal (ordering, target) pairs plus per-target optima."""

    minima: tuple[IntraChoice, ...]
    per_target: dict[int, IntraChoice]
    min_cost: int


def _boundary_saving(first, second, target):
    """(two_cnot, one_cnot) savings at the boundary of two blocks."""
    two = one = 0
    for q in first.support:
        if q == target:
            continue
        other = second.letter(q)
        if other == "I":
            continue
        if other == first.letter(q):
            two += 1
        else:
            one += 1
    return two, one


def _savings_matrix(strings, target):
    k = len(strings)
    mat = [[0] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            two, one = _boundary_saving(strings[i], strings[j], target)
            mat[i][j] = mat[j][i] = 2 * two + one
    return mat


def cost_breakdown(term, ordering, target):
    """Recount the additive model for an explicit (ordering, target)."""
    seq = [term.strings[j] for j in ordering]
    counts = tuple(s.weight for s in seq)
    twos, ones = [], []
    for a, b in zip(seq, seq[1:]):
        two, one = _boundary_saving(a, b, target)
        twos.append(two)
        ones.append(one)
    return CostBreakdown(counts, tuple(twos), tuple(ones))


def _fallback_choice(term):
    """Per-string-target accounting for terms with no shared target."""
    seq = term.strings
    counts = tuple(s.weight for s in seq)
    twos, ones = [], []
    for a, b in zip(seq, seq[1:]):
        if max(a.support) == max(b.support):
            two, one = _boundary_saving(a, b, max(a.support))
        else:
            two = one = 0
        twos.append(two)
        ones.append(one)
    breakdown = CostBreakdown(counts, tuple(twos), tuple(ones))
    return IntraChoice(tuple(range(len(seq))), None, breakdown)


def _max_path(savings):
    """Maximum-weight Hamiltonian path; lexicographically smallest argmax.

    Returns (weight, path).  ``f[mask][last]`` holds the best achievable
    suffix weight starting at ``last`` with ``mask`` already visited, so the
    path can be rebuilt greedily smallest-node-first.
    """
    k = len(savings)
    full = (1 << k) - 1
    f = [[0] * k for _ in range(1 << k)]
    for mask in range(full, 0, -1):
        for last in range(k):
            if not mask >> last & 1:
                continue
            best = 0
            row = savings[last]
            for nxt in range(k):
                if mask >> nxt & 1:
                    continue
                cand = row[nxt] + f[mask | (1 << nxt)][nxt]
                if cand > best:
                    best = cand
            f[mask][last] = best
    weight = max(f[1 << v][v] for v in range(k))
    path = []
    mask = 0
    remaining = weight
    prev = None
    for _ in range(k):
        for v in range(k):
            if mask >> v & 1:
                continue
            gain = 0 if prev is None else savings[prev][v]
            if gain + f[mask | (1 << v)][v] == remaining:
                path.append(v)
                mask |= 1 << v
                remaining -= gain
                prev = v
                break
    return weight, tuple(path)


def _dp_choice(term, target):
    savings = _savings_matrix(term.strings, target)
    _, path = _max_path(savings)
    if path[::-1] < path:
        path = path[::-1]
    return IntraChoice(path, target, cost_breakdown(term, path, target))


def intra_order(term, exhaustive=True):
    """Optimize string order and ladder target for a single term.

    With ``exhaustive`` set, every permutation (deduplicated up to reversal)
    of every eligible target is scored and all degenerate minima returned;
    otherwise only the per-target optima are computed by dynamic
    programming over boundary savings (same minima, no full set).
    """
    if not term.eligible_targets:
        choice = _fallback_choice(term)
        return IntraResult((), {}, choice.cost)

    per_target = {t: _dp_choice(term, t) for t in term.eligible_targets}
    min_cost = min(c.cost for c in per_target.values())
    if not exhaustive:
        return IntraResult((), per_target, min_cost)

    k = len(term.strings)
    base = sum(2 * (s.weight - 1) for s in term.strings)
    minima = []
    for t in term.eligible_targets:
        savings = _savings_matrix(term.strings, t)
        best_saved = base - per_target[t].cost
        for perm in permutations(range(k)):
            if perm[::-1] < perm:
                continue
            saved = 0
            for i in range(k - 1):
                saved += savings[perm[i]][perm[i + 1]]
            if saved > best_saved:
                raise AssertionError("path optimum disagrees with enumeration")
            if base - saved == min_cost:
                minima.append(IntraChoice(perm, t, cost_breakdown(term, perm, t)))
    minima.sort(key=lambda c: (c.target, c.ordering))
    return IntraResult(tuple(minima), per_target, min_cost)


def term_min_cost(term):
    """Cheapest CNOT count over eligible targets (additive model)."""
    return intra_order(term, exhaustive=False).min_cost


# ---------------------------------------------------------------------------
# level relabeling
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class LabelingState:
    """Result of greedy relabeling: mode permutation, cost, round count."""

    labels: tuple[int, ...]
    cost: int
    rounds: int


def permute_sequence(seq, mode_perm):
    """Relabel a sequence's modes; returns (new sequence, amplitude sign).

    Re-sorting a double's creation or annihilation pair after relabeling
    swaps ladder operators once, which flips the amplitude sign.
    """
    mapped = [mode_perm[i] for i in seq.indices]
    sign = 1
    if seq.kind == "double":
        (p, q), (r, s) = mapped[:2], mapped[2:]
        if p > q:
            p, q = q, p
            sign = -sign
        if r > s:
            r, s = s, r
            sign = -sign
        mapped = [p, q, r, s]
    return OrbitalSequence(seq.kind, tuple(mapped)), sign


def _pair_swap_perms(n_spatial, k):
    """Mode permutations made of 1..k disjoint orbital-pair transpositions."""
    transpositions = list(combinations(range(n_spatial), 2))
    perms = []
    for count in range(1, k + 1):
        for chosen in combinations(transpositions, count):
            flat = [x for pair in chosen for x in pair]
            if len(set(flat)) != len(flat):
                continue
            spatial = list(range(n_spatial))
            for a, b in chosen:
                spatial[a], spatial[b] = spatial[b], spatial[a]
            mode = [0] * (2 * n_spatial)
            for l, m in enumerate(spatial):
                mode[2 * l] = 2 * m
                mode[2 * l + 1] = 2 * m + 1
            perms.append(tuple(mode))
    return perms


def _labeling_cost(seqs, transform, labels, *, anti, memo):
    total = 0
    for seq in seqs:
        mapped, _ = permute_sequence(seq, labels)
        key = (mapped.kind, mapped.indices)
        cost = memo.get(key)
        if cost is None:
            cost = term_min_cost(expand_term(mapped, transform, anti=anti))
            memo[key] = cost
        total += cost
    return total


def relabel_levels(seqs, transform, k=2, *, anti=False, memo=None):
    """Greedy pair-swap relabeling that lowers the summed per-term cost.

    Each round scores every candidate permutation applied to the current
    labeling and adopts the best strict improvement; the search stops on
    the first round with no improvement.
    """
    n = transform.n_modes
    if n % 2:
        raise ValueError("relabeling pairs spatial orbitals; mode count must be even")
    if k < 1:
        raise ValueError("swap arity must be at least 1")
    memo = {} if memo is None else memo
    candidates = _pair_swap_perms(n // 2, k)
    labels = tuple(range(n))
    cost = _labeling_cost(seqs, transform, labels, anti=anti, memo=memo)
    rounds = 0
    while True:
        rounds += 1
        best_cost, best_labels = cost, None
        for perm in candidates:
            trial = tuple(perm[labels[i]] for i in range(n))
            trial_cost = _labeling_cost(seqs, transform, trial, anti=anti, memo=memo)
            if trial_cost < best_cost:
                best_cost, best_labels = trial_cost, trial
        if best_labels is None:
            return LabelingState(labels, cost, rounds)
        labels, cost = best_labels, best_cost


# ---------------------------------------------------------------------------
# cross-term ordering
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class TermPlacement:
    """One term inside a class chain: index, orientation, realized choice."""

    index: int
    choice: IntraChoice
    reverse: bool = False

    @property
    def ordering(self):
        return self.choice.ordering[::-1] if self.reverse else self.choice.ordering


@dataclass(frozen=True, slots=True)
class ClassPlan:
    target: int
    placements: tuple[TermPlacement, ...]
    junction_savings: tuple[int, ...]

    @property
    def cost(self):
        return sum(p.choice.cost for p in self.placements) - sum(self.junction_savings)


@dataclass(frozen=True, slots=True)
class InterPlan:
    classes: tuple[ClassPlan, ...]
    standalone: tuple[TermPlacement, ...]

    @property
    def cost(self):
        return sum(c.cost for c in self.classes) + sum(
            p.choice.cost for p in self.standalone
        )


def _edge_string(term, placement, last):
    order = placement.ordering
    return term.strings[order[-1] if last else order[0]]


def _junction_value(terms, left, right, target):
    a = _edge_string(terms[left.index], left, last=True)
    b = _edge_string(terms[right.index], right, last=False)
    two, one = _boundary_saving(a, b, target)
    return 2 * two + one


def inter_order(terms, intra=None):
    """Group terms by shared eligible target and chain them greedily.

    Classes are formed around the most frequently eligible wire (ties to
    the smallest index), removing claimed terms and repeating.  Within a
    class the chain is seeded with the best scoring oriented pair, then
    grown one term at a time, trying prefix/suffix placement of the
    original or reversed per-term ordering and keeping the best boundary
    saving (ties resolved in enumeration order).
    """
    if intra is None:
        intra = [intra_order(t, exhaustive=False) for t in terms]
    standalone = tuple(
        TermPlacement(i, _fallback_choice(terms[i]))
        for i in range(len(terms))
        if not terms[i].eligible_targets
    )
    remaining = [i for i in range(len(terms)) if terms[i].eligible_targets]

    classes = []
    while remaining:
        counts = {}
        for i in remaining:
            for t in terms[i].eligible_targets:
                counts[t] = counts.get(t, 0) + 1
        target = min(counts, key=lambda t: (-counts[t], t))
        members = [i for i in remaining if target in terms[i].eligible_targets]
        remaining = [i for i in remaining if i not in members]
        classes.append(_chain_class(terms, intra, members, target))
    return InterPlan(tuple(classes), standalone)


def _chain_class(terms, intra, members, target):
    placements = {
        i: (
            TermPlacement(i, intra[i].per_target[target], False),
            TermPlacement(i, intra[i].per_target[target], True),
        )
        for i in members
    }
    if len(members) == 1:
        only = placements[members[0]][0]
        return ClassPlan(target, (only,), ())

    best = None
    for i in members:
        for j in members:
            if i == j:
                continue
            for a in placements[i]:
                for b in placements[j]:
                    value = _junction_value(terms, a, b, target)
                    if best is None or value > best[0]:
                        best = (value, a, b)
    _, left, right = best
    chain = [left, right]
    savings = [best[0]]
    used = {left.index, right.index}

    while len(used) < len(members):
        pick = None
        for i in members:
            if i in used:
                continue
            for prefix in (True, False):
                for cand in placements[i]:
                    if prefix:
                        value = _junction_value(terms, cand, chain[0], target)
                    else:
                        value = _junction_value(terms, chain[-1], cand, target)
                    if pick is None or value > pick[0]:
                        pick = (value, cand, prefix)
        value, cand, prefix = pick
        if prefix:
            chain.insert(0, cand)
            savings.insert(0, value)
        else:
            chain.append(cand)
            savings.append(value)
        used.add(cand.index)
    return ClassPlan(target, tuple(chain), tuple(savings))


# ---------------------------------------------------------------------------
# paired-excitation compression
# ---------------------------------------------------------------------------

# Letter pair on one compressed orbital pair -> (compressed letter, factor).
# Pairs mixing {x, y} with {i, z} have no action inside the equal-occupation
# subspace and drop the whole string.
PAIR_TABLE = {
    ("I", "I"): ("I", 1.0),
    ("I", "Z"): ("Z", 1.0),
    ("Z", "I"): ("Z", 1.0),
    ("Z", "Z"): ("I", 1.0),
    ("X", "X"): ("X", 1.0),
    ("X", "Y"): ("Y", 1.0),
    ("Y", "X"): ("Y", 1.0),
    ("Y", "Y"): ("X", -1.0),
}


def compress_string(string, pairing):
    """Project one string onto the equal-occupation subspace of each pair.

    Returns a string over ``len(pairing)`` wires with the accumulated sign
    folded into its coefficient, or None when any pair mixes a flip with an
    identity/phase letter (no support in the subspace).
    """
    letters = {}
    factor = complex(string.coeff)
    for idx, (w0, w1) in enumerate(pairing):
        entry = PAIR_TABLE.get((string.letter(w0), string.letter(w1)))
        if entry is None:
            return None
        letter, sign = entry
        factor *= sign
        if letter != "I":
            letters[idx] = letter
    return PauliString.from_letters(len(pairing), letters, factor)


@dataclass(frozen=True, slots=True)
class CompressedTerm:
    """A paired double excitation on one wire per orbital pair.

    ``strings`` live on the compressed register (wire = pair index) and
    carry +/-1 coefficients like TrotterTerm; the circuit uses two CNOTs
    plus two CZs per chain wire.
    """

    source: OrbitalSequence | None
    n_pairs: int
    theta: float
    angle: float
    strings: tuple[PauliString, ...]
    plus_pair: int
    minus_pair: int
    chain: tuple[int, ...]
    anti: bool = False

    @property
    def two_qubit_cost(self):
        return 2 + 2 * len(self.chain)


@dataclass(frozen=True, slots=True)
class BosonicSplit:
    compressed: tuple[CompressedTerm, ...]
    kept: tuple[int, ...]
    touched_pairs: tuple[int, ...]

    @property
    def restoration_cnots(self):
        return len(self.touched_pairs)


def _pair_index(pairing, modes):
    want = set(modes)
    for idx, pair in enumerate(pairing):
        if set(pair) == want:
            return idx
    return None


def _compress_term(seq, theta, pairing, *, anti):
    n = 2 * len(pairing)
    full = expand_term(seq, Transform.jordan_wigner(n), 1.0, anti=anti)
    merged = {}
    for string, rot in full.rotations():
        comp = compress_string(string.with_coeff(1.0), pairing)
        if comp is None:
            raise ValueError(f"{seq.name}: string does not act on paired subspace")
        key = comp.key
        merged[key] = merged.get(key, 0.0) + rot * comp.coeff.real
    merged = {k: v for k, v in merged.items() if abs(v) > _TOL}
    if len(merged) != 2:
        raise ValueError(f"{seq.name}: compression produced {len(merged)} strings")
    (k1, v1), (k2, v2) = sorted(merged.items())
    if abs(abs(v1) - abs(v2)) > 1e-9:
        raise ValueError(f"{seq.name}: unequal compressed rotations")
    if anti and abs(v1 + v2) > 1e-9:
        raise ValueError(f"{seq.name}: compressed rotations should be opposite")
    if not anti and abs(v1 - v2) > 1e-9:
        raise ValueError(f"{seq.name}: compressed rotations should be equal")
    angle = abs(theta) * abs(v1)
    flip = -1.0 if theta < 0 else 1.0
    strings = tuple(
        PauliString(len(pairing), x, z, flip * (1.0 if v >= 0 else -1.0))
        for (x, z), v in ((k1, v1), (k2, v2))
    )
    xy = sorted(
        q for q in strings[0].support if strings[0].letter(q) in ("X", "Y")
    )
    chain = tuple(
        q for q in strings[0].support if strings[0].letter(q) == "Z"
    )
    if len(xy) != 2 or any(s.letter(q) != "Z" for s in strings for q in chain):
        raise ValueError(f"{seq.name}: unexpected compressed structure")
    plus = _pair_index(pairing, seq.creations())
    minus = _pair_index(pairing, seq.annihilations())
    return CompressedTerm(
        source=seq,
        n_pairs=len(pairing),
        theta=theta,
        angle=angle,
        strings=strings,
        plus_pair=plus,
        minus_pair=minus,
        chain=chain,
        anti=anti,
    )


def bosonic_reduce(terms, pairing=None, occupied=None):
    """Split terms into compressible paired doubles and everything else.

    A double excitation compresses when its creations fill one orbital pair
    and its annihilations another; a reference occupation (when given) must
    fill or empty each such pair entirely, otherwise the term is kept
    uncompressed.  Returns a BosonicSplit with term indices preserved.
    """
    if not terms:
        return BosonicSplit((), (), ())
    n = terms[0].n_qubits
    if pairing is None:
        if n % 2:
            raise ValueError("default pairing needs an even number of modes")
        pairing = tuple((2 * l, 2 * l + 1) for l in range(n // 2))
    else:
        pairing = tuple(tuple(p) for p in pairing)
    occ = None if occupied is None else set(occupied)

    compressed, kept, touched = [], [], set()
    for i, term in enumerate(terms):
        seq = term.source
        ok = (
            seq is not None
            and seq.kind == "double"
            and _pair_index(pairing, seq.creations()) is not None
            and _pair_index(pairing, seq.annihilations()) is not None
        )
        if ok and occ is not None:
            for pair in (seq.creations(), seq.annihilations()):
                inside = len(occ.intersection(pair))
                if inside == 1:
                    ok = False
        if not ok:
            kept.append(i)
            continue
        cterm = _compress_term(seq, term.theta, pairing, anti=term.anti)
        compressed.append(cterm)
        touched.update((cterm.plus_pair, cterm.minus_pair))
        touched.update(cterm.chain)
    return BosonicSplit(tuple(compressed), tuple(kept), tuple(sorted(touched)))


def compressed_circuit(cterm, n_qubits=None, wire_map=None):
    """Two-CNOT rotation core for a compressed term, plus CZ chain flanks.

    exp(-i b/2 (XX + ZZ)) equals CNOT . (Rx(b) x Rz(b)) . CNOT; conjugating
    both wires with HSH (a Clifford x-rotation) turns ZZ into YY, and an
    extra S on the second wire turns XX + YY into XY - YX.  CZ flanks
    extend either form by a z letter per chain wire.
    """
    w = wire_map if wire_map is not None else {q: q for q in range(cterm.n_pairs)}
    n = n_qubits if n_qubits is not None else cterm.n_pairs
    first = cterm.strings[0]
    xy = sorted(q for q in first.support if first.letter(q) in ("X", "Y"))
    a, b = w[xy[0]], w[xy[1]]

    if cterm.anti:
        lead = next(s for s in cterm.strings if s.letter(xy[0]) == "X")
        beta = cterm.angle * lead.coeff.real
    else:
        beta = cterm.angle * first.coeff.real

    circ = Circuit(n)
    for c in cterm.chain:
        circ.add("CZ", w[c], b)
    if cterm.anti:
        circ.add("Sdg", b)
    for q in (a, b):
        circ.add("H", q)
        circ.add("Sdg", q)
        circ.add("H", q)
    circ.add("CNOT", a, b)
    circ.add("Rx", a, theta=beta)
    circ.add("Rz", b, theta=beta)
    circ.add("CNOT", a, b)
    for q in (a, b):
        circ.add("H", q)
        circ.add("S", q)
        circ.add("H", q)
    if cterm.anti:
        circ.add("S", b)
    for c in reversed(cterm.chain):
        circ.add("CZ", w[c], b)
    return circ


def restoration_circuit(touched_pairs, pairing, n_qubits):
    """Fan each compressed pair wire back out to its partner."""
    circ = Circuit(n_qubits)
    for idx in touched_pairs:
        w0, w1 = pairing[idx]
        circ.add("CNOT", w0, w1)
    return circ


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class HeuristicConfig:
    """Which reduction passes to run and how."""

    reorder: bool = True
    bosonic: bool = True
    relabel: bool = False
    relabel_k: int = 2
    peephole: bool = True
    anti: bool = True


@dataclass(slots=True)
class AnsatzPlan:
    """Pipeline output: circuit, accounting, and the choices that led there."""

    n_qubits: int
    labels: tuple[int, ...]
    terms: tuple[TrotterTerm, ...]
    kept: tuple[int, ...]
    inter: InterPlan
    compressed: tuple[CompressedTerm, ...]
    touched_pairs: tuple[int, ...]
    pairing: tuple[tuple[int, int], ...]
    circuit: Circuit
    model_two_qubit: int


def synthesize_ansatz(seqs, transform, angles=None, config=HeuristicConfig(), *, occupied=None):
    """Run the reduction pipeline over a sequence of excitations.

    Passes run in order: level relabeling (optional), paired-double
    compression (compressed blocks lead the circuit, followed by the
    restoration fan-out), then per-term and cross-term ordering of the
    remainder.  ``model_two_qubit`` is the additive accounting; the
    emitted circuit's metrics may only undercut it.
    """
    seqs = list(seqs)
    n = transform.n_modes
    if angles is None:
        angles = [1.0] * len(seqs)
    if len(angles) != len(seqs):
        raise ValueError("angles and sequences differ in length")

    labels = tuple(range(n))
    if config.relabel:
        state = relabel_levels(seqs, transform, config.relabel_k, anti=config.anti)
        labels = state.labels

    worked = []
    for seq, theta in zip(seqs, angles):
        mapped, sign = permute_sequence(seq, labels)
        worked.append((mapped, sign * theta))

    terms = tuple(
        expand_term(seq, transform, theta, anti=config.anti) for seq, theta in worked
    )

    pairing = tuple((2 * l, 2 * l + 1) for l in range(n // 2)) if n % 2 == 0 else ()
    if config.bosonic and pairing:
        split = bosonic_reduce(terms, pairing, occupied=occupied)
    else:
        split = BosonicSplit((), tuple(range(len(terms))), ())

    kept_terms = [terms[i] for i in split.kept]
    if config.reorder:
        plan = inter_order(kept_terms)
    else:
        placements = tuple(
            TermPlacement(i, _first_choice(t)) for i, t in enumerate(kept_terms)
        )
        classes = tuple(
            ClassPlan(p.choice.target, (p,), ())
            for p in placements
            if p.choice.target is not None
        )
        standalone = tuple(p for p in placements if p.choice.target is None)
        plan = InterPlan(classes, standalone)

    circ = Circuit(n)
    wire_map = {idx: pair[0] for idx, pair in enumerate(pairing)}
    for cterm in split.compressed:
        circ.extend(compressed_circuit(cterm, n, wire_map).gates)
    rest = restoration_circuit(split.touched_pairs, pairing, n)
    circ.extend(rest.gates)
    for cls in plan.classes:
        block = Circuit(n)
        for placement in cls.placements:
            term = kept_terms[placement.index]
            block.extend(term_circuit(term, placement.ordering, cls.target).gates)
        if config.peephole:
            block = peephole_cancel(block)
        circ.extend(block.gates)
        circ.global_phase *= block.global_phase
    for placement in plan.standalone:
        term = kept_terms[placement.index]
        block = term_circuit(term, placement.ordering, None)
        if config.peephole:
            block = peephole_cancel(block)
        circ.extend(block.gates)
        circ.global_phase *= block.global_phase

    model = (
        plan.cost
        + sum(c.two_qubit_cost for c in split.compressed)
        + split.restoration_cnots
    )
    return AnsatzPlan(
        n_qubits=n,
        labels=labels,
        terms=terms,
        kept=split.kept,
        inter=plan,
        compressed=split.compressed,
        touched_pairs=split.touched_pairs,
        pairing=pairing,
        circuit=circ,
        model_two_qubit=model,
    )


def _first_choice(term):
    if not term.eligible_targets:
        return _fallback_choice(term)
    target = term.eligible_targets[0]
    ordering = tuple(range(len(term.strings)))
    return IntraChoice(ordering, target, cost_breakdown(term, ordering, target))


def ansatz_two_qubit_cost(
    seqs, transform, *, anti=True, bosonic=True, reorder=True, occupied=None, memo=None
):
    """Additive two-qubit count of the pipeline, without circuit emission.

    ``memo`` (optional dict) caches expansions across calls that share the
    same transform, keyed by the sequence identity.
    """
    n = transform.n_modes
    terms = []
    for seq in seqs:
        key = (seq.kind, seq.indices, anti)
        term = None if memo is None else memo.get(key)
        if term is None:
            term = expand_term(seq, transform, anti=anti)
            if memo is not None:
                memo[key] = term
        terms.append(term)

    pairing = tuple((2 * l, 2 * l + 1) for l in range(n // 2)) if n % 2 == 0 else ()
    if bosonic and pairing:
        split = bosonic_reduce(terms, pairing, occupied=occupied)
    else:
        split = BosonicSplit((), tuple(range(len(terms))), ())
    kept = [terms[i] for i in split.kept]

    if reorder:
        cost = inter_order(kept).cost
    else:
        cost = sum(_first_choice(t).cost for t in kept)
    return (
        cost
        + sum(c.two_qubit_cost for c in split.compressed)
        + split.restoration_cnots
    )


def plan_report(plan):
    """JSON-ready description of an AnsatzPlan."""
    kept_terms = [plan.terms[i] for i in plan.kept]
    classes = []
    for cls in plan.inter.classes:
        classes.append(
            {
                "target": cls.target,
                "members": [
                    {
                        "term": _term_name(kept_terms[p.index]),
                        "ordering": list(p.ordering),
                        "reversed": p.reverse,
                        "cost": p.choice.cost,
                    }
                    for p in cls.placements
                ],
                "junction_savings": list(cls.junction_savings),
                "cost": cls.cost,
            }
        )
    report = {
        "n_qubits": plan.n_qubits,
        "labels": list(plan.labels),
        "classes": classes,
        "standalone": [
            {"term": _term_name(kept_terms[p.index]), "cost": p.choice.cost}
            for p in plan.inter.standalone
        ],
        "compressed": [
            {
                "term": _term_name(c),
                "plus_pair": c.plus_pair,
                "minus_pair": c.minus_pair,
                "chain": list(c.chain),
                "cost": c.two_qubit_cost,
            }
            for c in plan.compressed
        ],
        "restoration_cnots": len(plan.touched_pairs),
        "model_two_qubit": plan.model_two_qubit,
    }
    m = metrics(plan.circuit)
    report["metrics"] = {
        "two_qubit": m.two_qubit,
        "rz_count": m.rz_count,
        "rz_depth": m.rz_depth,
        "t_count": m.t_count,
        "n_gates": m.n_gates,
    }
    return report


def _term_name(term):
    return term.source.name if term.source is not None else "term"
