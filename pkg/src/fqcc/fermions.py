"""Second-quantized fermionic operators and UCCSD cluster bookkeeping.

Spin-orbital indexing is interleaved: even index = alpha spin, odd index =
beta spin of the same spatial orbital, so the two spin-orbitals of spatial
orbital l sit on adjacent modes (2l, 2l+1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def spin_of(mode):
    """0 for alpha (even modes), 1 for beta (odd modes)."""
    return mode & 1


def spatial_of(mode):
    return mode >> 1


@dataclass(frozen=True, slots=True)
class LadderOp:
    """A single creation (dagger=True) or annihilation operator."""

    mode: int
    dagger: bool

    def __post_init__(self):
        if self.mode < 0:
            raise ValueError("mode must be non-negative")

    def adjoint(self):
        return LadderOp(self.mode, not self.dagger)

    def __str__(self):
        return f"a+_{self.mode}" if self.dagger else f"a_{self.mode}"


@dataclass(frozen=True, slots=True)
class FermionTerm:
    """coefficient * (ordered product of ladder operators)."""

    coefficient: complex
    ops: tuple

    def __post_init__(self):
        object.__setattr__(self, "coefficient", complex(self.coefficient))
        object.__setattr__(self, "ops", tuple(self.ops))

    def adjoint(self):
        return FermionTerm(
            self.coefficient.conjugate(),
            tuple(op.adjoint() for op in reversed(self.ops)),
        )

    def max_mode(self):
        return max((op.mode for op in self.ops), default=-1)

    def __str__(self):
        body = " ".join(str(op) for op in self.ops) or "1"
        return f"{self.coefficient} * {body}"


class FermionOperator:
    """An ordered collection of FermionTerm plus a scalar constant."""

    __slots__ = ("n_modes", "terms", "constant")

    def __init__(self, n_modes, terms=(), constant=0.0):
        self.n_modes = n_modes
        self.terms = list(terms)
        self.constant = complex(constant)
        for t in self.terms:
            if t.max_mode() >= n_modes:
                raise ValueError(f"term {t} references mode >= {n_modes}")

    def adjoint(self):
        return FermionOperator(
            self.n_modes,
            [t.adjoint() for t in self.terms],
            self.constant.conjugate(),
        )

    def __add__(self, other):
        if isinstance(other, (int, float, complex)):
            return FermionOperator(self.n_modes, self.terms, self.constant + other)
        if other.n_modes != self.n_modes:
            raise ValueError("mode-count mismatch")
        return FermionOperator(
            self.n_modes, self.terms + other.terms, self.constant + other.constant
        )

    def __mul__(self, scalar):
        return FermionOperator(
            self.n_modes,
            [FermionTerm(t.coefficient * scalar, t.ops) for t in self.terms],
            self.constant * scalar,
        )

    __rmul__ = __mul__

    def __len__(self):
        return len(self.terms)

    def to_pauli(self, transform):
        """Map through a fermion-to-qubit transform to a PauliSum."""
        if transform.n_modes != self.n_modes:
            raise ValueError("transform mode count does not match operator")
        raw = [
            (t.coefficient, tuple((op.mode, op.dagger) for op in t.ops))
            for t in self.terms
        ]
        return transform.map_operator(raw, constant=self.constant)


def number_operator(n_modes):
    terms = [
        FermionTerm(1.0, (LadderOp(j, True), LadderOp(j, False))) for j in range(n_modes)
    ]
    return FermionOperator(n_modes, terms)


# ---------------------------------------------------------------------------
# molecular Hamiltonian
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class MolecularHamiltonian:
    """Second-quantized coefficients.

    ``h1[(p, r)]`` multiplies a+_p a_r and ``h2[(p, q, r, s)]`` multiplies
    a+_p a+_q a_r a_s, both in hartree.
    """

    n_modes: int
    core_energy: float = 0.0
    h1: dict = field(default_factory=dict)
    h2: dict = field(default_factory=dict)

    def hermiticity_violations(self, tol=1e-10):
        """Index tuples whose coefficients break Hermiticity."""
        bad = []
        for (p, r), v in self.h1.items():
            if abs(np.conj(v) - self.h1.get((r, p), 0.0)) > tol:
                bad.append(("h1", (p, r)))
        for (p, q, r, s), v in self.h2.items():
            # (a+_p a+_q a_r a_s)+ = a+_s a+_r a_q a_p
            if abs(np.conj(v) - self.h2.get((s, r, q, p), 0.0)) > tol:
                bad.append(("h2", (p, q, r, s)))
        return bad


def build_hamiltonian(h: MolecularHamiltonian) -> FermionOperator:
    """Assemble the ladder-operator form, validating Hermiticity first."""
    bad = h.hermiticity_violations()
    if bad:
        listing = ", ".join(f"{kind}{idx}" for kind, idx in bad[:12])
        more = "" if len(bad) <= 12 else f" (+{len(bad) - 12} more)"
        raise ValueError(f"non-Hermitian coefficients at {listing}{more}")
    terms = []
    for (p, r), v in sorted(h.h1.items()):
        if v != 0.0:
            terms.append(FermionTerm(v, (LadderOp(p, True), LadderOp(r, False))))
    for (p, q, r, s), v in sorted(h.h2.items()):
        if v != 0.0:
            terms.append(
                FermionTerm(
                    v,
                    (
                        LadderOp(p, True),
                        LadderOp(q, True),
                        LadderOp(r, False),
                        LadderOp(s, False),
                    ),
                )
            )
    return FermionOperator(h.n_modes, terms, h.core_energy)


# ---------------------------------------------------------------------------
# UCCSD cluster operator
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class OrbitalSequence:
    """One excitation: creations into virtuals, annihilations out of occupieds.

    Singles carry indices (p, r) for a+_p a_r; doubles carry (p, q, r, s) for
    a+_p a+_q a_r a_s with p < q and r < s (the canonical sign convention).
    """

    kind: str
    indices: tuple

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(self.indices))
        if self.kind == "single":
            if len(self.indices) != 2:
                raise ValueError("single excitations take (p, r)")
        elif self.kind == "double":
            if len(self.indices) != 4:
                raise ValueError("double excitations take (p, q, r, s)")
            p, q, r, s = self.indices
            if not (p < q and r < s):
                raise ValueError("double indices must satisfy p < q and r < s")
        else:
            raise ValueError(f"unknown excitation kind {self.kind!r}")
        if len(set(self.creations())) != len(self.creations()) or len(
            set(self.annihilations())
        ) != len(self.annihilations()):
            raise ValueError("repeated index within an excitation")

    def creations(self):
        return self.indices[:1] if self.kind == "single" else self.indices[:2]

    def annihilations(self):
        return self.indices[1:] if self.kind == "single" else self.indices[2:]

    @property
    def name(self):
        return f"{self.kind[0]}_" + "_".join(str(i) for i in self.indices)

    def sort_key(self):
        return (0 if self.kind == "single" else 1, self.indices)

    def conserves_spin(self):
        return sum(spin_of(i) for i in self.creations()) == sum(
            spin_of(i) for i in self.annihilations()
        )

    def term(self, amplitude=1.0):
        """amplitude * a+... a... as a FermionTerm."""
        ops = tuple(LadderOp(i, True) for i in self.creations()) + tuple(
            LadderOp(i, False) for i in self.annihilations()
        )
        return FermionTerm(amplitude, ops)

    def __str__(self):
        return self.name


@dataclass(slots=True)
class ParameterSet:
    """Ordered parameter names with values; unset names read as 0."""

    names: tuple = ()
    values: dict = field(default_factory=dict)

    def get(self, name):
        return self.values.get(name, 0.0)

    def to_vector(self):
        return np.array([self.get(n) for n in self.names], dtype=float)

    def with_vector(self, vector):
        vector = np.asarray(vector, dtype=float)
        if vector.shape != (len(self.names),):
            raise ValueError("parameter vector length mismatch")
        return ParameterSet(self.names, dict(zip(self.names, vector.tolist())))

    def extended(self, name, value=0.0):
        if name in self.names:
            raise ValueError(f"duplicate parameter {name!r}")
        values = dict(self.values)
        values[name] = value
        return ParameterSet(self.names + (name,), values)


@dataclass(slots=True)
class ClusterOperator:
    """An ordered excitation list with its parameter values."""

    n_modes: int
    terms: list
    values: ParameterSet

    def amplitudes(self):
        return [self.values.get(seq.name) for seq in self.terms]


@dataclass(slots=True)
class FockData:
    """Orbital energies and the reference-energy bookkeeping built on them."""

    orbital_energies: dict
    n_electrons: int

    @property
    def reference_sum(self):
        return sum(self.orbital_energies[i] for i in range(self.n_electrons))

    def denominator(self, seq: OrbitalSequence):
        """Sum of annihilated orbital energies minus created ones.

        Negative for excitations out of the reference into higher orbitals;
        this is the perturbation-theory energy denominator for the excitation.
        """
        out = sum(self.orbital_energies[i] for i in seq.annihilations())
        out -= sum(self.orbital_energies[i] for i in seq.creations())
        return out


def uccsd_pool(occ, virt, spin_conserving=True):
    """All singles and doubles from occ into virt, in canonical order."""
    occ = sorted(occ)
    virt = sorted(virt)
    if set(occ) & set(virt):
        raise ValueError("occupied and virtual index sets overlap")
    pool = []
    for r in occ:
        for p in virt:
            seq = OrbitalSequence("single", (p, r))
            if not spin_conserving or seq.conserves_spin():
                pool.append(seq)
    for ai, r in enumerate(occ):
        for s in occ[ai + 1 :]:
            for ci, p in enumerate(virt):
                for q in virt[ci + 1 :]:
                    seq = OrbitalSequence("double", (p, q, r, s))
                    if not spin_conserving or seq.conserves_spin():
                        pool.append(seq)
    pool.sort(key=OrbitalSequence.sort_key)
    return pool


def build_uccsd(occ, virt, selected, params: ParameterSet, n_modes=None):
    """Anti-Hermitian cluster operator sum_a t_a (T_a - T_a+)."""
    occ = set(occ)
    virt = set(virt)
    if occ & virt:
        raise ValueError("occupied and virtual index sets overlap")
    if n_modes is None:
        n_modes = max(occ | virt, default=-1) + 1
    seen = set()
    terms = []
    for seq in selected:
        if seq in seen:
            raise ValueError(f"duplicate excitation {seq}")
        seen.add(seq)
        if not set(seq.creations()) <= virt or not set(seq.annihilations()) <= occ:
            raise ValueError(
                f"excitation {seq} is not an occ→virt substitution for the given sets"
            )
        t = params.get(seq.name)
        fwd = seq.term(t)
        rev = fwd.adjoint()
        terms.append(fwd)
        terms.append(FermionTerm(-rev.coefficient, rev.ops))
    return FermionOperator(n_modes, terms)


def excitation_generator(seq: OrbitalSequence, n_modes) -> FermionOperator:
    """T - T+ for a single excitation with unit amplitude."""
    fwd = seq.term(1.0)
    rev = fwd.adjoint()
    return FermionOperator(n_modes, [fwd, FermionTerm(-rev.coefficient, rev.ops)])


# ---------------------------------------------------------------------------
# anticommutation report
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class AnticommutationReport:
    n_modes: int
    ok: bool
    violations: list

    def __str__(self):
        if self.ok:
            return f"all canonical anticommutation relations hold on {self.n_modes} modes"
        lines = [f"{len(self.violations)} violations on {self.n_modes} modes:"]
        lines += [f"  {rel} ({i},{j}): deviation {dev:.3e}" for rel, i, j, dev in self.violations]
        return "\n".join(lines)


def anticommutation_check(n_modes, transform, tol=1e-10):
    """Dense check of the canonical anticommutation relations under a transform."""
    if n_modes > 6:
        raise ValueError("dense anticommutation check supports at most 6 modes")
    if transform.n_modes != n_modes:
        raise ValueError("transform mode count mismatch")
    from .paulis import apply_sum

    dim = 1 << n_modes
    eye = np.eye(dim)

    def dense(mode, dagger):
        op = transform.map_ladder(mode, dagger)
        m = np.empty((dim, dim), dtype=complex)
        for col in range(dim):
            e = np.zeros(dim, dtype=complex)
            e[col] = 1.0
            m[:, col] = apply_sum(op, e)
        return m

    a = [dense(j, False) for j in range(n_modes)]
    ad = [dense(j, True) for j in range(n_modes)]
    violations = []
    for i in range(n_modes):
        for j in range(i, n_modes):
            dev = np.abs(a[i] @ a[j] + a[j] @ a[i]).max()
            if dev > tol:
                violations.append(("{a,a}", i, j, float(dev)))
            dev = np.abs(ad[i] @ ad[j] + ad[j] @ ad[i]).max()
            if dev > tol:
                violations.append(("{a+,a+}", i, j, float(dev)))
    for i in range(n_modes):
        for j in range(n_modes):
            anti = a[i] @ ad[j] + ad[j] @ a[i]
            want = eye if i == j else 0.0
            dev = np.abs(anti - want).max()
            if dev > tol:
                violations.append(("{a,a+}", i, j, float(dev)))
    return AnticommutationReport(n_modes, not violations, violations)
