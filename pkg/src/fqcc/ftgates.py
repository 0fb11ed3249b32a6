"""Clifford+T couplers for excitation terms, with exact resource accounting.

The two-body coupler rotates between the two computational basis states in
which either both raised wires or both lowered wires are occupied.  A
three-gate CNOT prefix rewires those two states so that they differ only on
a single target wire while every other involved wire reads 1; a
triply-controlled X-rotation applies the coupling inside that all-ones
sector, and the mirrored suffix restores the original frame.  Because the
prefix is a linear bijection, no other basis state reaches the all-ones
control pattern, so the construction is exact, not just exact on the coupled
pair.

The triply-controlled rotation is assembled from relative-phase Toffolis
(:func:`rel_phase_toffoli3`): each costs 8 T gates and 6 CNOTs instead of
the full Toffoli budget, and the relative phases cancel identically because
everything conjugated between a relative-phase Toffoli and its inverse is
diagonal.  Two core layouts are provided.  The serial layout splits the
rotation into two half-angle Rz gates on the target wire (rotation depth 2,
no ancilla); the depth-optimized layout lands the two half-angle rotations
on the target and an ancilla in a single layer (rotation depth 1, one
ancilla that enters and leaves in |0>).

:func:`weight_sum_accounting` prices the alternative strategy that sums k
equal-angle phase flags into a binary weight register with full/half adders
so only ceil(log2(k+1)) rotations remain; it is accounting only, no circuit
is emitted.
"""

from __future__ import annotations

from dataclasses import dataclass

from .circuits import Circuit, Gate, expand_toffolis, metrics

__all__ = [
    "PLUS", "MINUS", "ZCHAIN",
    "RoleAssignment", "FTResourceReport",
    "ft_two_body", "ft_single_body", "ft_two_body_with_z",
    "rel_phase_toffoli3", "weight_sum_accounting",
    "prefix_linear_functions", "format_linear_form",
]

PLUS = "+"
MINUS = "-"
ZCHAIN = "z"
_ROLE_CHARS = (PLUS, MINUS, ZCHAIN)


@dataclass(frozen=True, slots=True)
class RoleAssignment:
    """Per-wire roles of a coupler: raised ``+``, lowered ``-``, or ``z``.

    A ``z`` wire contributes a sign to the rotation (phase tracking along a
    parity chain) but carries no excitation.
    """

    roles: tuple[str, ...]

    def __post_init__(self):
        if not self.roles:
            raise ValueError("empty role assignment")
        for r in self.roles:
            if r not in _ROLE_CHARS:
                raise ValueError(f"unknown role {r!r}; expected one of {_ROLE_CHARS}")

    @classmethod
    def from_string(cls, text: str) -> "RoleAssignment":
        """Parse a compact role string such as ``"++--"`` or ``"+z+--"``."""
        return cls(tuple(text))

    @property
    def plus(self) -> tuple[int, ...]:
        return tuple(i for i, r in enumerate(self.roles) if r == PLUS)

    @property
    def minus(self) -> tuple[int, ...]:
        return tuple(i for i, r in enumerate(self.roles) if r == MINUS)

    @property
    def zchain(self) -> tuple[int, ...]:
        return tuple(i for i, r in enumerate(self.roles) if r == ZCHAIN)

    def __len__(self):
        return len(self.roles)

    def __str__(self):
        return "".join(self.roles)


@dataclass(frozen=True, slots=True)
class FTResourceReport:
    """Resource totals of a coupler variant.

    When the variant emits a circuit, the report equals ``metrics()`` of
    that circuit's expanded gate list.  ``extrapolated`` marks accounting
    rows computed from the adder-count model rather than read off a pinned
    construction.
    """

    t_count: int
    rz_count: int
    rz_depth: int
    ancilla_count: int
    variant: str
    extrapolated: bool = False


def _report(circ: Circuit, variant: str) -> FTResourceReport:
    m = metrics(circ)
    return FTResourceReport(m.t_count, m.rz_count, m.rz_depth, m.ancilla_count, variant)


def _as_roles(roles) -> RoleAssignment:
    if isinstance(roles, RoleAssignment):
        return roles
    if isinstance(roles, str):
        return RoleAssignment.from_string(roles)
    return RoleAssignment(tuple(roles))


def _two_body_wires(roles: RoleAssignment, allow_z: bool):
    """Split a role assignment into (target, paired_plus, minus0, minus1, z)."""
    plus, minus, z = roles.plus, roles.minus, roles.zchain
    if len(plus) != 2 or len(minus) != 2:
        raise ValueError(
            f"two-body roles need exactly two '+' and two '-', got {roles}"
        )
    if z and not allow_z:
        raise ValueError(f"'z' roles are not valid here, got {roles}")
    return plus[0], plus[1], minus[0], minus[1], z


def _two_body_prefix(roles: RoleAssignment) -> list[Gate]:
    """CNOTs sending the two coupled states to |target=0/1, rest=1>.

    With the target t on the first raised wire, the paired raised wire p is
    overwritten with p XOR m0 (reads 1 in both coupled states) and each
    lowered wire m with m XOR t (likewise 1 in both).  The network is its
    own mirror image, so the suffix is the same list reversed.
    """
    t, p, m0, m1, _ = _two_body_wires(roles, allow_z=True)
    return [Gate("CNOT", (m0, p)), Gate("CNOT", (t, m0)), Gate("CNOT", (t, m1))]


def _ccc_rx_serial(circ: Circuit, controls, target, theta):
    """Triply-controlled Rx(theta): two sequential half-angle Rz gates."""
    c0, c1, c2 = controls
    circ.add("H", target)
    circ.add("RelPhaseToffoli3", c0, c1, c2, target)
    circ.add("Rz", target, theta=-0.5 * theta)
    circ.add("RelPhaseToffoli3Inverse", c0, c1, c2, target)
    circ.add("Rz", target, theta=0.5 * theta)
    circ.add("H", target)


def _ccc_rx_ancilla(circ: Circuit, controls, target, ancilla, theta):
    """Triply-controlled Rx(theta): both half-angle Rz gates in one layer.

    The control pattern is copied onto the ancilla, the target is XORed in,
    and opposite half-angle rotations on target and ancilla then cancel
    unless the controls read all ones.
    """
    c0, c1, c2 = controls
    circ.add("H", target)
    circ.add("RelPhaseToffoli3", c0, c1, c2, ancilla)
    circ.add("CNOT", target, ancilla)
    circ.add("Rz", target, theta=0.5 * theta)
    circ.add("Rz", ancilla, theta=-0.5 * theta)
    circ.add("CNOT", target, ancilla)
    circ.add("RelPhaseToffoli3Inverse", c0, c1, c2, ancilla)
    circ.add("H", target)


def ft_two_body(theta: float, roles, depth_optimized: bool = True):
    """Coupler exp(-i theta/2 (raise.raise.lower.lower + h.c.)) on 4 wires.

    Parameters
    ----------
    theta : float
        Rotation angle.
    roles : RoleAssignment | str
        Exactly two ``+`` and two ``-`` roles; no ``z`` wires here.
    depth_optimized : bool
        True lands both Rz gates in one layer using one ancilla; False
        emits the serial ancilla-free form with rotation depth 2.

    Returns
    -------
    (Circuit, FTResourceReport)
        16 T + 2 Rz in both variants; the ancilla enters and leaves |0>.
    """
    roles = _as_roles(roles)
    t, p, m0, m1, z = _two_body_wires(roles, allow_z=False)
    prefix = _two_body_prefix(roles)
    controls = tuple(sorted((p, m0, m1)))
    circ = Circuit(4, 1 if depth_optimized else 0)
    circ.extend(prefix)
    if depth_optimized:
        _ccc_rx_ancilla(circ, controls, t, 4, theta)
        variant = "two_body_depth_optimized"
    else:
        _ccc_rx_serial(circ, controls, t, theta)
        variant = "two_body_serial"
    circ.extend(reversed(prefix))
    return circ, _report(circ, variant)


def ft_single_body(theta: float):
    """Coupler exp(-i theta/2 (raise.lower + h.c.)) on wires (+, -) = (0, 1).

    Nine columns of one-qubit Cliffords and two CNOTs place the two Rz
    gates in a single layer with no ancilla.

    Returns
    -------
    (Circuit, FTResourceReport)
        Report is {T: 0, Rz: 2, rz_depth: 1, ancilla: 0}.
    """
    circ = Circuit(2)
    circ.add("Sdg", 0).add("H", 1)
    circ.add("CNOT", 1, 0)
    circ.add("S", 0).add("Sdg", 1)
    circ.add("H", 0).add("H", 1)
    circ.add("Rz", 0, theta=0.5 * theta)
    circ.add("Rz", 1, theta=-0.5 * theta)
    circ.add("H", 0).add("H", 1)
    circ.add("Sdg", 0).add("S", 1)
    circ.add("CNOT", 1, 0)
    circ.add("S", 0).add("H", 1)
    return circ, _report(circ, "single_body")


def ft_two_body_with_z(theta: float, roles, depth_optimized: bool = True):
    """Two-body coupler with extra sign wires: generator gains a Z per ``z``.

    Each ``z`` wire contributes CZ(z, target) on both sides of the
    controlled-rotation core, flipping the effective rotation sign whenever
    an odd number of ``z`` wires read 1.  With no ``z`` wires this is
    exactly :func:`ft_two_body`.
    """
    roles = _as_roles(roles)
    t, p, m0, m1, z = _two_body_wires(roles, allow_z=True)
    if not z:
        return ft_two_body(theta, roles, depth_optimized)
    prefix = _two_body_prefix(roles)
    controls = tuple(sorted((p, m0, m1)))
    n = len(roles)
    circ = Circuit(n, 1 if depth_optimized else 0)
    circ.extend(prefix)
    for w in z:
        circ.add("CZ", w, t)
    if depth_optimized:
        _ccc_rx_ancilla(circ, controls, t, n, theta)
        variant = "two_body_with_z_depth_optimized"
    else:
        _ccc_rx_serial(circ, controls, t, theta)
        variant = "two_body_with_z_serial"
    for w in reversed(z):
        circ.add("CZ", w, t)
    circ.extend(reversed(prefix))
    return circ, _report(circ, variant)


def rel_phase_toffoli3() -> Circuit:
    """The 8-T, 6-CNOT relative-phase triply-controlled X on wires (0,1,2;3).

    Acts as a triply-controlled NOT up to a diagonal of relative phases;
    conjugating any diagonal core with this gate and its inverse therefore
    realizes exact triple control.
    """
    circ = Circuit(4)
    circ.add("RelPhaseToffoli3", 0, 1, 2, 3)
    return expand_toffolis(circ)


def weight_sum_accounting(count: int) -> FTResourceReport:
    """Price applying ``count`` equal-angle Rz gates via a binary weight sum.

    Summing the ``count`` phase flags into a ceil(log2(count+1))-bit
    register with full and half adders leaves one Rz per register bit, all
    in one layer.  Each full adder costs one relative-phase Toffoli (8 T);
    half adders are Clifford.  Register bits plus adder workspace account
    for the ancillas.  When the register would need at least as many bits
    as there are flags the trick saves nothing and the naive parallel
    application is reported instead.

    Accounting only; no circuit is emitted.  Counts other than the pinned
    rows (8 flags, and the 2-flag naive case) are flagged as extrapolated.
    """
    if count < 1:
        raise ValueError(f"need at least one rotation, got {count}")
    bits = count.bit_length()  # == ceil(log2(count + 1))
    if bits >= count:
        return FTResourceReport(
            t_count=0, rz_count=count, rz_depth=1, ancilla_count=0,
            variant="naive_parallel", extrapolated=count != 2,
        )
    full_adders = count - bits
    return FTResourceReport(
        t_count=8 * full_adders,
        rz_count=bits,
        rz_depth=1,
        ancilla_count=(count - 1) + bits,
        variant="weight_sum",
        extrapolated=count != 8,
    )


def prefix_linear_functions(circ: Circuit) -> tuple[int, ...]:
    """GF(2) linear form computed on each wire of a CNOT-only circuit.

    Returns one bitmask per wire: bit j set in ``masks[i]`` means input j
    enters the XOR on output wire i.  Raises ValueError on any non-CNOT
    gate.  Used to check coupler prefixes and to find wires a core gate
    leaves invariant.
    """
    masks = [1 << i for i in range(circ.n_qubits)]
    for g in circ.gates:
        if g.kind != "CNOT":
            raise ValueError(f"linear analysis needs a CNOT-only circuit, found {g.kind}")
        c, t = g.qubits
        masks[t] ^= masks[c]
    return tuple(masks)


def format_linear_form(mask: int, n_wires: int) -> str:
    """Render a GF(2) form bitmask as e.g. ``a^c`` (wire letters a, b, ...)."""
    if mask == 0:
        return "0"
    names = [
        (chr(ord("a") + i) if n_wires <= 26 else f"w{i}")
        for i in range(n_wires)
    ]
    return "^".join(names[i] for i in range(n_wires) if mask >> i & 1)
