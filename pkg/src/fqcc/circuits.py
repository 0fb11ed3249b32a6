"""Circuit IR, resource metrics, dense unitaries and a peephole optimizer.

Gates act on wires numbered 0..n_data+n_ancilla-1; ancilla wires are the
highest indices and must enter and leave every circuit in |0>.  A circuit
carries an explicit ``global_phase`` so that rewrites which trade gates for
phases still preserve the unitary exactly.

The peephole pass removes commuting inverse pairs, merges rotations, and
rewrites a two-CNOT conjugation sandwich ``CNOT (v,t) . G(v) . CNOT (v,t)``
into a single-CNOT form whenever the sandwiched one-qubit product G is an
X-rotation up to Z-rotations (an Euler angle phi = +-pi/2), which is exactly
the situation arising between adjacent exponential blocks that share wires.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

GATE_KINDS = {
    "H", "S", "Sdg", "T", "Tdg", "X", "Z", "Rz", "Rx", "CNOT", "CZ",
    "RelPhaseToffoli3", "RelPhaseToffoli3Inverse",
}
_ROTATIONS = {"Rz", "Rx"}
_TWO_QUBIT = {"CNOT", "CZ"}
_INVERSE = {
    "H": "H", "X": "X", "Z": "Z", "CNOT": "CNOT", "CZ": "CZ",
    "S": "Sdg", "Sdg": "S", "T": "Tdg", "Tdg": "T",
    "RelPhaseToffoli3": "RelPhaseToffoli3Inverse",
    "RelPhaseToffoli3Inverse": "RelPhaseToffoli3",
}
_ARITY = {"CNOT": 2, "CZ": 2, "RelPhaseToffoli3": 4, "RelPhaseToffoli3Inverse": 4}

_SQRT2 = math.sqrt(2.0)
_MAT_1Q = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / _SQRT2,
    "S": np.diag([1.0, 1.0j]),
    "Sdg": np.diag([1.0, -1.0j]),
    "T": np.diag([1.0, np.exp(0.25j * np.pi)]),
    "Tdg": np.diag([1.0, np.exp(-0.25j * np.pi)]),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Z": np.diag([1.0, -1.0]).astype(complex),
}


def _rot_matrix(kind, theta):
    if kind == "Rz":
        return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])
    c, s = math.cos(theta / 2.0), math.sin(theta / 2.0)
    return np.array([[c, -1j * s], [-1j * s, c]])


@dataclass(frozen=True, slots=True)
class Gate:
    kind: str
    qubits: tuple[int, ...]
    theta: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        want = _ARITY.get(self.kind, 1)
        if len(self.qubits) != want:
            raise ValueError(f"{self.kind} takes {want} wires, got {self.qubits}")
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError(f"repeated wire in {self.kind} {self.qubits}")
        if (self.theta is None) == (self.kind in _ROTATIONS):
            raise ValueError(f"theta mismatch for {self.kind}")

    @property
    def is_two_qubit(self):
        return self.kind in _TWO_QUBIT

    def inverse(self):
        if self.kind in _ROTATIONS:
            return Gate(self.kind, self.qubits, -self.theta)
        return Gate(_INVERSE[self.kind], self.qubits)

    def matrix_1q(self):
        if self.kind in _ROTATIONS:
            return _rot_matrix(self.kind, self.theta)
        return _MAT_1Q[self.kind]


# Fig.-style relative-phase triply-controlled X: 8 T gates, 6 CNOTs, all on
# the target wire.  Controls pick up relative phases only; conjugating a
# diagonal core with the gate and its inverse cancels them exactly.
def _rpt3_body(c0, c1, c2, t, inverse=False):
    seq = [
        Gate("H", (t,)), Gate("T", (t,)), Gate("CNOT", (c2, t)), Gate("Tdg", (t,)), Gate("H", (t,)),
        Gate("CNOT", (c0, t)), Gate("T", (t,)), Gate("CNOT", (c1, t)), Gate("Tdg", (t,)),
        Gate("CNOT", (c0, t)), Gate("T", (t,)), Gate("CNOT", (c1, t)), Gate("Tdg", (t,)),
        Gate("H", (t,)), Gate("T", (t,)), Gate("CNOT", (c2, t)), Gate("Tdg", (t,)), Gate("H", (t,)),
    ]
    if inverse:
        seq = [g.inverse() for g in reversed(seq)]
    return seq


@dataclass
class Circuit:
    n_data: int
    n_ancilla: int = 0
    gates: list[Gate] = field(default_factory=list)
    global_phase: complex = 1.0

    @property
    def n_qubits(self):
        return self.n_data + self.n_ancilla

    def add(self, kind, *qubits, theta=None):
        g = Gate(kind, tuple(qubits), theta)
        if any(q < 0 or q >= self.n_qubits for q in qubits):
            raise ValueError(f"wire out of range in {g}")
        self.gates.append(g)
        return self

    def extend(self, gates):
        for g in gates:
            self.add(g.kind, *g.qubits, theta=g.theta)
        return self

    def copy(self):
        return Circuit(self.n_data, self.n_ancilla, list(self.gates), self.global_phase)

    def dagger(self):
        inv = [g.inverse() for g in reversed(self.gates)]
        return Circuit(self.n_data, self.n_ancilla, inv, np.conjugate(self.global_phase))

    # -- text format ---------------------------------------------------------

    def to_text(self):
        lines = [f"qubits {self.n_data} {self.n_ancilla}"]
        if self.global_phase != 1.0:
            lines.append(f"phase {self.global_phase.real!r} {self.global_phase.imag!r}")
        for g in self.gates:
            parts = [g.kind] + [str(q) for q in g.qubits]
            if g.theta is not None:
                parts.append(repr(g.theta))
            lines.append(" ".join(parts))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        n_data = n_ancilla = None
        phase = 1.0
        gates = []
        for ln, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "qubits":
                n_data, n_ancilla = int(parts[1]), int(parts[2])
                continue
            if parts[0] == "phase":
                phase = complex(float(parts[1]), float(parts[2]))
                continue
            kind = parts[0]
            if kind not in GATE_KINDS:
                raise ValueError(f"line {ln}: unknown gate {kind!r}")
            if kind in _ROTATIONS:
                qubits = tuple(int(p) for p in parts[1:-1])
                theta = float(parts[-1])
            else:
                qubits = tuple(int(p) for p in parts[1:])
                theta = None
            gates.append(Gate(kind, qubits, theta))
        if n_data is None:
            n_data = 1 + max((q for g in gates for q in g.qubits), default=0)
            n_ancilla = 0
        circ = cls(n_data, n_ancilla, [], phase)
        circ.extend(gates)
        return circ


def expand_toffolis(circ: Circuit) -> Circuit:
    out = Circuit(circ.n_data, circ.n_ancilla, [], circ.global_phase)
    for g in circ.gates:
        if g.kind == "RelPhaseToffoli3":
            out.gates.extend(_rpt3_body(*g.qubits))
        elif g.kind == "RelPhaseToffoli3Inverse":
            out.gates.extend(_rpt3_body(*g.qubits, inverse=True))
        else:
            out.gates.append(g)
    return out


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Metrics:
    two_qubit: int
    rz_count: int
    rz_depth: int
    t_count: int
    ancilla_count: int
    n_gates: int


def metrics(circ: Circuit, expand=True) -> Metrics:
    """Count resources; ``expand`` replaces composite Toffolis first.

    ``rz_count`` counts continuous-angle rotations (Rz/Rx), ``t_count``
    counts T/Tdg only, and ``rz_depth`` is the depth of the circuit counting
    only rotation layers under ASAP scheduling.
    """
    work = expand_toffolis(circ) if expand else circ
    two = rz = tc = 0
    level: dict[int, int] = {}
    depth = 0
    for g in work.gates:
        if g.kind in _TWO_QUBIT:
            two += 1
        elif g.kind in ("T", "Tdg"):
            tc += 1
        elif g.kind == "RelPhaseToffoli3" or g.kind == "RelPhaseToffoli3Inverse":
            two += 6
            tc += 8
        lvl = max((level.get(q, 0) for q in g.qubits), default=0)
        if g.kind in _ROTATIONS:
            rz += 1
            lvl += 1
        for q in g.qubits:
            level[q] = lvl
        depth = max(depth, lvl)
    return Metrics(two, rz, depth, tc, circ.n_ancilla, len(work.gates))


# ---------------------------------------------------------------------------
# dense unitaries
# ---------------------------------------------------------------------------


def _apply_dense(mat, gate: Gate, n):
    idx = np.arange(1 << n)
    if gate.kind == "CNOT":
        c, t = gate.qubits
        sel = (idx >> c & 1).astype(bool)
        mat[idx[sel]] = mat[idx[sel] ^ (1 << t)]
        return mat
    if gate.kind == "CZ":
        a, b = gate.qubits
        sel = ((idx >> a & 1) & (idx >> b & 1)).astype(bool)
        mat[sel] *= -1.0
        return mat
    (q,) = gate.qubits
    g = gate.matrix_1q()
    sel = (idx >> q & 1).astype(bool)
    lo = mat[~sel]
    hi = mat[sel]
    mat[~sel] = g[0, 0] * lo + g[0, 1] * hi
    mat[sel] = g[1, 0] * lo + g[1, 1] * hi
    return mat


def unitary(circ: Circuit) -> np.ndarray:
    """Dense unitary on all wires (data + ancilla); capped at 12 qubits."""
    n = circ.n_qubits
    if n > 12:
        raise ValueError("dense unitary is limited to 12 qubits")
    work = expand_toffolis(circ)
    u = np.eye(1 << n, dtype=complex) * work.global_phase
    for g in work.gates:
        u = _apply_dense(u, g, n)
    return u


def apply_to_state(circ: Circuit, vec: np.ndarray) -> np.ndarray:
    work = expand_toffolis(circ)
    out = np.array(vec, dtype=complex, copy=True) * work.global_phase
    out = out[:, None]
    for g in work.gates:
        out = _apply_dense(out, g, circ.n_qubits)
    return out[:, 0]


def data_block(u: np.ndarray, n_data: int, n_ancilla: int):
    """(block, leakage): the <0_anc|U|0_anc> block and the worst column leak.

    Ancillas are the high wires, so the |0_anc> block is the top-left corner.
    """
    d = 1 << n_data
    block = u[:d, :d]
    leak = 0.0 if n_ancilla == 0 else float(np.max(np.abs(u[d:, :d])))
    return block, leak


def equal_up_to_phase(a, b, tol=1e-10):
    ab = a.conj().T @ b
    lead = ab.flat[np.argmax(np.abs(ab))]
    if abs(abs(lead) - 1.0) > tol:
        return False
    return bool(np.allclose(ab, lead * np.eye(a.shape[0]), atol=tol))


# ---------------------------------------------------------------------------
# peephole pass
# ---------------------------------------------------------------------------

_DIAG = "diag"
_XTYPE = "xtype"
_OTHER = "other"

_X = _MAT_1Q["X"]


def _is_diag_mat(m, tol=1e-10):
    return abs(m[0, 1]) <= tol and abs(m[1, 0]) <= tol


def _is_xtype_mat(m, tol=1e-10):
    return bool(np.allclose(m @ _X, _X @ m, atol=tol))


def _wire_action(gate: Gate, q):
    if gate.kind == "CNOT":
        return _DIAG if q == gate.qubits[0] else _XTYPE
    if gate.kind == "CZ":
        return _DIAG
    if gate.kind in ("RelPhaseToffoli3", "RelPhaseToffoli3Inverse"):
        return _DIAG if q in gate.qubits[:3] else _OTHER
    return gate.matrix_1q()


def _actions_commute(a, b):
    a_mat = isinstance(a, np.ndarray)
    b_mat = isinstance(b, np.ndarray)
    if a_mat and b_mat:
        return bool(np.allclose(a @ b, b @ a, atol=1e-10))
    if a_mat:
        a, b = b, a
        a_mat, b_mat = b_mat, a_mat
    # now `a` is a tag
    if a == _OTHER:
        return False
    if b_mat:
        return _is_diag_mat(b) if a == _DIAG else _is_xtype_mat(b)
    if b == _OTHER:
        return False
    return a == b


def _gates_commute(g1: Gate, g2: Gate):
    shared = set(g1.qubits) & set(g2.qubits)
    return all(_actions_commute(_wire_action(g1, q), _wire_action(g2, q)) for q in shared)


def _norm_angle(theta):
    """Fold an Rz/Rx angle into (-pi, pi]; returns (angle, phase_factor)."""
    k = round(theta / (2.0 * math.pi))
    rem = theta - 2.0 * math.pi * k
    if rem <= -math.pi + 1e-12:
        rem += 2.0 * math.pi
        k -= 1
    return rem, (-1.0 + 0.0j) ** (k % 2)


def _emit_diag(angle, wire):
    """Gates realizing Rz(angle) exactly, Cliffordized at pi/2 multiples.

    Returns (gates, phase) with Rz(angle) = phase * product(gates).
    """
    rem, phase = _norm_angle(angle)
    if abs(rem) < 1e-12:
        return [], phase
    for target, kind, ph in (
        (math.pi / 2, "S", np.exp(-0.25j * math.pi)),
        (-math.pi / 2, "Sdg", np.exp(0.25j * math.pi)),
        (math.pi, "Z", np.exp(-0.5j * math.pi)),
    ):
        if abs(rem - target) < 1e-12:
            return [Gate(kind, (wire,))], phase * ph
    return [Gate("Rz", (wire,), rem)], phase


def _euler_zxz(g):
    """g = e^{i delta} Rz(alpha) Rx(phi) Rz(beta); matrix order, beta applied first."""
    a00, a01, a10, a11 = g[0, 0], g[0, 1], g[1, 0], g[1, 1]
    phi = 2.0 * math.atan2(abs(a01), abs(a00))
    ang = np.angle
    if abs(math.sin(phi / 2.0)) <= 1e-12:
        u0 = (ang(a11) - ang(a00)) / 2.0
        pairs = [(u, 0.0) for u in (u0, u0 + math.pi)]
    elif abs(math.cos(phi / 2.0)) <= 1e-12:
        w0 = (ang(a10) - ang(a01)) / 2.0
        pairs = [(0.0, w) for w in (w0, w0 + math.pi)]
    else:
        u0 = (ang(a11) - ang(a00)) / 2.0
        w0 = (ang(a10) - ang(a01)) / 2.0
        pairs = [(u, w) for u in (u0, u0 + math.pi) for w in (w0, w0 + math.pi)]
    for u, w in pairs:
        alpha, beta = u + w, u - w
        base = ang(a00) + u if abs(a00) > 1e-12 else ang(a10) - w + math.pi / 2.0
        for delta in (base, base + math.pi):
            rec = np.exp(1j * delta) * _rot_matrix("Rz", alpha) @ _rot_matrix("Rx", phi) @ _rot_matrix("Rz", beta)
            if np.allclose(rec, g, atol=1e-9):
                return delta, alpha, phi, beta
    raise ValueError("not unitary up to tolerance")


def _xx_half_gates(v, t, sign):
    """Gate list for exp(-i (sign*pi/2)/2 X_v X_t); returns (gates, phase)."""
    if sign > 0:
        gates = [
            Gate("H", (v,)), Gate("CNOT", (v, t)), Gate("S", (v,)), Gate("H", (v,)),
            Gate("H", (t,)), Gate("S", (t,)), Gate("H", (t,)),
        ]
        return gates, np.exp(-0.25j * math.pi)
    gates = [
        Gate("H", (t,)), Gate("Sdg", (t,)), Gate("H", (t,)),
        Gate("H", (v,)), Gate("Sdg", (v,)), Gate("CNOT", (v, t)), Gate("H", (v,)),
    ]
    return gates, np.exp(0.25j * math.pi)


class _PeepholeState:
    def __init__(self, gates, phase):
        self.gates = list(gates)
        self.phase = phase
        self.changed = False


def _simple_pass(st: _PeepholeState):
    i = 0
    while i < len(st.gates):
        g = st.gates[i]
        # drop/normalize null rotations
        if g.kind in _ROTATIONS:
            rem, ph = _norm_angle(g.theta)
            if abs(rem) < 1e-12:
                st.phase *= ph
                del st.gates[i]
                st.changed = True
                continue
            if ph != 1.0 or rem != g.theta:
                st.gates[i] = Gate(g.kind, g.qubits, rem)
                st.phase *= ph
                g = st.gates[i]
                st.changed = True
        j = i + 1
        matched = False
        while j < len(st.gates):
            h = st.gates[j]
            same_wires = h.qubits == g.qubits or (
                g.kind == "CZ" and h.kind == "CZ" and set(h.qubits) == set(g.qubits)
            )
            if same_wires and h.kind == g.kind and g.kind in _ROTATIONS:
                st.gates[i] = Gate(g.kind, g.qubits, g.theta + h.theta)
                del st.gates[j]
                st.changed = True
                matched = True
                break
            if same_wires and g.theta is None and h.kind == _INVERSE.get(g.kind):
                del st.gates[j]
                del st.gates[i]
                st.changed = True
                matched = True
                break
            if set(g.qubits) & set(h.qubits) and not _gates_commute(g, h):
                break
            j += 1
        if not matched:
            i += 1


def _flush_run(run, need):
    """Check a single-qubit run product against a commutation requirement."""
    if run is None:
        return True
    if need == _DIAG:
        return _is_diag_mat(run)
    return _is_xtype_mat(run)


def _junction_pass(st: _PeepholeState):
    i = 0
    while i < len(st.gates):
        g = st.gates[i]
        if g.kind != "CNOT":
            i += 1
            continue
        v, t = g.qubits
        v_run = np.eye(2, dtype=complex)
        v_clean = True  # no multi-qubit gate touched v inside the sandwich
        t_run = np.eye(2, dtype=complex)
        ok = True
        j = i + 1
        partner = -1
        v_single_idx = []
        while j < len(st.gates):
            h = st.gates[j]
            if h.kind == "CNOT" and h.qubits == (v, t):
                partner = j
                break
            hw = set(h.qubits)
            if len(hw) == 1:
                (q,) = hw
                if q == v:
                    v_run = h.matrix_1q() @ v_run
                    v_single_idx.append(j)
                elif q == t:
                    t_run = h.matrix_1q() @ t_run
                j += 1
                continue
            # a multi-qubit gate
            if t in hw:
                if not _is_xtype_mat(t_run):
                    ok = False
                    break
                t_run = np.eye(2, dtype=complex)
                if _wire_action(h, t) != _XTYPE:
                    ok = False
                    break
            if v in hw:
                if _wire_action(h, v) != _DIAG or not _is_diag_mat(v_run):
                    ok = False
                    break
                v_clean = False
                v_run = np.eye(2, dtype=complex)
                v_single_idx = []
            j += 1
        if partner < 0 or not ok or not _is_xtype_mat(t_run):
            i += 1
            continue
        if _is_diag_mat(v_run):
            # middle commutes with the CNOT entirely: the pair annihilates
            del st.gates[partner]
            del st.gates[i]
            st.changed = True
            continue
        if not v_clean:
            i += 1
            continue
        try:
            delta, alpha, phi, beta = _euler_zxz(v_run)
        except ValueError:
            i += 1
            continue
        if not (abs(abs(phi) - math.pi / 2.0) < 1e-9):
            i += 1
            continue
        middle = [st.gates[k] for k in range(i + 1, partner) if k not in v_single_idx]
        pre, ph_pre = _emit_diag(beta, v)
        xx, ph_xx = _xx_half_gates(v, t, 1.0 if phi > 0 else -1.0)
        post, ph_post = _emit_diag(alpha, v)
        st.phase *= np.exp(1j * delta) * ph_pre * ph_xx * ph_post
        st.gates[i : partner + 1] = middle + pre + xx + post
        st.changed = True
    return


def peephole_cancel(circ: Circuit, junction_rewrite=True) -> Circuit:
    """Fixpoint gate-cancellation pass; never increases the two-qubit count."""
    st = _PeepholeState(circ.gates, circ.global_phase)
    while True:
        st.changed = False
        _simple_pass(st)
        if junction_rewrite:
            _junction_pass(st)
        if not st.changed:
            break
    return Circuit(circ.n_data, circ.n_ancilla, st.gates, st.phase)
