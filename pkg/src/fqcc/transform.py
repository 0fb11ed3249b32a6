"""Linear-encoding fermion-to-qubit transforms.

A transform is parameterized by an invertible binary matrix beta that maps
occupation vectors to code vectors, x -> beta x over GF(2).  Mode i is row i;
beta is unit lower triangular in this (logical) ordering, so the free bits
sit strictly below the diagonal.  Jordan-Wigner is beta = identity and the
Fenwick-tree choice of beta reproduces the Bravyi-Kitaev transform.

Ladder operators map to two-string Pauli sums whose supports are read off
three derived index sets per mode j:

* update set U(j): rows i != j with beta[i, j] = 1 (X support above j),
* parity set P(j): nonzero columns of row j of pi beta^-1 xor beta^-1,
* remainder set R(j): nonzero columns of row j of pi beta^-1,

where pi is the inclusive lower-triangular parity accumulator.
"""

from __future__ import annotations

import numpy as np

from .circuits import Circuit
from .paulis import PauliString, PauliSum


def _gf2_inv(a):
    a = np.array(a, dtype=np.uint8) & 1
    n = a.shape[0]
    aug = np.concatenate([a, np.eye(n, dtype=np.uint8)], axis=1)
    for c in range(n):
        pivot = next((r for r in range(c, n) if aug[r, c]), None)
        if pivot is None:
            raise ValueError("beta is singular over GF(2)")
        if pivot != c:
            aug[[c, pivot]] = aug[[pivot, c]]
        for r in range(n):
            if r != c and aug[r, c]:
                aug[r] ^= aug[c]
    return aug[:, n:]


class Transform:
    """A beta-parameterized encoding with its derived ladder-operator sets."""

    def __init__(self, beta):
        beta = np.array(beta, dtype=np.uint8)
        if beta.ndim != 2 or beta.shape[0] != beta.shape[1]:
            raise ValueError("beta must be square")
        if not np.isin(beta, (0, 1)).all():
            raise ValueError("beta must be a 0/1 matrix")
        n = beta.shape[0]
        if not (np.diag(beta) == 1).all():
            raise ValueError("beta must have a unit diagonal")
        if np.triu(beta, 1).any():
            raise ValueError("beta must be lower triangular in logical mode order")
        self.beta = beta
        self.n_modes = n
        self.beta_inv = _gf2_inv(beta)
        pi = np.tril(np.ones((n, n), dtype=np.uint8))
        m_r = (pi @ self.beta_inv) & 1
        m_p = m_r ^ self.beta_inv
        self._m_r = m_r
        self._m_p = m_p
        self._update = [tuple(i for i in range(n) if i != j and beta[i, j]) for j in range(n)]
        self._parity = [tuple(k for k in range(n) if k != j and m_p[j, k]) for j in range(n)]
        self._remainder = [tuple(k for k in range(n) if k != j and m_r[j, k]) for j in range(n)]

    # -- constructors --------------------------------------------------------

    @classmethod
    def jordan_wigner(cls, n_modes):
        return cls(np.eye(n_modes, dtype=np.uint8))

    @classmethod
    def bravyi_kitaev(cls, n_modes):
        beta = np.zeros((n_modes, n_modes), dtype=np.uint8)
        for j in range(n_modes):
            low = j - ((j + 1) & -(j + 1)) + 1
            beta[j, max(low, 0) : j + 1] = 1
        return cls(beta)

    @classmethod
    def from_lower_bits(cls, n_modes, bits):
        """Build from the n(n-1)/2 strictly-lower bits, row-major (i, j<i)."""
        bits = list(bits)
        if len(bits) != n_modes * (n_modes - 1) // 2:
            raise ValueError("wrong number of free bits")
        beta = np.eye(n_modes, dtype=np.uint8)
        k = 0
        for i in range(n_modes):
            for j in range(i):
                beta[i, j] = 1 if bits[k] else 0
                k += 1
        return cls(beta)

    def lower_bits(self):
        return tuple(int(self.beta[i, j]) for i in range(self.n_modes) for j in range(i))

    def encode_occupation(self, occupation_mask):
        """Computational-basis index encoding an occupation bitmask (x = beta n)."""
        n = self.n_modes
        if not 0 <= occupation_mask < (1 << n):
            raise ValueError("occupation mask out of range for this transform")
        bits = np.array([occupation_mask >> k & 1 for k in range(n)], dtype=np.uint8)
        code = (self.beta @ bits) & 1
        return int(sum(int(b) << i for i, b in enumerate(code)))

    # -- derived sets ---------------------------------------------------------

    def update_set(self, j):
        return self._update[j]

    def parity_set(self, j):
        return self._parity[j]

    def remainder_set(self, j):
        return self._remainder[j]

    # -- ladder operators ------------------------------------------------------

    def map_ladder(self, mode, dagger):
        """PauliSum of a_mode or its adjoint under this encoding."""
        n = self.n_modes
        if not 0 <= mode < n:
            raise ValueError(f"mode {mode} out of range")
        xmask = 1 << mode
        for i in self._update[mode]:
            xmask |= 1 << i
        zp = 0
        for k in self._parity[mode]:
            zp |= 1 << k
        zr = 1 << mode
        for k in self._remainder[mode]:
            zr |= 1 << k
        sign = -1.0j if dagger else 1.0j
        return PauliSum(
            n,
            {
                (xmask, zp): 0.5 + 0.0j,
                (xmask, zr): 0.5 * sign,
            },
        )

    def creation(self, mode):
        return self.map_ladder(mode, True)

    def annihilation(self, mode):
        return self.map_ladder(mode, False)

    def map_operator(self, terms, constant=0.0):
        """Map [(coeff, ((mode, dagger), ...)), ...] to a PauliSum."""
        out = PauliSum.zero(self.n_modes)
        if constant:
            out = out + PauliSum.identity(self.n_modes, constant)
        for coeff, ops in terms:
            prod = PauliSum.identity(self.n_modes, complex(coeff))
            for mode, dagger in ops:
                prod = prod * self.map_ladder(mode, dagger)
            out = out + prod
        return out.simplify()

    # -- encoding circuit --------------------------------------------------------

    def basis_circuit(self):
        """CNOT network B with B|x> = |beta x> on computational basis states.

        Rows are processed from the top mode down so that every source wire
        still carries its original bit when it is read.
        """
        circ = Circuit(self.n_modes)
        for i in range(self.n_modes - 1, 0, -1):
            for j in range(i):
                if self.beta[i, j]:
                    circ.add("CNOT", j, i)
        return circ

    def encode_vector(self, bits):
        """beta @ bits over GF(2); bits and result are little-endian ints."""
        x = np.array([(bits >> k) & 1 for k in range(self.n_modes)], dtype=np.uint8)
        y = (self.beta @ x) & 1
        return int(sum(int(b) << k for k, b in enumerate(y)))

    # -- beta file format ------------------------------------------------------

    def to_beta_text(self):
        """Serialize in printed orientation: top mode first, free bits upper."""
        n = self.n_modes
        lines = [str(n)]
        for printed_row in range(n):
            i = n - 1 - printed_row
            bits = [str(int(self.beta[i, n - 1 - pc])) for pc in range(printed_row + 1, n)]
            lines.append("".join(bits))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_beta_text(cls, text):
        lines = [ln.rstrip("\n") for ln in text.splitlines()]
        if not lines:
            raise ValueError("empty beta file")
        try:
            n = int(lines[0].strip())
        except ValueError as exc:
            raise ValueError("first line of a beta file must be the mode count") from exc
        rows = lines[1 : 1 + n]
        if len(rows) < n:
            raise ValueError(f"expected {n} triangle rows, found {len(rows)}")
        beta = np.eye(n, dtype=np.uint8)
        for printed_row, row in enumerate(rows):
            want = n - 1 - printed_row
            row = row.strip()
            if len(row) != want:
                raise ValueError(
                    f"triangle row {printed_row} must have {want} bits, found {len(row)}"
                )
            i = n - 1 - printed_row
            for offset, ch in enumerate(row):
                if ch not in "01":
                    raise ValueError(f"bad bit {ch!r} in beta file")
                j = n - 1 - (printed_row + 1 + offset)
                beta[i, j] = ch == "1"
        return cls(beta)


def by_name(name, n_modes):
    if name == "jw":
        return Transform.jordan_wigner(n_modes)
    if name == "bk":
        return Transform.bravyi_kitaev(n_modes)
    raise ValueError(f"unknown transform {name!r}")
