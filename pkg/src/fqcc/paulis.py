"""Pauli-string algebra on integer bit masks.

A string is stored as a pair of masks: bit q of ``xmask`` / ``zmask`` says
whether the letter on qubit q has an X / Z component (X = 10, Z = 01,
Y = 11, I = 00).  Qubit 0 is the least significant bit of a basis index,
i.e. the rightmost tensor factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {v: k for k, v in _LETTER_BITS.items()}

COEFF_TOL = 1e-12


def _fmt_coeff(c: complex) -> str:
    if c.imag == 0.0:
        return repr(c.real)
    return repr(complex(c))


@dataclass(frozen=True, slots=True)
class PauliString:
    """One Pauli string with a complex coefficient."""

    n_qubits: int
    xmask: int
    zmask: int
    coeff: complex = 1.0

    @classmethod
    def from_letters(cls, n_qubits, letters, coeff=1.0):
        """Build from a {qubit: letter} mapping."""
        x = z = 0
        for q, letter in letters.items():
            if not 0 <= q < n_qubits:
                raise ValueError(f"qubit {q} out of range for {n_qubits} qubits")
            xb, zb = _LETTER_BITS[letter]
            x |= xb << q
            z |= zb << q
        return cls(n_qubits, x, z, complex(coeff))

    @classmethod
    def identity(cls, n_qubits, coeff=1.0):
        return cls(n_qubits, 0, 0, complex(coeff))

    @classmethod
    def from_text(cls, text, n_qubits=None):
        """Parse the ``coeff * X0 Z3 Y5`` format."""
        head, _, tail = text.partition("*")
        coeff = complex(head.strip().replace(" ", ""))
        letters = {}
        for tok in tail.split():
            if tok == "I":
                continue
            letter, q = tok[0].upper(), int(tok[1:])
            if letter not in "XYZ":
                raise ValueError(f"bad Pauli token {tok!r}")
            letters[q] = letter
        if n_qubits is None:
            n_qubits = max(letters, default=-1) + 1
        return cls.from_letters(max(n_qubits, 1), letters, coeff)

    # -- structure ---------------------------------------------------------

    @property
    def key(self):
        return (self.xmask, self.zmask)

    def letter(self, q):
        return _BITS_LETTER[(self.xmask >> q & 1, self.zmask >> q & 1)]

    def letters(self):
        """Support as a {qubit: letter} dict."""
        out = {}
        mask = self.xmask | self.zmask
        q = 0
        while mask:
            if mask & 1:
                out[q] = self.letter(q)
            mask >>= 1
            q += 1
        return out

    @property
    def support(self):
        return tuple(sorted(self.letters()))

    @property
    def weight(self):
        return (self.xmask | self.zmask).bit_count()

    def with_coeff(self, coeff):
        return PauliString(self.n_qubits, self.xmask, self.zmask, complex(coeff))

    # -- algebra -----------------------------------------------------------

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self.with_coeff(self.coeff * other)
        if self.n_qubits != other.n_qubits:
            raise ValueError("qubit-count mismatch")
        x1, z1, x2, z2 = self.xmask, self.zmask, other.xmask, other.zmask
        plus = ((x1 & ~z1) & (x2 & z2)) | ((x1 & z1) & (z2 & ~x2)) | ((z1 & ~x1) & (x2 & ~z2))
        minus = ((x1 & z1) & (x2 & ~z2)) | ((z1 & ~x1) & (x2 & z2)) | ((x1 & ~z1) & (z2 & ~x2))
        phase = 1j ** ((plus.bit_count() - minus.bit_count()) % 4)
        return PauliString(self.n_qubits, x1 ^ x2, z1 ^ z2, self.coeff * other.coeff * phase)

    __rmul__ = __mul__

    def dagger(self):
        # every Pauli string is Hermitian; only the coefficient conjugates
        return self.with_coeff(self.coeff.conjugate())

    def commutes_general(self, other):
        """True when the two strings commute as operators."""
        a = (self.xmask & other.zmask).bit_count() & 1
        b = (self.zmask & other.xmask).bit_count() & 1
        return a == b

    def commutes_qubitwise(self, other):
        """True when on every qubit the letters are equal or one is identity."""
        both = (self.xmask | self.zmask) & (other.xmask | other.zmask)
        differ = (self.xmask ^ other.xmask) | (self.zmask ^ other.zmask)
        return both & differ == 0

    # -- text --------------------------------------------------------------

    def to_text(self):
        letters = self.letters()
        if not letters:
            return f"{_fmt_coeff(self.coeff)} * I"
        body = " ".join(f"{letters[q]}{q}" for q in sorted(letters))
        return f"{_fmt_coeff(self.coeff)} * {body}"

    def __str__(self):
        return self.to_text()

    def sort_word(self):
        return "".join(self.letter(q) for q in range(self.n_qubits))


class PauliSum:
    """A complex-weighted sum of Pauli strings with canonical merging."""

    __slots__ = ("n_qubits", "_terms")

    def __init__(self, n_qubits, terms=None):
        self.n_qubits = n_qubits
        self._terms = dict(terms or {})

    @classmethod
    def from_strings(cls, strings, n_qubits=None):
        strings = list(strings)
        if n_qubits is None:
            if not strings:
                raise ValueError("cannot infer qubit count from no strings")
            n_qubits = strings[0].n_qubits
        out = cls(n_qubits)
        for s in strings:
            out._add_term(s.xmask, s.zmask, s.coeff)
        return out.simplify()

    @classmethod
    def zero(cls, n_qubits):
        return cls(n_qubits)

    @classmethod
    def identity(cls, n_qubits, coeff=1.0):
        return cls(n_qubits, {(0, 0): complex(coeff)})

    def _add_term(self, x, z, coeff):
        key = (x, z)
        c = self._terms.get(key, 0.0) + coeff
        if c == 0.0:
            self._terms.pop(key, None)
        else:
            self._terms[key] = c

    # -- container protocol --------------------------------------------------

    @property
    def n_terms(self):
        return len(self._terms)

    def coeff(self, x, z):
        return self._terms.get((x, z), 0.0)

    def strings(self):
        """Terms as PauliString objects in canonical (letter-word) order."""
        out = [PauliString(self.n_qubits, x, z, c) for (x, z), c in self._terms.items()]
        out.sort(key=lambda s: s.sort_word())
        return out

    def __iter__(self):
        return iter(self.strings())

    def __len__(self):
        return len(self._terms)

    # -- algebra -------------------------------------------------------------

    def _check(self, other):
        if self.n_qubits != other.n_qubits:
            raise ValueError("qubit-count mismatch")

    def __add__(self, other):
        if isinstance(other, PauliString):
            other = PauliSum.from_strings([other])
        self._check(other)
        out = PauliSum(self.n_qubits, self._terms)
        for (x, z), c in other._terms.items():
            out._add_term(x, z, c)
        return out.simplify()

    def __sub__(self, other):
        return self + (other * -1.0)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex)):
            return PauliSum(self.n_qubits, {k: c * other for k, c in self._terms.items()})
        if isinstance(other, PauliString):
            other = PauliSum.from_strings([other])
        self._check(other)
        out = PauliSum(self.n_qubits)
        for (x1, z1), c1 in self._terms.items():
            a = PauliString(self.n_qubits, x1, z1, c1)
            for (x2, z2), c2 in other._terms.items():
                p = a * PauliString(self.n_qubits, x2, z2, c2)
                out._add_term(p.xmask, p.zmask, p.coeff)
        return out.simplify()

    def __rmul__(self, other):
        if isinstance(other, (int, float, complex)):
            return self * other
        return NotImplemented

    def dagger(self):
        return PauliSum(self.n_qubits, {k: c.conjugate() for k, c in self._terms.items()})

    def simplify(self, tol=COEFF_TOL):
        self._terms = {k: c for k, c in self._terms.items() if abs(c) > tol}
        return self

    def norm1(self):
        return sum(abs(c) for c in self._terms.values())

    def is_hermitian(self, tol=1e-10):
        return all(abs(c.imag) <= tol for c in self._terms.values())

    # -- text ------------------------------------------------------------------

    def to_text(self):
        return "\n".join(s.to_text() for s in self.strings())

    @classmethod
    def from_text(cls, text, n_qubits=None):
        strings = [PauliString.from_text(line, n_qubits) for line in text.splitlines() if line.strip()]
        if n_qubits is None and strings:
            n_qubits = max(s.n_qubits for s in strings)
            strings = [PauliString(n_qubits, s.xmask, s.zmask, s.coeff) for s in strings]
        return cls.from_strings(strings, n_qubits)

    def __str__(self):
        return self.to_text()


# ---------------------------------------------------------------------------
# statevector kernels
# ---------------------------------------------------------------------------

_PARITY_LUT = None
_INDEX_CACHE: dict[int, np.ndarray] = {}


def _parity_lut():
    global _PARITY_LUT
    if _PARITY_LUT is None:
        lut = np.zeros(1 << 16, dtype=np.uint8)
        for i in range(1, 1 << 16):
            lut[i] = lut[i >> 1] ^ (i & 1)
        _PARITY_LUT = lut
    return _PARITY_LUT


def _indices(n_qubits):
    idx = _INDEX_CACHE.get(n_qubits)
    if idx is None:
        idx = np.arange(1 << n_qubits, dtype=np.int64)
        _INDEX_CACHE[n_qubits] = idx
    return idx


def _parity_of(arr):
    folded = arr
    if folded.dtype.itemsize * 8 > 32:
        folded = folded ^ (folded >> 32)
    folded = folded ^ (folded >> 16)
    return _parity_lut()[folded & 0xFFFF]


_GROUP_ENTRY_LIMIT = 1 << 23  # cap on precomputed phase-table entries


class CompiledSum:
    """A PauliSum frozen into flat arrays for fast statevector application.

    Strings sharing an X-mask are the same index permutation, so their
    phases fold into one precomputed table and the whole group costs a
    single gather per apply.  The tables are built on first use and skipped
    when they would outgrow the entry cap (falling back to the per-string
    loop).
    """

    __slots__ = ("n_qubits", "flips", "masks", "weights", "_groups")

    def __init__(self, op: PauliSum):
        if op.n_qubits > 60:
            raise ValueError("compiled kernel supports at most 60 qubits")
        self.n_qubits = op.n_qubits
        flips, masks, weights = [], [], []
        for (x, z), c in op._terms.items():
            flips.append(x)
            masks.append(z)
            weights.append(c * 1j ** ((x & z).bit_count() % 4))
        self.flips = np.asarray(flips, dtype=np.int64)
        self.masks = np.asarray(masks, dtype=np.int64)
        self.weights = np.asarray(weights, dtype=np.complex128)
        self._groups = None

    def _build_groups(self):
        n_flips = len(set(self.flips.tolist()))
        if n_flips * (1 << self.n_qubits) > _GROUP_ENTRY_LIMIT:
            self._groups = ()
            return
        idx = _indices(self.n_qubits)
        tables: dict[int, np.ndarray] = {}
        for f, m, w in zip(self.flips.tolist(), self.masks.tolist(), self.weights):
            # parity((idx^f) & m) splits into parity(idx&m) and a sign bit
            signed = w * (1.0 - 2.0 * ((f & m).bit_count() & 1))
            table = tables.get(f)
            if table is None:
                table = tables[f] = np.zeros(len(idx), dtype=np.complex128)
            table += signed * (1.0 - 2.0 * _parity_of(idx & np.int64(m)))
        self._groups = tuple(tables.items())

    def apply(self, vec, out=None):
        """Return (sum of strings) @ vec."""
        idx = _indices(self.n_qubits)
        if out is None:
            out = np.zeros(vec.shape, dtype=np.promote_types(vec.dtype, np.complex128))
        else:
            out[:] = 0.0
        if self._groups is None:
            self._build_groups()
        if self._groups:
            for f, table in self._groups:
                if f:
                    out += table * vec[idx ^ f]
                else:
                    out += table * vec
            return out
        for f, m, w in zip(self.flips, self.masks, self.weights):
            src = idx ^ f
            signs = 1.0 - 2.0 * _parity_of(src & m)
            out += (w * signs) * vec[src]
        return out

    def expectation(self, vec):
        return complex(np.vdot(vec, self.apply(vec)))


def apply_string(s: PauliString, vec):
    """Apply one string to a statevector (fresh array)."""
    idx = _indices(s.n_qubits)
    src = idx ^ s.xmask
    w = s.coeff * 1j ** ((s.xmask & s.zmask).bit_count() % 4)
    signs = 1.0 - 2.0 * _parity_of(src & np.int64(s.zmask))
    return (w * signs) * vec[src]


def apply_sum(op: PauliSum, vec):
    return CompiledSum(op).apply(vec)


def expectation(op: PauliSum, vec):
    """Exact <vec|op|vec> on a dense statevector."""
    return CompiledSum(op).expectation(vec)
