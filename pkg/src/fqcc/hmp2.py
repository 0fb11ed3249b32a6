"""Perturbative predictor/corrector loop around exact-statevector VQE.

Each cycle minimizes the energy over the current excitation list, then uses
second-order perturbation theory around the converged state to do two jobs
at once: correct the energy, and rank every candidate excitation for the
next cycle.  The key quantity per excitation a is the bracket

    N_a = <psi| Dt_a+ H - Dt_a+ Zt H + Zt Dt_a+ H |psi>,

where Dt_a = D_a - D_a+ is the anti-Hermitian image of the excitation and
Zt is the parameter-weighted sum of the ansatz generators (the first-order
expansion of the ansatz exponentials, consistent with a first-order product
formula).  The energy correction is sum |N_a|^2 / dE_a over the candidate
set, the first-order wavefunction amplitude per excitation is N_a / dE_a,
and the next term is the candidate with the largest amplitude per added
ladder operator.  With an empty ansatz the whole construction is classical
and reduces exactly to second-order Moller-Plesset theory, which also seeds
the first cycle.

Orbital-energy denominators dE come from the reference orbital energies
(annihilated minus created); near-degenerate denominators are excluded with
a warning.  The Hamiltonian's identity component is stripped inside the
brackets: the exact numerator is blind to it by orthogonality, and keeping
it would leak a Taylor-truncation artifact proportional to the constant.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .fermions import (
    FockData,
    MolecularHamiltonian,
    OrbitalSequence,
    ParameterSet,
    build_hamiltonian,
    excitation_generator,
    uccsd_pool,
)
from .paulis import CompiledSum, PauliSum
from .simulate import AnsatzOp, Statevector, apply_ansatz, hf_state, vqe_minimize
from .transform import Transform

__all__ = [
    "MP2Result", "mp2_classical",
    "ztilde_operator", "first_order_numerators",
    "hmp2_correct", "wavefunction_correction",
    "SelectionResult", "select_next",
    "HMP2Config", "HMP2Report", "HMP2Run", "run_hmp2_loop", "write_cycles_csv",
]

_DEGENERATE_TOL = 1e-8


# ---------------------------------------------------------------------------
# classical reference calculation
# ---------------------------------------------------------------------------


def _apply_ladder(mask: int, ops) -> tuple[int, int]:
    """Apply ladder operators (rightmost first) to an occupation bitmask.

    Returns (sign, mask); sign 0 when the product annihilates the state.
    The sign convention counts occupied modes below the acted-on mode,
    matching the canonical anticommutation ordering.
    """
    sign = 1
    for op in reversed(ops):
        occupied = mask >> op.mode & 1
        if occupied == (1 if op.dagger else 0):
            return 0, 0
        if (mask & ((1 << op.mode) - 1)).bit_count() & 1:
            sign = -sign
        mask ^= 1 << op.mode
    return sign, mask


def _h_on_reference(ham: MolecularHamiltonian, ref_mask: int) -> dict[int, float]:
    """H|ref> as a map from occupation bitmask to amplitude, classically."""
    out: dict[int, float] = {}
    fermion = build_hamiltonian(ham)
    for term in fermion.terms:
        sign, mask = _apply_ladder(ref_mask, term.ops)
        if sign:
            out[mask] = out.get(mask, 0.0) + sign * term.coefficient.real
    if ham.core_energy:
        out[ref_mask] = out.get(ref_mask, 0.0) + ham.core_energy
    return out


@dataclass(slots=True)
class MP2Result:
    """Second-order correction from the bare reference."""

    e_corr: float
    amplitudes: dict
    contributions: dict
    excluded: tuple = ()


def mp2_classical(
    ham: MolecularHamiltonian,
    fock: FockData,
    pool=None,
) -> MP2Result:
    """Second-order energy and amplitudes over double substitutions.

    Matrix elements <ref_D|H|ref> are evaluated with exact ladder-operator
    arithmetic on occupation bitmasks — no qubit mapping involved.  The
    returned amplitudes seed variational parameters and the first term
    choice.
    """
    n_e = fock.n_electrons
    if pool is None:
        pool = [
            seq
            for seq in uccsd_pool(range(n_e), range(n_e, ham.n_modes))
            if seq.kind == "double"
        ]
    ref_mask = (1 << n_e) - 1
    hpsi = _h_on_reference(ham, ref_mask)
    e_corr = 0.0
    amplitudes: dict[str, float] = {}
    contributions: dict[str, float] = {}
    excluded = []
    for seq in pool:
        sign, mask = _apply_ladder(ref_mask, seq.term().ops)
        numerator = sign * hpsi.get(mask, 0.0) if sign else 0.0
        delta = fock.denominator(seq)
        if abs(delta) < _DEGENERATE_TOL:
            if numerator:
                warnings.warn(
                    f"excluding {seq.name}: degenerate denominator {delta!r}"
                )
                excluded.append(seq.name)
            continue
        amplitudes[seq.name] = numerator / delta
        contributions[seq.name] = numerator * numerator / delta
        e_corr += contributions[seq.name]
    return MP2Result(e_corr, amplitudes, contributions, tuple(excluded))


# ---------------------------------------------------------------------------
# perturbation around the converged ansatz state
# ---------------------------------------------------------------------------


def ztilde_operator(ansatz: AnsatzOp) -> PauliSum:
    """Parameter-weighted sum of the ansatz generators (first-order ansatz)."""
    n = ansatz.n_qubits
    out = PauliSum.zero(n)
    for seq in ansatz.terms:
        value = ansatz.params.get(seq.name)
        if value:
            gen = excitation_generator(seq, n).to_pauli(ansatz.transform)
            out = out + value * gen
    return out.simplify()


def _without_identity(op: PauliSum) -> PauliSum:
    kept = [s for s in op.strings() if s.key != (0, 0)]
    out = PauliSum.from_strings(kept, n_qubits=op.n_qubits)
    return out


def first_order_numerators(
    state: Statevector,
    hamiltonian: PauliSum,
    alphas,
    ztilde: PauliSum | None,
    transform,
    cache: dict | None = None,
) -> dict[str, float]:
    """The correction bracket N_a for each candidate excitation.

    Computes <psi| Dt+ H |psi> - <psi| Dt+ Zt H |psi> + <psi| Zt Dt+ H |psi>
    exactly on the statevector, sharing H|psi> and Zt|psi> across the set.
    ``cache`` (name -> compiled generator) amortizes generator mapping when
    the same candidate set is swept repeatedly.
    """
    psi = state.amplitudes
    h = CompiledSum(_without_identity(hamiltonian))
    hpsi = h.apply(psi)
    zhpsi = zpsi = None
    if ztilde is not None and len(ztilde):
        z = CompiledSum(ztilde)
        zhpsi = z.apply(hpsi)
        zpsi = z.apply(psi)
    out: dict[str, float] = {}
    for seq in alphas:
        dt = None if cache is None else cache.get(seq.name)
        if dt is None:
            dt = CompiledSum(
                excitation_generator(seq, state.n_qubits).to_pauli(transform)
            )
            if cache is not None:
                cache[seq.name] = dt
        dpsi = dt.apply(psi)
        bracket = np.vdot(dpsi, hpsi)
        if zpsi is not None:
            bracket -= np.vdot(dpsi, zhpsi)
            # <psi|Zt Dt+ H|psi> = -<Dt Zt psi|H psi> since Zt+ = -Zt
            bracket -= np.vdot(dt.apply(zpsi), hpsi)
        out[seq.name] = float(np.real(bracket))
    return out


def _denominators(fock: FockData, alphas) -> dict[str, float]:
    out = {}
    for seq in alphas:
        delta = fock.denominator(seq)
        if abs(delta) < _DEGENERATE_TOL:
            warnings.warn(f"excluding {seq.name}: degenerate denominator {delta!r}")
            continue
        out[seq.name] = delta
    return out


def hmp2_correct(
    state: Statevector,
    hamiltonian: PauliSum,
    fock: FockData,
    alpha_prime,
    ztilde: PauliSum | None,
    transform,
) -> float:
    """Second-order energy correction around the converged ansatz state."""
    alpha_prime = list(alpha_prime)
    numerators = first_order_numerators(state, hamiltonian, alpha_prime, ztilde, transform)
    deltas = _denominators(fock, alpha_prime)
    return sum(
        numerators[name] ** 2 / delta for name, delta in deltas.items()
    )


def wavefunction_correction(
    state: Statevector,
    hamiltonian: PauliSum,
    fock: FockData,
    alphas,
    ztilde: PauliSum | None,
    transform,
) -> dict[str, float]:
    """First-order amplitude per excitation: N_a / dE_a.

    With an identity ansatz this is exactly the classical second-order
    amplitude map; afterwards it measures what the current ansatz has not
    yet captured.
    """
    alphas = list(alphas)
    numerators = first_order_numerators(state, hamiltonian, alphas, ztilde, transform)
    deltas = _denominators(fock, alphas)
    return {name: numerators[name] / delta for name, delta in deltas.items()}


# ---------------------------------------------------------------------------
# term selection
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class SelectionResult:
    term: OrbitalSequence
    score: float
    guess: float


def _ladder_count(seq: OrbitalSequence) -> int:
    return len(seq.creations()) + len(seq.annihilations())


def select_next(
    current_terms,
    pool,
    amplitudes: dict,
    contributions: dict | None = None,
    threshold: float | None = None,
) -> SelectionResult | None:
    """Pick the candidate with the largest amplitude per added ladder operator.

    Candidates are single-term extensions of the current list.  Scores are
    |amplitude| / (number of ladder operators the term adds); ties break on
    the canonical term order.  Returns None when the pool is exhausted or,
    when a threshold and per-term energy contributions are given, when no
    remaining candidate's |contribution| reaches it (the loop-complete
    signal).
    """
    have = {seq.name for seq in current_terms}
    candidates = [seq for seq in pool if seq.name not in have and seq.name in amplitudes]
    if not candidates:
        return None
    if threshold is not None and contributions is not None:
        best_gain = max(abs(contributions.get(s.name, 0.0)) for s in candidates)
        if best_gain < threshold:
            return None

    def score_of(seq):
        return abs(amplitudes[seq.name]) / _ladder_count(seq)

    top_score = max(score_of(s) for s in candidates)
    tied = [
        s for s in candidates if top_score - score_of(s) <= 1e-12 * max(top_score, 1.0)
    ]
    best = min(tied, key=OrbitalSequence.sort_key)
    return SelectionResult(best, score_of(best), amplitudes[best.name])


# ---------------------------------------------------------------------------
# the full cycle
# ---------------------------------------------------------------------------


@dataclass(slots=True)
class HMP2Config:
    """Loop controls.

    ``delta_e``: converged when no candidate's predicted energy gain, nor
    the realized change of the last cycle, reaches it.  ``initial_threshold``
    seeds the first ansatz with every term whose classical second-order
    contribution exceeds it (None follows ``delta_e``; ``math.inf`` starts
    from the bare reference and grows one term per cycle).
    """

    delta_e: float = 1e-6
    initial_threshold: float | None = None
    max_cycles: int = 50
    vqe_gtol: float = 1e-7
    vqe_maxiter: int = 2000


@dataclass(slots=True)
class HMP2Report:
    cycle: int
    n_terms: int
    term_names: tuple
    e_vqe: float
    e_corr2: float
    e_total: float
    amplitudes: dict
    scores: dict
    chosen: str | None
    guess: float | None
    vqe_converged: bool
    vqe_grad_norm: float


@dataclass(slots=True)
class HMP2Run:
    reports: list
    converged: bool
    reason: str
    final_params: ParameterSet

    @property
    def final(self) -> HMP2Report:
        return self.reports[-1]


def _scores(pool, current, amplitudes):
    have = {seq.name for seq in current}
    return {
        seq.name: abs(amplitudes[seq.name]) / _ladder_count(seq)
        for seq in pool
        if seq.name not in have and seq.name in amplitudes
    }


def _resolved_sign_guess(h_compiled, transform, terms, params, new_seq, guess, reference):
    """Keep whichever sign of the new parameter gives the lower energy."""
    best_value, best_energy = 0.0, math.inf
    for value in (guess, -guess):
        trial = params.extended(new_seq.name, value)
        ansatz = AnsatzOp.build(transform, tuple(terms) + (new_seq,), trial)
        state = apply_ansatz(reference, ansatz)
        energy = float(np.real(h_compiled.expectation(state.amplitudes)))
        if energy < best_energy:
            best_value, best_energy = value, energy
    return best_value


def run_hmp2_loop(
    ham: MolecularHamiltonian,
    fock: FockData,
    config: HMP2Config | None = None,
    transform: Transform | None = None,
) -> HMP2Run:
    """Alternate exact VQE with the perturbative corrector until converged.

    Cycle 0 is fully classical (bare-reference second-order theory) and
    seeds the first ansatz.  Each later cycle minimizes, corrects the
    energy over the full candidate set, and appends the best-scoring new
    term with a sign-resolved initial guess.  Stops when the energy gain
    available (predicted or realized) falls below ``delta_e``, the pool is
    exhausted, or the cycle cap is hit (flagged unconverged).
    """
    config = config or HMP2Config()
    n = ham.n_modes
    transform = transform or Transform.jordan_wigner(n)
    n_e = fock.n_electrons
    pool = uccsd_pool(range(n_e), range(n_e, n))
    reference = hf_state(n_e, n, transform)
    h_pauli = build_hamiltonian(ham).to_pauli(transform)
    h_compiled = CompiledSum(h_pauli)
    e_hf = float(np.real(h_compiled.expectation(reference.amplitudes)))

    # cycle 0: fully classical bootstrap over the whole candidate pool
    mp2 = mp2_classical(ham, fock, pool=pool)
    amplitudes0 = mp2.amplitudes
    contributions0 = mp2.contributions
    e_corr2 = mp2.e_corr
    reports = [
        HMP2Report(
            cycle=0,
            n_terms=0,
            term_names=(),
            e_vqe=e_hf,
            e_corr2=e_corr2,
            e_total=e_hf + e_corr2,
            amplitudes=amplitudes0,
            scores=_scores(pool, (), amplitudes0),
            chosen=None,
            guess=None,
            vqe_converged=True,
            vqe_grad_norm=0.0,
        )
    ]

    f_threshold = (
        config.initial_threshold if config.initial_threshold is not None else config.delta_e
    )
    seeds = [
        seq
        for seq in pool
        if abs(contributions0.get(seq.name, 0.0)) > f_threshold
    ]
    seeds.sort(key=lambda s: -abs(contributions0[s.name]))
    terms: list[OrbitalSequence] = list(seeds)
    params = ParameterSet(
        tuple(s.name for s in seeds),
        {s.name: amplitudes0.get(s.name, 0.0) for s in seeds},
    )

    if not terms:
        selection = select_next(
            (), pool, amplitudes0, contributions0, config.delta_e
        )
        if selection is None:
            return HMP2Run(reports, True, "no candidate above threshold", ParameterSet())
        guess = _resolved_sign_guess(
            h_compiled, transform, (), ParameterSet(), selection.term,
            selection.guess, reference,
        )
        reports[0].chosen = selection.term.name
        reports[0].guess = guess
        terms = [selection.term]
        params = ParameterSet((selection.term.name,), {selection.term.name: guess})

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # degeneracies already reported by cycle 0
        deltas = _denominators(fock, pool)
    gen_cache: dict[str, CompiledSum] = {}
    converged, reason = False, "cycle cap reached"
    for cycle in range(1, config.max_cycles + 1):
        ansatz = AnsatzOp.build(transform, tuple(terms), params)
        result = vqe_minimize(
            h_compiled, ansatz, reference,
            gtol=config.vqe_gtol, maxiter=config.vqe_maxiter,
        )
        params = result.params
        ansatz = ansatz.with_params(params)
        state = apply_ansatz(reference, ansatz)
        ztilde = ztilde_operator(ansatz)
        numerators = first_order_numerators(
            state, h_pauli, pool, ztilde, transform, gen_cache
        )
        amplitudes = {name: numerators[name] / deltas[name] for name in deltas}
        contributions = {
            name: numerators[name] ** 2 / deltas[name] for name in deltas
        }
        e_corr2 = sum(contributions.values())
        e_total = result.energy + e_corr2
        selection = select_next(terms, pool, amplitudes, contributions, config.delta_e)
        report = HMP2Report(
            cycle=cycle,
            n_terms=len(terms),
            term_names=tuple(s.name for s in terms),
            e_vqe=result.energy,
            e_corr2=e_corr2,
            e_total=e_total,
            amplitudes=amplitudes,
            scores=_scores(pool, terms, amplitudes),
            chosen=None,
            guess=None,
            vqe_converged=result.converged,
            vqe_grad_norm=result.grad_norm,
        )
        reports.append(report)
        if abs(e_total - reports[-2].e_total) < config.delta_e:
            converged, reason = True, "energy change below threshold"
            break
        if selection is None:
            done_pool = len(terms) == len(pool)
            converged = True
            reason = "pool exhausted" if done_pool else "no candidate above threshold"
            break
        guess = _resolved_sign_guess(
            h_compiled, transform, terms, params, selection.term,
            selection.guess, reference,
        )
        report.chosen = selection.term.name
        report.guess = guess
        terms.append(selection.term)
        params = params.extended(selection.term.name, guess)
    return HMP2Run(reports, converged, reason, params)


def write_cycles_csv(reports, path) -> None:
    """Per-cycle convergence table (the data behind energy-descent plots)."""
    rows = reports.reports if isinstance(reports, HMP2Run) else reports
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["cycle", "n_terms", "e_vqe", "e_corr2", "e_total", "chosen_term", "f_score"]
        )
        for r in rows:
            score = "" if r.chosen is None else f"{r.scores.get(r.chosen, 0.0):.12g}"
            writer.writerow(
                [
                    r.cycle,
                    r.n_terms,
                    f"{r.e_vqe:.12f}",
                    f"{r.e_corr2:.12f}",
                    f"{r.e_total:.12f}",
                    r.chosen or "",
                    score,
                ]
            )
