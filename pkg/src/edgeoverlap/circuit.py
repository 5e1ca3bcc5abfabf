"""Simulation of the permutation-marking circuit and the postselected candidate qubit.

Registers, in order: the radix-code register (one qudit per slot, slot ``i``
padded to ``2**ceil(log2(i+1))`` levels), the permuted-list register (n
qudits of n levels), the overlap accumulator (``E_max + 1`` levels) and one
ancilla qubit. A basis label is a row of ``2n + 2`` integers laid out in the
same order.

Two backends share every gate: ``dense`` keeps the full amplitude vector
(n <= 4) and ``structured`` keeps only the support as a label table with one
amplitude per row (n <= 8). Every gate except G is a basis permutation, so
both backends apply it by rewriting labels.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import hadamard
from scipy.optimize import least_squares

from . import radix
from .bloch import CandidateQubit
from .graphs import Graph, GraphError, max_threshold

BACKENDS = ("dense", "structured")
SIZE_LIMIT = {"dense": 4, "structured": 8}
NORM_TOL = 1e-10
PRUNE_TOL = 1e-14


class CircuitError(RuntimeError):
    pass


class PhaseSolveError(CircuitError):
    def __init__(self, k, dim, residual):
        super().__init__(f"G_{k} phase solve on {dim} levels did not converge (residual {residual:.3e})")
        self.residual = residual


# --------------------------------------------------------------------------
# uniform-k state preparation
# --------------------------------------------------------------------------

def levels_for(k: int) -> int:
    return 1 << max(0, math.ceil(math.log2(k))) if k > 1 else 1


def _gk_from_phases(phi, vphi, k, dim):
    h = hadamard(dim).astype(complex) / math.sqrt(dim)
    s0 = np.ones(dim, dtype=complex)
    s0[0] = np.exp(1j * phi)
    sx = np.ones(dim, dtype=complex)
    sx[:k] = np.exp(1j * vphi)
    return -h @ (s0[:, None] * h) @ (sx[:, None] * h)


def solve_gk_phases(k: int, dim: int) -> tuple[float, float, float]:
    """Phases (phi, varphi) that send |0> to the uniform state on k levels.

    Least-squares on the amplitude left outside the first ``k`` levels,
    restarted from a small grid of seeds. Returns the residual norm too.
    """
    def resid(x):
        bad = _gk_from_phases(x[0], x[1], k, dim)[k:, 0]
        return np.concatenate([bad.real, bad.imag])

    best = None
    for p0 in (0.5, 1.5, 2.5, -1.0):
        for v0 in (0.5, 1.5, 2.5, -1.0):
            sol = least_squares(resid, [p0, v0], xtol=1e-15, ftol=1e-15, gtol=1e-15)
            r = float(np.linalg.norm(resid(sol.x)))
            if best is None or r < best[2]:
                best = (float(sol.x[0]), float(sol.x[1]), r)
            if r < 1e-14:
                return best
    return best


@lru_cache(maxsize=None)
def _solve_gk_cached(k: int, dim: int) -> np.ndarray:
    if dim == k:
        q = int(math.log2(dim))
        u = hadamard(dim).astype(complex) / math.sqrt(dim) if q else np.ones((1, 1), dtype=complex)
    else:
        phi, vphi, res = solve_gk_phases(k, dim)
        u = _gk_from_phases(phi, vphi, k, dim)
        col = u[:, 0]
        if res > 1e-11:
            raise PhaseSolveError(k, dim, res)
        # fix the global phase so the prepared amplitudes are real and positive
        u = u * np.conj(col[0] / abs(col[0]))
    u.setflags(write=False)
    return u


def solve_gk(k: int, dim: int | None = None) -> np.ndarray:
    """Unitary on ``dim`` levels with G_k|0> = (|0> + ... + |k-1>)/sqrt(k)."""
    if dim is None:
        dim = levels_for(k)
    if k < 1 or dim < k or dim & (dim - 1):
        raise ValueError(f"need 1 <= k <= dim with dim a power of two (k={k}, dim={dim})")
    if k > 1 and 2 * k <= dim:
        raise ValueError(f"k/dim = {k}/{dim} must exceed 1/2")
    return _solve_gk_cached(k, dim)


# --------------------------------------------------------------------------
# layout and states
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RegisterLayout:
    n: int
    reg3_dim: int

    @property
    def reg1_dims(self) -> tuple[int, ...]:
        return tuple(levels_for(i + 1) for i in range(self.n))

    @property
    def reg2_dims(self) -> tuple[int, ...]:
        return (self.n,) * self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return self.reg1_dims + self.reg2_dims + (self.reg3_dim, 2)

    @property
    def dense_dim(self) -> int:
        return int(np.prod(self.shape))

    @property
    def width(self) -> int:
        return 2 * self.n + 2

    @property
    def reg2(self) -> slice:
        return slice(self.n, 2 * self.n)

    @property
    def reg3(self) -> int:
        return 2 * self.n

    @property
    def anc(self) -> int:
        return 2 * self.n + 1

    def initial_label(self) -> np.ndarray:
        lab = np.zeros(self.width, dtype=np.int64)
        lab[self.reg2] = np.arange(self.n)
        return lab


@lru_cache(maxsize=8)
def _dense_labels(layout: RegisterLayout) -> np.ndarray:
    grid = np.indices(layout.shape).reshape(layout.width, -1).T
    grid = np.ascontiguousarray(grid, dtype=np.int64)
    grid.setflags(write=False)
    return grid


@dataclass
class RegisterState:
    """Amplitudes over the four-register layout.

    ``dense``: ``amps`` is the full vector in C order over ``layout.shape``
    and ``labels`` is None. ``structured``: ``labels`` holds one basis label
    per row and ``amps`` the matching amplitudes.
    """

    layout: RegisterLayout
    backend: str
    amps: np.ndarray
    labels: np.ndarray | None = field(default=None, repr=False)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def support_size(self) -> int:
        return int(np.count_nonzero(np.abs(self.amps) > PRUNE_TOL))

    def support(self, tol: float = 1e-12):
        """(labels, amps) restricted to entries with |amp| > tol, sorted by label."""
        if self.backend == "dense":
            idx = np.nonzero(np.abs(self.amps) > tol)[0]
            labs = _dense_labels(self.layout)[idx]
            amps = self.amps[idx]
        else:
            keep = np.abs(self.amps) > tol
            labs, amps = self.labels[keep], self.amps[keep]
        order = np.lexsort(labs.T[::-1])
        return labs[order], amps[order]

    def to_dense(self) -> np.ndarray:
        if self.backend == "dense":
            return self.amps.copy()
        out = np.zeros(self.layout.dense_dim, dtype=complex)
        flat = np.ravel_multi_index(self.labels.T, self.layout.shape)
        np.add.at(out, flat, self.amps)
        return out


def initial_state(layout: RegisterLayout, backend: str) -> RegisterState:
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    lab = layout.initial_label()
    if backend == "dense":
        amps = np.zeros(layout.dense_dim, dtype=complex)
        amps[np.ravel_multi_index(lab, layout.shape)] = 1.0
        return RegisterState(layout, backend, amps)
    return RegisterState(layout, backend, np.ones(1, dtype=complex), lab[None, :].copy())


def _apply_label_map(state: RegisterState, fn) -> RegisterState:
    if state.backend == "dense":
        src = _dense_labels(state.layout)
        dest = np.ravel_multi_index(fn(src.copy()).T, state.layout.shape)
        out = np.zeros_like(state.amps)
        out[dest] = state.amps
        return RegisterState(state.layout, "dense", out)
    return RegisterState(state.layout, "structured", state.amps.copy(), fn(state.labels.copy()))


def _merge_rows(labels, amps):
    uniq, inv = np.unique(labels, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    merged = np.zeros(uniq.shape[0], dtype=complex)
    np.add.at(merged, inv, amps)
    keep = np.abs(merged) > PRUNE_TOL
    return uniq[keep], merged[keep]


def apply_local_unitary(state: RegisterState, col: int, u: np.ndarray) -> RegisterState:
    """Apply ``u`` to the qudit in label column ``col``."""
    if state.backend == "dense":
        arr = state.amps.reshape(state.layout.shape)
        arr = np.moveaxis(np.tensordot(u, arr, axes=([1], [col])), 0, col)
        return RegisterState(state.layout, "dense", np.ascontiguousarray(arr).reshape(-1))
    d = u.shape[0]
    rows = np.repeat(state.labels, d, axis=0)
    old = rows[:, col].copy()
    rows[:, col] = np.tile(np.arange(d), state.labels.shape[0])
    amps = np.repeat(state.amps, d) * u[rows[:, col], old]
    labels, amps = _merge_rows(rows, amps)
    return RegisterState(state.layout, "structured", amps, labels)


# --------------------------------------------------------------------------
# gates
# --------------------------------------------------------------------------

def apply_G(state: RegisterState) -> RegisterState:
    """Uniform superposition over every radix code on register 1."""
    for slot, dim in enumerate(state.layout.reg1_dims):
        state = apply_local_unitary(state, slot, solve_gk(slot + 1, dim))
    return state


def _hall_block(lab, layout, slot, inverse):
    n = layout.n
    digits = lab[:, slot]
    reg2 = lab[:, n:2 * n]
    for d in range(slot):
        rows = digits == d
        if not rows.any():
            continue
        block = reg2[rows]
        if inverse:
            block[:, d:slot + 1] = np.roll(block[:, d:slot + 1], -1, axis=1)
        else:
            block[:, d:slot + 1] = np.roll(block[:, d:slot + 1], 1, axis=1)
        reg2[rows] = block
    lab[:, n:2 * n] = reg2
    return lab


def apply_hall_block(state: RegisterState, slot: int, inverse: bool = False) -> RegisterState:
    layout = state.layout
    return _apply_label_map(state, lambda lab: _hall_block(lab, layout, slot, inverse))


def apply_hall_circuit(state: RegisterState, inverse: bool = False) -> RegisterState:
    """Controlled P blocks for slots 1..n-1 (reversed and inverted when ``inverse``)."""
    slots = range(1, state.layout.n)
    for slot in (reversed(slots) if inverse else slots):
        state = apply_hall_block(state, slot, inverse)
    return state


def _list_overlap(reg2, adj1, edges2):
    if edges2.shape[0] == 0:
        return np.zeros(reg2.shape[0], dtype=np.int64)
    return adj1[reg2[:, edges2[:, 0]], reg2[:, edges2[:, 1]]].sum(axis=1)


def apply_eo_gate(state: RegisterState, g1: Graph, g2: Graph, inverse: bool = False) -> RegisterState:
    """Add (or subtract) EO of the register-2 list into register 3, modulo its dimension."""
    layout = state.layout
    adj1, edges2 = g1.adj, g2.edges()
    sign = -1 if inverse else 1

    def fn(lab):
        eo = _list_overlap(lab[:, layout.reg2], adj1, edges2)
        lab[:, layout.reg3] = (lab[:, layout.reg3] + sign * eo) % layout.reg3_dim
        return lab

    return _apply_label_map(state, fn)


def apply_comparator(state: RegisterState, threshold: int) -> RegisterState:
    """Flip the ancilla on every branch whose register-3 value exceeds ``threshold``."""
    layout = state.layout

    def fn(lab):
        lab[:, layout.anc] ^= (lab[:, layout.reg3] > threshold).astype(np.int64)
        return lab

    return _apply_label_map(state, fn)


def uncompute(state: RegisterState, g1: Graph, g2: Graph) -> RegisterState:
    state = apply_eo_gate(state, g1, g2, inverse=True)
    return apply_hall_circuit(state, inverse=True)


# --------------------------------------------------------------------------
# postselection
# --------------------------------------------------------------------------

@dataclass
class MarkedSummary:
    m_marked: int
    uniform_amplitude: float
    postselect_prob: float
    candidate: CandidateQubit
    raw_amplitudes: tuple[complex, complex]
    marked_mask: np.ndarray = field(repr=False)
    norms: list[float] = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        return {
            "m_marked": self.m_marked,
            "uniform_amplitude": self.uniform_amplitude,
            "postselect_prob": self.postselect_prob,
            "candidate": [self.candidate.a0, self.candidate.a1],
        }


def _code_index(digits: np.ndarray) -> np.ndarray:
    """0-based radix index for each row of valid digit arrays."""
    idx = np.zeros(digits.shape[0], dtype=np.int64)
    for v in range(digits.shape[1]):
        idx = idx * (v + 1) + digits[:, v]
    return idx


def postselect_candidate(state: RegisterState) -> MarkedSummary:
    """Project register 1 onto |s> (registers 2, 3 at their reset values).

    Only the all-zero outcome of G-dagger on register 1 is ever used, so the
    projection is the inner product with the prepared uniform state rather
    than an explicit inverse circuit.
    """
    layout = state.layout
    n = layout.n
    prep = [solve_gk(i + 1, d)[:, 0] for i, d in enumerate(layout.reg1_dims)]
    labs, amps = state.support(tol=0.0)
    reset = np.all(labs[:, layout.reg2] == np.arange(n), axis=1) & (labs[:, layout.reg3] == 0)
    labs, amps = labs[reset], amps[reset]
    weight = np.ones(labs.shape[0], dtype=complex)
    for i in range(n):
        weight *= prep[i][labs[:, i]]
    proj = np.conj(weight) * amps
    anc = labs[:, layout.anc]
    a0 = complex(proj[anc == 0].sum())
    a1 = complex(proj[anc == 1].sum())
    prob = abs(a0) ** 2 + abs(a1) ** 2
    if prob <= 0:
        raise CircuitError("postselection branch has zero norm")

    live = np.abs(amps) > 1e-12
    nfact = math.factorial(n)
    mask = np.zeros(nfact, dtype=bool)
    marked = live & (anc == 1)
    valid = np.all(labs[:, :n] <= np.arange(n), axis=1)
    if np.any(live & ~valid):
        raise CircuitError("amplitude on an unreachable radix digit")
    mask[_code_index(labs[marked, :n])] = True

    root = math.sqrt(prob)
    cand = CandidateQubit(max(0.0, a0.real / root), max(0.0, a1.real / root))
    return MarkedSummary(
        m_marked=int(mask.sum()),
        uniform_amplitude=float(np.abs(amps[live]).max()) if live.any() else 0.0,
        postselect_prob=float(prob),
        candidate=cand,
        raw_amplitudes=(a0, a1),
        marked_mask=mask,
    )


# --------------------------------------------------------------------------
# the full marking pipeline
# --------------------------------------------------------------------------

def make_layout(g1: Graph, g2: Graph) -> RegisterLayout:
    if g1.n != g2.n:
        raise GraphError(f"graphs differ in size: {g1.n} vs {g2.n}")
    return RegisterLayout(g1.n, max_threshold(g1, g2) + 1)


def _check_backend(n: int, backend: str):
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    if n > SIZE_LIMIT[backend]:
        raise CircuitError(f"{backend} backend supports n <= {SIZE_LIMIT[backend]}, got n = {n}")


def pipeline_stages(g1: Graph, g2: Graph, threshold: int, backend: str = "structured"):
    """Yield ``(stage_name, state)`` after every step of the marking map."""
    layout = make_layout(g1, g2)
    _check_backend(layout.n, backend)
    if not 0 <= threshold <= layout.reg3_dim - 1:
        raise GraphError(f"threshold {threshold} outside [0, {layout.reg3_dim - 1}]")
    state = initial_state(layout, backend)
    yield "init", state
    state = apply_G(state)
    yield "G", state
    state = apply_hall_circuit(state)
    yield "hall", state
    state = apply_eo_gate(state, g1, g2)
    yield "eo", state
    state = apply_comparator(state, threshold)
    yield "compare", state
    state = apply_eo_gate(state, g1, g2, inverse=True)
    yield "eo_inverse", state
    state = apply_hall_circuit(state, inverse=True)
    yield "hall_inverse", state


def run_marking_pipeline(g1: Graph, g2: Graph, threshold: int, backend: str = "structured") -> MarkedSummary:
    norms = []
    state = None
    for _, state in pipeline_stages(g1, g2, threshold, backend):
        norm = state.norm()
        if abs(norm - 1.0) > NORM_TOL:
            raise CircuitError(f"norm drifted to {norm!r}")
        norms.append(norm)
    summary = postselect_candidate(state)
    summary.norms = norms
    return summary


@lru_cache(maxsize=512)
def cached_marking(g1: Graph, g2: Graph, threshold: int, backend: str = "structured") -> MarkedSummary:
    return run_marking_pipeline(g1, g2, threshold, backend)


# --------------------------------------------------------------------------
# debug dump
# --------------------------------------------------------------------------

def _fmt(x: float) -> str:
    # keep "-0.000000000000" out of golden files
    text = f"{x:.12f}"
    return text[1:] if text.startswith("-") and float(text) == 0 else text


def dump_state(state: RegisterState, tol: float = 1e-12) -> str:
    """One line per support label, sorted by label."""
    n = state.layout.n
    labs, amps = state.support(tol)
    lines = []
    for lab, amp in zip(labs, amps):
        reg1 = radix.code_string(lab[:n].tolist())
        reg2 = "[" + ",".join(str(v) for v in lab[n:2 * n]) + "]"
        lines.append(
            f"reg1={reg1} reg2={reg2} reg3={lab[2 * n]} anc={lab[2 * n + 1]} "
            f"amp={_fmt(amp.real)},{_fmt(amp.imag)}"
        )
    return "\n".join(lines) + ("\n" if lines else "")
