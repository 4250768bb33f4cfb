"""Numerical witnesses: solving equation systems over the unitary group U(m).

Unitary matrices are plain complex ndarrays kept within ``1e-10`` of exact
unitarity; every step of the solver moves along the manifold (multiplication
by the exponential of a skew-Hermitian tangent), and drift is repaired by
polar projection whenever it is detected.

The solver minimises ``sum_j ||w_j(A) - I||_F^2`` by Riemannian gradient
descent with Armijo backtracking, which keeps the loss monotonically
non-increasing.  Non-convergence is an outcome, not an exception: equations
can be unsolvable (determinant obstructions), and the solver reports its best
residual together with a ``converged`` flag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .presentation import Presentation, exponent_matrix
from .words import Word, augment

__all__ = [
    "UNITARITY_TOL",
    "EquationSystem",
    "SolveOptions",
    "SolveResult",
    "ProbeReport",
    "haar_random",
    "project_unitary",
    "unitarity_defect",
    "evaluate_word",
    "residual",
    "gradient",
    "gradients",
    "solve",
    "surjectivity_probe",
    "verify_wreath",
]

#: Tolerated Frobenius distance of U*U from the identity.
UNITARITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class EquationSystem:
    """Equations ``w_j = 1`` over unknowns ``x_1..x_n`` and named constants.

    ``values`` is ``None`` for a symbolic system; when present it must assign
    one square complex matrix to *every* declared constant, all of the same
    dimension.  Equations are kept exactly as written -- their spelling
    matters to the covering constructions -- so nothing is reduced here.
    """

    n_vars: int
    constants: tuple[str, ...] = ()
    equations: tuple[Word, ...] = ()
    values: Mapping[str, np.ndarray] | None = None

    def __post_init__(self) -> None:
        if self.n_vars < 1:
            raise ValueError("an equation system needs at least one unknown")
        declared = set(self.constants)
        if len(declared) != len(self.constants):
            raise ValueError("duplicate constant names")
        for j, w in enumerate(self.equations):
            if not isinstance(w, Word):
                raise TypeError(f"equation {j} is not a Word")
            for l in w:
                if l.is_variable:
                    if l.base > self.n_vars:
                        raise ValueError(
                            f"equation {j} uses x{l.base} but only {self.n_vars} unknowns are declared"
                        )
                elif l.base not in declared:
                    raise ValueError(f"equation {j} references undeclared constant {l.base!r}")
        if self.values is not None:
            missing = declared - set(self.values)
            if missing:
                raise ValueError(f"constants without values: {sorted(missing)}")
            dims = set()
            for name in self.constants:
                v = np.asarray(self.values[name])
                if v.ndim != 2 or v.shape[0] != v.shape[1]:
                    raise ValueError(f"constant {name!r} is not a square matrix")
                dims.add(v.shape[0])
            if len(dims) > 1:
                raise ValueError(f"constants have mixed dimensions {sorted(dims)}")

    @property
    def symbolic(self) -> bool:
        return self.values is None and bool(self.constants)

    @property
    def dimension(self) -> int | None:
        if self.values is None or not self.constants:
            return None
        return np.asarray(self.values[self.constants[0]]).shape[0]

    def presentation(self) -> Presentation:
        """The augmented presentation: one relator per equation, constants
        deleted.  Trivial relators are legitimate here (an equation whose
        augmentation cancels entirely still contributes a face)."""
        return Presentation(
            self.n_vars,
            tuple(augment(w) for w in self.equations),
            allow_trivial=True,
        )

    def with_values(self, values: Mapping[str, np.ndarray]) -> "EquationSystem":
        return EquationSystem(self.n_vars, self.constants, self.equations, dict(values))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EquationSystem):
            return NotImplemented
        if (self.n_vars, self.constants, self.equations) != (
            other.n_vars,
            other.constants,
            other.equations,
        ):
            return False
        if (self.values is None) != (other.values is None):
            return False
        if self.values is None:
            return True
        return all(
            np.array_equal(np.asarray(self.values[k]), np.asarray(other.values[k]))
            for k in self.constants
        )


Assignment = Mapping[int, np.ndarray]


def haar_random(m: int, rng: np.random.Generator | int | None = None) -> np.ndarray:
    """A Haar-distributed element of U(m).

    QR of a complex Ginibre matrix with the R-diagonal phases normalised,
    which makes the distribution exactly translation invariant.  Passing an
    int seeds a fresh generator, so equal seeds give equal matrices.
    """
    if m < 1:
        raise ValueError("dimension must be positive")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def project_unitary(U: np.ndarray) -> np.ndarray:
    """Nearest unitary in Frobenius norm (polar factor via SVD)."""
    w, _, vh = np.linalg.svd(U)
    return w @ vh


def unitarity_defect(U: np.ndarray) -> float:
    m = U.shape[0]
    return float(np.linalg.norm(U.conj().T @ U - np.eye(m)))


def _constant_value(values: Mapping[str, np.ndarray] | None, name: str) -> np.ndarray:
    if values is None or name not in values:
        raise ValueError(f"constant {name!r} has no assigned value")
    return np.asarray(values[name])


def evaluate_word(
    w: Word,
    assignment: Assignment,
    values: Mapping[str, np.ndarray] | None = None,
    m: int | None = None,
) -> np.ndarray:
    """Multiply out a word left to right; inverse letters contribute the
    conjugate transpose.  The empty word is the identity (``m`` must then be
    inferable from the assignment or constants, or passed explicitly)."""
    if m is None:
        for u in assignment.values():
            m = np.asarray(u).shape[0]
            break
        else:
            if values:
                m = np.asarray(next(iter(values.values()))).shape[0]
    if m is None:
        raise ValueError("cannot infer the matrix dimension for an empty context")
    out = np.eye(m, dtype=complex)
    for l in w:
        if l.is_variable:
            if l.base not in assignment:
                raise ValueError(f"unknown x{l.base} has no assigned value")
            factor = np.asarray(assignment[l.base])
        else:
            factor = _constant_value(values, l.base)
        out = out @ (factor if l.sign == 1 else factor.conj().T)
    return out


def residual(system: EquationSystem, assignment: Assignment) -> float:
    """``max_j ||w_j(A) - I||_F``; requires valued constants."""
    if system.symbolic:
        raise ValueError("cannot evaluate a symbolic system; assign constant values")
    worst = 0.0
    for w in system.equations:
        val = evaluate_word(w, assignment, system.values)
        worst = max(worst, float(np.linalg.norm(val - np.eye(val.shape[0]))))
    return worst


def _loss_and_grads(
    system: EquationSystem, assignment: dict[int, np.ndarray]
) -> tuple[float, float, dict[int, np.ndarray]]:
    """Loss, max residual, and Riemannian gradients in one reverse pass.

    For ``f = ||W - I||_F^2`` with ``W = M_1 .. M_L`` the Euclidean gradient
    against factor ``t`` is ``P^H G S^H`` for a positive occurrence and
    ``S G^H P`` for an inverse occurrence, where ``G = 2(W - I)``, ``P`` and
    ``S`` are the prefix and suffix products.  The Riemannian gradient at
    ``U`` is the skew-Hermitian part of ``U^H G_U``.
    """
    m = next(iter(assignment.values())).shape[0]
    eye = np.eye(m, dtype=complex)
    egrad: dict[int, np.ndarray] = {i: np.zeros((m, m), dtype=complex) for i in assignment}
    loss = 0.0
    worst = 0.0
    for w in system.equations:
        factors = []
        for l in w:
            if l.is_variable:
                if l.base not in assignment:
                    raise ValueError(f"unknown x{l.base} has no assigned value")
                base_val = np.asarray(assignment[l.base])
            else:
                base_val = _constant_value(system.values, l.base)
            factors.append(base_val if l.sign == 1 else base_val.conj().T)
        L = len(factors)
        prefixes = [eye]
        for f in factors:
            prefixes.append(prefixes[-1] @ f)
        suffixes = [eye] * (L + 1)
        for t in range(L - 1, -1, -1):
            suffixes[t] = factors[t] @ suffixes[t + 1]
        W = prefixes[L]
        diff = W - eye
        loss += float(np.linalg.norm(diff) ** 2)
        worst = max(worst, float(np.linalg.norm(diff)))
        G = 2.0 * diff
        for t, l in enumerate(w):
            if not l.is_variable:
                continue
            P = prefixes[t]
            S = suffixes[t + 1]
            if l.sign == 1:
                egrad[l.base] += P.conj().T @ G @ S.conj().T
            else:
                egrad[l.base] += S @ G.conj().T @ P
    rgrad = {}
    for i, U in assignment.items():
        A = U.conj().T @ egrad[i]
        rgrad[i] = 0.5 * (A - A.conj().T)
    return loss, worst, rgrad


def gradients(system: EquationSystem, assignment: Assignment) -> dict[int, np.ndarray]:
    """Riemannian gradient of the total loss for every unknown: the
    skew-Hermitian tangent coefficient at each current iterate."""
    if system.symbolic:
        raise ValueError("cannot differentiate a symbolic system; assign constant values")
    assign = {i: np.asarray(u, dtype=complex) for i, u in assignment.items()}
    _, _, g = _loss_and_grads(system, assign)
    return g


def gradient(system: EquationSystem, assignment: Assignment, i: int) -> np.ndarray:
    """Riemannian gradient for unknown ``i`` alone (see :func:`gradients`)."""
    g = gradients(system, assignment)
    if i not in g:
        raise ValueError(f"no unknown x{i} in the assignment")
    return g[i]


def _expm_skew(A: np.ndarray) -> np.ndarray:
    """``exp(A)`` for skew-Hermitian ``A`` via the spectral decomposition of
    the Hermitian matrix ``iA`` -- unitary to machine precision."""
    lam, V = np.linalg.eigh(1j * A)
    return (V * np.exp(-1j * lam)) @ V.conj().T


@dataclass(frozen=True)
class SolveOptions:
    seed: int = 0
    restarts: int = 8
    max_iter: int = 5000
    tol: float = 1e-8
    armijo: float = 1e-4
    initial_step: float = 0.25
    max_step: float = 4.0
    min_step: float = 1e-14
    keep_history: bool = True


@dataclass
class SolveResult:
    assignment: dict[int, np.ndarray]
    residual: float
    converged: bool
    best_restart: int
    iterations: int
    histories: list[list[tuple[float, float]]] = field(default_factory=list)
    message: str = ""


def _descend(
    system: EquationSystem,
    assignment: dict[int, np.ndarray],
    opts: SolveOptions,
    history: list[tuple[float, float]] | None,
) -> tuple[float, int]:
    """Armijo-backtracked Riemannian descent in place; returns the best
    residual seen and the iteration count."""
    loss, worst, grads = _loss_and_grads(system, assignment)
    if history is not None:
        history.append((loss, worst))
    step = opts.initial_step
    best = worst
    it = 0
    while it < opts.max_iter and worst > opts.tol:
        it += 1
        gnorm2 = sum(float(np.linalg.norm(g) ** 2) for g in grads.values())
        if gnorm2 < 1e-30:
            break  # critical point (possibly a plateau short of the target)
        # backtracking line search along U_i exp(-step * grad_i)
        accepted = False
        while step >= opts.min_step:
            trial = {
                i: assignment[i] @ _expm_skew(-step * grads[i]) for i in assignment
            }
            t_loss, t_worst, t_grads = _loss_and_grads(system, trial)
            if t_loss <= loss - opts.armijo * step * gnorm2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        assignment.update(trial)
        loss, worst, grads = t_loss, t_worst, t_grads
        best = min(best, worst)
        if history is not None:
            history.append((loss, worst))
        step = min(step * 2.0, opts.max_step)
        if it % 128 == 0:
            for i, U in assignment.items():
                if unitarity_defect(U) > UNITARITY_TOL / 10:
                    assignment[i] = project_unitary(U)
    return best, it


def solve(system: EquationSystem, m: int, opts: SolveOptions | None = None) -> SolveResult:
    """Search for unitaries satisfying every equation to ``opts.tol``.

    Runs ``opts.restarts`` independently seeded descents from Haar-random
    initial assignments and keeps the best final residual (ties broken by
    restart index, so results are reproducible for a fixed seed).  The loss
    never increases within a restart.  A result with ``converged=False``
    means no restart reached the tolerance -- possibly an obstruction,
    possibly a hard landscape; it is the caller's signal, not an error.
    """
    if system.symbolic:
        raise ValueError("cannot solve a symbolic system; assign constant values")
    dim = system.dimension
    if dim is not None and dim != m:
        raise ValueError(f"constants are {dim}x{dim} but a U({m}) solution was requested")
    opts = opts or SolveOptions()
    best: SolveResult | None = None
    histories: list[list[tuple[float, float]]] = []
    total_iters = 0
    for restart in range(max(1, opts.restarts)):
        rng = np.random.default_rng((opts.seed, restart))
        assignment = {i: haar_random(m, rng) for i in range(1, system.n_vars + 1)}
        history: list[tuple[float, float]] | None = [] if opts.keep_history else None
        _, iters = _descend(system, assignment, opts, history)
        final = residual(system, assignment)
        total_iters += iters
        if history is not None:
            histories.append(history)
        if best is None or final < best.residual:
            best = SolveResult(
                assignment=assignment,
                residual=final,
                converged=final <= opts.tol,
                best_restart=restart,
                iterations=0,
                histories=[],
            )
        if best.converged:
            break
    assert best is not None
    best.histories = histories
    best.iterations = total_iters
    for i, U in best.assignment.items():
        if unitarity_defect(U) > UNITARITY_TOL:
            best.assignment[i] = project_unitary(U)
    best.message = (
        "converged" if best.converged else "no restart reached the tolerance"
    )
    return best


@dataclass(frozen=True)
class ProbeReport:
    dimension: int
    trials: int
    tol: float
    residuals: tuple[float, ...]
    successes: int

    @property
    def all_ok(self) -> bool:
        return self.successes == self.trials


def surjectivity_probe(
    P: Presentation,
    m: int,
    trials: int = 20,
    seed: int = 0,
    tol: float = 1e-6,
    opts: SolveOptions | None = None,
) -> ProbeReport:
    """Empirical check that the word map of a square, non-degenerate system
    is onto U(m)^k: draw Haar targets ``g_j`` and solve ``r_j = g_j``.

    Requires as many relators as generators with non-singular exponent
    matrix (the classical degree-argument hypothesis); anything else raises.
    """
    if P.k != P.n:
        raise ValueError("probe needs a square system (as many relators as generators)")
    if exponent_matrix(P).det() == 0:
        raise ValueError("probe needs a non-singular exponent matrix")
    base_opts = opts or SolveOptions(tol=tol)
    rng = np.random.default_rng(seed)
    names = tuple(f"target{j}" for j in range(P.k))
    residuals = []
    successes = 0
    for trial in range(trials):
        values = {name: haar_random(m, rng) for name in names}
        equations = tuple(
            r * _inverse_constant(names[j]) for j, r in enumerate(P.relators)
        )
        system = EquationSystem(P.n, names, equations, values)
        result = solve(system, m, SolveOptions(
            seed=base_opts.seed + trial,
            restarts=base_opts.restarts,
            max_iter=base_opts.max_iter,
            tol=base_opts.tol,
            keep_history=False,
        ))
        residuals.append(result.residual)
        if result.residual <= tol:
            successes += 1
    return ProbeReport(m, trials, tol, tuple(residuals), successes)


def _inverse_constant(name: str) -> Word:
    from .words import constant

    return Word((constant(name, -1),))


def verify_wreath(
    system: EquationSystem,
    lifted,
    assignment: Assignment,
    table,
) -> float:
    """Evaluate the original equations in the wreath-style overgroup
    ``U(m)^N x| Sym(N)`` at ``z_i = ((u_{i,y})_y, perm(x_i))`` and return the
    largest Frobenius residual of any first coordinate.

    This recomputes the lift directly from the semidirect product law --
    independently of how :func:`lift_system` traced its words -- so agreement
    with the lifted system's residual is a real consistency check.  The
    second coordinate of every product must be the identity permutation; a
    violation means the lift construction itself is broken and raises.
    """
    from .coverings import CosetTable, LiftedSystem

    if not isinstance(lifted, LiftedSystem):
        raise TypeError("verify_wreath expects the LiftedSystem produced by lift_system")
    if not isinstance(table, CosetTable):
        raise TypeError("verify_wreath expects a CosetTable")
    N = table.index
    u = {}
    for i in range(1, lifted.base_n + 1):
        for y in range(N):
            flat = lifted.flat_id(i, y)
            if flat not in assignment:
                raise ValueError(f"assignment misses lifted unknown ({i}, {y})")
            u[(i, y)] = np.asarray(assignment[flat], dtype=complex)
    m = next(iter(u.values())).shape[0]
    eye = np.eye(m, dtype=complex)
    worst = 0.0
    for w in system.equations:
        comps = [eye.copy() for _ in range(N)]
        perm = list(range(N))
        for l in w:
            if l.is_variable:
                i = l.base
                sig = list(table.action[i - 1])
                if l.sign == 1:
                    fac = [u[(i, y)] for y in range(N)]
                    tau = sig
                else:
                    inv_sig = [0] * N
                    for a, b_ in enumerate(sig):
                        inv_sig[b_] = a
                    fac = [u[(i, inv_sig[y])].conj().T for y in range(N)]
                    tau = inv_sig
            else:
                g = _constant_value(system.values, l.base)
                fac = [g if l.sign == 1 else g.conj().T] * N
                tau = list(range(N))
            for y in range(N):
                comps[y] = comps[y] @ fac[perm[y]]
            perm = [tau[perm[y]] for y in range(N)]
        if perm != list(range(N)):
            raise RuntimeError(
                "wreath product second coordinate is not the identity permutation"
            )
        for y in range(N):
            worst = max(worst, float(np.linalg.norm(comps[y] - eye)))
    return worst
