import numpy as np
import pytest

from groupeq.coverings import CosetTable, lift_system, todd_coxeter
from groupeq.presentation import Presentation
from groupeq.unitary import (
    EquationSystem,
    SolveOptions,
    evaluate_word,
    gradient,
    gradients,
    haar_random,
    project_unitary,
    residual,
    solve,
    surjectivity_probe,
    unitarity_defect,
    verify_wreath,
)
from groupeq.words import word


def _rand_unitaries(rng, m, names):
    return {name: haar_random(m, rng) for name in names}


# --- sampling ---------------------------------------------------------------------


def test_haar_deterministic_per_seed():
    a = haar_random(3, 7)
    b = haar_random(3, 7)
    assert np.allclose(a, b)
    c = haar_random(3, 8)
    assert not np.allclose(a, c)


def test_haar_is_unitary():
    rng = np.random.default_rng(0)
    for m in (1, 2, 3, 5, 8):
        u = haar_random(m, rng)
        assert unitarity_defect(u) < 1e-12


def test_haar_trace_moment():
    # E |tr U|^2 = 1 for Haar measure on U(m), any m -- a standard
    # Weingarten identity and a sharp test of the QR phase correction.
    rng = np.random.default_rng(42)
    samples = [abs(np.trace(haar_random(3, rng))) ** 2 for _ in range(10_000)]
    assert abs(np.mean(samples) - 1.0) < 0.05


def test_project_unitary_repairs_drift():
    rng = np.random.default_rng(1)
    u = haar_random(4, rng)
    drifted = u + 1e-6 * (rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
    repaired = project_unitary(drifted)
    assert unitarity_defect(repaired) < 1e-14
    assert np.linalg.norm(repaired - u) < 1e-5


# --- word evaluation ----------------------------------------------------------------


def test_evaluate_word_basic():
    rng = np.random.default_rng(3)
    x = haar_random(3, rng)
    g = haar_random(3, rng)
    w = word([1, "g", -1])
    out = evaluate_word(w, {1: x}, {"g": g})
    assert np.allclose(out, x @ g @ x.conj().T)


def test_evaluate_word_unreduced_cancels():
    rng = np.random.default_rng(4)
    x = haar_random(3, rng)
    out = evaluate_word(word([1, -1]), {1: x}, {})
    assert np.allclose(out, np.eye(3))


def test_evaluate_empty_word_needs_dimension():
    from groupeq.words import Word

    assert np.allclose(evaluate_word(Word(), {}, {}, m=2), np.eye(2))
    with pytest.raises(ValueError):
        evaluate_word(Word(), {}, {})


def test_residual_zero_at_solution():
    # x = diag(i, -i) solves x^2 = diag(-1, -1)
    target = np.diag([-1.0 + 0j, -1.0 + 0j])
    system = EquationSystem(1, ("g",), (word([1, 1, "g'"]),), values={"g": target})
    x = np.diag([1j, -1j])
    assert residual(system, {1: x}) < 1e-14


def test_residual_requires_values():
    system = EquationSystem(1, ("g",), (word([1, "g"]),))
    with pytest.raises(ValueError):
        residual(system, {1: np.eye(2)})


# --- gradients ----------------------------------------------------------------------


def _fd_directional(system, assignment, i, delta, h=1e-7):
    from groupeq.unitary import _expm_skew, _loss_and_grads

    def loss_at(t):
        moved = dict(assignment)
        moved[i] = assignment[i] @ _expm_skew(t * delta)
        val, _, _ = _loss_and_grads(system, moved)
        return val

    return (loss_at(h) - loss_at(-h)) / (2 * h)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    system = EquationSystem(
        2,
        ("g", "h"),
        (word([1, "g", 2, -1, "h"]), word([2, 2, "g", 1])),
        values=_rand_unitaries(rng, 3, ("g", "h")),
    )
    assignment = {1: haar_random(3, rng), 2: haar_random(3, rng)}
    grads = gradients(system, assignment)
    for i in (1, 2):
        omega = grads[i]
        a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        delta = (a - a.conj().T) / 2
        analytic = np.real(np.trace(omega.conj().T @ delta))
        numeric = _fd_directional(system, assignment, i, delta)
        assert abs(analytic - numeric) <= 1e-5 * max(1.0, abs(numeric))


def test_gradient_is_skew():
    rng = np.random.default_rng(12)
    system = EquationSystem(
        1, ("g",), (word([1, 1, 1, "g'"]),), values=_rand_unitaries(rng, 2, ("g",))
    )
    omega = gradient(system, {1: haar_random(2, rng)}, 1)
    assert np.linalg.norm(omega + omega.conj().T) < 1e-12


def test_gradient_vanishes_at_solution():
    target = np.diag([-1.0 + 0j, -1.0 + 0j])
    system = EquationSystem(1, ("g",), (word([1, 1, "g'"]),), values={"g": target})
    omega = gradient(system, {1: np.diag([1j, -1j])}, 1)
    assert np.linalg.norm(omega) < 1e-12


# --- solver --------------------------------------------------------------------------


def test_solve_square_root_of_minus_identity():
    system = EquationSystem(
        1,
        ("g",),
        (word([1, 1, "g'"]),),
        values={"g": np.diag([1j, -1j]) @ np.diag([1j, -1j])},
    )
    result = solve(system, 2, SolveOptions(seed=0, restarts=4))
    assert result.converged
    assert result.residual <= 1e-6
    x = result.assignment[1]
    assert unitarity_defect(x) < 1e-9
    assert np.linalg.norm(x @ x - system.values["g"]) < 1e-6


def test_solve_cube_roots_many_targets():
    rng = np.random.default_rng(2024)
    for trial in range(5):
        g = haar_random(3, rng)
        system = EquationSystem(1, ("g",), (word([1, 1, 1, "g'"]),), values={"g": g})
        result = solve(system, 3, SolveOptions(seed=trial, restarts=4))
        assert result.converged, result.message
        assert result.residual <= 1e-6


def test_solve_negative_control_does_not_raise():
    # [x, c] = w*I with w a nontrivial scalar has no unitary solution:
    # determinants force det([x,c]) = 1 but det(wI) = w^m != 1.
    scalar = np.exp(0.3j) * np.eye(2)
    c = haar_random(2, 5)
    system = EquationSystem(
        1,
        ("c", "t"),
        (word([1, "c", -1, "c'", "t'"]),),
        values={"c": c, "t": scalar},
    )
    result = solve(system, 2, SolveOptions(seed=0, restarts=3, max_iter=800))
    assert not result.converged
    assert result.residual > 1e-6
    assert "tolerance" in result.message


def test_solve_history_monotone():
    rng = np.random.default_rng(7)
    system = EquationSystem(
        1, ("g",), (word([1, 1, "g'"]),), values={"g": haar_random(2, rng)}
    )
    result = solve(system, 2, SolveOptions(seed=1, restarts=1))
    losses = [loss for loss, _ in result.histories[0]]
    assert all(a >= b - 1e-15 for a, b in zip(losses, losses[1:]))


def test_solve_requires_values():
    system = EquationSystem(1, ("g",), (word([1, "g"]),))
    with pytest.raises(ValueError):
        solve(system, 2)


def test_solve_rejects_dimension_mismatch():
    system = EquationSystem(1, ("g",), (word([1, "g"]),), values={"g": np.eye(2)})
    with pytest.raises(ValueError):
        solve(system, 3)


# --- surjectivity probe ---------------------------------------------------------------


def test_probe_accepts_nonsingular_exponents():
    P = Presentation(1, (word([1, 1]),))
    report = surjectivity_probe(P, 2, trials=3, opts=SolveOptions(restarts=3))
    assert report.all_ok
    assert len(report.residuals) == 3


def test_probe_rejects_singular_exponents():
    P = Presentation(2, (word([1, 2, -1, -2]), word([2, 2])))
    with pytest.raises(ValueError):
        surjectivity_probe(P, 2, trials=1)


def test_probe_rejects_nonsquare():
    P = Presentation(2, (word([1, 2]),))
    with pytest.raises(ValueError):
        surjectivity_probe(P, 2, trials=1)


# --- wreath verification ---------------------------------------------------------------


def _x4_system(values=None):
    return EquationSystem(
        1,
        ("g1", "g2", "g3", "g4"),
        (word([1, "g1", 1, "g2", 1, "g3", 1, "g4"]),),
        values=values,
    )


def test_verify_wreath_index1_degenerates_to_residual():
    rng = np.random.default_rng(31)
    values = _rand_unitaries(rng, 2, ("g1", "g2", "g3", "g4"))
    system = _x4_system(values)
    t = CosetTable(1, ((0,),))
    lifted = lift_system(system, t)
    x = haar_random(2, rng)
    r_wreath = verify_wreath(system, lifted, {lifted.flat_id(1, 0): x}, t)
    r_plain = residual(system, {1: x})
    assert abs(r_wreath - r_plain) <= 1e-12


def test_verify_wreath_end_to_end():
    # Lift x g1 x g2 x g3 x g4 over the index-2 cover of <x | x^4>, solve the
    # lifted system, and check the solution back in the wreath product.
    rng = np.random.default_rng(32)
    values = _rand_unitaries(rng, 2, ("g1", "g2", "g3", "g4"))
    system = _x4_system(values)
    table = todd_coxeter(Presentation(1, (word([1, 1, 1, 1]),)), (word([1, 1]),), 100)
    lifted = lift_system(system, table)

    flat = EquationSystem(
        lifted.n_vars,
        system.constants,
        tuple(lifted.equations[(j, y0)] for j in range(len(system.equations)) for y0 in range(table.index)),
        values=values,
    )
    result = solve(flat, 2, SolveOptions(seed=3, restarts=6))
    assert result.converged, result.message
    r = verify_wreath(system, lifted, result.assignment, table)
    assert r <= 1e-6


def test_verify_wreath_rejects_moved_basepoint():
    rng = np.random.default_rng(33)
    values = _rand_unitaries(rng, 2, ("g1", "g2", "g3"))
    system = EquationSystem(
        1, ("g1", "g2", "g3"), (word([1, "g1", 1, "g2", 1, "g3"]),), values=values
    )
    t = CosetTable(3, ((1, 2, 0),))
    lifted = lift_system(system, t)
    # x^3 acts trivially on 3 cosets but a single bare x would not; craft a
    # table whose permutation fails to close for a fake one-letter system.
    bad = EquationSystem(1, (), (word([1]),))
    with pytest.raises(ValueError):
        lift_system(bad, t)
    # and the honest lift verifies fine with any unitaries
    assignment = {lifted.flat_id(1, y): haar_random(2, rng) for y in range(3)}
    r = verify_wreath(system, lifted, assignment, t)
    assert r >= 0.0


def test_verify_wreath_detects_wrong_solution():
    rng = np.random.default_rng(34)
    values = _rand_unitaries(rng, 2, ("g1", "g2", "g3", "g4"))
    system = _x4_system(values)
    table = todd_coxeter(Presentation(1, (word([1, 1, 1, 1]),)), (word([1, 1]),), 100)
    lifted = lift_system(system, table)
    junk = {lifted.flat_id(1, y): haar_random(2, rng) for y in range(2)}
    assert verify_wreath(system, lifted, junk, table) > 1e-3


# --- system plumbing --------------------------------------------------------------------


def test_system_validates_constants():
    with pytest.raises(ValueError):
        EquationSystem(1, ("g",), (word([1, "h"]),))
    with pytest.raises(ValueError):
        EquationSystem(1, ("g",), (word([2, "g"]),))


def test_system_values_dimensions_checked():
    with pytest.raises(ValueError):
        EquationSystem(
            1,
            ("g", "h"),
            (word([1, "g", "h"]),),
            values={"g": np.eye(2), "h": np.eye(3)},
        )


def test_system_presentation_strips_constants():
    system = _x4_system()
    P = system.presentation()
    assert P.n == 1
    assert P.relators == (word([1, 1, 1, 1]),)


def test_with_values_roundtrip():
    system = _x4_system()
    assert system.symbolic
    rng = np.random.default_rng(35)
    concrete = system.with_values(_rand_unitaries(rng, 2, system.constants))
    assert not concrete.symbolic
    assert concrete.dimension == 2
    assert concrete.equations == system.equations
