import random
from fractions import Fraction

import pytest

from groupeq.certify import (
    Certificate,
    CertifyOptions,
    certify,
    small_cancellation_check,
    verify_certificate,
)
from groupeq.presentation import Presentation, transform
from groupeq.words import Word, max_root, reduce, word
from helpers import (
    brute_pieces_ok,
    divisor_period_root,
    random_cyclically_reduced_word,
    random_presentation,
    random_transform_op,
)

COMMUTATOR = Presentation(2, (word([1, 2, -1, -2]),))
X3 = Presentation(1, (word([1, 1, 1]),))
ABAB = Presentation(2, (word([1, 2, 1, 2]),))
COMMUTATORS_3 = Presentation(
    3, (word([1, 2, -1, -2]), word([2, 3, -2, -3]), word([3, 1, -3, -1]))
)
# b a b' a b a' b' a' a' together with [a, c]: rank-one exponent matrix,
# not one-relator, not small cancellation -- only an annotation can place it
BAUMSLAG_LIKE = Presentation(
    3, (word([2, 1, -2, 1, 2, -1, -2, -1, -1]), word([1, 3, -1, -3]))
)
GERSTEN = Presentation(
    5,
    (
        word([1, 1]),
        word([2, 2]),
        word([3, 3]),
        word([4, 4]),
        word([1, 2, 5, 3, 4, -5]),
    ),
)


def de_bruijn_cycle(k: int, n: int) -> list[int]:
    """Standard Lyndon-word concatenation; every length-n window over a
    k-letter alphabet appears exactly once cyclically."""
    a = [0] * (k * n)
    seq: list[int] = []

    def db(t: int, p: int) -> None:
        if t > n:
            if n % p == 0:
                seq.extend(a[1 : p + 1])
        else:
            a[t] = a[t - p]
            db(t + 1, p)
            for j in range(a[t - p] + 1, k):
                a[t] = j
                db(t + 1, t)

    db(1, 1)
    return seq


LONG_POSITIVE = Presentation(
    2, (word([1 if bit == 0 else 2 for bit in de_bruijn_cycle(2, 7)]),)
)


# --- small cancellation ------------------------------------------------------------


def test_commutator_fails_c6():
    # the piece "a" (rotations of [a,b] and of its inverse share it) has
    # length 1 >= (1/6) * 4
    assert not small_cancellation_check(COMMUTATOR)


def test_long_positive_word_passes_c6():
    # 128 letters, all cyclic 7-windows distinct: pieces have length <= 6
    # while rotations of the inverse contribute none (signs differ), and
    # 6 < 128/6
    assert len(LONG_POSITIVE.relators[0]) == 128
    assert small_cancellation_check(LONG_POSITIVE)


def test_proper_power_rejected_by_gate():
    assert not small_cancellation_check(X3)


def test_small_cancellation_input_validation():
    with pytest.raises(ValueError):
        small_cancellation_check(Presentation(1, (), allow_trivial=True).__class__(
            1, (Word(),), allow_trivial=True
        ))
    not_cyclic = Presentation(2, (word([1, 2, -1]),))
    with pytest.raises(ValueError):
        small_cancellation_check(not_cyclic)
    with pytest.raises(ValueError):
        small_cancellation_check(COMMUTATOR, Fraction(0))


def test_lambda_monotone():
    # weakening the bound can only admit more presentations
    assert not small_cancellation_check(COMMUTATOR, Fraction(1, 6))
    assert not small_cancellation_check(COMMUTATOR, Fraction(1, 5))
    assert small_cancellation_check(COMMUTATOR, Fraction(2, 1))


def test_small_cancellation_matches_brute_oracle():
    rng = random.Random(71)
    lam = Fraction(1, 6)
    agree = 0
    for _ in range(120):
        n = rng.randint(1, 3)
        relators = tuple(
            random_cyclically_reduced_word(rng, n, rng.randint(2, 10))
            for _ in range(rng.randint(1, 3))
        )
        P = Presentation(n, relators)
        primitive = all(max_root(r)[1] == 1 for r in relators)
        expected = primitive and brute_pieces_ok(list(relators), lam)
        assert small_cancellation_check(P, lam) == expected
        agree += 1
    assert agree == 120


# --- the cascade -------------------------------------------------------------------


def test_x3_direct():
    cert = certify(X3)
    assert cert.variant == "Direct"
    assert cert.invariant_factors == (3,)
    assert verify_certificate(X3, cert)


def test_abab_direct_and_torsion_fallback():
    cert = certify(ABAB)
    assert cert.variant == "Direct"

    fallback = certify(ABAB, CertifyOptions(disabled=frozenset({"direct"})))
    assert fallback.variant == "OneRelatorTorsion"
    assert fallback.root == word([1, 2])
    assert fallback.exponent == 2
    assert verify_certificate(ABAB, fallback)


def test_commutator_torsion_free():
    cert = certify(COMMUTATOR)
    assert cert.variant == "OneRelatorTorsionFree"
    assert cert.root == word([1, 2, -1, -2])
    assert cert.exponent == 1
    assert verify_certificate(COMMUTATOR, cert)


def test_one_relator_root_is_conjugated_back():
    # w = a (bc)^3 a' cyclically reduces to (bc)^3 with conjugator a
    w = reduce(word([1]) * word([2, 3]).power(3) * word([-1]))
    P = Presentation(3, (w,))
    cert = certify(P, CertifyOptions(disabled=frozenset({"direct"})))
    assert cert.variant == "OneRelatorTorsion"
    assert cert.exponent == 3
    assert cert.root == word([1, 2, 3, -1])
    assert verify_certificate(P, cert)


def test_small_cancellation_branch():
    cert = certify(LONG_POSITIVE, CertifyOptions(disabled=frozenset({"direct", "one_relator"})))
    assert cert.variant == "SmallCancellation"
    assert cert.lam == Fraction(1, 6)
    assert verify_certificate(LONG_POSITIVE, cert)


def test_covering_branch_via_disabled_hook():
    opts = CertifyOptions(
        disabled=frozenset({"direct", "one_relator", "small_cancellation"})
    )
    cert = certify(X3, opts)
    assert cert.variant == "Covering"
    assert cert.table is not None
    assert verify_certificate(X3, cert)


def test_commutators3_unknown_at_index5():
    cert = certify(COMMUTATORS_3, CertifyOptions(max_index=5))
    assert cert.variant == "Unknown"
    assert cert.exponent_rank == 0
    assert not cert.budget_exhausted
    assert not verify_certificate(COMMUTATORS_3, cert)


def test_annotation_required_for_asserted():
    bare = certify(BAUMSLAG_LIKE, CertifyOptions(max_index=3))
    assert bare.variant == "Unknown"
    assert bare.exponent_rank == 1

    annotated = certify(
        BAUMSLAG_LIKE, CertifyOptions(max_index=3, assertions=("CCH81",))
    )
    assert annotated.variant == "AssertedAspherical"
    assert annotated.citation == "CCH81"
    assert verify_certificate(BAUMSLAG_LIKE, annotated)


def test_gersten_unknown_with_rank_evidence():
    cert = certify(GERSTEN, CertifyOptions(max_index=3))
    assert cert.variant == "Unknown"
    assert cert.exponent_rank == 4


def test_budget_flag_on_unknown():
    cert = certify(COMMUTATORS_3, CertifyOptions(max_index=5, coset_budget=10))
    assert cert.variant == "Unknown"
    assert cert.budget_exhausted


def test_one_relator_random_roots_match_oracle():
    rng = random.Random(99)
    opts = CertifyOptions(disabled=frozenset({"direct"}))
    for _ in range(100):
        n = rng.randint(1, 3)
        z = random_cyclically_reduced_word(rng, n, rng.randint(1, 10))
        root, power = max_root(z)
        if power != 1:
            z = root  # retry with the primitive root instead
        r = rng.randint(2, 5)
        P = Presentation(n, (reduce(z.power(r)),))
        cert = certify(P, opts)
        assert cert.variant == "OneRelatorTorsion"
        assert cert.exponent == r
        assert cert.root == z
        oracle_root, oracle_power = divisor_period_root(reduce(z.power(r)))
        assert cert.root == oracle_root and cert.exponent == oracle_power
        assert verify_certificate(P, cert)


def test_soundness_random():
    rng = random.Random(123)
    for _ in range(60):
        P = random_presentation(rng, max_n=3, max_k=3, max_len=8)
        cert = certify(P, CertifyOptions(max_index=3))
        if cert.is_certificate:
            assert verify_certificate(P, cert), (P, cert)


def test_verification_rejects_mismatched_evidence():
    cert = certify(X3)
    wrong = Certificate("Direct", invariant_factors=(2,))
    assert not verify_certificate(X3, wrong)
    assert not verify_certificate(COMMUTATORS_3, cert)
    assert not verify_certificate(
        X3, Certificate("OneRelatorTorsion", root=word([1]), exponent=2)
    )


def test_monotone_in_max_index():
    rng = random.Random(321)
    for _ in range(40):
        P = random_presentation(rng, max_n=3, max_k=3, max_len=6)
        small = certify(P, CertifyOptions(max_index=2))
        large = certify(P, CertifyOptions(max_index=4))
        if small.is_certificate:
            assert large.is_certificate


def test_cascade_stable_under_transforms():
    rng = random.Random(7)
    for _ in range(50):
        P = random_presentation(rng, max_n=3, max_k=3, max_len=6)
        if certify(P, CertifyOptions(max_index=2)).variant != "Direct":
            continue
        Q = P
        for _ in range(rng.randint(1, 4)):
            op = random_transform_op(rng, Q)
            Q = transform(Q, op)
        assert certify(Q, CertifyOptions(max_index=2)).is_certificate


def test_certificate_variant_validation():
    with pytest.raises(ValueError):
        Certificate("Bogus")


def test_summaries_mention_variant_facts():
    assert "3" in certify(X3).summary()
    unknown = certify(COMMUTATORS_3, CertifyOptions(max_index=2))
    assert "Unknown" in unknown.summary()
