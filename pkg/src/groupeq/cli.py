"""Command-line front end: file parsing, the four subcommands, and the corpus.

The input grammar is line-oriented and whitespace-separated::

    # comment (full line or trailing)
    variables: x y
    constants: g h
    constant_values: values.json
    assert_aspherical: CCH81
    equation: x g y' x' h

``relator:`` lines replace ``equation:`` lines for presentation-only files
(no constants allowed there).  A trailing apostrophe inverts a letter.  Keys
also accept ``=`` as the separator.  Equations are kept exactly as written
unless ``--reduce`` is passed -- pre-cancellation spelling is part of what
the certification pipeline classifies.

Exit codes are a stable contract: 0 when a certificate is found or a solve
converges, 2 for Unknown / non-convergence, 1 for any error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .certify import CertifyOptions, certify
from .coverings import BudgetExceeded, lift_system, todd_coxeter
from .presentation import Presentation, exponent_matrix
from .report import (
    Report,
    certificate_to_dict,
    input_digest,
    lift_to_dict,
    lifted_variable_names,
    matrix_to_pairs,
    write_report,
)
from .unitary import EquationSystem, SolveOptions, solve, verify_wreath
from .words import Letter, Word, augment, format_word, reduce

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNKNOWN = 2

_NAME_CHARS_OK = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_"


class ParseError(ValueError):
    """Syntax or declaration error, carrying 1-based line and column."""

    def __init__(self, message: str, line: int, col: int = 1):
        super().__init__(f"line {line}, column {col}: {message}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class SystemFile:
    """A parsed input file: the system plus its file-level annotations."""

    system: EquationSystem
    variable_names: tuple[str, ...]
    presentation_mode: bool = False
    assertions: tuple[str, ...] = ()
    values_path: str | None = None


def _valid_name(tok: str) -> bool:
    return (
        bool(tok)
        and not tok[0].isdigit()
        and all(c in _NAME_CHARS_OK for c in tok)
    )


def parse_system(text: str) -> SystemFile:
    """Parse the line grammar above into an :class:`EquationSystem`.

    Raises :class:`ParseError` with the offending position on any syntax
    problem, undeclared symbol, or out-of-order declaration.
    """
    variables: list[str] = []
    constants: list[str] = []
    equations: list[Word] = []
    assertions: list[str] = []
    values_path: str | None = None
    mode: str | None = None  # "equation" or "relator"
    seen_decl = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if ":" in line:
            key, _, rest = line.partition(":")
        elif "=" in line:
            key, _, rest = line.partition("=")
        else:
            raise ParseError("expected 'key: value'", lineno)
        key = key.strip()
        rest = rest.strip()

        if key == "variables":
            if seen_decl:
                raise ParseError("variables must be declared once, first", lineno)
            seen_decl = True
            for tok in rest.split():
                if not _valid_name(tok):
                    raise ParseError(f"bad variable name {tok!r}", lineno, raw.find(tok) + 1)
                if tok in variables:
                    raise ParseError(f"duplicate variable {tok!r}", lineno, raw.find(tok) + 1)
                variables.append(tok)
            if not variables:
                raise ParseError("empty variable declaration", lineno)
        elif key == "constants":
            if not seen_decl:
                raise ParseError("constants must follow the variables line", lineno)
            for tok in rest.split():
                if not _valid_name(tok):
                    raise ParseError(f"bad constant name {tok!r}", lineno, raw.find(tok) + 1)
                if tok in constants or tok in variables:
                    raise ParseError(f"name {tok!r} already declared", lineno, raw.find(tok) + 1)
                constants.append(tok)
        elif key in ("equation", "relator"):
            if not seen_decl:
                raise ParseError("equations must follow the variables line", lineno)
            if mode is None:
                mode = key
            elif mode != key:
                raise ParseError("cannot mix 'equation:' and 'relator:' lines", lineno)
            if key == "relator" and constants:
                raise ParseError("relator files cannot declare constants", lineno)
            equations.append(_parse_letters(rest, raw, lineno, variables, constants))
        elif key == "constant_values":
            if not rest:
                raise ParseError("missing path after constant_values", lineno)
            values_path = rest
        elif key == "assert_aspherical":
            if not rest:
                raise ParseError("missing citation tag after assert_aspherical", lineno)
            assertions.append(rest)
        else:
            raise ParseError(f"unknown key {key!r}", lineno)

    if not variables:
        raise ParseError("no variables declared", max(1, text.count("\n") + 1))
    system = EquationSystem(len(variables), tuple(constants), tuple(equations))
    return SystemFile(
        system=system,
        variable_names=tuple(variables),
        presentation_mode=(mode == "relator"),
        assertions=tuple(assertions),
        values_path=values_path,
    )


def _parse_letters(
    rest: str, raw: str, lineno: int, variables: list[str], constants: list[str]
) -> Word:
    letters: list[Letter] = []
    col = raw.find(":")
    col = col + 2 if col >= 0 else 1
    for tok in rest.split():
        col = raw.find(tok, col - 1) + 1
        sign = 1
        name = tok
        if tok.endswith("'"):
            sign = -1
            name = tok[:-1]
        if not _valid_name(name):
            raise ParseError(f"bad letter {tok!r}", lineno, col)
        if name in variables:
            letters.append(Letter(variables.index(name) + 1, sign))
        elif name in constants:
            letters.append(Letter(name, sign))
        else:
            raise ParseError(f"undeclared symbol {name!r}", lineno, col)
    return Word(tuple(letters))


def print_system(sf: SystemFile) -> str:
    """Render a parsed file back to its surface syntax.

    ``parse_system(print_system(parse_system(text)))`` equals
    ``parse_system(text)``: printing is the grammar's normal form.
    """
    lines = [f"variables: {' '.join(sf.variable_names)}"]
    if sf.system.constants:
        lines.append(f"constants: {' '.join(sf.system.constants)}")
    if sf.values_path:
        lines.append(f"constant_values: {sf.values_path}")
    for tag in sf.assertions:
        lines.append(f"assert_aspherical: {tag}")
    key = "relator" if sf.presentation_mode else "equation"
    for eq in sf.system.equations:
        lines.append(f"{key}: {format_word(eq, sf.variable_names)}")
    return "\n".join(lines) + "\n"


def load_values(path: str | Path) -> dict[str, np.ndarray]:
    """Read the matrix file: JSON mapping name -> m x m array of [re, im]."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("matrix file must be a JSON object mapping names to matrices")
    out: dict[str, np.ndarray] = {}
    m: int | None = None
    for name, rows in doc.items():
        if not isinstance(rows, list) or not rows:
            raise ValueError(f"constant {name!r}: expected a non-empty matrix")
        size = len(rows)
        mat = np.zeros((size, size), dtype=complex)
        for r, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != size:
                raise ValueError(f"constant {name!r}: matrix is not square")
            for c, pair in enumerate(row):
                if (
                    not isinstance(pair, list)
                    or len(pair) != 2
                    or not all(isinstance(x, (int, float)) for x in pair)
                ):
                    raise ValueError(
                        f"constant {name!r}: entry ({r},{c}) is not an [re, im] pair"
                    )
                mat[r, c] = complex(pair[0], pair[1])
        if m is None:
            m = size
        elif m != size:
            raise ValueError(
                f"constant {name!r} is {size}x{size} but earlier constants are {m}x{m}"
            )
        out[name] = mat
    return out


def _read_file(path: str) -> tuple[SystemFile, str]:
    text = Path(path).read_text(encoding="utf-8")
    return parse_system(text), text


def _apply_reduce(sf: SystemFile) -> SystemFile:
    reduced = tuple(reduce(eq) for eq in sf.system.equations)
    return replace(sf, system=replace_equations(sf.system, reduced))


def replace_equations(system: EquationSystem, equations: tuple[Word, ...]) -> EquationSystem:
    return EquationSystem(system.n_vars, system.constants, equations, system.values)


def _presentation_of(sf: SystemFile) -> Presentation:
    relators = tuple(augment(eq) for eq in sf.system.equations)
    return Presentation(sf.system.n_vars, relators, allow_trivial=True)


def _int_env(name: str, fallback: int) -> int:
    raw = os.environ.get(name)
    if raw is None:
        return fallback
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"environment variable {name} must be an integer, got {raw!r}")


# --- subcommands ------------------------------------------------------------------


def cmd_check(args: argparse.Namespace) -> int:
    sf, text = _read_file(args.file)
    if args.reduce:
        sf = _apply_reduce(sf)
    t0 = time.perf_counter()
    P = _presentation_of(sf)
    opts = CertifyOptions(
        max_index=args.max_index,
        coset_budget=args.coset_budget,
        assertions=sf.assertions,
    )
    cert = certify(P, opts)
    elapsed = time.perf_counter() - t0

    report = Report(
        command="check",
        digest=input_digest(text),
        timings={"certify_s": elapsed},
        certificate=certificate_to_dict(cert, sf.variable_names),
        exponent=exponent_matrix(P),
    )
    _emit(args, report)
    if not args.json:
        print(cert.summary())
    return EXIT_OK if cert.is_certificate else EXIT_UNKNOWN


def _concrete_system(
    sf: SystemFile, args: argparse.Namespace, base_dir: Path
) -> EquationSystem:
    system = sf.system
    if system.constants:
        path = args.values if getattr(args, "values", None) else sf.values_path
        if path is None:
            raise ValueError("constants have no values; add a constant_values line or --values")
        if not Path(path).is_absolute():
            path = base_dir / path
        values = load_values(path)
        missing = [c for c in system.constants if c not in values]
        if missing:
            raise ValueError(f"matrix file lacks values for: {', '.join(missing)}")
        system = system.with_values({c: values[c] for c in system.constants})
        dim = system.dimension
        if dim is not None and dim != args.m:
            raise ValueError(f"constants are {dim}x{dim} but --m {args.m} was requested")
    return system


def cmd_solve(args: argparse.Namespace) -> int:
    sf, text = _read_file(args.file)
    if args.reduce:
        sf = _apply_reduce(sf)
    system = _concrete_system(sf, args, Path(args.file).resolve().parent)
    opts = SolveOptions(
        seed=args.seed, restarts=args.restarts, max_iter=args.max_iter, tol=args.tol
    )
    t0 = time.perf_counter()
    result = solve(system, args.m, opts)
    elapsed = time.perf_counter() - t0

    assignment = {
        sf.variable_names[i - 1]: matrix_to_pairs(U)
        for i, U in sorted(result.assignment.items())
    }
    report = Report(
        command="solve",
        digest=input_digest(text),
        timings={"solve_s": elapsed},
        numerical={
            "residual": result.residual,
            "converged": result.converged,
            "dimension": args.m,
            "seed": args.seed,
            "restarts": args.restarts,
            "best_restart": result.best_restart,
            "iterations": result.iterations,
            "tolerance": args.tol,
            "message": result.message,
            "assignment": assignment,
        },
        histories=result.histories,
    )
    _emit(args, report)
    if not args.json:
        print(f"residual {result.residual:.3e} ({result.message})")
    return EXIT_OK if result.converged else EXIT_UNKNOWN


def _parse_subgroup_words(spec: str, sf: SystemFile) -> tuple[Word, ...]:
    out = []
    for chunk in spec.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        w = _parse_letters(chunk, chunk, 1, list(sf.variable_names), [])
        out.append(w)
    return tuple(out)


def cmd_lift(args: argparse.Namespace) -> int:
    sf, text = _read_file(args.file)
    if args.reduce:
        sf = _apply_reduce(sf)
    subgroup = _parse_subgroup_words(args.subgroup, sf)
    P = _presentation_of(sf)
    t0 = time.perf_counter()
    table = todd_coxeter(P, subgroup, max_cosets=args.max_cosets)
    lifted = lift_system(sf.system, table)
    lift_elapsed = time.perf_counter() - t0

    names = lifted_variable_names(lifted, sf.variable_names)
    flat = EquationSystem(
        lifted.n_vars,
        sf.system.constants,
        tuple(w for _, w in sorted(lifted.equations.items())),
    )
    report = Report(
        command="lift",
        digest=input_digest(text),
        timings={"lift_s": lift_elapsed},
        lift=lift_to_dict(lifted, sf.variable_names),
    )

    exit_code = EXIT_OK
    if args.solve:
        lifted_file = SystemFile(
            system=flat,
            variable_names=names,
            assertions=sf.assertions,
            values_path=sf.values_path,
        )
        system = _concrete_system(lifted_file, args, Path(args.file).resolve().parent)
        opts = SolveOptions(
            seed=args.seed, restarts=args.restarts, max_iter=args.max_iter, tol=args.tol
        )
        t1 = time.perf_counter()
        result = solve(system, args.m, opts)
        base_values = (
            {c: system.values[c] for c in sf.system.constants} if sf.system.constants else {}
        )
        wreath = verify_wreath(
            sf.system.with_values(base_values) if sf.system.constants else sf.system,
            lifted,
            result.assignment,
            table,
        )
        report.timings["solve_s"] = time.perf_counter() - t1
        report.numerical = {
            "residual": result.residual,
            "converged": result.converged,
            "dimension": args.m,
            "seed": args.seed,
            "restarts": args.restarts,
            "best_restart": result.best_restart,
            "iterations": result.iterations,
            "tolerance": args.tol,
            "message": result.message,
            "wreath_residual": wreath,
            "assignment": {
                names[i - 1]: matrix_to_pairs(U)
                for i, U in sorted(result.assignment.items())
            },
        }
        report.histories = result.histories
        exit_code = EXIT_OK if result.converged else EXIT_UNKNOWN

    _emit(args, report)
    if not args.json:
        print(print_system(SystemFile(system=flat, variable_names=names)), end="")
        if args.solve and report.numerical is not None:
            print(
                f"residual {report.numerical['residual']:.3e}, "
                f"wreath residual {report.numerical['wreath_residual']:.3e}"
            )
    return exit_code


CORPUS: dict[str, str] = {
    "kervaire": """\
# One unknown with exponent sum 3: x^3 = g.  The archetypal
# Kervaire-Laudenbach equation; solvable over every group by the degree
# argument of Gerstenhaber-Rothaus (1962).
# Expected certificate: Direct.
variables: x
constants: g
equation: x x x g'
""",
    "commutator3": """\
# Three cyclic commutators in three unknowns: [a,b] = [b,c] = [c,a] = 1.
# The second homotopy group of the presentation complex is generated by the
# Hall-Witt identity.  Solvability over Connes-embeddable groups is open,
# so the expected outcome is Unknown: no certificate may be produced.
variables: a b c
equation: a b a' b'
equation: b c b' c'
equation: c a c' a'
""",
    "commutator4": """\
# All six pairwise commutators in four unknowns.  Not universally solvable:
# once [a,c], [a,d], [b,c], [b,d] are trivial, [a,b] must commute with
# [c,d], so generic right-hand sides are inconsistent.
# Expected certificate: Unknown (and provably none can exist).
variables: a b c d
equation: a b a' b'
equation: a c a' c'
equation: a d a' d'
equation: b c b' c'
equation: b d b' d'
equation: c d c' d'
""",
    "gersten": """\
# Gersten (1987), Theorem 6: the unreduced system a^2, b^2, c^2, d^2,
# a b t c d t^-1 is solvable over every group by combinatorial methods,
# but with the constants placed as below a solution forces a, b, t c t^-1,
# t d t^-1 to commute with g1, so [g1, g2] != 1 admits no solution.  The
# presentation complex is Cockcroft (second Hurewicz map zero), which is
# therefore insufficient for solvability.
# Expected certificate: Unknown, exponent rank 4 of 5.
variables: a b c d t
constants: g1 g2
equation: a a g1'
equation: b b g1'
equation: c c t' g1' t
equation: d d t' g1' t
equation: a b t c d t' g2'
""",
    "baumslag": """\
# Baumslag's relator (b a b^-1) a (b a b^-1)^-1 a^-2 forces a to be trivial
# or of infinite order; [a,c] = g with g != 1 rules out the former, so no
# finite group contains a solution.  The presentation complex is aspherical
# by Chiswell-Collins-Huebschmann (1981), Theorem 3.1 -- hence the
# annotation below.  Expected certificate: AssertedAspherical with the
# annotation, Unknown without it.
variables: a b c
constants: g
equation: b a b' a b a' b' a' a'
equation: a c a' c' g'
assert_aspherical: CCH81
""",
}


def cmd_corpus(args: argparse.Namespace) -> int:
    if args.name is None:
        for name in sorted(CORPUS):
            print(name)
        return EXIT_OK
    if args.name not in CORPUS:
        raise ValueError(
            f"unknown corpus entry {args.name!r}; available: {', '.join(sorted(CORPUS))}"
        )
    out_dir = Path(args.dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{args.name}.eq"
    path.write_text(CORPUS[args.name], encoding="utf-8")
    print(path)
    return EXIT_OK


def _emit(args: argparse.Namespace, report: Report) -> None:
    if getattr(args, "report_dir", None):
        write_report(report, args.report_dir)
    if getattr(args, "json", False):
        print(json.dumps(report.to_json_dict(), indent=2, sort_keys=True))


# --- argument plumbing ---------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("file", help="system file in the line grammar")
    p.add_argument("--reduce", action="store_true", help="freely reduce equations after parsing")
    p.add_argument("--json", action="store_true", help="print the JSON report to stdout")
    p.add_argument("--report-dir", help="write report.json, TSV tables, and figures here")


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--m", type=int, default=2, help="unitary dimension (default 2)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--values", help="matrix file overriding the constant_values line")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groupeq",
        description="certify and numerically solve equations over unitary groups",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_check = sub.add_parser("check", help="run the certificate cascade")
    _add_common(p_check)
    p_check.add_argument(
        "--max-index",
        type=int,
        default=_int_env("GROUPEQ_MAX_INDEX", 5),
        help="covering search depth (env GROUPEQ_MAX_INDEX)",
    )
    p_check.add_argument(
        "--coset-budget",
        type=int,
        default=_int_env("GROUPEQ_COSET_BUDGET", 500_000),
        help="node budget for the covering search (env GROUPEQ_COSET_BUDGET)",
    )
    p_check.set_defaults(func=cmd_check)

    p_solve = sub.add_parser("solve", help="search for a unitary solution")
    _add_common(p_solve)
    _add_solver_flags(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_lift = sub.add_parser("lift", help="lift a system through a finite covering")
    _add_common(p_lift)
    _add_solver_flags(p_lift)
    p_lift.add_argument(
        "--subgroup",
        default="",
        help="semicolon-separated subgroup generator words (empty = regular cover)",
    )
    p_lift.add_argument(
        "--max-cosets",
        type=int,
        default=_int_env("GROUPEQ_COSET_BUDGET", 10_000),
        help="coset enumeration budget (env GROUPEQ_COSET_BUDGET)",
    )
    p_lift.add_argument("--solve", action="store_true", help="also solve the lifted system")
    p_lift.set_defaults(func=cmd_lift)

    p_corpus = sub.add_parser("corpus", help="list or write the bundled examples")
    p_corpus.add_argument("name", nargs="?", help="entry to write (omit to list)")
    p_corpus.add_argument("--dir", default=".", help="output directory")
    p_corpus.set_defaults(func=cmd_corpus)

    return parser


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (ParseError, BudgetExceeded, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
