"""Structured run reports: JSON documents, delimited tables, and figures.

Every CLI command can emit a machine-readable report.  The JSON document
validates against the packaged ``report.schema.json``; alongside it the
report directory receives tab-separated tables (stable, diff-friendly) and
rendered PNG figures -- an exponent-matrix heatmap for certification runs
and per-restart convergence curves for numerical runs.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .certify import Certificate
from .coverings import LiftedSystem
from .presentation import IntegerMatrix
from .words import format_word

SCHEMA_VERSION = 1


def input_digest(text: str) -> str:
    """Hex SHA-256 of the input file text, tying a report to its input."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def load_schema() -> dict:
    with resources.files("groupeq").joinpath("report.schema.json").open("rb") as fh:
        return json.load(fh)


def matrix_to_pairs(M: np.ndarray) -> list[list[list[float]]]:
    """An m x m complex matrix as nested [re, im] pairs (the matrix-file format)."""
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(M)]


def certificate_to_dict(cert: Certificate, var_names: tuple[str, ...]) -> dict[str, Any]:
    """Serialize a certificate with enough evidence to re-verify it."""
    out: dict[str, Any] = {"variant": cert.variant, "summary": cert.summary()}
    if cert.invariant_factors is not None:
        out["invariant_factors"] = list(cert.invariant_factors)
    if cert.root is not None:
        out["root"] = format_word(cert.root, var_names)
    if cert.exponent is not None:
        out["exponent"] = cert.exponent
    if cert.lam is not None:
        out["lambda"] = [cert.lam.numerator, cert.lam.denominator]
    if cert.table is not None:
        out["table"] = {
            "index": cert.table.index,
            "action": [list(p) for p in cert.table.action],
        }
    if cert.citation is not None:
        out["citation"] = cert.citation
    if cert.exponent_rank is not None:
        out["exponent_rank"] = cert.exponent_rank
    if cert.variant == "Unknown":
        out["budget_exhausted"] = cert.budget_exhausted
    return out


@dataclass
class Report:
    """Everything one command run produced, ready for serialization."""

    command: str
    digest: str
    timings: dict[str, float] = field(default_factory=dict)
    certificate: dict[str, Any] | None = None
    numerical: dict[str, Any] | None = None
    lift: dict[str, Any] | None = None
    histories: list[list[tuple[float, float]]] | None = None
    exponent: IntegerMatrix | None = None

    def to_json_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "input_digest": self.digest,
            "timings": {k: float(v) for k, v in self.timings.items()},
        }
        if self.certificate is not None:
            doc["certificate"] = self.certificate
        if self.numerical is not None:
            doc["numerical"] = self.numerical
        if self.lift is not None:
            doc["lift"] = self.lift
        return doc


def lift_to_dict(lifted: LiftedSystem, var_names: tuple[str, ...]) -> dict[str, Any]:
    names = lifted_variable_names(lifted, var_names)
    eqs = []
    for (j, y0), w in sorted(lifted.equations.items()):
        eqs.append(
            {
                "equation": j,
                "basepoint": y0,
                "word": format_word(w, names),
            }
        )
    return {
        "index": lifted.index,
        "unknowns": len(lifted.unknowns),
        "equations": eqs,
    }


def lifted_variable_names(lifted: LiftedSystem, var_names: tuple[str, ...]) -> tuple[str, ...]:
    """Names for the lifted unknowns: base name + ``_`` + coset number."""
    return tuple(f"{var_names[i - 1]}_{y}" for (i, y) in lifted.unknowns)


def _write_summary_tsv(path: Path, doc: Mapping[str, Any]) -> None:
    rows: list[tuple[str, str]] = []

    def walk(prefix: str, value: Any) -> None:
        if isinstance(value, Mapping):
            for k, v in value.items():
                walk(f"{prefix}.{k}" if prefix else str(k), v)
        elif isinstance(value, list) and all(
            not isinstance(x, (dict, list)) for x in value
        ):
            rows.append((prefix, " ".join(str(x) for x in value)))
        elif isinstance(value, list):
            rows.append((prefix, f"[{len(value)} entries]"))
        else:
            rows.append((prefix, str(value)))

    walk("", doc)
    with path.open("w", encoding="utf-8") as fh:
        fh.write("key\tvalue\n")
        for k, v in rows:
            fh.write(f"{k}\t{v}\n")


def _write_history_tsv(path: Path, histories: list[list[tuple[float, float]]]) -> None:
    with path.open("w", encoding="utf-8") as fh:
        fh.write("restart\tstep\tloss\tresidual\n")
        for r, history in enumerate(histories):
            for step, (loss, res) in enumerate(history):
                fh.write(f"{r}\t{step}\t{loss:.17g}\t{res:.17g}\n")


def _render_convergence(path: Path, histories: list[list[tuple[float, float]]]) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for r, history in enumerate(histories):
        if not history:
            continue
        losses = [max(loss, 1e-300) for loss, _ in history]
        ax.semilogy(losses, label=f"restart {r}", linewidth=1.2)
    ax.set_xlabel("accepted step")
    ax.set_ylabel("loss")
    ax.set_title("descent convergence")
    if len(histories) <= 10:
        ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def _render_exponent_heatmap(path: Path, E: IntegerMatrix) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    data = np.array(E.to_lists(), dtype=float) if E.rows and E.cols else np.zeros((1, 1))
    fig, ax = plt.subplots(figsize=(max(3.5, 0.6 * data.shape[1] + 2), max(3, 0.6 * data.shape[0] + 1.5)))
    vmax = max(1.0, float(np.abs(data).max()))
    im = ax.imshow(data, cmap="RdBu_r", vmin=-vmax, vmax=vmax)
    for (r, c), v in np.ndenumerate(data):
        ax.text(c, r, f"{int(v)}", ha="center", va="center", fontsize=9)
    ax.set_xlabel("generator")
    ax.set_ylabel("relator")
    ax.set_title("exponent matrix")
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def write_report(report: Report, out_dir: str | Path) -> Path:
    """Write ``report.json`` plus its tables and figures into ``out_dir``.

    Returns the path of the JSON document.  Figures are rendered only for
    the data actually present: a convergence plot when descent histories
    exist, an exponent heatmap when a matrix was attached.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    doc = report.to_json_dict()
    json_path = out / "report.json"
    json_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _write_summary_tsv(out / "summary.tsv", doc)
    if report.histories:
        _write_history_tsv(out / "history.tsv", report.histories)
        _render_convergence(out / "convergence.png", report.histories)
    if report.exponent is not None:
        _render_exponent_heatmap(out / "exponent_matrix.png", report.exponent)
    return json_path
