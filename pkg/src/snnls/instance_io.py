"""Plain-text instance and solution files.

Instance layout::

    snnls v1 N M sigma2
    <N rows of Phi, M numbers each>
    <y, N numbers>
    [<x_gen, M numbers>]

Numbers are written with 17 significant digits, so a round trip is exact.
"""

import numpy as np

from .exceptions import DomainError
from .posterior import Problem

MAGIC = "snnls"
VERSION = "v1"


def _fmt(row):
    return " ".join(f"{v:.17g}" for v in row)


def write_instance(path, problem, x_gen=None):
    lines = [f"{MAGIC} {VERSION} {problem.n} {problem.m} {problem.noise_variance:.17g}"]
    lines += [_fmt(r) for r in problem.dictionary]
    lines.append(_fmt(problem.measurements))
    if x_gen is not None:
        lines.append(_fmt(x_gen))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_instance(path):
    """Return ``(problem, x_gen)``; ``x_gen`` is None when the file has no truth row."""
    with open(path) as fh:
        rows = [ln.split() for ln in fh if ln.strip()]
    if not rows or len(rows[0]) != 5 or rows[0][0] != MAGIC:
        raise DomainError(f"{path}: not an snnls instance file")
    if rows[0][1] != VERSION:
        raise DomainError(f"{path}: unsupported format version {rows[0][1]}")
    try:
        n, m, sigma2 = int(rows[0][2]), int(rows[0][3]), float(rows[0][4])
        body = [np.array(r, dtype=float) for r in rows[1:]]
    except ValueError as err:
        raise DomainError(f"{path}: malformed number ({err})") from None
    if len(body) not in (n + 1, n + 2):
        raise DomainError(f"{path}: expected {n + 1} or {n + 2} data rows, found {len(body)}")
    if any(r.size != m for r in body[:n]) or body[n].size != n:
        raise DomainError(f"{path}: row lengths do not match N={n}, M={m}")
    x_gen = None
    if len(body) == n + 2:
        if body[n + 1].size != m:
            raise DomainError(f"{path}: ground-truth row must have M={m} entries")
        x_gen = body[n + 1]
    return Problem(np.vstack(body[:n]), body[n], sigma2), x_gen


def write_solution(path, solver, solution):
    """Solution file: header ``snnls-solution v1 M solver`` then labelled rows."""
    m = solution.x_mean.size
    gamma = solution.gamma_final
    g = np.where(gamma.active, gamma.gamma, 0.0) if gamma is not None else np.full(m, np.nan)
    with open(path, "w") as fh:
        fh.write(f"snnls-solution {VERSION} {m} {solver}\n")
        fh.write("x_mean " + _fmt(solution.x_mean) + "\n")
        fh.write("x_mode " + _fmt(solution.x_mode) + "\n")
        fh.write("gamma " + _fmt(g) + "\n")
        fh.write(f"iterations {solution.iterations}\nconverged {int(solution.converged)}\n")


def read_solution(path):
    out = {}
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "snnls-solution":
            raise DomainError(f"{path}: not an snnls solution file")
        out["solver"] = header[3]
        for line in fh:
            key, *vals = line.split()
            if key in ("x_mean", "x_mode", "gamma"):
                out[key] = np.array(vals, dtype=float)
            else:
                out[key] = int(vals[0])
    return out
