"""Serialization and figure rendering for simulation results.

CSV files are written with a fixed, platform-independent byte layout:
comma-separated fields, a single header line, ``\\n`` line endings, and
floats printed with 17 significant digits so they round-trip exactly.
Identical data therefore produces identical bytes, which is what the
run manifests digest and what determinism checks compare.

Manifests are small JSON documents recording the command, the fully
resolved configuration, the master seed, timestamps, and a SHA-256
digest of every output file. Figures are rendered headlessly to image
files next to the data they draw.
"""

import hashlib
import json
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from ._version import __version__


def format_value(value):
    """One CSV field: integers verbatim, floats at 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        raise TypeError("booleans have no CSV representation here")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(path, header, rows):
    """Write rows to ``path`` with the fixed byte layout; returns the path."""
    path = Path(path)
    lines = [",".join(str(h) for h in header)]
    lines.extend(",".join(format_value(v) for v in row) for row in rows)
    path.write_bytes(("\n".join(lines) + "\n").encode("ascii"))
    return path


def read_csv(path):
    """Read a CSV written by :func:`write_csv`.

    Returns (header, rows) with every field parsed as a float; callers
    that stored integers can round them back.
    """
    text = Path(path).read_bytes().decode("ascii")
    lines = [ln for ln in text.split("\n") if ln]
    if not lines:
        raise ValueError(f"{path}: empty CSV file")
    header = tuple(lines[0].split(","))
    rows = [tuple(float(v) for v in ln.split(",")) for ln in lines[1:]]
    return header, rows


def sha256_of(path):
    """Hex SHA-256 digest of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass(frozen=True)
class RunManifest:
    """Provenance record written next to every command's outputs.

    Re-running the recorded command with the recorded configuration and
    seed reproduces the data files byte for byte; the digests here make
    that checkable.
    """

    version: str
    command: str
    config: dict
    seed: int
    created_utc: str
    outputs: tuple

    @classmethod
    def build(cls, command, config, seed, output_paths):
        outputs = tuple(
            {"path": Path(p).name, "sha256": sha256_of(p)}
            for p in output_paths
        )
        return cls(
            version=__version__,
            command=str(command),
            config=dict(config),
            seed=int(seed) if seed is not None else None,
            created_utc=datetime.now(timezone.utc).isoformat(timespec="seconds"),
            outputs=outputs,
        )

    def to_json(self):
        payload = asdict(self)
        payload["outputs"] = list(self.outputs)
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def write(self, path):
        path = Path(path)
        path.write_text(self.to_json(), encoding="ascii")
        return path


def _plt():
    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    return plt


def render_sweep_figure(result, path):
    """Analytic correlation (red line) against the simulated sweep (blue).

    One panel, correlation versus time separation, with infeasible grid
    points simply absent from the simulated trace.
    """
    plt = _plt()
    rows = result.feasible_rows
    t0 = np.array([r.t0 for r in rows])
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.plot([r.t0 for r in result.rows],
            [r.c_analytic for r in result.rows],
            color="red", lw=1.5, label="analytic")
    ax.plot(t0, [r.c_simulated for r in rows],
            color="blue", lw=0.0, marker=".", ms=2.5, label="simulated")
    ax.set_xlabel("time separation t0")
    ax.set_ylabel("correlation")
    ax.set_title(f"{result.kernel_label} kernel, {result.method_label} "
                 f"calibration, {result.mode.value} sampler")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_walk_figure(results, fits, path):
    """Mean squared displacement curves with their linear fits."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
    for i, (res, fit) in enumerate(zip(results, fits)):
        color = colors[i % len(colors)]
        ax.plot(res.steps, res.msd, color=color, lw=0.0, marker=".",
                ms=3.0, label=f"f = {res.f:g}")
        if fit is not None:
            n = np.asarray(res.steps, dtype=float)
            ax.plot(n, fit.c1 * n + fit.c0, color=color, lw=1.0, alpha=0.7)
    ax.set_xlabel("step count N")
    ax.set_ylabel("mean squared displacement")
    ax.set_title("correlated random walks")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_quadrature_figure(report, path):
    """Per-point deviation of the quadrature from the closed form."""
    plt = _plt()
    t0 = [p.t0 for p in report.points]
    dev = [max(p.abs_dev, 1e-18) for p in report.points]
    bound = [p.err_bound for p in report.points]
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    ax.semilogy(t0, dev, "o", color="blue", ms=4.0, label="|deviation|")
    ax.semilogy(t0, bound, "_", color="black", ms=8.0, label="error bound")
    ax.axhline(report.abs_tol, color="red", lw=1.0, label="tolerance")
    ax.set_xlabel("time separation t0")
    ax.set_ylabel("absolute deviation")
    ax.set_title(f"smearing quadrature vs closed form (alpha = {report.alpha:g})")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_calibration_figure(table, path):
    """Measured correlation against shift factor, with the exact law."""
    from .sampler import lag1_covariance_law

    plt = _plt()
    f = np.asarray(table.f_values)
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    dense = np.linspace(f[0], f[-1], 401)
    law = [lag1_covariance_law(x, table.sigma2, table.mode) for x in dense]
    ax.plot(dense, law, color="red", lw=1.2, label="exact law")
    ax.errorbar(f, table.c_estimates, yerr=table.stderrs, fmt=".",
                color="blue", ms=4.0, lw=0.8, label="measured")
    ax.set_xlabel("shift factor f")
    ax.set_ylabel("lag-1 covariance")
    ax.set_title(f"calibration table, {table.mode.value} sampler")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)
