"""Sweep execution and CSV/JSON artifact writing."""
from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import analysis
from .config import Cell, ExperimentConfig
from .evolution import EvolutionMode, LindbladMonitor
from .mqc import coherence_order
from .otoc import OtocSeries, layer_scrambling_otoc, otoc_mqc
from .spin_algebra import MAX_QUBITS, RegisterTooLarge
from .topology import HamiltonianParams

log = logging.getLogger(__name__)

WORKERS_ENV = "STAROTOC_WORKERS"


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
        if n < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1


def check_feasible(config: ExperimentConfig, max_qubits: int = MAX_QUBITS) -> None:
    for K in config.K_list:
        n = config.topology(K).n_qubits
        if n > max_qubits:
            raise RegisterTooLarge(n, max_qubits)


def feasibility_report(config: ExperimentConfig, max_qubits: int = MAX_QUBITS) -> dict:
    """Dry-run sizing: register, memory per dense operator, eigensolves."""
    cells = config.cells()
    sizes = []
    for K in config.K_list:
        topo = config.topology(K)
        sizes.append({
            "K": K,
            "n_qubits": topo.n_qubits,
            "N1": topo.n1,
            "N2": topo.n2,
            "dim": topo.dim,
            "bytes_per_operator": 16 * 4**topo.n_qubits,
            "feasible": topo.n_qubits <= max_qubits,
        })
    hamiltonians = set()
    for c in cells:
        decoupled = c.mode == EvolutionMode.DECOHERENCE_ONLY.value
        hamiltonians.add((c.K, c.g, decoupled))
    # a field-free Hamiltonian is diagonal and needs no eigensolve
    eigensolves = sum(1 for (_, g, _) in hamiltonians if g > 0)
    steps = 0
    for c in cells:
        if EvolutionMode(c.mode).dephasing:
            steps += int(round(config.max_jt / config.dt))
    return {
        "name": config.name,
        "config_hash": config.config_hash(),
        "max_qubits": max_qubits,
        "registers": sizes,
        "feasible": all(s["feasible"] for s in sizes),
        "cells": len(cells),
        "hamiltonians": len(hamiltonians),
        "projected_eigensolves": eigensolves,
        "projected_lindblad_steps": steps,
    }


def compute_cell(config: ExperimentConfig, cell: Cell) -> tuple[OtocSeries, analysis.Spectrum, dict]:
    topo = config.topology(cell.K)
    params = HamiltonianParams(config.J, cell.g, config.central_field_once)
    grid = config.t_grid()
    diagnostics: dict = {}
    started = time.perf_counter()
    if config.observable == "layer":
        series = layer_scrambling_otoc(topo, params, grid)
    else:
        mode = EvolutionMode(cell.mode)
        monitor = LindbladMonitor() if (mode.dephasing and config.monitor) else None
        series = otoc_mqc(
            topo, params, cell.n, grid, mode,
            decoherence=config.decoherence(),
            total_time=config.ctp_total,
            ctp_attenuate=config.ctp_attenuate,
            monitor=monitor,
        )
        if monitor is not None:
            diagnostics["lindblad"] = monitor.as_dict()
    spectrum = analysis.fourier_spectrum(series, window=config.window, zero_pad=config.zero_pad)
    log.info("cell %s done in %.1fs", cell.slug(), time.perf_counter() - started)
    return series, spectrum, diagnostics


def _compute_star(args):
    return compute_cell(*args)


def _fmt(x: float) -> str:
    return f"{x:.12e}"


def _write_csv(path: Path, header: list[str], columns: tuple[str, str], rows) -> None:
    lines = [f"# {h}" for h in header]
    lines.append(",".join(columns))
    lines += [f"{a:.10g},{_fmt(b)}" for a, b in rows]
    path.write_text("\n".join(lines) + "\n")


def _cell_summary(config: ExperimentConfig, series: OtocSeries, spectrum) -> dict:
    out = {
        "min_value": float(series.values.min()),
        "max_abs_imag": series.max_imag,
        "first_jt_below_half": analysis.first_crossing_below(series, 0.5),
        "spectral_support": analysis.spectral_support(spectrum, config.spectrum_threshold),
    }
    if config.average_window is not None:
        out["time_average"] = analysis.time_average(series, *config.average_window)
    return out


def run(config: ExperimentConfig, out_dir: str | Path, workers: int | None = None) -> dict:
    """Compute every cell of ``config`` and write series, spectra and a manifest.

    Files are written in config order whatever order the workers finish in.
    """
    check_feasible(config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = config.cells()
    workers = worker_count() if workers is None else workers
    log.info("%s: %d cells on %d worker(s)", config.name, len(cells), workers)
    jobs = [(config, c) for c in cells]
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(cells))) as pool:
            results = list(pool.map(_compute_star, jobs))
    else:
        results = [_compute_star(j) for j in jobs]

    digest = config.config_hash()
    entries = []
    series_by_index = []
    for i, (cell, (series, spectrum, diag)) in enumerate(zip(cells, results)):
        stem = f"{i:03d}_{cell.slug()}"
        label = f"cell={i} K={cell.K} g={cell.g:g} mode={cell.mode} observable={config.observable}"
        topo = config.topology(cell.K)
        if cell.n is not None:
            label += f" n={cell.n} q={coherence_order(topo.n1, cell.n)}"
        header = [f"config_hash={digest}", label]
        _write_csv(out / f"{stem}_series.csv", header, ("Jt", "value"),
                   zip(series.t_grid, series.values))
        _write_csv(out / f"{stem}_spectrum.csv", header + ["mean-removed spectrum"],
                   ("freq_J", "magnitude"), zip(spectrum.freqs, spectrum.mags))
        entry = {
            "index": i,
            "K": cell.K,
            "g": cell.g,
            "n": cell.n,
            "q": None if cell.n is None else coherence_order(topo.n1, cell.n),
            "mode": cell.mode,
            "observable": config.observable,
            "series_file": f"{stem}_series.csv",
            "spectrum_file": f"{stem}_spectrum.csv",
            "metadata": series.metadata,
            "summary": _cell_summary(config, series, spectrum),
        }
        entry.update(diag)
        entries.append(entry)
        series_by_index.append(series)

    report = {}
    if config.gap_window is not None and len(series_by_index) > 1:
        lo, hi = config.gap_window
        report["gaps"] = [
            {"cells": [i, j], "window": [lo, hi],
             "max_gap": analysis.max_gap(series_by_index[i], series_by_index[j], lo, hi)}
            for i in range(len(series_by_index)) for j in range(i + 1, len(series_by_index))
        ]
    manifest = {
        "name": config.name,
        "config_hash": digest,
        "config": config.canonical(),
        "cells": entries,
        "report": report,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest
