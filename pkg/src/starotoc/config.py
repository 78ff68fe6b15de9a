"""Experiment configuration: JSON documents, validation and named presets."""
from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from .evolution import DecoherenceParams, EvolutionMode
from .mqc import n_for_order
from .topology import TopologySpec

PRESETS = ("fig3", "fig5", "fig6-modes", "fig7-ambiguity")
OBSERVABLES = ("mqc", "layer")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class Cell:
    K: int
    g: float
    mode: str
    n: int | None = None

    def slug(self) -> str:
        n = "" if self.n is None else f"_n{self.n}"
        return f"K{self.K}_g{self.g:g}{n}_{self.mode}"


@dataclass
class ExperimentConfig:
    name: str
    K_list: list[int]
    h_per_branch: int = 2
    f_per_branch: int = 3
    J: float = 8.7
    g_list: list[float] = field(default_factory=lambda: [0.0])
    n_list: list[int] = field(default_factory=list)
    max_jt: float = 5.0
    n_points: int = 256
    modes: list[str] = field(default_factory=lambda: ["unitary_only"])
    observable: str = "mqc"
    t2_star: float | None = None
    dt: float = 0.005
    ctp_total: float | None = None
    ctp_attenuate: bool = False
    central_field_once: bool = False
    window: str | None = None
    zero_pad: int = 1
    spectrum_threshold: float = 0.05
    average_window: list[float] | None = None
    gap_window: list[float] | None = None
    explicit_cells: list[dict] | None = None
    monitor: bool = True
    output_dir: str | None = None

    def topology(self, K: int) -> TopologySpec:
        return TopologySpec(K, self.h_per_branch, self.f_per_branch)

    def t_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.max_jt, self.n_points)

    def decoherence(self) -> DecoherenceParams | None:
        if self.t2_star is None:
            return None
        return DecoherenceParams(self.t2_star, self.dt)

    def cells(self) -> list[Cell]:
        if self.explicit_cells is not None:
            return [
                Cell(int(c.get("K", self.K_list[0])), float(c["g"]), c["mode"],
                     None if self.observable == "layer" else int(c["n"]))
                for c in self.explicit_cells
            ]
        ns = [None] if self.observable == "layer" else self.n_list
        return [
            Cell(K, float(g), mode, n)
            for K, g, n, mode in itertools.product(self.K_list, self.g_list, ns, self.modes)
        ]

    def canonical(self) -> dict:
        """Normalized parameter echo; output location is excluded."""
        d = asdict(self)
        d.pop("output_dir")
        return d

    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _require(cond: bool, field: str, message: str) -> None:
    if not cond:
        raise ConfigError(field, message)


def _number(value, field: str) -> float:
    _require(isinstance(value, (int, float)) and not isinstance(value, bool), field,
             f"expected a number, got {value!r}")
    return float(value)


def _integer(value, field: str) -> int:
    _require(isinstance(value, int) and not isinstance(value, bool), field,
             f"expected an integer, got {value!r}")
    return int(value)


def _as_list(value, field: str) -> list:
    if isinstance(value, list):
        _require(len(value) > 0, field, "list is empty")
        return value
    return [value]


_KNOWN = {
    "name", "topology", "J", "g_list", "n_list", "q_list", "t_grid", "mode", "observable",
    "decoherence", "ctp", "cells", "flags", "spectrum_threshold", "report", "output",
}


def parse_config(doc: dict[str, Any]) -> ExperimentConfig:
    """Validate a config document and return the typed configuration."""
    _require(isinstance(doc, dict), "<root>", "config must be a JSON object")
    unknown = sorted(set(doc) - _KNOWN)
    _require(not unknown, unknown[0] if unknown else "", "unknown key")

    name = doc.get("name", "experiment")
    _require(isinstance(name, str) and name != "", "name", "expected a non-empty string")

    topo = doc.get("topology", {})
    _require(isinstance(topo, dict), "topology", "expected an object")
    _require("K" in topo, "topology.K", "missing branch count")
    K_list = [_integer(k, "topology.K") for k in _as_list(topo["K"], "topology.K")]
    h = _integer(topo.get("h_per_branch", 2), "topology.h_per_branch")
    # older configs call this f_per_h; same meaning here
    f = _integer(topo.get("f_per_branch", topo.get("f_per_h", 3)), "topology.f_per_branch")
    for K in K_list:
        _require(K >= 1, "topology.K", f"must be positive, got {K}")
    _require(h >= 1, "topology.h_per_branch", "must be positive")
    _require(f >= 0, "topology.f_per_branch", "must be non-negative")

    J = _number(doc.get("J", 8.7), "J")
    _require(J > 0, "J", "must be positive")
    g_list = [_number(g, "g_list") for g in _as_list(doc.get("g_list", [0.0]), "g_list")]
    for g in g_list:
        _require(g >= 0, "g_list", f"g must be non-negative, got {g}")

    observable = doc.get("observable", "mqc")
    _require(observable in OBSERVABLES, "observable", f"expected one of {OBSERVABLES}")

    N1s = [K * h for K in K_list]
    n_list: list[int] = []
    if observable == "mqc" and "cells" not in doc:
        _require(("n_list" in doc) != ("q_list" in doc), "n_list", "give exactly one of n_list or q_list")
        if "n_list" in doc:
            n_list = [_integer(n, "n_list") for n in _as_list(doc["n_list"], "n_list")]
            for n in n_list:
                _require(all(0 <= n <= N1 for N1 in N1s), "n_list", f"n={n} outside [0, N1]")
        else:
            qs = [_integer(q, "q_list") for q in _as_list(doc["q_list"], "q_list")]
            _require(len(set(N1s)) == 1, "q_list", "q_list needs a single layer-1 size")
            try:
                n_list = [n_for_order(N1s[0], q) for q in qs]
            except ValueError as exc:
                raise ConfigError("q_list", str(exc)) from None

    grid = doc.get("t_grid", {})
    _require(isinstance(grid, dict), "t_grid", "expected an object")
    max_jt = _number(grid.get("max_jt", 5.0), "t_grid.max_jt")
    n_points = _integer(grid.get("n_points", 256), "t_grid.n_points")
    _require(max_jt > 0, "t_grid.max_jt", "must be positive")
    _require(n_points >= 16, "t_grid.n_points", "need at least 16 points for a spectrum")

    modes = _as_list(doc.get("mode", "unitary_only"), "mode")
    for m in modes:
        _require(m in {e.value for e in EvolutionMode}, "mode", f"unknown mode {m!r}")

    t2_star = None
    dt = 0.005
    if "decoherence" in doc:
        dec = doc["decoherence"]
        _require(isinstance(dec, dict), "decoherence", "expected an object")
        _require(("t2_star" in dec) != ("t2_star_ms" in dec), "decoherence.t2_star",
                 "give exactly one of t2_star (units of 1/J) or t2_star_ms")
        if "t2_star" in dec:
            t2_star = _number(dec["t2_star"], "decoherence.t2_star")
        else:
            t2_star = _number(dec["t2_star_ms"], "decoherence.t2_star_ms") * 1e-3 * J
        dt = _number(dec.get("dt", 0.005), "decoherence.dt")
        _require(t2_star > 0, "decoherence.t2_star", "must be positive")
        _require(dt > 0, "decoherence.dt", "must be positive")

    ctp = doc.get("ctp", {})
    _require(isinstance(ctp, dict), "ctp", "expected an object")
    ctp_total = ctp.get("T")
    if ctp_total is not None:
        ctp_total = _number(ctp_total, "ctp.T")
        _require(ctp_total >= max_jt, "ctp.T", f"total time {ctp_total} is shorter than max_jt {max_jt}")
    ctp_attenuate = bool(ctp.get("attenuate", False))

    flags = doc.get("flags", {})
    _require(isinstance(flags, dict), "flags", "expected an object")
    window = flags.get("window")
    _require(window in (None, "hann"), "flags.window", "expected null or 'hann'")
    zero_pad = _integer(flags.get("zero_pad", 1), "flags.zero_pad")
    _require(zero_pad >= 1, "flags.zero_pad", "must be >= 1")

    threshold = _number(doc.get("spectrum_threshold", 0.05), "spectrum_threshold")
    _require(0 < threshold < 1, "spectrum_threshold", "must lie in (0, 1)")

    report = doc.get("report", {})
    _require(isinstance(report, dict), "report", "expected an object")
    windows = {}
    for key in ("average_window", "gap_window"):
        w = report.get(key)
        if w is not None:
            _require(isinstance(w, list) and len(w) == 2, f"report.{key}", "expected [lo, hi]")
            w = [_number(x, f"report.{key}") for x in w]
            _require(w[0] < w[1], f"report.{key}", "lo must be below hi")
        windows[key] = w

    explicit = doc.get("cells")
    if explicit is not None:
        _require(isinstance(explicit, list) and explicit, "cells", "expected a non-empty list")
        for i, c in enumerate(explicit):
            where = f"cells[{i}]"
            _require(isinstance(c, dict), where, "expected an object")
            _require("g" in c and "mode" in c, where, "each cell needs g and mode")
            _number(c["g"], f"{where}.g")
            _require(c["g"] >= 0, f"{where}.g", "must be non-negative")
            _require(c["mode"] in {e.value for e in EvolutionMode}, f"{where}.mode", "unknown mode")
            if "K" in c:
                _require(_integer(c["K"], f"{where}.K") in K_list, f"{where}.K", "K not in topology.K")
            if observable == "mqc":
                _require("n" in c, f"{where}.n", "missing coherence selector n")
                n = _integer(c["n"], f"{where}.n")
                _require(all(0 <= n <= N1 for N1 in N1s), f"{where}.n", f"n={n} outside [0, N1]")
        used_modes = [c["mode"] for c in explicit]
    else:
        used_modes = modes

    if observable == "layer":
        _require(all(m == "unitary_only" for m in used_modes), "mode",
                 "layer scrambling is defined for unitary_only evolution")
    if any(m in ("decoherence_only", "unitary_plus_decoherence") for m in used_modes):
        _require(t2_star is not None, "decoherence", "dephasing modes need a decoherence block")
    if ctp_attenuate:
        _require(t2_star is not None, "ctp.attenuate", "attenuation needs a decoherence block")

    output = doc.get("output", {})
    _require(isinstance(output, dict), "output", "expected an object")
    out_dir = output.get("dir")
    _require(out_dir is None or isinstance(out_dir, str), "output.dir", "expected a path string")

    return ExperimentConfig(
        name=name, K_list=K_list, h_per_branch=h, f_per_branch=f, J=J, g_list=g_list,
        n_list=n_list, max_jt=max_jt, n_points=n_points, modes=list(modes),
        observable=observable, t2_star=t2_star, dt=dt, ctp_total=ctp_total,
        ctp_attenuate=ctp_attenuate, central_field_once=bool(flags.get("central_field_once", False)),
        window=window, zero_pad=zero_pad, spectrum_threshold=threshold,
        average_window=windows["average_window"], gap_window=windows["gap_window"],
        explicit_cells=explicit, monitor=bool(flags.get("monitor", True)), output_dir=out_dir,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"not valid JSON ({exc.msg} at line {exc.lineno})") from None
    except OSError as exc:
        raise ConfigError("<path>", f"cannot read {path}: {exc.strerror}") from None
    return parse_config(doc)


def preset_document(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    text = resources.files("starotoc.presets").joinpath(f"{name}.json").read_text()
    return json.loads(text)


def load_preset(name: str) -> ExperimentConfig:
    return parse_config(preset_document(name))
