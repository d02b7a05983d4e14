"""Run configuration: a single JSON file, validated field by field before any computation.

Forcing rows have the form ``{"block": j, "l": l, "k": [...], "re": x, "im": y}``
(or the list ``[j, l, [...], x, y]``). Rows sharing a block are collected into
one :class:`~beamkam.forcing.ForcingBlock`; conjugate partners must be listed
explicitly.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any

import numpy as np

from .beam import BeamParams
from .driver import KAMSettings
from .exceptions import InvalidInputError, InvalidParameterError
from .forcing import ForcingBlock, ForcingHierarchy


class ConfigError(ValueError):
    """Invalid configuration; ``messages`` lists every problem found."""

    def __init__(self, messages):
        self.messages = list(messages)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.messages))


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of a run; ``forcing`` is required, everything else has a default."""

    forcing: tuple
    m: float = 1.0
    epsilon: float = 1e-4
    rho: float = 1.0
    s0: float = 0.5
    r0: float = 1.0
    a: float = 0.0
    p: float = 1.0
    N: int = 4
    K: int = 3
    D: int = 4
    K_force: int = 2
    K_meas: int = 6
    L: int = 8
    b_schedule: tuple = (1, 2, 3)
    v_max: int = 3
    omega: tuple | None = None
    omega_seed: int = 0
    C0: float = 1.0
    samples: int = 10000
    epsilon_grid: tuple = (1e-6, 1e-5, 1e-4)
    window: float | None = None
    norm: str = "l1"
    embedding_samples: int = 64

    # ------------------------------------------------------------ builders
    def beam(self) -> BeamParams:
        return BeamParams(self.m, self.N)

    def settings(self) -> KAMSettings:
        return KAMSettings(K=self.K, D=self.D, L=self.L, a=self.a, p=self.p)

    def hierarchy(self, epsilon: float | None = None) -> ForcingHierarchy:
        eps = self.epsilon if epsilon is None else float(epsilon)
        return ForcingHierarchy(eps, self.rho, self.b_schedule, _blocks(self), self.K_force, self.C0)

    def omega_vector(self, seed: int | None = None) -> np.ndarray:
        """Explicit ``omega`` if given, else a uniform sample on ``[0, 1]^{b_last}``."""
        if self.omega is not None:
            return np.asarray(self.omega, dtype=float)
        rng = np.random.default_rng(self.omega_seed if seed is None else seed)
        return rng.uniform(0.0, 1.0, size=self.b_schedule[-1])

    def effective(self) -> dict:
        """Post-default configuration as plain JSON data."""
        d = asdict(self)
        d["forcing"] = [dict(r) for r in self.forcing]
        for key in ("b_schedule", "epsilon_grid", "omega"):
            if d[key] is not None:
                d[key] = list(d[key])
        return d


_INT_FIELDS = {"N", "K", "D", "K_force", "K_meas", "L", "v_max", "omega_seed", "samples", "embedding_samples"}
_FLOAT_FIELDS = {"m", "epsilon", "rho", "s0", "r0", "a", "p", "C0"}


def _row(raw, idx: int, errors: list) -> dict | None:
    if isinstance(raw, (list, tuple)) and len(raw) == 5:
        raw = dict(zip(("block", "l", "k", "re", "im"), raw))
    if not isinstance(raw, dict):
        errors.append(f"forcing[{idx}]: expected an object with block, l, k, re, im")
        return None
    missing = [key for key in ("block", "l", "k", "re") if key not in raw]
    if missing:
        errors.append(f"forcing[{idx}]: missing {', '.join(missing)}")
        return None
    try:
        row = {"block": int(raw["block"]), "l": int(raw["l"]), "k": [int(x) for x in raw["k"]],
               "re": float(raw["re"]), "im": float(raw.get("im", 0.0))}
    except (TypeError, ValueError) as exc:
        errors.append(f"forcing[{idx}]: {exc}")
        return None
    if not 0 <= row["l"] <= 3:
        errors.append(f"forcing[{idx}]: l must be 0..3, got {row['l']}")
        return None
    return row


def _blocks(cfg: RunConfig) -> list[ForcingBlock]:
    b = cfg.b_schedule
    tables: dict[int, dict[int, dict[tuple, complex]]] = {}
    for r in cfg.forcing:
        t = tables.setdefault(r["block"], {})
        t.setdefault(r["l"], {})
        k = tuple(r["k"])
        t[r["l"]][k] = t[r["l"]].get(k, 0j) + complex(r["re"], r["im"])
    out = []
    for j, coeffs in sorted(tables.items()):
        n_new = b[j] - (b[j - 1] if j > 0 else 0)
        out.append(ForcingBlock(j, n_new, coeffs))
    return out


def validate(raw: dict[str, Any]) -> RunConfig:
    """Build a :class:`RunConfig`, collecting every problem before raising :class:`ConfigError`."""
    if not isinstance(raw, dict):
        raise ConfigError(["configuration must be a JSON object"])
    errors: list[str] = []
    known = {f.name for f in fields(RunConfig)}
    for key in sorted(set(raw) - known):
        errors.append(f"{key}: unknown field")
    values: dict[str, Any] = {}
    for key in sorted(known & set(raw)):
        v = raw[key]
        if key == "forcing":
            continue
        try:
            if key in _INT_FIELDS:
                if isinstance(v, bool) or float(v) != int(v):
                    raise ValueError("not an integer")
                values[key] = int(v)
            elif key in _FLOAT_FIELDS:
                values[key] = float(v)
            elif key in ("b_schedule", "epsilon_grid"):
                conv = int if key == "b_schedule" else float
                values[key] = tuple(conv(x) for x in v)
            elif key == "omega":
                values[key] = None if v is None else tuple(float(x) for x in v)
            elif key == "window":
                values[key] = None if v is None else float(v)
            elif key == "norm":
                values[key] = str(v)
        except (TypeError, ValueError):
            errors.append(f"{key}: cannot interpret {v!r}")
    if "forcing" not in raw or raw["forcing"] in (None, ""):
        errors.append("forcing: required field missing (list of block, l, k, re, im rows)")
        rows = ()
    elif not isinstance(raw["forcing"], list):
        errors.append("forcing: must be a list of rows")
        rows = ()
    else:
        rows = tuple(r for r in (_row(x, i, errors) for i, x in enumerate(raw["forcing"])) if r is not None)
    if errors:
        raise ConfigError(errors)
    cfg = RunConfig(forcing=rows, **values)
    errors = _check(cfg)
    if errors:
        raise ConfigError(errors)
    return cfg


def _check(cfg: RunConfig) -> list[str]:
    e = []
    if not cfg.m > 0:
        e.append(f"m: must be positive, got {cfg.m}")
    if not 0 < cfg.rho <= 1:
        e.append(f"rho: must lie in (0, 1], got {cfg.rho}")
    if not 0 < cfg.epsilon < 1:
        e.append(f"epsilon: must lie in (0, 1), got {cfg.epsilon}")
    if any(not 0 < x < 1 for x in cfg.epsilon_grid):
        e.append("epsilon_grid: every entry must lie in (0, 1)")
    b = cfg.b_schedule
    if not b or b[0] < 1 or any(y <= x for x, y in zip(b, b[1:])):
        e.append(f"b_schedule: must be strictly increasing with b_0 >= 1, got {list(b)}")
    for name in ("s0", "r0"):
        if not getattr(cfg, name) > 0:
            e.append(f"{name}: must be positive")
    if cfg.a < 0 or cfg.p < 0:
        e.append("a, p: must be non-negative")
    if cfg.N < 0:
        e.append("N: must be >= 0")
    for name in ("K", "K_force", "K_meas", "L", "v_max", "samples", "embedding_samples"):
        if getattr(cfg, name) < (0 if name == "v_max" else 1):
            e.append(f"{name}: out of range ({getattr(cfg, name)})")
    if cfg.D != 4:
        e.append(f"D: only degree 4 is supported, got {cfg.D}")
    if cfg.K_force > cfg.K:
        e.append(f"K_force={cfg.K_force} exceeds the Fourier truncation K={cfg.K}")
    if cfg.norm not in ("l1", "linf"):
        e.append(f"norm: must be 'l1' or 'linf', got {cfg.norm!r}")
    if cfg.window is not None and not cfg.window > 0:
        e.append("window: must be positive")
    if cfg.omega is not None:
        if b and len(cfg.omega) < b[-1]:
            e.append(f"omega: needs {b[-1]} entries, got {len(cfg.omega)}")
        if any(not math.isfinite(x) for x in cfg.omega):
            e.append("omega: entries must be finite")
    for i, r in enumerate(cfg.forcing):
        j = r["block"]
        if not 0 <= j < len(b):
            e.append(f"forcing[{i}]: block {j} outside the b-schedule of length {len(b)}")
            continue
        n_new = b[j] - (b[j - 1] if j > 0 else 0)
        if len(r["k"]) != n_new:
            e.append(f"forcing[{i}]: block {j} acts on {n_new} new angles, k has {len(r['k'])} entries")
    if not e:
        try:
            cfg.hierarchy()
        except (InvalidInputError, InvalidParameterError, KeyError) as exc:
            e.append(f"forcing: {exc}")
    return e


def load_config(path: str | Path, **overrides) -> RunConfig:
    """Read and validate a JSON config; keyword ``overrides`` replace fields before validation."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError([f"{path}: file not found"]) from None
    except json.JSONDecodeError as exc:
        raise ConfigError([f"{path}: not valid JSON ({exc})"]) from None
    if isinstance(raw, dict):
        raw.update({k: v for k, v in overrides.items() if v is not None})
    return validate(raw)


def with_fields(cfg: RunConfig, **changes) -> RunConfig:
    """Copy with changed fields, revalidated."""
    new = replace(cfg, **changes)
    errors = _check(new)
    if errors:
        raise ConfigError(errors)
    return new


def nominal_forcing_rows(b_schedule=(1, 2, 3), seed: int = 1, K_force: int = 2) -> list[dict]:
    """Seeded random forcing table, one block per schedule entry (the nominal test problem)."""
    from .forcing import random_block

    rng = np.random.default_rng(seed)
    rows = []
    prev = 0
    for j, bj in enumerate(b_schedule):
        blk = random_block(j, bj - prev, rng, K_force=K_force)
        prev = bj
        for l in range(4):
            for k, c in sorted(blk.coeffs[l].items()):
                rows.append({"block": j, "l": l, "k": list(k), "re": float(c.real), "im": float(c.imag)})
    return rows


__all__ = ["ConfigError", "RunConfig", "validate", "load_config", "with_fields", "nominal_forcing_rows"]
