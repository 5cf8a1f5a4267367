"""Run configuration: an INI-style file with one section per command.

Keys in ``[common]`` apply to every command and the command's own section
overrides them. The shape lives in ``[shape]``. Every key is listed in
``KEYS`` with its meaning; ``lehardy --help`` prints the same table.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .closed_forms import CLOSED_FORMS
from .errors import ConfigError
from .grid import ShapeSpec

COMMANDS = ("solve", "eigen", "certify", "verify-suite", "constants")

KEYS = {
    "shape": {
        "kind": "interval | rectangle | ball | union_of_balls | slab | waveguide",
        "bounds": "interval: 'a, b'; rectangle: 'a1 b1; a2 b2; ...'",
        "center": "ball center, comma separated",
        "radius": "ball radius, or the disk cross-section radius of a waveguide",
        "balls": "union_of_balls: 'x1 x2 ... r; ...'",
        "half_width": "slab half width",
        "extent": "truncation half length of slab / waveguide",
        "dim": "slab dimension (default 2)",
    },
    "run": {
        "h": "grid spacing (> 0)",
        "q": "Lane-Emden exponent in [1, 2)",
        "boundary": "linear | staircase",
        "tol": "Lane-Emden relative residual target",
        "eig_tol": "eigensolver tolerance",
        "seed": "unsigned 64-bit seed for random test fields",
        "deltas": "comma separated Hardy exponents (> 0)",
        "gammas": "comma separated exponents gamma in [q, 2)",
        "potential": "limit | scale:<c> (c times the limit potential) | "
                     "closed:<name> | file:<path to field CSV>",
        "N": "dimension for the constants command",
        "criteria": "verify-suite: comma separated criterion numbers",
    },
}

PRESETS = {
    "disk": ShapeSpec.ball((0.0, 0.0), 1.0),
    "square": ShapeSpec.rectangle([(0.0, 1.0), (0.0, 1.0)]),
    "interval": ShapeSpec.interval(-1.0, 1.0),
    "slab": ShapeSpec.slab(1.0, 8.0, 2),
    "waveguide": ShapeSpec.waveguide(ShapeSpec.ball((0.0, 0.0), 1.0), 8.0),
}


@dataclass
class RunConfig:
    command: str
    shape: ShapeSpec = field(default_factory=lambda: PRESETS["disk"])
    h: float = 2.0 ** -6
    q: float = 1.0
    boundary: str = "linear"
    deltas: tuple = (0.5, 1.0, 2.0, 4.0)
    gammas: tuple = ()
    potential: str = "limit"
    tol: float = 1e-8
    eig_tol: float = 1e-10
    out: Path = Path("out")
    seed: int = 0
    N: Optional[int] = None
    criteria: tuple = ()
    quiet: bool = False

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"command: unknown command {self.command!r}")
        if not self.h > 0:
            raise ConfigError(f"h: must be positive, got {self.h}")
        if not 1.0 <= self.q < 2.0:
            raise ConfigError(f"q: must lie in [1, 2), got {self.q}")
        if self.boundary not in ("linear", "staircase"):
            raise ConfigError(f"boundary: unknown mode {self.boundary!r}")
        if any(not t > 0 for t in self.deltas):
            raise ConfigError("deltas: every delta must be positive")
        if any(not self.q <= g < 2 for g in self.gammas):
            raise ConfigError(f"gammas: every gamma must lie in [q, 2) = [{self.q}, 2)")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed: must be an unsigned 64-bit integer")
        if self.N is not None and self.N < 1:
            raise ConfigError(f"N: must be positive, got {self.N}")
        kind, _, arg = self.potential.partition(":")
        if kind == "scale":
            try:
                float(arg)
            except ValueError:
                raise ConfigError(f"potential: bad scale {arg!r}") from None
        elif kind == "closed":
            if arg not in CLOSED_FORMS or not arg.endswith("limit_potential"):
                raise ConfigError(f"potential: {arg!r} is not a closed-form limit potential")
        elif kind == "file":
            p = Path(arg)
            if not p.with_suffix(".csv").exists() or not p.with_suffix(".json").exists():
                raise ConfigError(f"potential: field files for {arg!r} not found")
        elif kind != "limit":
            raise ConfigError(f"potential: unknown source {self.potential!r}")
        return self


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def parse_shape(sec) -> ShapeSpec:
    kind = sec.get("kind", "ball").strip()
    if kind in PRESETS and "center" not in sec and "bounds" not in sec and len(sec) <= 1:
        return PRESETS[kind]
    if kind == "interval":
        a, b = _floats(sec["bounds"])
        return ShapeSpec.interval(a, b)
    if kind == "rectangle":
        return ShapeSpec.rectangle([_floats(p) for p in sec["bounds"].split(";")])
    if kind == "ball":
        return ShapeSpec.ball(_floats(sec.get("center", "0, 0")), float(sec.get("radius", "1")))
    if kind == "union_of_balls":
        balls = []
        for part in sec["balls"].split(";"):
            v = _floats(part)
            balls.append((v[:-1], v[-1]))
        return ShapeSpec.union_of_balls(balls)
    if kind == "slab":
        return ShapeSpec.slab(float(sec.get("half_width", "1")), float(sec.get("extent", "8")),
                              int(sec.get("dim", "2")))
    if kind == "waveguide":
        r = float(sec.get("radius", "1"))
        return ShapeSpec.waveguide(ShapeSpec.ball((0.0, 0.0), r), float(sec.get("extent", "8")))
    raise ValueError(f"unknown kind {kind!r}")


def _line_of(path: Path, section: str, key: str) -> Optional[int]:
    current = None
    for n, line in enumerate(path.read_text().splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
        elif current == section and s.split("=", 1)[0].split(":", 1)[0].strip() == key:
            return n
    return None


def load_config(path, command: str) -> RunConfig:
    """Read ``path`` for ``command``; errors carry the offending line and field."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{path}: no such config file")
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for sec in parser.sections():
        if sec not in ("shape", "common") + COMMANDS:
            raise ConfigError(f"{path}:{_line_of(path, sec, '') or '?'}: unknown section [{sec}]")
    cfg = RunConfig(command)
    if parser.has_section("shape"):
        for key in parser["shape"]:
            if key not in KEYS["shape"]:
                raise ConfigError(f"{path}:{_line_of(path, 'shape', key)}: unknown key "
                                  f"shape.{key}")
        try:
            cfg.shape = parse_shape(parser["shape"])
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"{path}: [shape]: {exc}") from None
    for sec in ("common", command):
        if not parser.has_section(sec):
            continue
        for key, raw in parser[sec].items():
            where = f"{path}:{_line_of(path, sec, key)}: {sec}.{key}"
            try:
                _assign(cfg, key, raw)
            except KeyError:
                raise ConfigError(f"{where}: unknown key") from None
            except ValueError as exc:
                raise ConfigError(f"{where}: {exc}") from None
    return cfg


def _assign(cfg: RunConfig, key: str, raw: str):
    raw = raw.strip()
    if key in ("h", "q", "tol", "eig_tol"):
        setattr(cfg, key, float(raw))
    elif key in ("seed", "N"):
        setattr(cfg, key, int(raw, 0))
    elif key in ("boundary", "potential"):
        setattr(cfg, key, raw)
    elif key in ("deltas", "gammas"):
        setattr(cfg, key, tuple(_floats(raw)))
    elif key == "criteria":
        cfg.criteria = tuple(int(t) for t in _floats(raw))
    elif key == "out":
        cfg.out = Path(raw)
    else:
        raise KeyError(key)


def help_table() -> str:
    lines = ["config keys (INI file; [shape], [common] and one section per command):"]
    for sec, keys in KEYS.items():
        label = "[shape]" if sec == "shape" else "[common] or [<command>]"
        lines.append(f"  {label}")
        lines += [f"    {k:<11} {v}" for k, v in keys.items()]
    lines.append(f"    {'out':<11} output directory")
    return "\n".join(lines)
