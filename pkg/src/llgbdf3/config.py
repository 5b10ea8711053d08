"""Run configuration: sectioned key-value files, flag overrides, validation.

Example::

    [run]
    mode = study-spatial
    dim = 1
    alpha = 0.01
    T = 0.1

    [grid]
    n = 16, 32, 64
    nt = 20000

Values may be comma-separated lists and simple fractions such as ``1/10``.
In ``[grid]`` either ``nt`` (step counts) or ``k`` (step sizes, each of
which must divide ``T``) may be given.
"""

from __future__ import annotations

import configparser
import math
import os
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from .errors import ParseError, ValidationError
from .mms import SOLUTIONS, default_solution
from .solvability import PROBE_LIMITS

MODES = ("single", "study-spatial", "study-temporal", "study-coupled", "probe")

# section -> key -> kind
SCHEMA = {
    "run": {"mode": "str", "dim": "int", "solution": "str", "alpha": "float", "T": "float"},
    "grid": {"n": "intlist", "nt": "intlist", "k": "floatlist"},
    "solver": {"tol": "float", "maxit": "int", "precondition": "bool"},
    "probe": {"k": "floatlist", "alpha": "floatlist", "trials": "int"},
    "output": {"dir": "str", "threads": "int", "seed": "int", "timing": "bool"},
}


@dataclass
class RunConfig:
    mode: str = "single"
    dim: int = 1
    solution: Optional[str] = None
    alpha: float = 0.01
    T: float = 0.1
    n: tuple = ()
    nt: tuple = ()
    tol: float = 1e-12
    maxit: int = 500
    precondition: bool = True
    probe_k: tuple = (1e-3, 1e-1, 10.0)
    probe_alpha: tuple = ()
    trials: int = 100
    out: str = "llg_out"
    threads: int = field(default_factory=lambda: int(os.environ.get("LLG_THREADS", "1") or 1))
    seed: int = 0
    timing: bool = True

    @property
    def study_kind(self) -> str:
        return {"single": "single", "study-spatial": "spatial",
                "study-temporal": "temporal", "study-coupled": "coupled"}[self.mode]

    def cases(self) -> list:
        ns, nts = list(self.n), list(self.nt)
        if len(ns) == 1:
            ns = ns * len(nts)
        if len(nts) == 1:
            nts = nts * len(ns)
        return list(zip(ns, nts))


_NUM = re.compile(r"^\s*([-+0-9.eE]+)\s*(?:/\s*([-+0-9.eE]+)\s*)?$")


def _number(raw: str) -> float:
    m = _NUM.match(raw)
    if not m:
        raise ValueError(f"not a number: {raw!r}")
    value = float(m.group(1))
    if m.group(2) is not None:
        value /= float(m.group(2))
    return value


def _integer(raw: str) -> int:
    value = _number(raw)
    if not math.isfinite(value) or value != int(value):
        raise ValueError(f"not an integer: {raw!r}")
    return int(value)


def _convert(kind: str, raw: str):
    raw = raw.strip()
    if kind == "str":
        return raw
    if kind == "int":
        return _integer(raw)
    if kind == "float":
        return _number(raw)
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    items = [p for p in raw.split(",") if p.strip()]
    if not items:
        raise ValueError("empty list")
    conv = _integer if kind == "intlist" else _number
    return tuple(conv(p) for p in items)


def _line_of(text: str, section: str, key: str | None) -> int | None:
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            current = s[1:-1].strip()
            if key is None and current == section:
                return i
        elif current == section and key is not None:
            if re.match(rf"^{re.escape(key)}\s*[=:]", s):
                return i
    return None


def read_config_text(text: str) -> dict:
    """Parse file text into ``{"section.key": raw_value}`` checking against the schema."""
    cp = configparser.ConfigParser(interpolation=None, strict=True, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case-sensitive ("T")
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError("content before the first [section] header", exc.lineno) from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ParseError(str(exc).split(":", 1)[-1].strip(), exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ParseError(f"cannot parse {line.strip()!r}", lineno) from None
    raw = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ParseError(f"unknown section [{section}]", _line_of(text, section, None))
        for key, value in cp.items(section):
            if key not in SCHEMA[section]:
                raise ParseError(f"unknown key {key!r} in [{section}]", _line_of(text, section, key))
            raw[f"{section}.{key}"] = value
    raw["__text__"] = text
    return raw


def parse_config(path: str | Path | None = None, overrides: Mapping[str, str] | None = None,
                 text: str | None = None) -> RunConfig:
    """Build a validated :class:`RunConfig` from a file and ``section.key`` overrides.

    Overrides take precedence over file values. Raises :class:`ParseError`
    for malformed files and :class:`ValidationError` for bad values.
    """
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ParseError(f"cannot read {path}: {exc.strerror}") from None
    raw = read_config_text(text) if text is not None else {}
    source = raw.pop("__text__", "")
    for key, value in (overrides or {}).items():
        section, _, name = key.partition(".")
        if name not in SCHEMA.get(section, {}):
            raise ValidationError("unknown option", key)
        raw[key] = value

    values = {}
    for key, value in raw.items():
        section, _, name = key.partition(".")
        try:
            values[key] = _convert(SCHEMA[section][name], value)
        except ValueError as exc:
            lineno = _line_of(source, section, name) if key not in (overrides or {}) else None
            if lineno is not None:
                raise ParseError(f"{key}: {exc}", lineno) from None
            raise ValidationError(str(exc), key) from None

    if "grid.nt" in values and "grid.k" in values:
        raise ValidationError("give either nt or k, not both", "grid.k")

    cfg = RunConfig()
    mapping = {
        "run.mode": "mode", "run.dim": "dim", "run.solution": "solution", "run.alpha": "alpha",
        "run.T": "T", "grid.n": "n", "grid.nt": "nt", "solver.tol": "tol",
        "solver.maxit": "maxit", "solver.precondition": "precondition", "probe.k": "probe_k",
        "probe.alpha": "probe_alpha", "probe.trials": "trials", "output.dir": "out",
        "output.threads": "threads", "output.seed": "seed", "output.timing": "timing",
    }
    for key, attr in mapping.items():
        if key in values:
            setattr(cfg, attr, values[key])
    if "grid.k" in values:
        cfg.nt = _steps_from_sizes(values["grid.k"], cfg.T)
    return validate(cfg)


def _steps_from_sizes(ks, T) -> tuple:
    nts = []
    for i, k in enumerate(ks):
        if k <= 0:
            raise ValidationError(f"case {i}: step size must be positive, got {k}", "grid.k")
        ratio = T / k
        nt = round(ratio)
        if abs(ratio - nt) > 1e-9 * max(ratio, 1.0):
            raise ValidationError(
                f"case {i}: T/k = {T}/{k} = {ratio:.6g} is not an integer", "grid.k")
        nts.append(nt)
    return tuple(nts)


def _strictly_increasing(seq) -> bool:
    return all(b > a for a, b in zip(seq, seq[1:]))


def validate(cfg: RunConfig) -> RunConfig:
    if cfg.mode not in MODES:
        raise ValidationError(f"must be one of {', '.join(MODES)}, got {cfg.mode!r}", "run.mode")
    if cfg.dim not in (1, 3):
        raise ValidationError(f"must be 1 or 3, got {cfg.dim}", "run.dim")
    if cfg.solution is None:
        cfg.solution = default_solution(cfg.dim)
    if cfg.solution not in SOLUTIONS:
        raise ValidationError(f"unknown solution {cfg.solution!r}", "run.solution")
    if SOLUTIONS[cfg.solution].dim != cfg.dim:
        raise ValidationError(f"{cfg.solution} is not a {cfg.dim}D solution", "run.solution")
    if not cfg.T > 0:
        raise ValidationError(f"must be positive, got {cfg.T}", "run.T")
    if not cfg.alpha > 0:
        raise ValidationError(f"must be positive, got {cfg.alpha}", "run.alpha")
    if not 0 < cfg.tol < 1:
        raise ValidationError(f"must lie in (0, 1), got {cfg.tol}", "solver.tol")
    if cfg.maxit < 1:
        raise ValidationError(f"must be at least 1, got {cfg.maxit}", "solver.maxit")
    if cfg.threads < 1:
        raise ValidationError(f"must be at least 1, got {cfg.threads}", "output.threads")
    cfg.n = tuple(cfg.n)
    cfg.nt = tuple(cfg.nt)
    if not cfg.n:
        raise ValidationError("at least one grid size is required", "grid.n")
    if any(v < 1 for v in cfg.n):
        raise ValidationError(f"grid sizes must be positive, got {cfg.n}", "grid.n")

    if cfg.mode == "probe":
        if len(cfg.n) != 1:
            raise ValidationError("probe mode takes a single grid size", "grid.n")
        if cfg.n[0] > PROBE_LIMITS[cfg.dim]:
            raise ValidationError(
                f"probe grids are limited to n <= {PROBE_LIMITS[cfg.dim]} in {cfg.dim}D", "grid.n")
        if not cfg.probe_alpha:
            cfg.probe_alpha = (cfg.alpha,)
        cfg.probe_k = tuple(cfg.probe_k)
        cfg.probe_alpha = tuple(cfg.probe_alpha)
        if not cfg.probe_k or any(k <= 0 for k in cfg.probe_k):
            raise ValidationError(f"step sizes must be positive, got {cfg.probe_k}", "probe.k")
        if any(a <= 0 for a in cfg.probe_alpha):
            raise ValidationError(f"damping values must be positive, got {cfg.probe_alpha}",
                                  "probe.alpha")
        if cfg.trials < 1:
            raise ValidationError(f"must be at least 1, got {cfg.trials}", "probe.trials")
        return cfg

    if not cfg.nt:
        raise ValidationError("at least one step count is required", "grid.nt")
    for i, nt in enumerate(cfg.nt):
        if nt < 3:
            raise ValidationError(f"case {i}: N_t = {nt} is below the minimum of 3", "grid.nt")
    if cfg.mode == "single":
        if len(cfg.n) != 1 or len(cfg.nt) != 1:
            raise ValidationError("single mode takes one grid size and one step count", "grid")
    elif cfg.mode == "study-spatial":
        if len(cfg.n) < 2 or not _strictly_increasing(cfg.n):
            raise ValidationError("needs at least two strictly refining grid sizes", "grid.n")
        if len(cfg.nt) not in (1, len(cfg.n)):
            raise ValidationError("give one step count or one per grid", "grid.nt")
    elif cfg.mode == "study-temporal":
        if len(cfg.nt) < 2 or not _strictly_increasing(cfg.nt):
            raise ValidationError("needs at least two strictly refining step counts", "grid.nt")
        if len(cfg.n) not in (1, len(cfg.nt)):
            raise ValidationError("give one grid size or one per step count", "grid.n")
    elif cfg.mode == "study-coupled":
        if len(cfg.n) != len(cfg.nt) or len(cfg.n) < 2:
            raise ValidationError("needs paired grid and step lists of equal length >= 2", "grid")
        if not (_strictly_increasing(cfg.n) and _strictly_increasing(cfg.nt)):
            raise ValidationError("grid sizes and step counts must both strictly refine", "grid")
    return cfg


def _fmt_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (tuple, list)):
        return ", ".join(_fmt_value(x) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_config(cfg: RunConfig, header: str = "") -> str:
    """Serialise ``cfg`` so that ``parse_config(text=dump_config(cfg)) == cfg``."""
    d = asdict(cfg)
    lines = [f"# {line}" if line else "#" for line in header.splitlines()]
    if lines:
        lines.append("")
    lines += ["[run]", f"mode = {cfg.mode}", f"dim = {cfg.dim}", f"solution = {cfg.solution}",
              f"alpha = {_fmt_value(cfg.alpha)}", f"T = {_fmt_value(cfg.T)}", ""]
    lines += ["[grid]", f"n = {_fmt_value(d['n'])}"]
    if cfg.nt:
        lines.append(f"nt = {_fmt_value(d['nt'])}")
    lines += ["", "[solver]", f"tol = {_fmt_value(cfg.tol)}", f"maxit = {cfg.maxit}",
              f"precondition = {_fmt_value(cfg.precondition)}", ""]
    if cfg.mode == "probe":
        lines += ["[probe]", f"k = {_fmt_value(d['probe_k'])}",
                  f"alpha = {_fmt_value(d['probe_alpha'])}", f"trials = {cfg.trials}", ""]
    lines += ["[output]", f"dir = {cfg.out}", f"threads = {cfg.threads}", f"seed = {cfg.seed}",
              f"timing = {_fmt_value(cfg.timing)}", ""]
    return "\n".join(lines)


SUITE = {
    "table1": (
        "Spatial accuracy in 1D.\n"
        "Reference run: alpha = 0.01, N_t = 1e5, T = 0.1, h = 1/16 ... 1/256.\n"
        "N_t reduced to 2e4 on the coarse grids: temporal error k^3 ~ 1e-16 stays far\n"
        "below the finest spatial error (~1e-10). The two finest grids keep enough\n"
        "steps to stay under the BDF3 stability bound (see llgbdf3.stability).\n"
        "Solver tolerance 1e-14: over 1e5 steps a 1e-12 per-step algebraic error\n"
        "accumulates to the size of the finest spatial error.",
        RunConfig(mode="study-spatial", dim=1, solution="mms1d", alpha=0.01, T=0.1,
                  n=(16, 32, 64, 128, 256), nt=(20000, 20000, 20000, 25000, 100000),
                  tol=1e-14, out="out/table1", threads=1),
    ),
    "table2": (
        "Temporal accuracy in 1D.\n"
        "Reference run: alpha = 0.01, N_x = 1e4, T = 0.1, k = T/8 ... T/32.\n"
        "N_x reduced to 2000 here: spatial error h^4 ~ 4e-14 stays below every\n"
        "tabulated error.",
        RunConfig(mode="study-temporal", dim=1, solution="mms1d", alpha=0.01, T=0.1,
                  n=(2000,), nt=(8, 12, 16, 24, 32), out="out/table2", threads=1),
    ),
    "table3": (
        "Spatial accuracy in 3D.\n"
        "Reference run: alpha = 0.01, N_t = 1e4, T = 1, h = 1/4 ... 1/12.\n"
        "N_t reduced to 1e3 ... 7e3 here: k^3 <= 1e-9 stays below the finest spatial\n"
        "error (~1e-3), and each grid stays under the BDF3 stability bound.",
        RunConfig(mode="study-spatial", dim=3, solution="mms3d", alpha=0.01, T=1.0,
                  n=(4, 6, 8, 10, 12), nt=(1000, 2000, 3000, 5000, 7000),
                  out="out/table3", threads=1),
    ),
    "table4": (
        "Coupled refinement in 3D with k^3 ~ h^4.\n"
        "Reference run: alpha = 0.01, T = 1,\n"
        "(h, k) = (1/6, 1/10), (1/8, 1/15), (1/10, 1/21), (1/12, 1/27), (1/16, 1/40).",
        RunConfig(mode="study-coupled", dim=3, solution="mms3d", alpha=0.01, T=1.0,
                  n=(6, 8, 10, 12, 16), nt=(10, 15, 21, 27, 40), out="out/table4", threads=1),
    ),
}


def emit_reproduction_suite(outdir: str | Path) -> list:
    """Write ``table1.cfg`` ... ``table4.cfg`` into ``outdir``; return their paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, (header, cfg) in SUITE.items():
        p = outdir / f"{name}.cfg"
        p.write_text(dump_config(validate(cfg), header))
        paths.append(p)
    return paths
