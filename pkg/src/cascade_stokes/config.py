"""Run configuration: INI sections with key = value lines.

Sections and keys (all optional; defaults in the dataclasses below)::

    [geometry]  tau, d, lower_curve, profile, delta_margin
    [mesh]      h, kind, file
    [problem]   case, nu, forcing, seed, band
    [solver]    mode, linear_solver, tol, maxiter, r_values
    [study]     h_list, r_values, seeds
    [output]    dir

``lower_curve`` is a list of control points ``x,y x,y ...``.  ``profile`` is
``ellipse cx cy a b [angle]`` or ``spline x,y x,y ...`` (closed).
"""

import configparser
import os
from dataclasses import asdict, dataclass, field, fields

from .errors import ConfigError

OUTPUT_ROOT_ENV = "CASCADE_STOKES_OUTPUT_ROOT"
PROBLEM_CASES = ("uniform", "sine", "corner-compatible", "zero", "random")


def _floats(text, key):
    try:
        return tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"expected a list of numbers, got {text!r}", key) from None


def _points(text, key):
    pts = []
    for tok in text.split():
        parts = tok.split(",")
        if len(parts) != 2:
            raise ConfigError(f"expected points written as x,y; got {tok!r}", key)
        try:
            pts.append((float(parts[0]), float(parts[1])))
        except ValueError:
            raise ConfigError(f"non-numeric point {tok!r}", key) from None
    return tuple(pts)


@dataclass
class GeometryConfig:
    tau: float = 1.0
    d: float = 2.0
    lower_curve: tuple = ()
    profile: str = ""
    delta_margin: float = None


@dataclass
class MeshConfig:
    h: float = 0.125
    kind: str = ""  # structured | unstructured | empty for automatic
    file: str = ""


@dataclass
class ProblemConfig:
    case: str = "uniform"
    nu: float = 1.0
    forcing: str = "vector"  # vector | tensor
    seed: int = 0
    band: tuple = ()


@dataclass
class SolverSection:
    mode: str = "direct"
    linear_solver: str = "direct"
    tol: float = 1e-10
    maxiter: int = 5000
    r_values: tuple = (2.0,)


@dataclass
class StudyConfig:
    h_list: tuple = (1 / 6, 1 / 12, 1 / 24, 1 / 48)
    r_values: tuple = (1.5, 2.0, 3.0, 4.0)
    seeds: int = 10


@dataclass
class OutputConfig:
    dir: str = "out"


@dataclass
class RunConfig:
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    mesh: MeshConfig = field(default_factory=MeshConfig)
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    solver: SolverSection = field(default_factory=SolverSection)
    study: StudyConfig = field(default_factory=StudyConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    source: str = ""

    def output_dir(self, env=None):
        """Output directory; relative paths resolve against the output-root variable when set."""
        env = os.environ if env is None else env
        root = env.get(OUTPUT_ROOT_ENV)
        if root and not os.path.isabs(self.output.dir):
            return os.path.join(root, self.output.dir)
        return self.output.dir

    def to_ini(self):
        """Effective configuration as INI text (stable key order)."""
        lines = []
        for sec in ("geometry", "mesh", "problem", "solver", "study", "output"):
            lines.append(f"[{sec}]")
            for k, v in asdict(getattr(self, sec)).items():
                lines.append(f"{k} = {_render(k, v)}")
            lines.append("")
        return "\n".join(lines)


def _render(key, v):
    if v is None:
        return ""
    if key == "lower_curve":
        return " ".join(f"{x!r},{y!r}" for x, y in v)
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


_SECTIONS = {
    "geometry": GeometryConfig,
    "mesh": MeshConfig,
    "problem": ProblemConfig,
    "solver": SolverSection,
    "study": StudyConfig,
    "output": OutputConfig,
}


def _convert(cls, name, text, key):
    f = {x.name: x for x in fields(cls)}[name]
    default = f.default
    text = text.strip()
    if name == "lower_curve":
        return _points(text, key)
    if name in ("band",):
        vals = _floats(text, key)
        if vals and len(vals) != 2:
            raise ConfigError("band takes two numbers a, b", key)
        return vals
    if isinstance(default, tuple):
        vals = _floats(text, key)
        if not vals:
            raise ConfigError("empty list", key)
        return vals
    if name == "delta_margin":
        return None if text == "" else _number(text, key, float)
    if isinstance(default, bool):
        return text.lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return _number(text, key, int)
    if isinstance(default, float):
        return _number(text, key, float)
    return text


def _number(text, key, kind):
    try:
        return kind(text)
    except ValueError:
        raise ConfigError(f"expected {'an integer' if kind is int else 'a number'}, got {text!r}", key) from None


def _apply(cfg, section, name, text):
    key = f"{section}.{name}"
    if section not in _SECTIONS:
        raise ConfigError("unknown section", key)
    cls = _SECTIONS[section]
    if name not in {f.name for f in fields(cls)}:
        raise ConfigError("unknown key", key)
    setattr(getattr(cfg, section), name, _convert(cls, name, text, key))


def load_config(path=None, overrides=()):
    """Parse an INI file (optional) and ``section.key=value`` overrides, then validate."""
    cfg = RunConfig(source=path or "")
    if path:
        if not os.path.isfile(path):
            raise ConfigError(f"config file not found: {path}", "config")
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
        parser.optionxform = str
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"cannot parse config: {exc}", "config") from None
        for section in parser.sections():
            for name, text in parser.items(section):
                _apply(cfg, section, name, text)
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must read section.key=value, got {item!r}", "--set")
        lhs, text = item.split("=", 1)
        section, name = lhs.strip().split(".", 1)
        _apply(cfg, section, name, text)
    validate(cfg)
    return cfg


def validate(cfg):
    g, m, p, s, st = cfg.geometry, cfg.mesh, cfg.problem, cfg.solver, cfg.study
    if not g.tau > 0:
        raise ConfigError("must be positive", "geometry.tau")
    if not g.d > 0:
        raise ConfigError("must be positive", "geometry.d")
    if g.profile:
        head = g.profile.split()[0]
        if head not in ("ellipse", "spline"):
            raise ConfigError("profile must start with 'ellipse' or 'spline'", "geometry.profile")
    if not m.h > 0:
        raise ConfigError("must be positive", "mesh.h")
    if m.kind not in ("", "structured", "unstructured"):
        raise ConfigError("must be structured or unstructured", "mesh.kind")
    if m.file and not os.path.isfile(m.file):
        raise ConfigError(f"mesh file not found: {m.file}", "mesh.file")
    if p.case not in PROBLEM_CASES:
        raise ConfigError(f"unknown case {p.case!r}; expected one of {', '.join(PROBLEM_CASES)}", "problem.case")
    if not p.nu > 0:
        raise ConfigError("must be positive", "problem.nu")
    if p.forcing not in ("vector", "tensor"):
        raise ConfigError("must be vector or tensor", "problem.forcing")
    if s.mode not in ("direct", "lifted"):
        raise ConfigError("must be direct or lifted", "solver.mode")
    if s.linear_solver not in ("direct", "minres"):
        raise ConfigError("must be direct or minres", "solver.linear_solver")
    if not 0 < s.tol < 1:
        raise ConfigError("must lie in (0, 1)", "solver.tol")
    if s.maxiter < 1:
        raise ConfigError("must be at least 1", "solver.maxiter")
    for key, rs in (("solver.r_values", s.r_values), ("study.r_values", st.r_values)):
        if any(not r > 1 for r in rs):
            raise ConfigError("exponents must exceed 1", key)
    if len(st.h_list) < 3 or any(not h > 0 for h in st.h_list):
        raise ConfigError("needs at least three positive mesh sizes", "study.h_list")
    if st.seeds < 1:
        raise ConfigError("must be at least 1", "study.seeds")
    if not cfg.output.dir:
        raise ConfigError("must not be empty", "output.dir")
    return cfg
