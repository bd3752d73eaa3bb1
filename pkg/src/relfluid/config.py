"""Scenario configuration: parsing, validation, and normalized emission.

The on-disk format is a flat ``key = value`` text file forming a strict
TOML subset: bare keys, one assignment per line, ``#`` comments, and
scalar values only (quoted strings, integers, floats including ``inf``,
and ``true``/``false``).  Everything a run needs is spelled out by
scalars so configs stay diffable and any TOML parser can read them.

Parsing is strict in two stages.  Stage one (``ParseError``) rejects
malformed lines, unknown keys, duplicate keys, and values of the wrong
type, each with the offending line number and key.  Stage two
(``ValidationError``) checks every semantic invariant and reports the
complete list of violations in one exception rather than stopping at
the first.

``emit_config`` writes a normalized echo (canonical key order, TOML
value syntax) that re-parses to a structurally equal ``ScenarioConfig``;
runs drop this echo next to their outputs so a result directory is
always reproducible from its own contents.
"""

from __future__ import annotations

import dataclasses
import math

from .errors import ParseError, ValidationError
from .eos import EosSpec
from .relativity import PhysicalConstants

MODES = (
    "run2d",
    "run3d_barotropic",
    "run3d_general",
    "bracket_check",
    "limit_study",
    "baroclinic",
)
SCHEMES = ("arakawa", "spectral")
PRESETS_2D = ("taylor_green", "shear", "random")
PRESETS_3D = ("abc", "random")

TWO_PI = 2.0 * math.pi

# Modes whose dynamical state is planar (stream-function form).
_PLANAR_MODES = ("run2d", "limit_study")
# Modes that build three-dimensional states and therefore need nz.
_VOLUMETRIC_MODES = (
    "run3d_barotropic",
    "run3d_general",
    "bracket_check",
    "baroclinic",
)

# Worst-case |v|/amplitude for each preset, used to check the speed cap
# before any field is built.  Stream-function presets bound |v| = |grad
# psi| directly; velocity presets bound |v| <= |u|.  The swirl preset's
# exact bound is sqrt(6): |u|^2 = a^2[3 + 2(sin z cos y + sin x cos z +
# sin y cos x)] and each product is <= (sin^2 + cos^2)/2, so the bracket
# is <= 6 with equality on the diagonal x = y = z = pi/4.
_PRESET_SPEED_FACTOR = {
    "taylor_green": 1.0,
    "shear": 1.0,
    "random": 1.0,
    "abc": math.sqrt(6.0),
}


@dataclasses.dataclass(frozen=True)
class ScenarioConfig:
    """Fully validated description of one run.

    Optional fields hold ``None`` when they do not apply to the mode
    (for example ``nz`` in planar modes, or ``c`` in the classical-limit
    study, which fixes its own sweep of light speeds).
    """

    mode: str
    nx: int
    ny: int
    nz: int | None = None
    lx: float = TWO_PI
    ly: float = TWO_PI
    lz: float | None = None
    c: float | None = None
    eos_kind: str | None = None
    eos_a: float | None = None
    eos_n: float | None = None
    k: float = 1.0
    cfl: float = 0.4
    dt: float | None = None
    t_end: float = 1.0
    tol: float = 1e-10
    max_iter: int = 200
    scheme: str = "arakawa"
    projection: bool = False
    seed: int = 0
    initial_condition: str = "random"
    amplitude: float = 0.1
    spectrum_peak: float = 2.0
    output_dir: str = "out"
    snapshot_every: int = 0

    @property
    def is_planar(self) -> bool:
        return self.mode in _PLANAR_MODES

    @property
    def eos(self) -> EosSpec | None:
        if self.eos_kind is None:
            return None
        if self.eos_kind == "linear":
            return EosSpec("linear", self.eos_a)
        return EosSpec("power_law", self.eos_a, self.eos_n)

    @property
    def constants(self) -> PhysicalConstants:
        if self.c is None:
            raise ValueError(f"mode {self.mode!r} does not fix a single light speed")
        return PhysicalConstants(c=self.c)


_FIELD_TYPES: dict[str, type] = {
    "mode": str,
    "nx": int,
    "ny": int,
    "nz": int,
    "lx": float,
    "ly": float,
    "lz": float,
    "c": float,
    "eos_kind": str,
    "eos_a": float,
    "eos_n": float,
    "k": float,
    "cfl": float,
    "dt": float,
    "t_end": float,
    "tol": float,
    "max_iter": int,
    "scheme": str,
    "projection": bool,
    "seed": int,
    "initial_condition": str,
    "amplitude": float,
    "spectrum_peak": float,
    "output_dir": str,
    "snapshot_every": int,
}

# Canonical emission order: identity, geometry, physics, stepping,
# numerics, initialization, output.
_EMIT_ORDER = (
    "mode",
    "nx",
    "ny",
    "nz",
    "lx",
    "ly",
    "lz",
    "c",
    "eos_kind",
    "eos_a",
    "eos_n",
    "k",
    "cfl",
    "dt",
    "t_end",
    "tol",
    "max_iter",
    "scheme",
    "projection",
    "seed",
    "initial_condition",
    "amplitude",
    "spectrum_peak",
    "output_dir",
    "snapshot_every",
)


def _parse_value(raw: str, key: str, lineno: int):
    """Decode one TOML scalar; the caller coerces to the field type."""
    if raw == "":
        raise ParseError(f"line {lineno}: key {key!r} has an empty value")
    if raw.startswith('"'):
        if len(raw) < 2 or not raw.endswith('"') or raw.count('"') != 2:
            raise ParseError(
                f"line {lineno}: key {key!r} has a malformed quoted string"
            )
        return raw[1:-1]
    if raw in ("true", "false"):
        return raw == "true"
    lowered = raw.lower()
    if lowered in ("inf", "+inf"):
        return math.inf
    try:
        return int(raw, 10)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        raise ParseError(
            f"line {lineno}: key {key!r} has unparseable value {raw!r} "
            "(expected a quoted string, integer, float, inf, or true/false)"
        ) from None


def _strip_comment(line: str) -> str:
    """Drop a trailing # comment, respecting quoted strings."""
    in_quote = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_quote = not in_quote
        elif ch == "#" and not in_quote:
            return line[:i]
    return line


def parse_config_text(text: str) -> ScenarioConfig:
    """Parse and validate config text; see ``parse_config`` for files."""
    values: dict[str, object] = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw_line).strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw_value = line.partition("=")
        key = key.strip()
        raw_value = raw_value.strip()
        if not key.replace("_", "").isalnum() or key[0].isdigit():
            raise ParseError(f"line {lineno}: malformed key {key!r}")
        if key not in _FIELD_TYPES:
            raise ParseError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ParseError(f"line {lineno}: duplicate key {key!r}")
        value = _parse_value(raw_value, key, lineno)
        expected = _FIELD_TYPES[key]
        if expected is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if not isinstance(value, expected) or (
            expected is int and isinstance(value, bool)
        ):
            raise ParseError(
                f"line {lineno}: key {key!r} expects {expected.__name__}, "
                f"got {type(value).__name__}"
            )
        values[key] = value

    if "mode" not in values:
        raise ValidationError(["missing required key 'mode'"])
    config = ScenarioConfig(**values)  # type: ignore[arg-type]
    validate_config(config, explicit=frozenset(values))
    return config


def parse_config(path: str) -> ScenarioConfig:
    """Read, parse, and validate a scenario file.

    Raises ParseError (malformed line, unknown/duplicate key, wrong
    type; message carries the line number) or ValidationError (every
    violated invariant, collected).
    """
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def validate_config(config: ScenarioConfig, explicit: frozenset[str] = frozenset()):
    """Check every semantic invariant; raise ValidationError with all failures.

    ``explicit`` names the keys that were literally present in the
    source text, so inapplicable-key complaints fire only for values
    the user actually wrote (defaults are never inapplicable).
    """
    problems: list[str] = []

    if config.mode not in MODES:
        problems.append(
            f"mode {config.mode!r} is not one of {', '.join(MODES)}"
        )
        raise ValidationError(problems)

    planar = config.is_planar

    for name, n in (("nx", config.nx), ("ny", config.ny), ("nz", config.nz)):
        if n is None:
            continue
        if n % 2 != 0 or n < 8:
            problems.append(
                f"{name} = {n} violates the grid rule: even and at least 8 "
                "(spectral symmetry needs paired +k/-k modes)"
            )
    for name, length in (("lx", config.lx), ("ly", config.ly), ("lz", config.lz)):
        if length is not None and not length > 0.0:
            problems.append(f"{name} = {length} must be positive")

    applicable = _applicable_keys(config)
    for key in sorted(explicit - applicable):
        problems.append(f"key {key!r} does not apply to mode {config.mode!r}")

    if not planar and config.nz is None:
        problems.append(f"mode {config.mode!r} requires nz")

    if config.mode != "limit_study":
        if config.c is None:
            problems.append(f"mode {config.mode!r} requires c")
        elif not config.c > 0.0:
            problems.append(f"c = {config.c} must be positive (inf allowed)")

    if config.mode == "run3d_barotropic" and config.eos_kind is None:
        problems.append("mode run3d_barotropic requires eos_kind and eos_a")
    if config.eos_kind is not None and "eos_kind" in applicable:
        if config.eos_kind not in ("linear", "power_law"):
            problems.append(
                f"eos_kind {config.eos_kind!r} is not 'linear' or 'power_law'"
            )
        elif config.eos_a is None:
            problems.append(f"eos_kind {config.eos_kind!r} requires eos_a")
        else:
            try:
                _ = config.eos
            except ValueError as exc:
                problems.append(f"eos: {exc}")

    if not config.k > 0.0:
        problems.append(f"k = {config.k} must be positive")

    if not 0.0 < config.cfl <= 2.0:
        problems.append(f"cfl = {config.cfl} must lie in (0, 2]")
    if config.dt is not None and not config.dt > 0.0:
        problems.append(f"dt = {config.dt} must be positive")
    if not config.t_end >= 0.0:
        problems.append(f"t_end = {config.t_end} must be nonnegative")
    if not config.tol > 0.0:
        problems.append(f"tol = {config.tol} must be positive")
    if config.max_iter < 1:
        problems.append(f"max_iter = {config.max_iter} must be at least 1")
    if config.scheme not in SCHEMES:
        problems.append(f"scheme {config.scheme!r} is not one of {', '.join(SCHEMES)}")
    if not 0 <= config.seed < 2**64:
        problems.append(f"seed = {config.seed} must fit in an unsigned 64-bit integer")
    if config.snapshot_every < 0:
        problems.append(f"snapshot_every = {config.snapshot_every} must be nonnegative")

    if config.projection and "projection" not in applicable and "projection" not in explicit:
        problems.append(
            "projection applies only to run3d_barotropic "
            "(the general system evolves pressure and is not re-projected)"
        )

    presets = PRESETS_2D if planar else PRESETS_3D
    if config.mode == "bracket_check":
        presets = tuple(sorted(set(PRESETS_2D) | set(PRESETS_3D)))
    if config.initial_condition not in presets:
        problems.append(
            f"initial_condition {config.initial_condition!r} is not a "
            f"{'planar' if planar else 'volumetric'} preset "
            f"(choose from {', '.join(presets)})"
        )
    if not config.amplitude > 0.0:
        problems.append(f"amplitude = {config.amplitude} must be positive")
    if not config.spectrum_peak > 0.0:
        problems.append(f"spectrum_peak = {config.spectrum_peak} must be positive")

    factor = _PRESET_SPEED_FACTOR.get(config.initial_condition)
    if (
        factor is not None
        and config.c is not None
        and config.amplitude > 0.0
        and config.c > 0.0
    ):
        cap = PhysicalConstants(c=1.0).c_frac_max
        if factor * config.amplitude > cap * config.c:
            problems.append(
                f"amplitude = {config.amplitude} gives max|v|/c up to "
                f"{factor * config.amplitude / config.c:.3g} for preset "
                f"{config.initial_condition!r}, exceeding the cap {cap}"
            )

    if not config.output_dir:
        problems.append("output_dir must be a nonempty path")

    if problems:
        raise ValidationError(problems)


def _format_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return repr(value)
    return str(value)


def _applicable_keys(config: ScenarioConfig) -> frozenset[str]:
    """Keys that carry meaning for this config's mode.

    Shared by emission and validation so a normalized echo never
    contains a key the validator would reject as inapplicable.
    """
    keys = set(_FIELD_TYPES)
    if config.is_planar:
        keys -= {"nz", "lz"}
    if config.mode == "limit_study":
        keys.discard("c")
    if config.mode not in ("run3d_barotropic", "bracket_check"):
        keys -= {"eos_kind", "eos_a", "eos_n"}
    elif config.eos_kind != "power_law":
        keys.discard("eos_n")
    if not config.is_planar and config.mode != "bracket_check":
        keys.discard("k")
    if config.mode != "run3d_barotropic":
        keys.discard("projection")
    return frozenset(keys)


def emit_config(config: ScenarioConfig) -> str:
    """Normalized text form: canonical order, TOML scalars, no comments.

    Only keys applicable to the mode are written, so re-parsing the
    emitted text yields a structurally equal config — the round-trip
    property run directories rely on.
    """
    keys = _applicable_keys(config)
    lines = []
    for key in _EMIT_ORDER:
        if key not in keys:
            continue
        value = getattr(config, key)
        if value is None:
            continue
        lines.append(f"{key} = {_format_value(value)}")
    return "\n".join(lines) + "\n"
