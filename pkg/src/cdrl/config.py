"""Run configuration: a flat ``key = value`` text format.

Grammar, one entry per line::

    # comment (whole line only)
    seed = 3
    env.id = point-runner
    reward_space.epsilon = 0.2            # or reward_space.ranges = 0.8:1.2,0.5:1.5
    algo.hidden_sizes = 64,64
    ga.bounds = -2:2,-2:2

Top-level keys: ``seed``, ``out``. Sections: ``env`` (id, max_episode_steps,
grid_map with rows separated by ``/``), ``reward_space`` (features,
anchor_index, anchor_weight, and exactly one of epsilon or ranges), ``algo``
(any AlgoConfig field), ``ga`` (any GaConfig field), ``fitness`` (any
FitnessSpec field) and ``baseline`` (compensation_steps, a literal override of
the budget formula). Later duplicates win, so overrides are appended lines.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .algorithms.config import AlgoConfig
from .envs import ENV_IDS, env_spec
from .hindsight import FitnessSpec, GaConfig, ga_step_budget
from .reward_space import RewardSpace


class ConfigError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass
class RunConfig:
    env_id: str
    space: RewardSpace
    algo: AlgoConfig = field(default_factory=AlgoConfig)
    ga: GaConfig = field(default_factory=GaConfig)
    fitness: FitnessSpec = field(default_factory=FitnessSpec)
    seed: int = 0
    out: str = "runs"
    grid_map: tuple[str, ...] | None = None
    max_episode_steps: int | None = None
    compensation_steps: int | None = None

    @property
    def env_kw(self) -> dict:
        kw = {}
        if self.grid_map is not None:
            kw["grid_map"] = self.grid_map
        if self.max_episode_steps is not None:
            kw["max_episode_steps"] = self.max_episode_steps
        return kw

    def baseline_compensation(self) -> int:
        if self.compensation_steps is not None:
            return self.compensation_steps
        return ga_step_budget(self.ga, self.fitness)


def bundled_names() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files("cdrl.configs").iterdir()
                  if p.name.endswith(".cfg"))


def parse_lines(text: str) -> dict[str, str]:
    raw: dict[str, str] = {}
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {n}", f"expected key = value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {n}", "empty key")
        raw[key] = value
    return raw


def apply_overrides(raw: dict[str, str], overrides) -> dict[str, str]:
    raw = dict(raw)
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(item, "override must look like KEY=VALUE")
        key, value = (s.strip() for s in item.split("=", 1))
        raw[key] = value
    return raw


def _coerce(path: str, text: str, like):
    try:
        if isinstance(like, bool):
            if text.lower() not in ("true", "false", "1", "0"):
                raise ValueError("expected true or false")
            return text.lower() in ("true", "1")
        if isinstance(like, int):
            return int(text)
        if isinstance(like, float):
            return float(text)
        if isinstance(like, tuple):
            return tuple(int(v) for v in text.split(",") if v.strip())
        return text
    except ValueError as exc:
        raise ConfigError(path, f"cannot parse {text!r}: {exc}") from None


def _pairs(path: str, text: str) -> tuple[tuple[float, float], ...]:
    try:
        out = []
        for item in text.split(","):
            lo, hi = item.split(":")
            out.append((float(lo), float(hi)))
        return tuple(out)
    except ValueError:
        raise ConfigError(path, f"expected lo:hi,lo:hi,... got {text!r}") from None


def _floats(path: str, text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise ConfigError(path, f"expected comma-separated numbers, got {text!r}") from None


def _section(raw: dict[str, str], prefix: str) -> dict[str, str]:
    return {k[len(prefix) + 1:]: v for k, v in raw.items() if k.startswith(prefix + ".")}


def _build_algo(raw: dict[str, str]) -> AlgoConfig:
    base = AlgoConfig()
    kw = {}
    names = {f.name for f in dataclasses.fields(AlgoConfig)}
    for key, text in _section(raw, "algo").items():
        if key not in names:
            raise ConfigError(f"algo.{key}", "unknown field")
        kw[key] = _coerce(f"algo.{key}", text, getattr(base, key))
    cfg = AlgoConfig(**kw)
    errs = cfg.validate()
    if errs:
        raise ConfigError(f"algo.{errs[0][0]}", errs[0][1])
    return cfg


def _build_space(raw: dict[str, str], default_features) -> RewardSpace:
    sec = _section(raw, "reward_space")
    unknown = set(sec) - {"features", "anchor_index", "anchor_weight", "epsilon", "ranges"}
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"reward_space.{key}", "unknown field")
    names = tuple(s.strip() for s in sec.get("features", ",".join(default_features)).split(","))
    anchor = _coerce("reward_space.anchor_index", sec.get("anchor_index", "0"), 0)
    xi = _coerce("reward_space.anchor_weight", sec.get("anchor_weight", "1.0"), 1.0)
    if "epsilon" in sec and "ranges" in sec:
        raise ConfigError("reward_space.ranges", "give either ranges or epsilon, not both")
    try:
        if "epsilon" in sec:
            eps = _coerce("reward_space.epsilon", sec["epsilon"], 1.0)
            return RewardSpace.from_epsilon(names, eps, xi, anchor)
        if "ranges" not in sec:
            raise ConfigError("reward_space.ranges", "missing; give reward_space.ranges or "
                                                     "reward_space.epsilon")
        return RewardSpace(names, _pairs("reward_space.ranges", sec["ranges"]), xi, anchor)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("reward_space.ranges", str(exc)) from None


def _build_ga(raw: dict[str, str], dim: int) -> GaConfig:
    sec = _section(raw, "ga")
    base = GaConfig()
    kw: dict = {"bounds": ((-2.0, 2.0),) * dim}
    for key, text in sec.items():
        path = f"ga.{key}"
        if key == "bounds":
            kw["bounds"] = _pairs(path, text)
        elif key == "mutation_scale":
            kw["mutation_scale"] = None if text.lower() == "auto" else _floats(path, text)
        elif key in {f.name for f in dataclasses.fields(GaConfig)}:
            kw[key] = _coerce(path, text, getattr(base, key))
        else:
            raise ConfigError(path, "unknown field")
    if len(kw["bounds"]) != dim:
        raise ConfigError("ga.bounds", f"need {dim} lo:hi pairs (one per condition dimension)")
    try:
        return GaConfig(**kw)
    except ValueError as exc:
        raise ConfigError("ga", str(exc)) from None


def _build_fitness(raw: dict[str, str]) -> FitnessSpec:
    base = FitnessSpec()
    kw = {}
    for key, text in _section(raw, "fitness").items():
        if not hasattr(base, key):
            raise ConfigError(f"fitness.{key}", "unknown field")
        kw[key] = _coerce(f"fitness.{key}", text, getattr(base, key))
    try:
        return FitnessSpec(**kw)
    except ValueError as exc:
        raise ConfigError("fitness", str(exc)) from None


TOP_KEYS = {"seed", "out"}
SECTIONS = {"env", "reward_space", "algo", "ga", "fitness", "baseline"}


def build(raw: dict[str, str]) -> RunConfig:
    for key in raw:
        head = key.split(".", 1)[0]
        if key not in TOP_KEYS and ("." not in key or head not in SECTIONS):
            raise ConfigError(key, "unknown key")
    env = _section(raw, "env")
    for key in env:
        if key not in ("id", "max_episode_steps", "grid_map"):
            raise ConfigError(f"env.{key}", "unknown field")
    if "id" not in env:
        raise ConfigError("env.id", "missing")
    if env["id"] not in ENV_IDS:
        raise ConfigError("env.id", f"unknown environment; expected one of {', '.join(ENV_IDS)}")
    grid = None
    if "grid_map" in env:
        grid = tuple(r.strip() for r in env["grid_map"].split("/") if r.strip())
    steps = (_coerce("env.max_episode_steps", env["max_episode_steps"], 0)
             if "max_episode_steps" in env else None)
    try:
        spec = env_spec(env["id"], grid, steps)
    except ValueError as exc:
        raise ConfigError("env.grid_map", str(exc)) from None
    space = _build_space(raw, spec.feature_names)
    if space.feature_dim != spec.feature_dim:
        raise ConfigError("reward_space.features",
                          f"{env['id']} emits {spec.feature_dim} features, got {space.feature_dim}")
    base = _section(raw, "baseline")
    for key in base:
        if key != "compensation_steps":
            raise ConfigError(f"baseline.{key}", "unknown field")
    comp = (_coerce("baseline.compensation_steps", base["compensation_steps"], 0)
            if "compensation_steps" in base else None)
    seed = _coerce("seed", raw.get("seed", "0"), 0)
    if seed < 0 or seed >= 2**64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")
    return RunConfig(env["id"], space, _build_algo(raw), _build_ga(raw, space.condition_dim),
                     _build_fitness(raw), seed, raw.get("out", "runs"), grid, steps, comp)


def loads(text: str, overrides=()) -> RunConfig:
    return build(apply_overrides(parse_lines(text), overrides))


def resolve(name_or_path: str) -> str:
    """Config text from a file path or a bundled config name."""
    p = Path(name_or_path)
    if p.is_file():
        return p.read_text()
    name = name_or_path[:-4] if name_or_path.endswith(".cfg") else name_or_path
    if name in bundled_names():
        return resources.files("cdrl.configs").joinpath(name + ".cfg").read_text()
    raise ConfigError("config", f"no file or bundled config named {name_or_path!r} "
                                f"(bundled: {', '.join(bundled_names())})")


def load(name_or_path: str, overrides=()) -> RunConfig:
    return loads(resolve(name_or_path), overrides)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(str(v) for v in value)
    return str(value)


def to_lines(cfg: RunConfig) -> list[tuple[str, str]]:
    """Canonical (key, value) pairs; feeding them back through ``build``
    reproduces ``cfg``."""
    out = [("seed", str(cfg.seed)), ("out", cfg.out), ("env.id", cfg.env_id)]
    if cfg.max_episode_steps is not None:
        out.append(("env.max_episode_steps", str(cfg.max_episode_steps)))
    if cfg.grid_map is not None:
        out.append(("env.grid_map", "/".join(cfg.grid_map)))
    s = cfg.space
    out += [("reward_space.features", ",".join(s.feature_names)),
            ("reward_space.anchor_index", str(s.anchor_index)),
            ("reward_space.anchor_weight", repr(s.anchor_weight)),
            ("reward_space.ranges", ",".join(f"{lo!r}:{hi!r}" for lo, hi in s.ranges))]
    for f in dataclasses.fields(AlgoConfig):
        out.append((f"algo.{f.name}", _fmt(getattr(cfg.algo, f.name))))
    for f in dataclasses.fields(GaConfig):
        v = getattr(cfg.ga, f.name)
        if f.name == "bounds":
            v = ",".join(f"{lo!r}:{hi!r}" for lo, hi in v)
        elif f.name == "mutation_scale":
            v = "auto" if v is None else ",".join(repr(float(x)) for x in v)
        else:
            v = _fmt(v)
        out.append((f"ga.{f.name}", v))
    for f in dataclasses.fields(FitnessSpec):
        out.append((f"fitness.{f.name}", _fmt(getattr(cfg.fitness, f.name))))
    if cfg.compensation_steps is not None:
        out.append(("baseline.compensation_steps", str(cfg.compensation_steps)))
    return out


def dumps(cfg: RunConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in to_lines(cfg))
