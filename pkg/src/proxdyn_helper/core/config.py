"""Configuration documents: parsing into domain objects and record writing.

One document drives every subcommand. It has named sections (`graph`,
`weights`, `agents`, `signal`, `scenario`, `certificate`) and, in the
Markdown format, a free-text body kept as `notes`. Subcommands ignore the
sections they do not need.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import frontmatter
import numpy as np
import yaml

from proxdyn_helper.core.certify import DEFAULT_ETA, InfeasibleReport, WeightMatrix
from proxdyn_helper.core.dynamics import GameInstance
from proxdyn_helper.core.formats import SUPPORTED_FORMATS, atomic_write, format_from_path, is_supported_format
from proxdyn_helper.core.graph import DEFAULT_ROW_TOL, AdjacencyMatrix
from proxdyn_helper.core.prox import AgentCost, Ball, Box, ConvexSet
from proxdyn_helper.core.scenario import (
    DEFAULT_DISPLACEMENT_TOL,
    DEFAULT_STEPS,
    ObstacleSet,
    RobotScenario,
)
from proxdyn_helper.core.switching import SwitchingSignal, SwitchMode
from proxdyn_helper.utils.logging import logger
from proxdyn_helper.utils.validation import ConfigError

MODES = ("validate-graph", "solve-lmi", "simulate", "switch-sim", "dwell-bound", "explore")

SECTION_KEYS: dict[str, set[str]] = {
    "graph": {"P", "row_tol"},
    "weights": {"Q", "eta"},
    "agents": set(),
    "signal": {"modes", "segments", "tau", "exhaustive"},
    "scenario": {"r", "epsilon", "steps", "tol", "obstacles"},
    "certificate": {"eta", "lambda_min", "feasible", "seed"},
    "notes": set(),
}
AGENT_KEYS = {"gamma", "target", "initial", "constraint"}
MODE_KEYS = {"P", "Q", "eta", "kappa"}
BOX_KEYS = {"center", "half_width"}
BALL_KEYS = {"center", "radius"}

__all__ = [
    "MODES",
    "ConfigBundle",
    "RunConfig",
    "parse_config",
    "load_document",
    "build_bundle",
    "build_run_config",
    "bundle_to_document",
    "certified_bundle",
    "write_record",
    "AgentSpec",
    "ScenarioSpec",
]


# ---------------------------------------------------------------------------
# Field readers. Each takes the field path used in error messages.


def _fail(path: str, message: str) -> ConfigError:
    logger.error(f"Config error at {path}: {message}")
    return ConfigError(f"{path}: {message}")


def _check_keys(mapping: Any, allowed: set[str], path: str) -> dict:
    if not isinstance(mapping, dict):
        raise _fail(path, f"expected a mapping, got {type(mapping).__name__}")
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise _fail(path, f"unknown key(s) {unknown}; allowed {sorted(allowed)}")
    return mapping


def _require(mapping: dict, key: str, path: str) -> Any:
    if key not in mapping:
        raise _fail(path, f"missing required key '{key}'")
    return mapping[key]


def _number(value: Any, path: str) -> float:
    # bool is an int subclass; "true" is not a decimal number
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _fail(path, f"expected a decimal number, got {value!r}")
    return float(value)


def _integer(value: Any, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise _fail(path, f"expected an integer, got {value!r}")
    return value


def _vector(value: Any, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise _fail(path, "expected a non-empty list of numbers")
    return np.array([_number(v, f"{path}[{i}]") for i, v in enumerate(value)])


def _matrix(value: Any, path: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise _fail(path, "expected a non-empty list of rows")
    rows = [_vector(row, f"{path}[{i}]") for i, row in enumerate(value)]
    if len({len(row) for row in rows}) != 1:
        raise _fail(path, "rows have different lengths")
    return np.vstack(rows)


def _constraint(value: Any, path: str) -> ConvexSet:
    _check_keys(value, {"box", "ball"}, path)
    if len(value) != 1:
        raise _fail(path, "expected exactly one of 'box' or 'ball'")
    if "box" in value:
        spec = _check_keys(value["box"], BOX_KEYS, f"{path}.box")
        center = _vector(_require(spec, "center", f"{path}.box"), f"{path}.box.center")
        half_width = _vector(_require(spec, "half_width", f"{path}.box"), f"{path}.box.half_width")
        return Box(center=center, half_width=half_width)
    spec = _check_keys(value["ball"], BALL_KEYS, f"{path}.ball")
    center = _vector(_require(spec, "center", f"{path}.ball"), f"{path}.ball.center")
    radius = _number(_require(spec, "radius", f"{path}.ball"), f"{path}.ball.radius")
    return Ball(center=center, radius=radius)


# ---------------------------------------------------------------------------
# Parsed document.


@dataclass(frozen=True, eq=False)
class AgentSpec:
    gamma: float
    target: np.ndarray
    initial: np.ndarray
    constraint: ConvexSet | None = None


@dataclass(frozen=True)
class ScenarioSpec:
    r: float
    epsilon: float
    steps: int = DEFAULT_STEPS
    tol: float = DEFAULT_DISPLACEMENT_TOL
    obstacles: ObstacleSet = field(default_factory=ObstacleSet)


@dataclass(frozen=True, eq=False)
class ConfigBundle:
    """Domain objects parsed from one configuration document."""

    P: AdjacencyMatrix
    Qtilde: WeightMatrix | None = None
    eta: float = DEFAULT_ETA
    agents: tuple[AgentSpec, ...] = ()
    modes: tuple[SwitchMode, ...] = ()
    signal: SwitchingSignal | None = None
    scenario: ScenarioSpec | None = None
    certificate: Mapping[str, Any] | None = None
    notes: str = ""
    source: Path | None = None

    def _need(self, ok: bool, section: str, purpose: str) -> None:
        if not ok:
            raise _fail(section, f"section '{section}' is required to {purpose}")

    @property
    def initial(self) -> np.ndarray:
        self._need(bool(self.agents), "agents", "build a collective state")
        return np.vstack([a.initial for a in self.agents])

    def costs(self) -> tuple[AgentCost, ...]:
        self._need(bool(self.agents), "agents", "build agent costs")
        self._need(self.Qtilde is not None, "weights", "build agent costs")
        costs = []
        for i, (agent, w) in enumerate(zip(self.agents, self.Qtilde.diagonal, strict=True), 1):
            if agent.constraint is None:
                raise _fail(f"agents[{i - 1}]", "a constraint is required for fixed-set dynamics")
            costs.append(AgentCost(agent.gamma, agent.target, agent.constraint, np.full(agent.target.shape, w)))
        return tuple(costs)

    def game(self) -> GameInstance:
        costs = self.costs()
        return GameInstance(P=self.P, n=costs[0].dim, costs=costs, Qtilde=self.Qtilde, eta=self.eta)

    def robot_scenario(self, with_obstacles: bool = True) -> RobotScenario:
        self._need(self.scenario is not None, "scenario", "run the exploration")
        self._need(bool(self.agents), "agents", "run the exploration")
        self._need(self.Qtilde is not None, "weights", "run the exploration")
        spec = self.scenario
        return RobotScenario(
            initial=np.vstack([a.initial for a in self.agents]),
            targets=np.vstack([a.target for a in self.agents]),
            gammas=np.array([a.gamma for a in self.agents]),
            r=spec.r,
            epsilon=spec.epsilon,
            P=self.P,
            Qtilde=self.Qtilde,
            obstacles=spec.obstacles if with_obstacles else ObstacleSet(),
            steps=spec.steps,
            tol=spec.tol,
        )


def _parse_graph(section: Any) -> AdjacencyMatrix:
    _check_keys(section, SECTION_KEYS["graph"], "graph")
    P = _matrix(_require(section, "P", "graph"), "graph.P")
    row_tol = _number(section.get("row_tol", DEFAULT_ROW_TOL), "graph.row_tol")
    return AdjacencyMatrix.from_array(P, row_tol=row_tol)


def _parse_weights(section: Any) -> tuple[WeightMatrix, float]:
    _check_keys(section, SECTION_KEYS["weights"], "weights")
    q = _vector(_require(section, "Q", "weights"), "weights.Q")
    eta = _number(section.get("eta", DEFAULT_ETA), "weights.eta")
    if not 0.0 < eta < 1.0:
        raise _fail("weights.eta", f"must lie in (0, 1), got {eta}")
    return WeightMatrix.from_diagonal(q), eta


def _parse_agents(section: Any) -> tuple[AgentSpec, ...]:
    if not isinstance(section, list) or not section:
        raise _fail("agents", "expected a non-empty list of agents")
    agents = []
    for i, raw in enumerate(section):
        path = f"agents[{i}]"
        _check_keys(raw, AGENT_KEYS, path)
        gamma = _number(_require(raw, "gamma", path), f"{path}.gamma")
        target = _vector(_require(raw, "target", path), f"{path}.target")
        initial = _vector(raw["initial"], f"{path}.initial") if "initial" in raw else target.copy()
        if initial.shape != target.shape:
            raise _fail(f"{path}.initial", f"has {initial.size} entries, target has {target.size}")
        constraint = _constraint(raw["constraint"], f"{path}.constraint") if "constraint" in raw else None
        agents.append(AgentSpec(gamma=gamma, target=target, initial=initial, constraint=constraint))
    return tuple(agents)


def _parse_signal(section: Any) -> tuple[tuple[SwitchMode, ...], SwitchingSignal]:
    _check_keys(section, SECTION_KEYS["signal"], "signal")
    raw_modes = _require(section, "modes", "signal")
    if not isinstance(raw_modes, list) or not raw_modes:
        raise _fail("signal.modes", "expected a non-empty list of modes")
    modes = []
    for i, raw in enumerate(raw_modes):
        path = f"signal.modes[{i}]"
        _check_keys(raw, MODE_KEYS, path)
        P = AdjacencyMatrix.from_array(_matrix(_require(raw, "P", path), f"{path}.P"))
        Q = WeightMatrix.from_diagonal(_vector(_require(raw, "Q", path), f"{path}.Q"))
        eta = _number(raw.get("eta", DEFAULT_ETA), f"{path}.eta")
        kappa = _number(raw.get("kappa", 1.0), f"{path}.kappa")
        modes.append(SwitchMode(P=P, Qtilde=Q, eta=eta, kappa=kappa))

    raw_segments = _require(section, "segments", "signal")
    if not isinstance(raw_segments, list):
        raise _fail("signal.segments", "expected a list of [mode, duration] pairs")
    segments = []
    for i, pair in enumerate(raw_segments):
        path = f"signal.segments[{i}]"
        if not isinstance(pair, list) or len(pair) != 2:
            raise _fail(path, "expected a [mode, duration] pair")
        segments.append((_integer(pair[0], f"{path}[0]"), _integer(pair[1], f"{path}[1]")))
    tau = _integer(_require(section, "tau", "signal"), "signal.tau")
    exhaustive = section.get("exhaustive", False)
    if not isinstance(exhaustive, bool):
        raise _fail("signal.exhaustive", f"expected true or false, got {exhaustive!r}")
    return tuple(modes), SwitchingSignal(segments=tuple(segments), tau=tau, exhaustive=exhaustive)


def _parse_scenario(section: Any) -> ScenarioSpec:
    _check_keys(section, SECTION_KEYS["scenario"], "scenario")
    r = _number(_require(section, "r", "scenario"), "scenario.r")
    epsilon = _number(_require(section, "epsilon", "scenario"), "scenario.epsilon")
    steps = _integer(section.get("steps", DEFAULT_STEPS), "scenario.steps")
    tol = _number(section.get("tol", DEFAULT_DISPLACEMENT_TOL), "scenario.tol")
    raw_obstacles = section.get("obstacles", [])
    if not isinstance(raw_obstacles, list):
        raise _fail("scenario.obstacles", "expected a list of boxes")
    boxes = []
    for i, raw in enumerate(raw_obstacles):
        path = f"scenario.obstacles[{i}]"
        _check_keys(raw, BOX_KEYS, path)
        boxes.append(Box(center=_vector(_require(raw, "center", path), f"{path}.center"),
                         half_width=_vector(_require(raw, "half_width", path), f"{path}.half_width")))
    return ScenarioSpec(r=r, epsilon=epsilon, steps=steps, tol=tol, obstacles=ObstacleSet(tuple(boxes)))


def _parse_certificate(section: Any) -> dict:
    _check_keys(section, SECTION_KEYS["certificate"], "certificate")
    return dict(section)


def build_bundle(document: Any, source: Path | None = None) -> ConfigBundle:
    """Turn a loaded document into domain objects.

    Raises:
        ConfigError: On unknown sections or keys, wrong value types, or a missing `graph` section.
        GraphValidationError: If a communication matrix fails validation.
    """
    if document is None:
        document = {}
    _check_keys(document, set(SECTION_KEYS), "<document>")
    if "graph" not in document:
        raise _fail("graph", "missing required section 'graph'")

    P = _parse_graph(document["graph"])
    Qtilde, eta = _parse_weights(document["weights"]) if "weights" in document else (None, DEFAULT_ETA)
    if Qtilde is not None and Qtilde.N != P.N:
        raise _fail("weights.Q", f"has {Qtilde.N} entries, graph has {P.N} agents")
    agents = _parse_agents(document["agents"]) if "agents" in document else ()
    if agents and len(agents) != P.N:
        raise _fail("agents", f"lists {len(agents)} agents, graph has {P.N}")
    modes, signal = _parse_signal(document["signal"]) if "signal" in document else ((), None)
    scenario = _parse_scenario(document["scenario"]) if "scenario" in document else None
    certificate = _parse_certificate(document["certificate"]) if "certificate" in document else None
    notes = document.get("notes", "") or ""
    if not isinstance(notes, str):
        raise _fail("notes", "expected free text")

    return ConfigBundle(P=P, Qtilde=Qtilde, eta=eta, agents=agents, modes=modes, signal=signal,
                        scenario=scenario, certificate=certificate, notes=notes, source=source)


def load_document(path) -> Any:
    """Read a JSON, YAML or Markdown-with-front-matter document.

    Raises:
        ConfigError: If the file is missing or malformed; the message carries the line number.
    """
    path = Path(path)
    try:
        format = format_from_path(path)
    except ValueError as e:
        raise _fail(str(path), str(e)) from e
    try:
        raw = path.read_text(encoding="utf-8")
    except FileNotFoundError as e:
        raise _fail(str(path), "file not found") from e

    try:
        if format == "json":
            return json.loads(raw) if raw.strip() else None
        if format == "yaml":
            return yaml.safe_load(raw)
        post = frontmatter.loads(raw)
        document = dict(post.metadata)
        if post.content.strip():
            document["notes"] = post.content.strip("\n") + "\n"
        return document
    except json.JSONDecodeError as e:
        raise _fail(f"{path}:{e.lineno}", f"invalid JSON: {e.msg}") from e
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        line = mark.line + 1 if mark is not None else "?"
        raise _fail(f"{path}:{line}", f"invalid YAML: {getattr(e, 'problem', e)}") from e


def parse_config(path) -> ConfigBundle:
    document = load_document(path)
    bundle = build_bundle(document, source=Path(path))
    logger.info(f"Loaded config {path} ({bundle.P.N} agents)")
    return bundle


# ---------------------------------------------------------------------------
# Record writing.


def _set_to_document(constraint: ConvexSet) -> dict:
    if isinstance(constraint, Box):
        return {"box": {"center": constraint.center.tolist(), "half_width": constraint.half_width.tolist()}}
    if isinstance(constraint, Ball):
        return {"ball": {"center": constraint.center.tolist(), "radius": constraint.radius}}
    raise ConfigError(f"cannot write a {type(constraint).__name__} constraint")


def bundle_to_document(bundle: ConfigBundle, certificate: Mapping[str, Any] | None = None) -> dict:
    """Inverse of `build_bundle`."""
    document: dict[str, Any] = {"graph": {"P": bundle.P.entries.tolist()}}
    if bundle.P.row_tol != DEFAULT_ROW_TOL:
        document["graph"]["row_tol"] = bundle.P.row_tol
    if bundle.Qtilde is not None:
        document["weights"] = {"Q": bundle.Qtilde.diagonal.tolist(), "eta": bundle.eta}
    if bundle.agents:
        agents = []
        for agent in bundle.agents:
            entry = {"gamma": agent.gamma, "target": agent.target.tolist(), "initial": agent.initial.tolist()}
            if agent.constraint is not None:
                entry["constraint"] = _set_to_document(agent.constraint)
            agents.append(entry)
        document["agents"] = agents
    if bundle.signal is not None:
        document["signal"] = {
            "modes": [{"P": m.P.entries.tolist(), "Q": m.Qtilde.diagonal.tolist(), "eta": m.eta, "kappa": m.kappa}
                      for m in bundle.modes],
            "segments": [[m, d] for m, d in bundle.signal.segments],
            "tau": bundle.signal.tau,
            "exhaustive": bundle.signal.exhaustive,
        }
    if bundle.scenario is not None:
        spec = bundle.scenario
        document["scenario"] = {
            "r": spec.r,
            "epsilon": spec.epsilon,
            "steps": spec.steps,
            "tol": spec.tol,
            "obstacles": [{"center": b.center.tolist(), "half_width": b.half_width.tolist()}
                          for b in spec.obstacles],
        }
    certificate = certificate if certificate is not None else bundle.certificate
    if certificate is not None:
        document["certificate"] = dict(certificate)
    if bundle.notes:
        document["notes"] = bundle.notes
    return document


def certified_bundle(bundle: ConfigBundle, result: WeightMatrix | InfeasibleReport, eta: float,
                     lambda_min: float, seed: int) -> tuple[ConfigBundle, dict]:
    """The bundle with the solver's weight in place, and the certificate section to record."""
    feasible = isinstance(result, WeightMatrix)
    certificate = {"eta": float(eta), "lambda_min": float(lambda_min), "feasible": feasible, "seed": int(seed)}
    if isinstance(result, WeightMatrix):
        bundle = ConfigBundle(P=bundle.P, Qtilde=result, eta=eta, agents=bundle.agents, modes=bundle.modes,
                              signal=bundle.signal, scenario=bundle.scenario, certificate=certificate,
                              notes=bundle.notes, source=bundle.source)
    return bundle, certificate


def write_record(document: Mapping[str, Any], path, format: str = "yaml") -> Path:
    """Write a document as JSON, YAML or Markdown (sections in front matter, `notes` as body).

    The file appears atomically; a failure leaves no partial file behind.
    """
    if not is_supported_format(format):
        raise ConfigError(f"Unsupported format '{format}'. Supported formats: {SUPPORTED_FORMATS}")
    document = dict(document)
    if format == "json":
        text = json.dumps(document, indent=2) + "\n"
    elif format == "yaml":
        text = yaml.safe_dump(document, default_flow_style=False, sort_keys=False, allow_unicode=True)
    else:
        content = document.pop("notes", "")
        post = frontmatter.Post(content, **document)
        text = frontmatter.dumps(post, sort_keys=False)
        if not text.endswith("\n"):
            text += "\n"
    atomic_write(path, text)
    logger.debug(f"Wrote {format} record {path}")
    return Path(path)


# ---------------------------------------------------------------------------
# Run configuration.

_OVERRIDE_RULES = {
    "eta": (lambda v: isinstance(v, float | int) and 0.0 < v < 1.0, "a number in (0, 1)"),
    "tol": (lambda v: isinstance(v, float | int) and v > 0, "a positive number"),
    "max_iter": (lambda v: isinstance(v, int) and v >= 1, "an integer >= 1"),
    "seed": (lambda v: isinstance(v, int) and v >= 0, "an integer >= 0"),
    "tau": (lambda v: isinstance(v, int) and v >= 0, "an integer >= 0"),
    "obstacles": (lambda v: isinstance(v, bool), "true or false"),
}


@dataclass(frozen=True)
class RunConfig:
    """What one CLI invocation should do. `outputs` collects the paths it writes."""

    mode: str
    input_path: Path
    output_dir: Path
    format: str = "yaml"
    overrides: Mapping[str, Any] = field(default_factory=dict)
    outputs: list[Path] = field(default_factory=list, compare=False, repr=False)

    def get(self, key: str, default: Any = None) -> Any:
        return self.overrides.get(key, default)


def build_run_config(mode: str, input_path, output_dir=".", format: str = "yaml", **overrides) -> RunConfig:
    """Validate CLI-level settings. Overrides given as None are treated as absent.

    Raises:
        ConfigError: On an unknown mode or format, a missing input file, or an out-of-range override.
    """
    if mode not in MODES:
        raise _fail("mode", f"unknown mode '{mode}'; expected one of {list(MODES)}")
    if not is_supported_format(format):
        raise _fail("format", f"unsupported format '{format}'; expected one of {SUPPORTED_FORMATS}")
    input_path = Path(input_path)
    if not input_path.is_file():
        raise _fail(str(input_path), "input file not found")
    clean: dict[str, Any] = {}
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in _OVERRIDE_RULES:
            raise _fail(key, "unknown override")
        check, expected = _OVERRIDE_RULES[key]
        if (isinstance(value, bool) and key != "obstacles") or not check(value):
            raise _fail(key, f"must be {expected}, got {value!r}")
        clean[key] = value
    return RunConfig(mode=mode, input_path=input_path, output_dir=Path(output_dir), format=format, overrides=clean)
