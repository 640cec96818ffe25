"""Experiment configuration: schema, validation and object builders.

Configs are YAML mappings.  Every recognised key is listed in ``SCHEMA``;
unknown keys and wrongly typed values raise :class:`ConfigError` carrying
the dotted path of the offending field.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import copy
import math

import numpy as np
import yaml

from . import fock, hamiltonian as ham, states as S
from .lattice import build_torus
from .propagator import PropagatorSettings


class ConfigError(ValueError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


_NUM = (int, float)
_INTERACTIONS = ("power_p", "power_p_shifted", "custom_table")
STATE_PRESETS = ("mott_uniform", "mott_pattern", "strip_superposition", "bad_state",
                 "random", "random_hardcore")
OBS_PRESETS = ("empty_site", "occupation_at_most", "phase")

_REQUIRED_SECTIONS = ("lattice",)

# section -> {key: (types, required)}
SCHEMA = {
    "experiment": (str, False),
    "lattice": {"L": (int, True), "D": (int, True)},
    "sector": {"N": (int, False), "n_max": (int, False)},
    "model": {
        "J": (_NUM, False), "interaction": (str, False), "p": (_NUM, False),
        "U": (_NUM, False), "mu": (_NUM, False), "table": (list, False),
        "eps": (_NUM, False), "c_wtilde": (_NUM, False),
    },
    "state": {
        "preset": (str, True), "fill": (int, False), "pattern": (list, False),
        "members": (int, False), "seed": (int, False), "R": (int, False),
        "ell": (int, False), "gamma0": (_NUM, False),
    },
    "observables": {
        "O": {"preset": (str, False), "site": (int, False), "q": (int, False),
              "theta": (_NUM, False)},
        "Otilde": {"preset": (str, False), "site": (int, False), "q": (int, False),
                   "theta": (_NUM, False)},
    },
    "times": ((list, dict), False),
    "distances": (list, False),
    "options": (dict, False),
    "tolerances": (dict, False),
    "run": {
        "seed": (int, False), "threads": (int, False), "dense_threshold": (int, False),
        "krylov_dim": (int, False), "step_tolerance": (_NUM, False),
        "max_substeps": (int, False),
    },
}


def _typecheck(value, types, path):
    if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        raise ConfigError(path, "boolean not allowed here")
    if not isinstance(value, types):
        names = types.__name__ if isinstance(types, type) else "/".join(t.__name__ for t in types)
        raise ConfigError(path, f"expected {names}, got {type(value).__name__}")


def _validate(node, schema, path):
    if not isinstance(node, dict):
        raise ConfigError(path or "<root>", "expected a mapping")
    for key in node:
        if key not in schema:
            raise ConfigError(f"{path}.{key}" if path else str(key), "unknown field")
    for key, spec in schema.items():
        sub = f"{path}.{key}" if path else key
        if isinstance(spec, dict):
            if key in node:
                _validate(node[key], spec, sub)
            elif key in _REQUIRED_SECTIONS and path == "":
                raise ConfigError(sub, "missing section")
            continue
        types, required = spec
        if key not in node:
            if required:
                raise ConfigError(sub, "missing required field")
            continue
        _typecheck(node[key], types, sub)


@dataclass
class ExperimentConfig:
    L: int
    D: int
    N: int | None = None
    n_max: int | None = None
    model: dict = field(default_factory=dict)
    state: dict = field(default_factory=lambda: {"preset": "mott_uniform"})
    O: dict = field(default_factory=lambda: {"preset": "empty_site", "site": 0})
    Otilde: dict = field(default_factory=lambda: {"preset": "empty_site", "site": 1})
    times: list = field(default_factory=list)
    distances: list = field(default_factory=list)
    options: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1
    dense_threshold: int = 4096
    krylov_dim: int = 30
    step_tolerance: float = 1e-10
    max_substeps: int = 100_000
    raw: dict = field(default_factory=dict, repr=False)

    # builders
    def lattice(self):
        return build_torus(self.L, self.D)

    def basis(self, lat=None):
        lat = lat if lat is not None else self.lattice()
        if self.N is not None:
            return fock.build_basis(lat, fock.FixedN(self.N))
        return fock.build_basis(lat, fock.Capped(self.n_max))

    @property
    def p(self):
        return float(self.model.get("p", 4))

    @property
    def J(self):
        return float(self.model.get("J", 1.0))

    @property
    def U(self):
        return float(self.model.get("U", 1.0))

    def interaction(self):
        kind = self.model.get("interaction", "power_p")
        mu = float(self.model.get("mu", 0.0))
        if kind == "power_p":
            return ham.power_p(self.p, self.U, mu)
        if kind == "power_p_shifted":
            return ham.power_p_shifted(self.p, self.U, mu)
        return ham.custom_table(self.model["table"], mu)

    def spec(self):
        return ham.ModelSpec(J=self.J, interaction=self.interaction())

    def settings(self):
        return PropagatorSettings(self.krylov_dim, self.step_tolerance, self.max_substeps)

    def rng(self, salt=0):
        return np.random.default_rng([self.seed, salt])

    def option(self, key, default):
        return self.options.get(key, default)


def _times(node, path):
    if node is None:
        return []
    if isinstance(node, list):
        for k, t in enumerate(node):
            _typecheck(t, _NUM, f"{path}[{k}]")
        out = [float(t) for t in node]
    else:
        for key in node:
            if key not in ("start", "stop", "num", "spacing"):
                raise ConfigError(f"{path}.{key}", "unknown field")
        try:
            start, stop, num = float(node["start"]), float(node["stop"]), int(node["num"])
        except KeyError as exc:
            raise ConfigError(f"{path}.{exc.args[0]}", "missing required field") from None
        spacing = node.get("spacing", "linear")
        if spacing == "linear":
            out = np.linspace(start, stop, num).tolist()
        elif spacing == "log":
            if start <= 0:
                raise ConfigError(f"{path}.start", "log spacing needs a positive start")
            out = np.geomspace(start, stop, num).tolist()
        else:
            raise ConfigError(f"{path}.spacing", "must be 'linear' or 'log'")
    if not out:
        raise ConfigError(path, "time grid is empty")
    if any(b < a for a, b in zip(out, out[1:])):
        raise ConfigError(path, "time grid must be nondecreasing")
    return out


def parse_config(data, overrides=None):
    """Validate a config mapping and return an :class:`ExperimentConfig`."""
    data = copy.deepcopy(data) if data is not None else {}
    _validate(data, SCHEMA, "")
    lat = data["lattice"]
    if lat["L"] < 2:
        raise ConfigError("lattice.L", "must be at least 2")
    if lat["D"] < 1:
        raise ConfigError("lattice.D", "must be at least 1")
    sector = data.get("sector", {})
    N, n_max = sector.get("N"), sector.get("n_max")
    if (N is None) == (n_max is None):
        raise ConfigError("sector", "give exactly one of N or n_max")
    if N is not None and N < 0:
        raise ConfigError("sector.N", "must be nonnegative")
    if n_max is not None and n_max < 0:
        raise ConfigError("sector.n_max", "must be nonnegative")
    model = dict(data.get("model", {}))
    kind = model.get("interaction", "power_p")
    if kind not in _INTERACTIONS:
        raise ConfigError("model.interaction", f"must be one of {_INTERACTIONS}")
    if kind == "custom_table" and "table" not in model:
        raise ConfigError("model.table", "required for custom_table")
    if "p" in model and not model["p"] > 1:
        raise ConfigError("model.p", "must exceed 1")
    state = dict(data.get("state", {"preset": "mott_uniform"}))
    if state["preset"] not in STATE_PRESETS:
        raise ConfigError("state.preset", f"must be one of {STATE_PRESETS}")
    obs = data.get("observables", {})
    O = {"preset": "empty_site", "site": 0, **obs.get("O", {})}
    Ot = {"preset": "empty_site", "site": 1, **obs.get("Otilde", {})}
    for name, o in (("O", O), ("Otilde", Ot)):
        if o["preset"] not in OBS_PRESETS:
            raise ConfigError(f"observables.{name}.preset", f"must be one of {OBS_PRESETS}")
        if not 0 <= o["site"] < lat["L"] ** lat["D"]:
            raise ConfigError(f"observables.{name}.site", "site out of range")
    times = _times(data.get("times"), "times")
    dists = data.get("distances", [])
    for k, d in enumerate(dists):
        _typecheck(d, int, f"distances[{k}]")
        if d < 0:
            raise ConfigError(f"distances[{k}]", "must be nonnegative")
    run = dict(data.get("run", {}))
    if overrides:
        run.update({k: v for k, v in overrides.items() if v is not None})
    if run.get("threads", 1) < 1:
        raise ConfigError("run.threads", "must be at least 1")
    if run.get("krylov_dim", 30) < 2:
        raise ConfigError("run.krylov_dim", "must be at least 2")
    if not run.get("step_tolerance", 1e-10) > 0:
        raise ConfigError("run.step_tolerance", "must be positive")
    return ExperimentConfig(
        L=lat["L"], D=lat["D"], N=N, n_max=n_max, model=model, state=state, O=O, Otilde=Ot,
        times=times, distances=list(dists), options=dict(data.get("options", {})),
        tolerances=dict(data.get("tolerances", {})),
        seed=int(run.get("seed", 0)), threads=int(run.get("threads", 1)),
        dense_threshold=int(run.get("dense_threshold", 4096)),
        krylov_dim=int(run.get("krylov_dim", 30)),
        step_tolerance=float(run.get("step_tolerance", 1e-10)),
        max_substeps=int(run.get("max_substeps", 100_000)), raw=data)


def load_config(path, overrides=None):
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"not valid YAML ({exc})") from None
    return parse_config(data, overrides)


# ---------------------------------------------------------------- builders

def build_observable(o, basis, site=None):
    i = o["site"] if site is None else site
    kind = o["preset"]
    if kind == "empty_site":
        return fock.site_projector(basis, i, 0, "eq")
    if kind == "occupation_at_most":
        return fock.site_projector(basis, i, int(o.get("q", 1)), "le")
    if kind == "phase":
        th = float(o.get("theta", math.pi / 3))
        return fock.diag(np.exp(1j * th * basis.states[:, i]))
    raise ConfigError("observables", f"unknown preset {kind}")


def random_hardcore_ensemble(basis, rng, members=1):
    """Random complex amplitudes on configurations with at most one
    particle per site."""
    mask = np.all(basis.states <= 1, axis=1)
    if not mask.any():
        raise ValueError("sector has no hard-core configurations")
    vecs = []
    for _ in range(members):
        v = (rng.normal(size=basis.dim) + 1j * rng.normal(size=basis.dim)) * mask
        vecs.append(v / np.linalg.norm(v))
    w = np.full(members, 1.0 / members)
    return S.StateEnsemble(basis, w, vecs)


def build_state(cfg, basis, lat):
    st = cfg.state
    kind = st["preset"]
    try:
        if kind == "mott_uniform":
            return S.uniform_mott(basis, st.get("fill", 1))
        if kind == "mott_pattern":
            if "pattern" not in st:
                raise ConfigError("state.pattern", "required for mott_pattern")
            return S.mott(basis, st["pattern"])
        if kind == "strip_superposition":
            return S.strip_superposition(basis, lat)
        if kind == "bad_state":
            params = S.BadStateParams(st.get("R", cfg.L), st.get("ell", 3), st.get("gamma0", 0.5))
            return S.bad_state(basis, lat, cfg.spec(), params, cfg.settings(), U=cfg.U).rho
        rng = np.random.default_rng([cfg.seed, st.get("seed", 0)])
        if kind == "random":
            return S.random_ensemble(basis, rng, st.get("members", 1))
        if kind == "random_hardcore":
            return random_hardcore_ensemble(basis, rng, st.get("members", 1))
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError("state", str(exc)) from None
    raise ConfigError("state.preset", f"unknown preset {kind}")
