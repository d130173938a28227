"""Run configuration: a plain ``key = value`` text file merged with CLI flags.

Flags win over file values, file values win over defaults. Lists (``models``,
``feature_maps``, ``pauli_strings``, ``rotation_axes``) are comma separated.

Per-stage seeds are derived from the global seed by adding a fixed stage
offset (see :data:`SEED_OFFSETS`), so changing how one stage consumes
randomness never shifts another stage's stream.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, fields, replace

from .errors import ConfigurationError
from .featuremap import FeatureMapSpec
from .variational import AnsatzSpec, OptimizerConfig

MODELS = ("qsvc", "pegasos", "vqc", "qnn")
FEATURE_MAPS = {"z": "Z", "zz": "ZZ", "pauli": "Pauli"}

SEED_OFFSETS = {"split": 0, "init": 1, "pegasos": 2, "optimizer": 3, "subset": 4}

_LIST_FIELDS = ("models", "feature_maps", "pauli_strings", "rotation_axes")


@dataclass(frozen=True)
class RunConfig:
    data: str = "data/sample_1000.csv"
    format: str = "csv"
    model: str = "qsvc"
    models: tuple[str, ...] = MODELS
    feature_map: str = "ZZ"
    feature_maps: tuple[str, ...] = ("Z", "ZZ", "Pauli")
    reps: int = 2
    entanglement: str = "full"
    pauli_strings: tuple[str, ...] = ()
    qubits: int = 4
    kmer: int = 3
    test_fraction: float = 0.2
    subset: int = 0
    seed: int = 7
    out: str = "runs/out"
    # qsvc
    C: float = 1.0
    tol: float = 1e-4
    max_passes: int = 0
    # pegasos
    lam: float = 1e-3
    T: int = 0
    # variational
    layers: int = 3
    rotation_axes: tuple[str, ...] = ()
    entangler: str = "cnot_ring"
    optimizer: str = ""
    learning_rate: float = 0.0
    max_iters: int = 100
    tolerance: float = 1e-6
    jobs: int = 1

    def stage_seed(self, stage: str) -> int:
        return self.seed + SEED_OFFSETS[stage]

    def feature_map_spec(self, kind: str | None = None) -> FeatureMapSpec:
        kind = canonical_feature_map(kind or self.feature_map)
        return FeatureMapSpec(
            kind=kind,
            n_qubits=self.qubits,
            reps=self.reps,
            entanglement=self.entanglement,
            pauli_strings=self.pauli_strings if kind == "Pauli" else (),
        )

    def ansatz_spec(self) -> AnsatzSpec:
        return AnsatzSpec(self.qubits, self.layers, self.rotation_axes, self.entangler)

    def optimizer_config(self, model: str) -> OptimizerConfig:
        method = self.optimizer or ("spsa" if model == "vqc" else "gradient_descent")
        lr = self.learning_rate or (0.3 if method == "spsa" else 0.2)
        return OptimizerConfig(method, lr, self.max_iters, self.tolerance, self.stage_seed("optimizer"))

    def validate(self, need_data: bool = True, single_model: bool = True) -> "RunConfig":
        """Check every field against the owning module's preconditions."""
        if need_data and not os.path.isfile(self.data):
            raise ConfigurationError(f"data file not found: {self.data}")
        if self.format not in ("csv", "fasta"):
            raise ConfigurationError(f"format must be csv or fasta, got {self.format!r}")
        models = (self.model,) if single_model else self.models
        if not models:
            raise ConfigurationError("at least one model is required")
        for m in models:
            if m not in MODELS:
                raise ConfigurationError(f"model must be one of {MODELS}, got {m!r}")
        maps = (self.feature_map,) if single_model else self.feature_maps
        if not maps:
            raise ConfigurationError("at least one feature map is required")
        for fm in maps:
            self.feature_map_spec(fm)
        if not isinstance(self.kmer, int) or not 1 <= self.kmer <= 6:
            raise ConfigurationError(f"kmer must be in [1, 6], got {self.kmer}")
        if self.qubits > 4**self.kmer:
            raise ConfigurationError(f"{self.qubits} qubits exceed the {4**self.kmer} k-mer features")
        if not 0 < self.test_fraction < 1:
            raise ConfigurationError(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        if self.subset < 0:
            raise ConfigurationError("subset must be >= 0")
        if not self.C > 0 or not self.tol > 0 or self.max_passes < 0:
            raise ConfigurationError("need C > 0, tol > 0, max_passes >= 0")
        if not self.lam > 0 or self.T < 0:
            raise ConfigurationError("need lambda > 0 and T >= 0")
        if self.learning_rate < 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.jobs < 1:
            raise ConfigurationError("jobs must be >= 1")
        if any(m in ("vqc", "qnn") for m in models):
            self.ansatz_spec()
            for m in models:
                self.optimizer_config(m)
        return self

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        for k in _LIST_FIELDS:
            d[k] = list(d[k])
        return d


def canonical_feature_map(name: str) -> str:
    try:
        return FEATURE_MAPS[name.strip().lower()]
    except KeyError:
        raise ConfigurationError(
            f"feature map must be one of {sorted(set(FEATURE_MAPS.values()))}, got {name!r}"
        ) from None


def _coerce(name: str, raw):
    ftype = {f.name: f for f in fields(RunConfig)}[name]
    default = ftype.default
    if name in _LIST_FIELDS:
        if isinstance(raw, (list, tuple)):
            items = raw
        else:
            items = str(raw).split(",")
        return tuple(s.strip() for s in items if s.strip())
    if isinstance(default, bool):
        return str(raw).lower() in ("1", "true", "yes")
    try:
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
    except (TypeError, ValueError):
        raise ConfigurationError(f"invalid value for {name}: {raw!r}") from None
    return str(raw)


_ALIASES = {"lambda": "lam", "feature-map": "feature_map", "test-fraction": "test_fraction",
            "kmer_k": "kmer", "n_qubits": "qubits"}


def _key(k: str) -> str:
    k = k.strip()
    k = _ALIASES.get(k, k)
    return k.replace("-", "_")


def parse_config_text(text: str, source: str = "<config>") -> dict:
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}: line {line_no}: expected 'key = value'")
        k, v = line.split("=", 1)
        k = _key(k)
        if k not in known:
            raise ConfigurationError(f"{source}: line {line_no}: unknown key {k!r}")
        out[k] = _coerce(k, v.strip())
    return out


def load_config(path: str | None, overrides: dict | None = None) -> RunConfig:
    values = {}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                values.update(parse_config_text(fh.read(), path))
        except OSError as exc:
            raise ConfigurationError(f"cannot read config file {path}: {exc.strerror}") from exc
    for k, v in (overrides or {}).items():
        if v is not None:
            values[_key(k)] = _coerce(_key(k), v)
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc
    if "feature_map" in values:
        cfg = replace(cfg, feature_map=canonical_feature_map(cfg.feature_map))
    if "feature_maps" in values:
        cfg = replace(cfg, feature_maps=tuple(canonical_feature_map(f) for f in cfg.feature_maps))
    return cfg

