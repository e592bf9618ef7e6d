"""JSON run configuration: defaults, strict parsing, and round-trip serialization.

Every section is optional; missing keys take their defaults and unknown keys
are rejected. Kernel and divergence entries are tagged objects, e.g.
``{"type": "rbf", "sigma": 1.0}`` or ``{"type": "renyi", "alpha": 2.0}``.
Mixture kernels take one nested object per component:
``{"type": "hmk", "rbf": {"sigma": 1.0}, "polynomial": {"c": 1.0, "d": 2}, ...}``.
Mixture weight slots are fixed: flat mixtures use (polynomial, rbf,
spectral, mahalanobis), HMK uses (rbf, polynomial, spectral, mahalanobis)
with groups (rbf, polynomial) and (spectral, mahalanobis).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from .divergences import (
    F_GENERATORS,
    KL,
    Bhattacharyya,
    DivergenceKind,
    FDiv,
    Hellinger,
    JensenShannon,
    Renyi,
    Wasserstein1D,
)
from .errors import ConfigError, PrefKError
from .kernels import RBF, Identity, MahalanobisScalar, MahalanobisVector, Polynomial, Spectral, kernel_to_dict
from .loss import AnyKernel, ObjectiveConfig
from .mixture import HMK, FlatMixture
from .selection import Thresholds
from .train import GENERATORS, Sizes, TrainConfig

SCALAR_KERNELS = {
    "identity": Identity,
    "polynomial": Polynomial,
    "rbf": RBF,
    "spectral": Spectral,
    "mahalanobis": MahalanobisScalar,
}
MIXTURES = {"mixture": FlatMixture, "hmk": HMK}
COMPONENTS = {"polynomial": Polynomial, "rbf": RBF, "spectral": Spectral, "mahalanobis": MahalanobisScalar}
SIMPLE_DIVERGENCES = {
    "kl": KL,
    "js": JensenShannon,
    "hellinger": Hellinger,
    "bhattacharyya": Bhattacharyya,
    "wasserstein": Wasserstein1D,
}


@dataclass(frozen=True)
class DataConfig:
    generator: str = "separable_clusters"
    sizes: Sizes = field(default_factory=Sizes)

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ConfigError(f"unknown generator {self.generator!r}; choose from {GENERATORS}")


@dataclass(frozen=True)
class RunConfig:
    train: TrainConfig = field(default_factory=TrainConfig)
    thresholds: Thresholds = field(default_factory=Thresholds)
    data: DataConfig = field(default_factory=DataConfig)

    @property
    def objective(self) -> ObjectiveConfig:
        return self.train.objective


def _object(value, where: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be a JSON object")
    return value


def _check_keys(d: dict, allowed, where: str) -> None:
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _build(cls, d: dict, where: str, skip=()):
    names = [f.name for f in fields(cls) if f.init and f.name not in skip]
    _check_keys(d, names, where)
    try:
        return cls(**d)
    except PrefKError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


# -- kernels -----------------------------------------------------------------


def kernel_from_dict(d, where: str = "kernel") -> AnyKernel:
    d = dict(_object(d, where))
    kind = d.pop("type", None)
    if kind in SCALAR_KERNELS:
        if kind == "spectral" and "lambdas" in d:
            d["lambdas"] = tuple(d["lambdas"])
        return _build(SCALAR_KERNELS[kind], d, f"{where} ({kind})")
    if kind == "mahalanobis_vector":
        _check_keys(d, ["cov"], where)
        if "cov" not in d:
            raise ConfigError(f"{where}: mahalanobis_vector needs 'cov'")
        return _build(MahalanobisVector, d, f"{where} ({kind})")
    if kind in MIXTURES:
        _check_keys(d, COMPONENTS, where)
        parts = {}
        for name, cls in COMPONENTS.items():
            sub = dict(_object(d.get(name, {}), f"{where}.{name}"))
            if name == "spectral" and "lambdas" in sub:
                sub["lambdas"] = tuple(sub["lambdas"])
            parts[name] = _build(cls, sub, f"{where}.{name}")
        return MIXTURES[kind](**parts)
    known = sorted([*SCALAR_KERNELS, "mahalanobis_vector", *MIXTURES])
    raise ConfigError(f"{where}: unknown kernel type {kind!r}; choose from {known}")


def kernel_dict(spec: AnyKernel) -> dict:
    if isinstance(spec, (FlatMixture, HMK)):
        out = {"type": spec.name}
        for name in COMPONENTS:
            sub = kernel_to_dict(getattr(spec, name))
            sub.pop("type")
            out[name] = sub
        return out
    return kernel_to_dict(spec)


# -- divergences -------------------------------------------------------------


def divergence_from_dict(d, where: str = "divergence") -> DivergenceKind:
    d = dict(_object(d, where))
    kind = d.pop("type", None)
    if kind in SIMPLE_DIVERGENCES:
        return _build(SIMPLE_DIVERGENCES[kind], d, f"{where} ({kind})")
    if kind == "renyi":
        return _build(Renyi, d, f"{where} (renyi)")
    if kind == "fdiv":
        _check_keys(d, ["f"], where)
        name = d.get("f", "chi2")
        if name not in F_GENERATORS:
            raise ConfigError(f"{where}: unknown f {name!r}; choose from {sorted(F_GENERATORS)}")
        return F_GENERATORS[name]
    known = sorted([*SIMPLE_DIVERGENCES, "renyi", "fdiv"])
    raise ConfigError(f"{where}: unknown divergence type {kind!r}; choose from {known}")


def divergence_dict(kind: DivergenceKind) -> dict:
    if isinstance(kind, Renyi):
        return {"type": "renyi", "alpha": kind.alpha}
    if isinstance(kind, FDiv):
        if F_GENERATORS.get(kind.label) is not kind:
            raise ConfigError("only registered f-divergences can be serialized")
        return {"type": "fdiv", "f": kind.label}
    return {"type": kind.name}


# -- whole document ----------------------------------------------------------


def objective_from_dict(d) -> ObjectiveConfig:
    d = dict(_object(d, "objective"))
    _check_keys(d, [f.name for f in fields(ObjectiveConfig)], "objective")
    if "kernel" in d:
        d["kernel"] = kernel_from_dict(d["kernel"])
    if "divergence" in d:
        d["divergence"] = divergence_from_dict(d["divergence"])
    return _build(ObjectiveConfig, d, "objective")


def objective_dict(obj: ObjectiveConfig) -> dict:
    return {
        "alpha": obj.alpha,
        "beta": obj.beta,
        "gamma": obj.gamma,
        "kernel": kernel_dict(obj.kernel),
        "divergence": divergence_dict(obj.divergence),
        "allow_out_of_range": obj.allow_out_of_range,
    }


SECTIONS = ("objective", "train", "thresholds", "data")


def config_from_dict(doc) -> RunConfig:
    doc = _object(doc, "config")
    _check_keys(doc, SECTIONS, "config")
    objective = objective_from_dict(doc.get("objective", {}))
    train = _build(TrainConfig, dict(_object(doc.get("train", {}), "train")), "train", skip=("objective",))
    train = replace(train, objective=objective)
    thresholds = _build(Thresholds, dict(_object(doc.get("thresholds", {}), "thresholds")), "thresholds")
    data = dict(_object(doc.get("data", {}), "data"))
    size_keys = [f.name for f in fields(Sizes)]
    _check_keys(data, ["generator", *size_keys], "data")
    sizes = _build(Sizes, {k: data[k] for k in size_keys if k in data}, "data")
    data_cfg = _build(DataConfig, {"generator": data.get("generator", "separable_clusters"), "sizes": sizes}, "data")
    return RunConfig(train, thresholds, data_cfg)


def config_to_dict(cfg: RunConfig) -> dict:
    train = {f.name: getattr(cfg.train, f.name) for f in fields(TrainConfig) if f.name != "objective"}
    return {
        "objective": objective_dict(cfg.objective),
        "train": train,
        "thresholds": asdict(cfg.thresholds),
        "data": {"generator": cfg.data.generator, **asdict(cfg.data.sizes)},
    }


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return config_from_dict(doc)


def dump_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n")
