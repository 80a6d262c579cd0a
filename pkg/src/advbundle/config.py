"""Flat key = value experiment configs with one [attack <id>] section per attack.

The format is deliberately line-oriented so configs diff cleanly: global
keys first, then one section per attack. Grids accept either a comma list
or lo:hi:count (inclusive linspace). parse -> serialize -> parse is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .attacks import AttackConfig
from .bundler import MAX_CONFIDENCE, Criterion
from .errors import ConfigError, ContractError

_CRITERIA = ("misclassify", "max_confidence", "min_norm")


def _default_threshold_grid() -> tuple[float, ...]:
    return tuple(float(t) for t in np.linspace(0.5, 0.99, 50))


def _default_epsilon_grid() -> tuple[float, ...]:
    return tuple(float(e) for e in np.linspace(0.0, 0.3, 31))


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: str = "synthetic"
    csv_path: str | None = None
    synth_n: int = 600
    synth_d: int = 2
    synth_k: int = 3
    synth_seed: int = 7
    architecture: str = "mlp1"
    hidden: int = 16
    learning_rate: float = 0.3
    epochs: int = 120
    batch_size: int = 32
    train_seed: int = 1
    criterion: Criterion = field(default_factory=Criterion.misclassify)
    max_units: int | None = None
    early_stop: bool = True
    threshold_grid: tuple[float, ...] = field(default_factory=_default_threshold_grid)
    epsilon_grid: tuple[float, ...] = field(default_factory=_default_epsilon_grid)
    gap_ns: tuple[int, ...] = (1, 2, 10, 100, 1000)
    seed: int = 0
    output_dir: str = "out"
    workers: int = 1
    dump_candidates: bool = False
    attacks: tuple[AttackConfig, ...] = ()

    def __post_init__(self):
        if self.dataset not in ("synthetic", "csv"):
            raise ConfigError(f"dataset must be 'synthetic' or 'csv', got {self.dataset!r}")
        if self.dataset == "csv" and not self.csv_path:
            raise ConfigError("dataset = csv requires csv_path")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


def _parse_bool(value: str, where: str) -> bool:
    if value.lower() in ("true", "yes", "1"):
        return True
    if value.lower() in ("false", "no", "0"):
        return False
    raise ConfigError(f"{where}: expected true/false, got {value!r}")


def _parse_grid(value: str, where: str) -> tuple[float, ...]:
    try:
        if ":" in value:
            lo, hi, count = value.split(":")
            return tuple(float(t) for t in np.linspace(float(lo), float(hi), int(count)))
        return tuple(float(v) for v in value.split(","))
    except ValueError as exc:
        raise ConfigError(f"{where}: bad grid spec {value!r}") from exc


def _parse_int_list(value: str, where: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in value.split(","))
    except ValueError as exc:
        raise ConfigError(f"{where}: bad integer list {value!r}") from exc


def _build_attack(attack_id: str, fields: dict[str, str], where: str) -> AttackConfig:
    known = {"variant", "epsilon", "step_size", "num_steps", "num_restarts",
             "random_init", "num_samples", "restart_seeds"}
    for key in fields:
        if key not in known:
            raise ConfigError(f"{where}: unknown attack key {key!r}")
    if "variant" not in fields:
        raise ConfigError(f"{where}: attack section needs a variant")
    if "epsilon" not in fields:
        raise ConfigError(f"{where}: attack section needs an epsilon")
    try:
        kwargs = {
            "attack_id": attack_id,
            "variant": fields["variant"],
            "epsilon": float(fields["epsilon"]),
        }
        if "step_size" in fields:
            kwargs["step_size"] = float(fields["step_size"])
        if "num_steps" in fields:
            kwargs["num_steps"] = int(fields["num_steps"])
        if "num_restarts" in fields:
            kwargs["num_restarts"] = int(fields["num_restarts"])
        if "random_init" in fields:
            kwargs["random_init"] = _parse_bool(fields["random_init"], where)
        if "num_samples" in fields:
            kwargs["num_samples"] = int(fields["num_samples"])
        if "restart_seeds" in fields:
            kwargs["restart_seeds"] = _parse_int_list(fields["restart_seeds"], where)
        return AttackConfig(**kwargs)
    except ContractError as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


_GLOBAL_KEYS = {
    "dataset", "csv_path", "synth_n", "synth_d", "synth_k", "synth_seed",
    "architecture", "hidden", "learning_rate", "epochs", "batch_size",
    "train_seed", "criterion", "threshold", "max_units", "early_stop",
    "threshold_grid", "epsilon_grid", "gap_ns", "seed", "output_dir",
    "workers", "dump_candidates",
}


def parse_experiment_config(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse config text; errors carry the offending line number."""
    globals_seen: dict[str, str] = {}
    sections: list[tuple[str, int, dict[str, str]]] = []
    current: dict[str, str] | None = None

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"{source}:{lineno}"
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"{where}: unterminated section header")
            header = line[1:-1].split()
            if len(header) != 2 or header[0] != "attack":
                raise ConfigError(f"{where}: section header must be [attack <id>]")
            attack_id = header[1]
            if any(existing == attack_id for existing, _, _ in sections):
                raise ConfigError(f"{where}: duplicate attack id {attack_id!r}")
            current = {}
            sections.append((attack_id, lineno, current))
            continue
        if "=" not in line:
            raise ConfigError(f"{where}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"{where}: expected key = value")
        if current is not None:
            if key in current:
                raise ConfigError(f"{where}: duplicate key {key!r}")
            current[key] = value
        else:
            if key not in _GLOBAL_KEYS:
                raise ConfigError(f"{where}: unknown key {key!r}")
            if key in globals_seen:
                raise ConfigError(f"{where}: duplicate key {key!r}")
            globals_seen[key] = value

    kwargs: dict = {}
    g = globals_seen

    def take(key, conv=str):
        if key in g:
            try:
                kwargs[key] = conv(g[key])
            except ValueError as exc:
                raise ConfigError(f"{source}: bad value for {key}: {g[key]!r}") from exc

    take("dataset")
    take("csv_path")
    take("synth_n", int)
    take("synth_d", int)
    take("synth_k", int)
    take("synth_seed", int)
    take("architecture")
    take("hidden", int)
    take("learning_rate", float)
    take("epochs", int)
    take("batch_size", int)
    take("train_seed", int)
    take("seed", int)
    take("output_dir")
    take("workers", int)
    if "max_units" in g:
        kwargs["max_units"] = None if g["max_units"].lower() == "none" else int(g["max_units"])
    if "early_stop" in g:
        kwargs["early_stop"] = _parse_bool(g["early_stop"], source)
    if "dump_candidates" in g:
        kwargs["dump_candidates"] = _parse_bool(g["dump_candidates"], source)
    if "threshold_grid" in g:
        kwargs["threshold_grid"] = _parse_grid(g["threshold_grid"], source)
    if "epsilon_grid" in g:
        kwargs["epsilon_grid"] = _parse_grid(g["epsilon_grid"], source)
    if "gap_ns" in g:
        kwargs["gap_ns"] = _parse_int_list(g["gap_ns"], source)

    variant = g.get("criterion", "misclassify")
    if variant not in _CRITERIA:
        raise ConfigError(f"{source}: unknown criterion {variant!r}")
    try:
        if variant == MAX_CONFIDENCE:
            kwargs["criterion"] = Criterion.max_confidence(float(g.get("threshold", "0.9")))
        else:
            if "threshold" in g:
                raise ConfigError(f"{source}: threshold only applies to max_confidence")
            kwargs["criterion"] = Criterion(variant)
    except ContractError as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    attacks = []
    for attack_id, lineno, fields in sections:
        attacks.append(_build_attack(attack_id, fields, f"{source}:{lineno}"))
    kwargs["attacks"] = tuple(attacks)

    try:
        return ExperimentConfig(**kwargs)
    except ContractError as exc:
        raise ConfigError(f"{source}: {exc}") from exc


def load_experiment_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_experiment_config(path.read_text(), source=str(path))


def serialize_experiment_config(config: ExperimentConfig) -> str:
    """Canonical text form; parsing it reproduces the config exactly."""
    from .reporting import fmt

    lines = [f"dataset = {config.dataset}"]
    if config.csv_path is not None:
        lines.append(f"csv_path = {config.csv_path}")
    lines += [
        f"synth_n = {config.synth_n}",
        f"synth_d = {config.synth_d}",
        f"synth_k = {config.synth_k}",
        f"synth_seed = {config.synth_seed}",
        f"architecture = {config.architecture}",
        f"hidden = {config.hidden}",
        f"learning_rate = {fmt(config.learning_rate)}",
        f"epochs = {config.epochs}",
        f"batch_size = {config.batch_size}",
        f"train_seed = {config.train_seed}",
        f"criterion = {config.criterion.variant}",
    ]
    if config.criterion.variant == MAX_CONFIDENCE:
        lines.append(f"threshold = {fmt(config.criterion.threshold)}")
    lines += [
        f"max_units = {'none' if config.max_units is None else config.max_units}",
        f"early_stop = {str(config.early_stop).lower()}",
        f"threshold_grid = {','.join(fmt(t) for t in config.threshold_grid)}",
        f"epsilon_grid = {','.join(fmt(e) for e in config.epsilon_grid)}",
        f"gap_ns = {','.join(str(n) for n in config.gap_ns)}",
        f"seed = {config.seed}",
        f"output_dir = {config.output_dir}",
        f"workers = {config.workers}",
        f"dump_candidates = {str(config.dump_candidates).lower()}",
    ]
    for attack in config.attacks:
        lines += ["", f"[attack {attack.attack_id}]", f"variant = {attack.variant}",
                  f"epsilon = {fmt(attack.epsilon)}"]
        if attack.step_size is not None:
            lines.append(f"step_size = {fmt(attack.step_size)}")
        if attack.num_steps is not None:
            lines.append(f"num_steps = {attack.num_steps}")
        if attack.variant == "pgd":
            lines.append(f"num_restarts = {attack.num_restarts}")
            lines.append(f"random_init = {str(attack.random_init).lower()}")
        if attack.num_samples is not None:
            lines.append(f"num_samples = {attack.num_samples}")
        if attack.restart_seeds is not None:
            lines.append(f"restart_seeds = {','.join(str(s) for s in attack.restart_seeds)}")
    return "\n".join(lines) + "\n"


def with_output_dir(config: ExperimentConfig, output_dir: str) -> ExperimentConfig:
    return replace(config, output_dir=output_dir)
