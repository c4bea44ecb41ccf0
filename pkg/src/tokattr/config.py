"""Run configuration: one JSON file, overridable field-by-field from flags.

Relative paths inside the file resolve against the file's directory.
Validation happens per subcommand (a ``freq`` run does not need a model),
so each CLI entry point states which fields it requires.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .corpus import Dimension
from .errors import ValidationError
from .model import load_builtin_spec, make_builtin

PATH_FIELDS = ("corpus", "gazetteer", "embeddings", "document", "proposals", "attributions")


@dataclass(frozen=True)
class RunConfig:
    corpus: str | None = None
    gazetteer: str | None = None
    dimension: Dimension | None = None
    model: str | None = None           # "builtin:<file>" or "bridge:<command line>"
    method: str = "partition"
    output_mode: str | None = None     # when set, the model must match it
    n_perms: int = 200
    seed: int = 0
    caps: dict = field(default_factory=lambda: {"exact": 20, "owen": 12})
    out_dir: str = "out"
    palette: dict | None = None
    anchors: dict = field(default_factory=dict)
    embeddings: str | None = None
    threshold: float = 0.3
    mask_mode: str = "substitute"
    top_k: int = 20
    workers: int = 1
    aggregate_scope: str = "all"       # or "gold"
    per_utterance_mean: bool = False
    bridge_timeout: float = 5.0
    document: str | None = None
    proposals: str | None = None
    attributions: str | None = None

    @property
    def exact_cap(self) -> int:
        return int(self.caps.get("exact", 20))

    @property
    def owen_cap(self) -> int:
        return int(self.caps.get("owen", 12))


def load_run_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    """Merge the config file (if any) with CLI overrides; overrides win."""
    data: dict = {}
    base = Path(".")
    if path is not None:
        base = Path(path).parent
        with open(path, encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}: config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ValidationError(f"{path}: config must be a JSON object")
        for key in PATH_FIELDS:
            if data.get(key):
                data[key] = str((base / data[key]).resolve())
        if data.get("model", "").startswith("builtin:"):
            spec_path = data["model"].split(":", 1)[1]
            data["model"] = "builtin:" + str((base / spec_path).resolve())
        if "out_dir" in data:
            data["out_dir"] = str((base / data["out_dir"]).resolve())

    known = {f.name for f in fields(RunConfig)}
    unknown = set(data) - known
    if unknown:
        raise ValidationError(f"unknown config fields: {sorted(unknown)}")

    if isinstance(data.get("dimension"), dict):
        dim = data["dimension"]
        data["dimension"] = Dimension(name=dim.get("name", "dim"), classes=tuple(dim.get("classes", ())))

    cfg = RunConfig(**data)
    if overrides:
        cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    return cfg


def require(cfg: RunConfig, *names: str) -> None:
    """Validate that the named fields are present and point at real files."""
    for name in names:
        value = getattr(cfg, name)
        if value is None:
            raise ValidationError(f"config field {name!r} is required for this command")
        if name in PATH_FIELDS and not Path(value).exists():
            raise ValidationError(f"config field {name!r}: no such file {value!r}")
    if "model" in names:
        kind, _, rest = cfg.model.partition(":")
        if kind not in ("builtin", "bridge") or not rest:
            raise ValidationError(
                f"model must be 'builtin:<file>' or 'bridge:<command>', got {cfg.model!r}"
            )
        if kind == "builtin" and not Path(rest).exists():
            raise ValidationError(f"builtin model spec file {rest!r} does not exist")
    if "method" in names:
        if cfg.method == "permutation" and cfg.n_perms < 1:
            raise ValidationError("permutation method requires n_perms >= 1")


def make_adapter(cfg: RunConfig):
    """Instantiate the configured model behind the adapter contract."""
    kind, _, rest = cfg.model.partition(":")
    if kind == "builtin":
        spec = load_builtin_spec(rest)
        adapter = make_builtin(spec, mask_mode=cfg.mask_mode)
        if cfg.dimension is not None and adapter.dimension.classes != cfg.dimension.classes:
            raise ValidationError(
                f"model classes {list(adapter.dimension.classes)} do not match the "
                f"configured dimension {list(cfg.dimension.classes)}"
            )
    elif kind == "bridge":
        from .bridgeclient import launch_bridge

        adapter = launch_bridge(
            rest, timeout=cfg.bridge_timeout, mask_mode=cfg.mask_mode, dimension=cfg.dimension
        )
    else:
        raise ValidationError(f"unknown model scheme {kind!r}")
    if cfg.output_mode is not None and adapter.output_mode != cfg.output_mode:
        adapter.close()
        raise ValidationError(
            f"config expects output mode {cfg.output_mode!r} but the model "
            f"declares {adapter.output_mode!r}"
        )
    return adapter
