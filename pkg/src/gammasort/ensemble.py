"""Poisson ensembles and labeled datasets for the three classification tasks.

Templates carry expected counts at a long reference dwell; short-dwell test
spectra are per-channel Poisson draws scaled to the target dwell.  Every item
seed derives from (master seed, config index, sample index), so dataset
construction is reproducible and order-independent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from . import seeding
from .forward_model import (
    DEFAULT_ACTIVITY_BQ,
    DEFAULT_BACKGROUND_CPS,
    TEMPLATE_DWELL_S,
    DetectorModel,
    ShieldMaterial,
    SourceConfig,
    build_template,
    default_shielding,
    isotope_by_name,
)
from .spectra import EnergyCalibration, Spectrum, SpectrumKind, rebin

ISOTOPE_NAMES = ("Cesium", "Cobalt", "Barium", "Selenium", "Iridium")
SHIELDING_NAMES = ("Bare", "Concrete", "Steel", "DepletedUranium")
DEFAULT_DISTANCES_M = tuple(float(d) for d in range(10, 21))


class TaskKind(Enum):
    """Which label a spectrum carries: source isotope, shield material, or
    the surrogate industrial-gauge flag (Cesium behind steel vs anything else)."""

    ISOTOPE_ID = "IsotopeID"
    SHIELDING_ID = "ShieldingID"
    GAUGE_BINARY = "GaugeBinary"

    @property
    def class_names(self) -> tuple[str, ...]:
        if self is TaskKind.ISOTOPE_ID:
            return ISOTOPE_NAMES
        if self is TaskKind.SHIELDING_ID:
            return SHIELDING_NAMES
        return ("CesiumSteel", "NotCesiumSteel")

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def class_index(self, config: SourceConfig) -> int:
        """Class of one source configuration under this task."""
        if self is TaskKind.ISOTOPE_ID:
            name = config.isotope.name
            if name not in ISOTOPE_NAMES:
                raise ValueError(f"isotope {name!r} is not an IsotopeID class")
            return ISOTOPE_NAMES.index(name)
        if self is TaskKind.SHIELDING_ID:
            return SHIELDING_NAMES.index(config.shielding.material.value)
        is_gauge = (
            config.isotope.name == "Cesium"
            and config.shielding.material is ShieldMaterial.STEEL
        )
        return 0 if is_gauge else 1

    def one_hot(self, config: SourceConfig) -> np.ndarray:
        label = np.zeros(self.n_classes)
        label[self.class_index(config)] = 1.0
        return label


@dataclass(frozen=True)
class LabeledDataset:
    """Spectra paired with one-hot task labels and per-item source provenance."""

    inputs: tuple[Spectrum, ...]
    labels: np.ndarray
    task: TaskKind
    provenance: tuple[SourceConfig, ...]

    def __post_init__(self):
        inputs = tuple(self.inputs)
        labels = np.array(self.labels, dtype=np.float64, copy=True)
        if len(inputs) == 0:
            raise ValueError("dataset must contain at least one item")
        if labels.shape != (len(inputs), self.task.n_classes):
            raise ValueError(
                f"labels shape {labels.shape} does not match "
                f"{len(inputs)} items x {self.task.n_classes} classes"
            )
        one_hot_ok = np.all((labels == 0.0) | (labels == 1.0)) and np.all(labels.sum(axis=1) == 1.0)
        if not one_hot_ok:
            raise ValueError("labels must be one-hot rows")
        if len(self.provenance) != len(inputs):
            raise ValueError("provenance must align with inputs")
        cal = inputs[0].calibration
        dwell = inputs[0].dwell_s
        for spectrum in inputs:
            if spectrum.calibration != cal or spectrum.dwell_s != dwell:
                raise ValueError("all spectra must share one calibration and dwell")
        labels.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "provenance", tuple(self.provenance))

    def __len__(self) -> int:
        return len(self.inputs)

    @property
    def calibration(self) -> EnergyCalibration:
        return self.inputs[0].calibration

    @property
    def dwell_s(self) -> float:
        return self.inputs[0].dwell_s

    @property
    def n_channels(self) -> int:
        return self.calibration.n_channels

    def as_matrix(self) -> np.ndarray:
        """(n_items, n_channels) float64 matrix of counts."""
        return np.stack([spectrum.counts for spectrum in self.inputs])

    def label_indices(self) -> np.ndarray:
        return np.argmax(self.labels, axis=1)

    def subset(self, indices) -> "LabeledDataset":
        indices = list(indices)
        return LabeledDataset(
            tuple(self.inputs[i] for i in indices),
            self.labels[indices],
            self.task,
            tuple(self.provenance[i] for i in indices),
        )


def standard_grid(
    isotopes=ISOTOPE_NAMES,
    distances_m=DEFAULT_DISTANCES_M,
    materials=SHIELDING_NAMES,
    activity_bq: float = DEFAULT_ACTIVITY_BQ,
    include_background: bool = False,
) -> list[SourceConfig]:
    """The full source/distance/shielding variation grid (default 5 x 11 x 4)."""
    shieldings = {name: default_shielding(name) for name in materials}
    grid = []
    for name in isotopes:
        isotope = isotope_by_name(name)
        for distance in distances_m:
            for material in materials:
                grid.append(
                    SourceConfig(
                        isotope=isotope,
                        activity_bq=activity_bq,
                        distance_m=float(distance),
                        shielding=shieldings[material],
                        include_background=include_background,
                    )
                )
    return grid


def poisson_sample(template: Spectrum, target_dwell_s: float, seed: int) -> Spectrum:
    """One finite-dwell realization of a template.

    Each channel draws independently from Poisson(counts * target/template
    dwell) on a Philox stream keyed by ``seed``; identical seeds reproduce
    the realization bit for bit.
    """
    if template.kind is not SpectrumKind.EXPECTED_TEMPLATE:
        raise ValueError("can only Poisson-sample an expected-count template")
    if not target_dwell_s > 0:
        raise ValueError(f"target dwell {target_dwell_s} must be positive")
    lam = template.counts * (target_dwell_s / template.dwell_s)
    draws = seeding.rng(seed).poisson(lam).astype(np.float64)
    return Spectrum(draws, template.calibration, target_dwell_s, SpectrumKind.SAMPLED_REALIZATION)


def _grid_templates(grid, detector, rebin_factor, background_cps):
    if not grid:
        raise ValueError("source grid is empty")
    templates = []
    for config in grid:
        template = build_template(config, detector, TEMPLATE_DWELL_S, background_cps)
        templates.append(rebin(template, rebin_factor))
    return templates


def build_dataset(
    grid: list[SourceConfig],
    task: TaskKind,
    detector: DetectorModel,
    samples_per_config: int,
    dwell_s: float,
    seed: int,
    rebin_factor: int = 1,
    background_cps: float = DEFAULT_BACKGROUND_CPS,
) -> LabeledDataset:
    """Poisson-sampled ensemble: ``samples_per_config`` realizations per grid cell."""
    if samples_per_config < 1:
        raise ValueError("samples_per_config must be at least 1 (empty dataset rejected)")
    templates = _grid_templates(grid, detector, rebin_factor, background_cps)
    labels = [task.one_hot(config) for config in grid]

    inputs: list[Spectrum] = []
    label_rows: list[np.ndarray] = []
    provenance: list[SourceConfig] = []
    for ci, (config, template) in enumerate(zip(grid, templates)):
        for si in range(samples_per_config):
            item_seed = seeding.derive_seed(seed, ci, si)
            inputs.append(poisson_sample(template, dwell_s, item_seed))
            label_rows.append(labels[ci])
            provenance.append(config)
    return LabeledDataset(tuple(inputs), np.stack(label_rows), task, tuple(provenance))


def template_dataset(
    grid: list[SourceConfig],
    task: TaskKind,
    detector: DetectorModel,
    dwell_s: float = 1.0,
    rebin_factor: int = 1,
    background_cps: float = DEFAULT_BACKGROUND_CPS,
) -> LabeledDataset:
    """Noise-free dataset: one rescaled expected-count template per grid cell."""
    templates = _grid_templates(grid, detector, rebin_factor, background_cps)
    scale = dwell_s / TEMPLATE_DWELL_S
    inputs = tuple(
        Spectrum(t.counts * scale, t.calibration, dwell_s, SpectrumKind.EXPECTED_TEMPLATE)
        for t in templates
    )
    labels = np.stack([task.one_hot(config) for config in grid])
    return LabeledDataset(inputs, labels, task, tuple(grid))


def split(ds: LabeledDataset, train_fraction: float, seed: int) -> tuple[LabeledDataset, LabeledDataset]:
    """Disjoint shuffled partition with floor(n * fraction) items on the train side."""
    if not 0 < train_fraction < 1:
        raise ValueError(f"train fraction {train_fraction} outside (0, 1)")
    n = len(ds)
    n_train = int(np.floor(n * train_fraction + 1e-9))
    if n_train == 0 or n_train == n:
        raise ValueError(f"fraction {train_fraction} leaves an empty side for {n} items")
    perm = seeding.rng(seed, 0).permutation(n)
    return ds.subset(perm[:n_train]), ds.subset(perm[n_train:])


def _config_record(config: SourceConfig) -> dict:
    return {
        "isotope": config.isotope.name,
        "activity_bq": config.activity_bq,
        "distance_m": config.distance_m,
        "material": config.shielding.material.value,
        "thickness_cm": config.shielding.thickness_cm,
        "include_background": config.include_background,
    }


def _config_from_record(record: dict) -> SourceConfig:
    return SourceConfig(
        isotope=isotope_by_name(record["isotope"]),
        activity_bq=record["activity_bq"],
        distance_m=record["distance_m"],
        shielding=default_shielding(record["material"], record["thickness_cm"])
        if record["material"] != "Bare"
        else default_shielding("Bare"),
        include_background=record["include_background"],
    )


def write_dataset(ds: LabeledDataset, out_dir: str | Path, extra: dict | None = None) -> Path:
    """Persist a dataset as manifest.json plus one packed CSV row per item.

    Each row is the label index followed by the channel counts; floats are
    written in shortest round-trip form, so reading back is value-exact.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cal = ds.calibration
    manifest = {
        "task": ds.task.value,
        "class_names": list(ds.task.class_names),
        "n_items": len(ds),
        "calibration": {"e_min": cal.e_min, "e_max": cal.e_max, "n_channels": cal.n_channels},
        "dwell_s": ds.dwell_s,
        "kind": ds.inputs[0].kind.value,
        "data_csv": "data.csv",
        "provenance": [_config_record(c) for c in ds.provenance],
    }
    if extra:
        manifest.update(extra)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    indices = ds.label_indices()
    lines = []
    for idx, spectrum in zip(indices, ds.inputs):
        lines.append(",".join([str(int(idx))] + [repr(float(c)) for c in spectrum.counts]))
    (out_dir / "data.csv").write_text("\n".join(lines) + "\n")
    return out_dir / "manifest.json"


def read_dataset(path: str | Path) -> LabeledDataset:
    """Load a dataset directory (or manifest path) written by :func:`write_dataset`."""
    path = Path(path)
    manifest_path = path / "manifest.json" if path.is_dir() else path
    if not manifest_path.is_file():
        raise FileNotFoundError(f"dataset manifest not found: {manifest_path}")
    manifest = json.loads(manifest_path.read_text())
    task = TaskKind(manifest["task"])
    cal = EnergyCalibration(**manifest["calibration"])
    dwell = manifest["dwell_s"]
    kind = SpectrumKind(manifest["kind"])

    inputs: list[Spectrum] = []
    label_rows: list[np.ndarray] = []
    data_path = manifest_path.parent / manifest["data_csv"]
    for line in data_path.read_text().splitlines():
        if not line:
            continue
        cells = line.split(",")
        idx = int(cells[0])
        counts = np.array([float(c) for c in cells[1:]])
        inputs.append(Spectrum(counts, cal, dwell, kind))
        row = np.zeros(task.n_classes)
        row[idx] = 1.0
        label_rows.append(row)
    provenance = tuple(_config_from_record(r) for r in manifest["provenance"])
    return LabeledDataset(tuple(inputs), np.stack(label_rows), task, provenance)
