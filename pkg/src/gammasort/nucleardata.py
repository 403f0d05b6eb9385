"""Loaders for the bundled nuclide-line and attenuation tables.

Tables live in ``gammasort/data/`` as plain CSV; the ``GAMMASORT_DATA_DIR``
environment variable points the loaders somewhere else (e.g. user-supplied
tables with more isotopes or materials).
"""

from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

DATA_DIR_ENV_VAR = "GAMMASORT_DATA_DIR"

_BUNDLED_DIR = Path(__file__).parent / "data"


def data_dir() -> Path:
    override = os.environ.get(DATA_DIR_ENV_VAR)
    return Path(override) if override else _BUNDLED_DIR


def _read_rows(name: str) -> list[dict]:
    path = data_dir() / name
    if not path.is_file():
        raise FileNotFoundError(f"bundled data file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.DictReader(row for row in fh if not row.startswith("#"))
        return list(reader)


def load_nuclide_lines() -> dict[str, tuple[tuple[float, float], ...]]:
    """Gamma lines per isotope name: {name: ((energy_keV, intensity), ...)}."""
    table: dict[str, list[tuple[float, float]]] = {}
    for row in _read_rows("nuclide_lines.csv"):
        table.setdefault(row["isotope"], []).append(
            (float(row["energy_keV"]), float(row["intensity"]))
        )
    return {name: tuple(lines) for name, lines in table.items()}


def load_attenuation_table(material_slug: str) -> tuple[np.ndarray, np.ndarray]:
    """(energies_keV, mu_per_cm) arrays for one material table file."""
    rows = _read_rows(f"attenuation_{material_slug}.csv")
    energies = np.array([float(r["energy_keV"]) for r in rows])
    mu = np.array([float(r["mu_per_cm"]) for r in rows])
    order = np.argsort(energies)
    return energies[order], mu[order]
