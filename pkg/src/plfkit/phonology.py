"""Feature inventories and the feature-to-phone conversion matrix.

The conversion matrix maps each phone to the expected response of every
phonological feature: +1 active, -1 inactive, 0 irrelevant. Vowel-position
features (horizontal: frontal/central/back, vertical: high/mid/low) are
"grouped": their column entries are nonnegative mixing weights, fractional
values allowed, and each group enters phone scoring as one weighted-sum
term. A trainable positive scaling matrix lets the model deviate from the
hand-specified magnitudes without ever flipping an expectation's sign.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ShapeError, SpecValidationError

GROUP_NAMES = ("horizontal", "vertical")
_TOL = 1e-9


@dataclass(frozen=True)
class PLFInventory:
    """Ordered feature names plus the two vowel-position groups."""

    names: tuple[str, ...]
    groups: dict[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)

    def group_indices(self, group: str) -> np.ndarray:
        return np.array([self.names.index(n) for n in self.groups[group]], dtype=np.intp)

    def grouped_feature_indices(self) -> np.ndarray:
        """Indices of every feature belonging to some group, sorted."""
        idx: list[int] = []
        for g in GROUP_NAMES:
            idx.extend(self.names.index(n) for n in self.groups.get(g, ()))
        return np.array(sorted(idx), dtype=np.intp)

    def nongrouped_feature_indices(self) -> np.ndarray:
        grouped = set(self.grouped_feature_indices().tolist())
        return np.array([i for i in range(self.size) if i not in grouped], dtype=np.intp)


@dataclass
class ScalingMatrix:
    """Unconstrained raw parameters; effective scale is exp(raw) > 0."""

    raw: np.ndarray

    @classmethod
    def zeros(cls, n_phones: int, n_features: int) -> "ScalingMatrix":
        return cls(np.zeros((n_phones, n_features)))

    def effective(self) -> np.ndarray:
        return np.exp(self.raw)


@dataclass(frozen=True)
class ConversionSpec:
    """Validated bundle of inventory, phone list and conversion matrix."""

    inventory: PLFInventory
    phones: tuple[str, ...]
    matrix: np.ndarray  # (P, F), float64

    @property
    def n_phones(self) -> int:
        return len(self.phones)

    @property
    def n_features(self) -> int:
        return self.inventory.size

    def phone_index(self, symbol: str) -> int:
        return self.phones.index(symbol)

    def to_dict(self) -> dict:
        return {
            "plfs": list(self.inventory.names),
            "groups": {g: list(m) for g, m in self.inventory.groups.items()},
            "phones": list(self.phones),
            "matrix": [[float(v) for v in row] for row in self.matrix],
        }

    def content_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def validate_spec(plfs, groups, phones, matrix) -> ConversionSpec:
    """Check every invariant; raise SpecValidationError naming the offender."""
    plfs = tuple(str(n) for n in plfs)
    phones = tuple(str(p) for p in phones)
    if len(set(plfs)) != len(plfs):
        raise SpecValidationError("duplicate feature names in 'plfs'")
    if len(set(phones)) != len(phones):
        raise SpecValidationError("duplicate phone symbols in 'phones'")
    if not plfs or not phones:
        raise SpecValidationError("'plfs' and 'phones' must be non-empty")

    norm_groups: dict[str, tuple[str, ...]] = {}
    seen_members: set[str] = set()
    for g in GROUP_NAMES:
        members = tuple(str(m) for m in groups.get(g, ()))
        for m in members:
            if m not in plfs:
                raise SpecValidationError(f"group '{g}' member '{m}' is not a feature name")
            if m in seen_members:
                raise SpecValidationError(f"feature '{m}' appears in more than one group")
            seen_members.add(m)
        norm_groups[g] = members
    unknown = set(groups) - set(GROUP_NAMES)
    if unknown:
        raise SpecValidationError(f"unknown group name(s): {sorted(unknown)}")

    mat = np.asarray(matrix, dtype=np.float64)
    if mat.ndim != 2 or mat.shape != (len(phones), len(plfs)):
        raise SpecValidationError(
            f"matrix shape {mat.shape} does not match {len(phones)} phones x {len(plfs)} features"
        )
    if not np.all(np.isfinite(mat)):
        raise SpecValidationError("matrix contains non-finite entries")

    inv = PLFInventory(names=plfs, groups=norm_groups)
    grouped = set(inv.grouped_feature_indices().tolist())
    for p, phone in enumerate(phones):
        row = mat[p]
        if np.all(np.abs(row) <= _TOL):
            raise SpecValidationError(f"phone '{phone}' has an all-zero matrix row")
        for f, feat in enumerate(plfs):
            v = row[f]
            if v < -1.0 - _TOL or v > 1.0 + _TOL:
                raise SpecValidationError(
                    f"entry ({phone}, {feat}) = {v} outside [-1, 1]"
                )
            if f in grouped:
                if v < -_TOL:
                    raise SpecValidationError(
                        f"grouped entry ({phone}, {feat}) = {v} must be nonnegative"
                    )
            else:
                if min(abs(v + 1.0), abs(v), abs(v - 1.0)) > _TOL:
                    raise SpecValidationError(
                        f"non-grouped entry ({phone}, {feat}) = {v} must be one of -1, 0, 1"
                    )
    mat = np.clip(mat, -1.0, 1.0)
    mat.setflags(write=False)
    return ConversionSpec(inventory=inv, phones=phones, matrix=mat)


def load_spec(path) -> ConversionSpec:
    """Parse and validate a conversion-spec JSON file."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SpecValidationError(f"{path}: not valid JSON ({e})") from e
    for key in ("plfs", "phones", "matrix"):
        if key not in doc:
            raise SpecValidationError(f"{path}: missing required key '{key}'")
    return validate_spec(doc["plfs"], doc.get("groups", {}), doc["phones"], doc["matrix"])


def write_spec(spec: ConversionSpec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n")


def spec_to_csv(spec: ConversionSpec, path) -> None:
    """Human-readable export: header = feature names, first column = phones."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["phone", *spec.inventory.names])
        for p, phone in enumerate(spec.phones):
            writer.writerow([phone, *[f"{v:g}" for v in spec.matrix[p]]])


def effective_matrix(matrix: np.ndarray, scaling: ScalingMatrix) -> np.ndarray:
    """Entrywise matrix * exp(raw); keeps the sign pattern of the matrix."""
    if matrix.shape != scaling.raw.shape:
        raise ShapeError(
            f"conversion matrix {matrix.shape} vs scaling matrix {scaling.raw.shape}"
        )
    return matrix * scaling.effective()


def demo_spec_path() -> Path:
    return Path(str(resources.files("plfkit.data") / "demo_spec.json"))


def template_spec_path() -> Path:
    return Path(str(resources.files("plfkit.data") / "template_spec_21plf.json"))


def load_demo_spec() -> ConversionSpec:
    """10-phone x 8-feature phonology shipped for tests and quick starts."""
    return load_spec(demo_spec_path())


def load_template_spec() -> ConversionSpec:
    """Canonical 21-feature inventory with an illustrative phone set."""
    return load_spec(template_spec_path())
