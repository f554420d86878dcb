"""Feature catalog: named, categorized feature definitions loaded from JSON."""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from ..errors import CatalogNotFound, MalformedFile

DEFAULT_CATALOG_NAME = "catalog_v1.json"


class FeatureCategory(str, enum.Enum):
    SPATIO_TEMPORAL = "SpatioTemporal"
    STATISTICAL = "Statistical"
    FREQUENCY = "Frequency"
    INFORMATION_THEORETIC = "InformationTheoretic"


@dataclass(frozen=True)
class FeatureDef:
    name: str
    category: FeatureCategory
    channel: str
    extractor: str
    params: dict = field(default_factory=dict, hash=False, compare=True)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "category": self.category.value,
            "channel": self.channel,
            "extractor": self.extractor,
            "params": dict(self.params),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "FeatureDef":
        return cls(
            name=str(doc["name"]),
            category=FeatureCategory(doc["category"]),
            channel=str(doc["channel"]),
            extractor=str(doc["extractor"]),
            params=dict(doc.get("params", {})),
        )


@dataclass(frozen=True)
class FeatureCatalog:
    defs: tuple = ()
    version: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "defs", tuple(self.defs))
        names = [d.name for d in self.defs]
        dupes = [n for n, c in Counter(names).items() if c > 1]
        if dupes:
            raise MalformedFile(f"duplicate feature names in catalog: {dupes[:5]}")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(names)})

    def __len__(self) -> int:
        return len(self.defs)

    def __iter__(self):
        return iter(self.defs)

    def __getitem__(self, i) -> FeatureDef:
        return self.defs[i]

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.defs]

    def index_of(self, name: str) -> int:
        return self._index[name]

    def category_counts(self) -> dict[str, int]:
        counts = Counter(d.category.value for d in self.defs)
        return {c.value: counts.get(c.value, 0) for c in FeatureCategory}

    def subset(self, indices) -> "FeatureCatalog":
        return FeatureCatalog(tuple(self.defs[i] for i in indices), self.version)

    def to_json(self) -> dict:
        return {
            "version": self.version,
            "n_features": len(self),
            "category_counts": self.category_counts(),
            "features": [d.to_json() for d in self.defs],
        }


def catalog_from_json(doc) -> FeatureCatalog:
    if isinstance(doc, list):
        return FeatureCatalog(tuple(FeatureDef.from_json(d) for d in doc))
    if not isinstance(doc, dict) or "features" not in doc:
        raise MalformedFile("catalog must be a list of features or an object with 'features'")
    catalog = FeatureCatalog(
        tuple(FeatureDef.from_json(d) for d in doc["features"]), str(doc.get("version", "custom"))
    )
    declared = doc.get("category_counts")
    if declared is not None and declared != catalog.category_counts():
        raise MalformedFile(
            f"catalog header counts {declared} disagree with entries {catalog.category_counts()}"
        )
    if "n_features" in doc and int(doc["n_features"]) != len(catalog):
        raise MalformedFile(f"catalog declares {doc['n_features']} features, has {len(catalog)}")
    return catalog


def load_catalog(path=None) -> FeatureCatalog:
    """Load a catalog file; ``None`` loads the packaged default."""
    if path is None:
        text = resources.files(__package__).joinpath(DEFAULT_CATALOG_NAME).read_text("utf-8")
    else:
        path = Path(path)
        if not path.is_file():
            raise CatalogNotFound(path)
        text = path.read_text(encoding="utf-8")
    return catalog_from_json(json.loads(text))


_DEFAULT = None


def default_catalog() -> FeatureCatalog:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_catalog()
    return _DEFAULT
