"""Stage 2: the real-time scoring kernel.

A UserConfig names category entries (singletons or substitute groups), each
with a tier weight and an exponential-decay appetite. Scores collapse a
cell's count vector into [0, 1]:

    score = sum_e w_e * (1 - exp(-lambda_e * K_e)) / sum_e w_e

where K_e sums the member counts of entry e. Any Required entry with
K_e = 0 forces the score to 0. Ward scores are plain means of their cells.

The module also houses ``continuous_ward_score``, the exact-geometry
reference oracle used by the convergence harness; it never runs in the
serving path.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from . import kernels
from .errors import (ComplexityGuard, ConfigError, OutOfBounds,
                     TaxonomyMismatch, UnknownCategory)
from .geo import Frame, LatLon, Polygon
from .ingest import CategoryTaxonomy
from .isochrone import Catchment
from .precompute import KVectorStore

SCORE_DECIMALS = 6


class DecayPreset(Enum):
    """Half-life in overlap count: 2 for Expansive, 1 Balanced, 0.5 Focused."""

    EXPANSIVE = math.log(2.0) / 2.0
    BALANCED = math.log(2.0)
    FOCUSED = 2.0 * math.log(2.0)

    @property
    def rate(self) -> float:
        return self.value

    @property
    def half_life(self) -> float:
        return math.log(2.0) / self.value

    @classmethod
    def parse(cls, name: str) -> "DecayPreset":
        try:
            return cls[name.upper()]
        except KeyError:
            raise ConfigError(f"unknown decay preset {name!r} (expected "
                              f"expansive, balanced, or focused)") from None


class Tier(Enum):
    STANDARD = ("standard", 1.0, False)
    PREFERRED = ("preferred", 2.0, False)
    REQUIRED = ("required", 1.0, True)

    def __init__(self, label: str, weight: float, gates: bool):
        self.label = label
        self.weight = weight
        self.gates = gates

    @classmethod
    def parse(cls, name: str) -> "Tier":
        try:
            return cls[name.upper()]
        except KeyError:
            raise ConfigError(f"unknown tier {name!r} (expected standard, "
                              f"preferred, or required)") from None


@dataclass(frozen=True)
class ConfigEntry:
    """One scored entry: a singleton category or a substitute group."""

    members: tuple[str, ...]
    tier: Tier
    decay: DecayPreset

    def __post_init__(self):
        if not self.members:
            raise ConfigError("entry members must be non-empty")


@dataclass(frozen=True)
class UserConfig:
    entries: tuple[ConfigEntry, ...]
    name: str | None = None

    def __post_init__(self):
        if not self.entries:
            raise ConfigError("config needs at least one entry")
        seen: set[str] = set()
        for i, e in enumerate(self.entries):
            for m in e.members:
                if m in seen:
                    raise ConfigError(f"entries[{i}]: category {m!r} appears "
                                      f"in more than one entry")
                seen.add(m)


def parse_config(source: Union[str, bytes, dict]) -> UserConfig:
    """Parse the UserConfig JSON schema with field-level error messages."""
    if isinstance(source, (str, bytes)):
        try:
            doc = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc.msg}") from exc
    else:
        doc = source
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    raw_entries = doc.get("entries")
    if not isinstance(raw_entries, list) or not raw_entries:
        raise ConfigError("entries: must be a non-empty array")
    entries = []
    for i, raw in enumerate(raw_entries):
        where = f"entries[{i}]"
        if not isinstance(raw, dict):
            raise ConfigError(f"{where}: must be an object")
        members = raw.get("members")
        if not isinstance(members, list) or not members:
            raise ConfigError(f"{where}.members: must be a non-empty array")
        if len(set(members)) != len(members):
            raise ConfigError(f"{where}.members: duplicate category")
        for m in members:
            if not isinstance(m, str) or not m:
                raise ConfigError(f"{where}.members: categories must be "
                                  f"non-empty strings")
        try:
            tier = Tier.parse(str(raw.get("tier", "")))
        except ConfigError as exc:
            raise ConfigError(f"{where}.tier: {exc}") from None
        try:
            decay = DecayPreset.parse(str(raw.get("decay", "")))
        except ConfigError as exc:
            raise ConfigError(f"{where}.decay: {exc}") from None
        entries.append(ConfigEntry(tuple(members), tier, decay))
    name = doc.get("name")
    try:
        return UserConfig(tuple(entries), str(name) if name is not None else None)
    except ConfigError as exc:
        raise ConfigError(str(exc)) from None


def validate_config(config: UserConfig, taxonomy: CategoryTaxonomy) -> None:
    """Field-level membership check against a taxonomy."""
    for i, e in enumerate(config.entries):
        for m in e.members:
            if m not in taxonomy:
                raise ConfigError(f"entries[{i}].members: unknown category {m!r}")


def config_fingerprint(config: UserConfig) -> str:
    """Order-insensitive sha256 over the semantic content of a config.

    Entries are keyed by their sorted member tuple, so reordering entries
    or members inside a group cannot change the fingerprint; the optional
    display name is excluded.
    """
    canon = sorted(
        ({"members": sorted(e.members), "tier": e.tier.label,
          "decay": e.decay.name.lower()} for e in config.entries),
        key=lambda d: d["members"],
    )
    blob = json.dumps({"entries": canon}, sort_keys=True,
                      separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def decay_value(k: float, rate: float) -> float:
    """1 - exp(-rate * k): the diminishing-returns coverage value."""
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    if rate <= 0:
        raise ValueError(f"decay rate must be positive, got {rate}")
    return 1.0 - math.exp(-rate * k)


def entry_k(k_vector: Mapping[str, int], entry: ConfigEntry) -> int:
    """Substitute-group count: the sum of member counts."""
    total = 0
    for m in entry.members:
        if m not in k_vector:
            raise UnknownCategory(f"category {m!r} missing from k-vector")
        total += int(k_vector[m])
    return total


def cell_score(k_vector: Mapping[str, int], config: UserConfig) -> float:
    """Direct evaluation of the weighted-decay score for one k-vector."""
    num = 0.0
    wsum = 0.0
    gated = False
    for e in config.entries:
        k = entry_k(k_vector, e)
        if e.tier.gates and k == 0:
            gated = True
        num += e.tier.weight * decay_value(k, e.decay.rate)
        wsum += e.tier.weight
    return 0.0 if gated else num / wsum


@dataclass(frozen=True)
class ScoreSurface:
    granularity: str  # "grid" | "ward"
    values: dict
    fingerprint: str


class ResolvedConfig:
    """A UserConfig bound to a taxonomy: CSR member indices plus per-entry
    weight/rate/gate arrays, ready for the scoring kernel."""

    def __init__(self, config: UserConfig, taxonomy: CategoryTaxonomy):
        mstart = [0]
        midx: list[int] = []
        for i, e in enumerate(config.entries):
            for m in e.members:
                try:
                    midx.append(taxonomy.index(m))
                except UnknownCategory:
                    raise TaxonomyMismatch(
                        f"entries[{i}].members: category {m!r} is not in the "
                        f"store taxonomy") from None
            mstart.append(len(midx))
        self.config = config
        self.taxonomy = taxonomy
        self.mstart = np.asarray(mstart, np.int64)
        self.midx = np.asarray(midx, np.int64)
        self.weights = np.asarray([e.tier.weight for e in config.entries])
        self.rates = np.asarray([e.decay.rate for e in config.entries])
        self.required = np.asarray([e.tier.gates for e in config.entries],
                                   np.bool_)
        self.fingerprint = config_fingerprint(config)

    def score_matrix(self, counts: np.ndarray,
                     out: np.ndarray | None = None) -> np.ndarray:
        return kernels.score_cells(counts, self.mstart, self.midx,
                                   self.weights, self.rates, self.required,
                                   out)


def grid_surface(store: KVectorStore, config: UserConfig) -> ScoreSurface:
    """One score per grid cell (row-major cell id keys)."""
    resolved = ResolvedConfig(config, store.taxonomy)
    scores = resolved.score_matrix(store.counts)
    return ScoreSurface("grid", {int(i): float(s) for i, s in enumerate(scores)},
                        resolved.fingerprint)


def ward_scores(store: KVectorStore, config: UserConfig) -> ScoreSurface:
    """Mean cell score per ward; wards owning zero cells are omitted."""
    resolved = ResolvedConfig(config, store.taxonomy)
    scores = resolved.score_matrix(store.counts)
    grid = store.grid
    assigned = grid.cell_ward >= 0
    idx = grid.cell_ward[assigned]
    sums = np.bincount(idx, weights=scores[assigned],
                       minlength=len(grid.ward_ids))
    cells = np.bincount(idx, minlength=len(grid.ward_ids))
    values = {grid.ward_ids[w]: float(sums[w] / cells[w])
              for w in range(len(grid.ward_ids)) if cells[w] > 0}
    return ScoreSurface("ward", values, resolved.fingerprint)


def point_score(location: LatLon, store: KVectorStore,
                config: UserConfig) -> tuple[float, int]:
    """Score of the cell containing ``location`` plus that cell's id."""
    if store.grid.reference is None:
        raise OutOfBounds("store grid has no geographic reference")
    frame = Frame(store.grid.reference)
    cell_id = store.grid.cell_at(frame.project(location))
    resolved = ResolvedConfig(config, store.taxonomy)
    score = resolved.score_matrix(store.counts[cell_id:cell_id + 1])
    return float(score[0]), cell_id


# ---------------------------------------------------------------------------
# Continuous reference oracle (Appendix-style exact geometry). Small
# instances only; the convergence harness compares the grid pipeline
# against this.
# ---------------------------------------------------------------------------

ORACLE_MAX_PER_CATEGORY = 20
ORACLE_MC_SEED = 0x5EED
ORACLE_MC_SAMPLES = 1_000_000


@dataclass(frozen=True)
class OracleResult:
    value: float
    method: str  # "sweep" | "monte-carlo"
    standard_error: float = 0.0

    def __float__(self) -> float:
        return self.value


def _is_rectilinear(poly: Polygon) -> bool:
    for ring, _ in poly.rings():
        d = np.diff(ring, axis=0)
        if not np.all((d[:, 0] == 0.0) | (d[:, 1] == 0.0)):
            return False
    return True


def _pointwise_score(px: float, py: float, parts_by_entry, weights, rates,
                     gates) -> float:
    num = 0.0
    for e, parts in enumerate(parts_by_entry):
        k = 0
        for poly in parts:
            if poly.contains(px, py):
                k += 1
        if gates[e] and k == 0:
            return 0.0
        num += weights[e] * (1.0 - math.exp(-rates[e] * k))
    return num / float(sum(weights))


def continuous_ward_score(ward: Union[Polygon, Sequence[Polygon]],
                          catchments: Iterable[Catchment],
                          config: UserConfig,
                          mc_samples: int = ORACLE_MC_SAMPLES,
                          mc_seed: int = ORACLE_MC_SEED,
                          method: str = "auto") -> OracleResult:
    """Exact continuous ward score: integral of the pointwise score over
    the ward, normalized by ward area.

    Axis-aligned instances use a coordinate-sweep arrangement whose
    sub-rectangles have constant coverage, summed exactly. Anything else
    falls back to seeded Monte Carlo with a reported standard error.
    ``method`` forces one path ("sweep" | "monte-carlo") for cross-checks.
    """
    parts = [ward] if isinstance(ward, Polygon) else list(ward)
    if not parts:
        raise ValueError("ward geometry is empty")
    catchments = list(catchments)
    per_cat: dict[str, int] = {}
    for c in catchments:
        per_cat[c.category] = per_cat.get(c.category, 0) + 1
    for cat, n in sorted(per_cat.items()):
        if n > ORACLE_MAX_PER_CATEGORY:
            raise ComplexityGuard(f"{n} catchments for category {cat!r} "
                                  f"exceeds the oracle limit of "
                                  f"{ORACLE_MAX_PER_CATEGORY}")

    member_parts: dict[str, list[Polygon]] = {}
    for c in catchments:
        member_parts.setdefault(c.category, []).extend(c.parts)
    parts_by_entry = [
        [p for m in e.members for p in member_parts.get(m, [])]
        for e in config.entries
    ]
    weights = [e.tier.weight for e in config.entries]
    rates = [e.decay.rate for e in config.entries]
    gates = [e.tier.gates for e in config.entries]

    all_polys = parts + [p for ps in parts_by_entry for p in ps]
    rectilinear = all(_is_rectilinear(p) for p in all_polys)
    if method == "sweep" and not rectilinear:
        raise ComplexityGuard("sweep oracle requires axis-aligned geometry")
    if method == "sweep" or (method == "auto" and rectilinear):
        return _sweep_score(parts, parts_by_entry, weights, rates, gates)
    if method not in ("auto", "monte-carlo"):
        raise ValueError(f"unknown oracle method {method!r}")
    return _mc_score(parts, parts_by_entry, weights, rates, gates,
                     mc_samples, mc_seed)


def _sweep_score(ward_parts, parts_by_entry, weights, rates, gates) -> OracleResult:
    xs: set[float] = set()
    ys: set[float] = set()
    for poly in ward_parts + [p for ps in parts_by_entry for p in ps]:
        for ring, _ in poly.rings():
            xs.update(ring[:, 0].tolist())
            ys.update(ring[:, 1].tolist())
    xcuts = sorted(xs)
    ycuts = sorted(ys)
    total = 0.0
    ward_area = 0.0
    for i in range(len(xcuts) - 1):
        for j in range(len(ycuts) - 1):
            w = xcuts[i + 1] - xcuts[i]
            h = ycuts[j + 1] - ycuts[j]
            if w <= 0 or h <= 0:
                continue
            px = (xcuts[i] + xcuts[i + 1]) / 2.0
            py = (ycuts[j] + ycuts[j + 1]) / 2.0
            if not any(p.contains(px, py) for p in ward_parts):
                continue
            area = w * h
            ward_area += area
            total += area * _pointwise_score(px, py, parts_by_entry,
                                             weights, rates, gates)
    if ward_area <= 0:
        raise ValueError("ward has zero area in the sweep arrangement")
    return OracleResult(total / ward_area, "sweep")


def _batch_scores(px: np.ndarray, py: np.ndarray, parts_by_entry, weights,
                  rates, gates) -> np.ndarray:
    n = px.shape[0]
    num = np.zeros(n, np.float64)
    gated = np.zeros(n, np.bool_)
    for e, parts in enumerate(parts_by_entry):
        k = np.zeros(n, np.float64)
        for poly in parts:
            xs, ys, offsets, _ = poly.flat_rings()
            k += kernels.points_in_rings(px, py, xs, ys, offsets)
        if gates[e]:
            gated |= k == 0
        num += weights[e] * (1.0 - np.exp(-rates[e] * k))
    out = num / float(sum(weights))
    out[gated] = 0.0
    return out


def _mc_score(ward_parts, parts_by_entry, weights, rates, gates,
              n_samples: int, seed: int) -> OracleResult:
    rng = np.random.default_rng(seed)
    bx0 = min(p.bounds[0] for p in ward_parts)
    by0 = min(p.bounds[1] for p in ward_parts)
    bx1 = max(p.bounds[2] for p in ward_parts)
    by1 = max(p.bounds[3] for p in ward_parts)
    flat = [p.flat_rings() for p in ward_parts]
    vals = np.empty(n_samples, np.float64)
    got = 0
    while got < n_samples:
        chunk = min(262_144, 4 * (n_samples - got))
        px = rng.uniform(bx0, bx1, chunk)
        py = rng.uniform(by0, by1, chunk)
        inside = np.zeros(chunk, np.bool_)
        for xs_a, ys_a, off, _ in flat:
            inside |= kernels.points_in_rings(px, py, xs_a, ys_a, off)
        px, py = px[inside], py[inside]
        take = min(px.shape[0], n_samples - got)
        vals[got:got + take] = _batch_scores(px[:take], py[:take],
                                             parts_by_entry, weights, rates,
                                             gates)[:take]
        got += take
    mean = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n_samples))
    return OracleResult(mean, "monte-carlo", se)
