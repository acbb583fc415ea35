"""Puzzle manifests, batch evaluation, and synthetic puzzle generation."""

from __future__ import annotations

import json
import random
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .logic import Formula, Model, Signature, check_well_sorted, evaluate
from .scenes import ExtractionConfig, SchemaError, build_model, load_detections
from .syntax import parse_formula
from .synthesis import (
    Puzzle,
    SynthesisConfig,
    SynthesisOutcome,
    is_discriminator,
    synthesize,
)

MANIFEST_SCHEMA_VERSION = "1.0"
IMAGE_WIDTH = 640
IMAGE_HEIGHT = 480


class ManifestError(Exception):
    pass


class GenerationError(Exception):
    """Rejection sampling failed; the concept is hard to plant."""


@dataclass(frozen=True)
class PuzzleManifest:
    name: str
    train: tuple[Path, ...]
    candidates: tuple[Path, ...]
    expected_candidate: int | None = None
    target_concept: str | None = None

    @property
    def concept_group(self) -> str:
        return self.name.split("__", 1)[0]


def load_manifest(path: str | Path) -> PuzzleManifest:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ManifestError(f"{path}: {e}") from None
    if not isinstance(doc, dict):
        raise ManifestError(f"{path}: top level must be an object")
    allowed = {
        "schema_version",
        "name",
        "train",
        "candidates",
        "expected_candidate",
        "target_concept",
    }
    unknown = set(doc) - allowed
    if unknown:
        raise ManifestError(f"{path}: unknown fields {sorted(unknown)}")
    if doc.get("schema_version") != MANIFEST_SCHEMA_VERSION:
        raise ManifestError(f"{path}: bad schema_version")
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise ManifestError(f"{path}: name must be a nonempty string")
    for key, lo, hi in (("train", 1, 8), ("candidates", 2, 8)):
        entries = doc.get(key)
        if (
            not isinstance(entries, list)
            or not lo <= len(entries) <= hi
            or not all(isinstance(e, str) for e in entries)
        ):
            raise ManifestError(f"{path}: {key} must list {lo}-{hi} file paths")
    train = tuple((path.parent / p).resolve() for p in doc["train"])
    candidates = tuple((path.parent / p).resolve() for p in doc["candidates"])
    for p in train + candidates:
        if not p.is_file():
            raise ManifestError(f"{path}: missing detection file {p}")
    expected = doc.get("expected_candidate")
    if expected is not None:
        if not isinstance(expected, int) or not 0 <= expected < len(candidates):
            raise ManifestError(f"{path}: expected_candidate out of range")
    concept = doc.get("target_concept")
    if concept is not None and not isinstance(concept, str):
        raise ManifestError(f"{path}: target_concept must be a string")
    return PuzzleManifest(name, train, candidates, expected, concept)


def load_puzzle(
    manifest: PuzzleManifest, cfg: ExtractionConfig | None = None
) -> Puzzle:
    """Build the shared-vocabulary puzzle from the manifest's files."""
    cfg = cfg or ExtractionConfig()
    scenes = [
        load_detections(Path(p).read_text())
        for p in manifest.train + manifest.candidates
    ]
    vocab = sorted(
        {
            d.label
            for s in scenes
            for d in s.detections
            if d.score >= cfg.score_threshold
        }
    )
    models = [build_model(s, vocab, cfg) for s in scenes]
    bound = max((len(m.objects) for m in models), default=0)
    sig = Signature(frozenset(vocab), numeric_literal_bound=bound)
    n_train = len(manifest.train)
    return Puzzle(sig, tuple(models[:n_train]), tuple(models[n_train:]))


# ---------------------------------------------------------------------------
# Batch runner


@dataclass(frozen=True)
class PuzzleRow:
    name: str
    chosen: int | None
    formulas: tuple[str, ...]
    costs: tuple[tuple[int, ...], ...]
    flags: tuple[str, ...]
    seconds: float
    expected: int | None = None


@dataclass(frozen=True)
class ConceptRow:
    name: str
    total: int
    matched: int


@dataclass(frozen=True)
class RunReport:
    puzzles: tuple[PuzzleRow, ...]
    concepts: tuple[ConceptRow, ...]

    def to_json(self) -> str:
        doc = {
            "note": (
                "matched counts expected-candidate agreement of the top-1 "
                "discriminator, not manual concept inspection"
            ),
            "puzzles": [
                {
                    "name": r.name,
                    "chosen": r.chosen,
                    "formulas": list(r.formulas),
                    "cost": [list(c) for c in r.costs],
                    "flags": list(r.flags),
                    "seconds": round(r.seconds, 3),
                }
                for r in self.puzzles
            ],
            "concepts": [
                {"name": c.name, "total": c.total, "matched": c.matched}
                for c in self.concepts
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def to_table(self) -> str:
        by_group: dict[str, list[PuzzleRow]] = {}
        for row in self.puzzles:
            by_group.setdefault(row.name.split("__", 1)[0], []).append(row)
        lines = [
            "matched = top-1 discriminator selects the expected candidate",
            "",
            f"{'concept':<28} {'#puzzles':>8} {'most common discriminator':<58} {'#matched':>8}",
        ]
        for concept in sorted(by_group):
            rows = by_group[concept]
            tops = Counter(r.formulas[0] for r in rows if r.formulas)
            common = tops.most_common(1)[0][0] if tops else "-"
            matched = next(
                (c.matched for c in self.concepts if c.name == concept), 0
            )
            lines.append(
                f"{concept:<28} {len(rows):>8} {common:<58} {matched:>8}"
            )
        return "\n".join(lines) + "\n"


def solve_manifest(
    manifest: PuzzleManifest,
    syn_cfg: SynthesisConfig,
    ext_cfg: ExtractionConfig | None = None,
) -> tuple[PuzzleRow, SynthesisOutcome]:
    start = time.monotonic()
    puzzle = load_puzzle(manifest, ext_cfg)
    outcome = synthesize(puzzle, syn_cfg)
    flags = []
    if outcome.status != "ok":
        flags.append(outcome.status)
    if any(m.truncated for m in puzzle.train + puzzle.candidates):
        flags.append("truncation")
    if outcome.results:
        best_cost = outcome.results[0].cost
        chosen_at_best = {
            r.chosen_candidate for r in outcome.results if r.cost == best_cost
        }
        if len(chosen_at_best) > 1:
            flags.append("ambiguous")
    row = PuzzleRow(
        name=manifest.name,
        chosen=outcome.results[0].chosen_candidate if outcome.results else None,
        formulas=tuple(r.text for r in outcome.results),
        costs=tuple(r.cost.as_tuple() for r in outcome.results),
        flags=tuple(flags),
        seconds=time.monotonic() - start,
        expected=manifest.expected_candidate,
    )
    return row, outcome


def find_manifests(directory: str | Path) -> list[Path]:
    directory = Path(directory)
    return sorted(directory.glob("**/puzzle.json")) + sorted(
        p for p in directory.glob("**/*.puzzle.json")
    )


def run_dataset(
    directory: str | Path,
    syn_cfg: SynthesisConfig | None = None,
    ext_cfg: ExtractionConfig | None = None,
) -> RunReport:
    """Solve every manifest under the directory; failures become rows."""
    syn_cfg = syn_cfg or SynthesisConfig()
    rows: list[PuzzleRow] = []
    for mpath in find_manifests(directory):
        try:
            manifest = load_manifest(mpath)
            row, _ = solve_manifest(manifest, syn_cfg, ext_cfg)
        except (ManifestError, SchemaError, ValueError) as e:
            rows.append(
                PuzzleRow(
                    name=str(mpath),
                    chosen=None,
                    formulas=(),
                    costs=(),
                    flags=("error: " + str(e),),
                    seconds=0.0,
                )
            )
            continue
        rows.append(row)
    rows.sort(key=lambda r: r.name)
    groups: dict[str, list[PuzzleRow]] = {}
    for row in rows:
        groups.setdefault(row.name.split("__", 1)[0], []).append(row)
    concepts = tuple(
        ConceptRow(
            name,
            len(members),
            sum(
                1
                for r in members
                if r.expected is not None and r.chosen == r.expected
            ),
        )
        for name, members in sorted(groups.items())
    )
    return RunReport(tuple(rows), concepts)


# ---------------------------------------------------------------------------
# Synthetic puzzle generation


@dataclass(frozen=True)
class PlantedSpec:
    concept: str
    label_pool: tuple[str, ...]
    num_train: int = 4
    num_candidates: int = 4
    objects_min: int = 2
    objects_max: int = 5
    seed: int = 0
    name: str = "planted"

    def __post_init__(self):
        if not 1 <= self.num_train <= 8 or not 2 <= self.num_candidates <= 8:
            raise ValueError("num_train must be 1-8, num_candidates 2-8")
        if not 1 <= self.objects_min <= self.objects_max:
            raise ValueError("bad objects range")
        if not self.label_pool:
            raise ValueError("label_pool must be nonempty")


def spec_from_json(text: str) -> PlantedSpec:
    doc = json.loads(text)
    return PlantedSpec(
        concept=doc["concept"],
        label_pool=tuple(doc["label_pool"]),
        num_train=doc.get("num_train", 4),
        num_candidates=doc.get("num_candidates", 4),
        objects_min=doc.get("objects_min", 2),
        objects_max=doc.get("objects_max", 5),
        seed=doc.get("seed", 0),
        name=doc.get("name", "planted"),
    )


MAX_SCENE_ATTEMPTS = 10_000


def _random_scene_doc(rng: random.Random, spec: PlantedSpec, image_id: str) -> dict:
    n = rng.randint(spec.objects_min, spec.objects_max)
    detections = []
    for _ in range(n):
        w = rng.randrange(30, 120)
        h = rng.randrange(30, 120)
        x = rng.randrange(0, IMAGE_WIDTH - w)
        y = rng.randrange(0, IMAGE_HEIGHT - h)
        detections.append(
            {
                "label": rng.choice(list(spec.label_pool)),
                "score": 0.9,
                "bbox": [x, y, w, h],
            }
        )
    return {
        "schema_version": "1.0",
        "image_id": image_id,
        "width": IMAGE_WIDTH,
        "height": IMAGE_HEIGHT,
        "detections": detections,
    }


def _scene_model(doc: dict, vocab: Sequence[str], cfg: ExtractionConfig) -> Model:
    return build_model(load_detections(json.dumps(doc)), vocab, cfg)


def generate_synthetic_puzzle(
    spec: PlantedSpec,
    out_dir: str | Path,
    ext_cfg: ExtractionConfig | None = None,
) -> Path:
    """Write a manifest plus detection files realizing the planted concept.

    Scenes are rejection-sampled until the concept holds on every training
    scene and on exactly one candidate; the finished puzzle is re-verified
    through the normal loading path.  Deterministic per seed.
    """
    ext_cfg = ext_cfg or ExtractionConfig()
    out_dir = Path(out_dir)
    rng = random.Random(spec.seed)
    vocab = sorted(set(spec.label_pool))
    sig = Signature(frozenset(vocab), numeric_literal_bound=spec.objects_max)
    concept = parse_formula(spec.concept, sig)
    errors = check_well_sorted(concept, sig, dialect=True)
    if errors:
        raise ValueError(f"concept is not dialect-legal: {errors}")

    def sample(image_id: str, want: bool) -> dict:
        for _ in range(MAX_SCENE_ATTEMPTS):
            doc = _random_scene_doc(rng, spec, image_id)
            model = _scene_model(doc, vocab, ext_cfg)
            if evaluate(model, concept) == want:
                return doc
        raise GenerationError(
            f"concept {spec.concept!r} is hard to plant: no "
            f"{'positive' if want else 'negative'} scene in "
            f"{MAX_SCENE_ATTEMPTS} attempts"
        )

    expected = rng.randrange(spec.num_candidates)
    train_docs = [sample(f"train_{i}", True) for i in range(spec.num_train)]
    cand_docs = [
        sample(f"candidate_{i}", i == expected)
        for i in range(spec.num_candidates)
    ]

    out_dir.mkdir(parents=True, exist_ok=True)
    train_paths, cand_paths = [], []
    for i, doc in enumerate(train_docs):
        p = out_dir / f"train_{i}.json"
        p.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        train_paths.append(p.name)
    for i, doc in enumerate(cand_docs):
        p = out_dir / f"candidate_{i}.json"
        p.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        cand_paths.append(p.name)
    manifest_doc = {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "name": spec.name,
        "train": train_paths,
        "candidates": cand_paths,
        "expected_candidate": expected,
        "target_concept": spec.concept,
    }
    manifest_path = out_dir / "puzzle.json"
    manifest_path.write_text(json.dumps(manifest_doc, indent=2, sort_keys=True) + "\n")

    # Post-generation check through the normal loading path.
    puzzle = load_puzzle(load_manifest(manifest_path), ext_cfg)
    reloaded = parse_formula(spec.concept, puzzle.signature)
    if is_discriminator(puzzle, reloaded) != expected:
        raise GenerationError(
            f"planted concept {spec.concept!r} does not discriminate the "
            "generated puzzle after reloading"
        )
    return manifest_path


# ---------------------------------------------------------------------------
# Model serialization (extract-model round trip)


def model_to_json(model: Model) -> str:
    doc = {
        "image_id": model.image_id,
        "objects": list(model.objects),
        "labels": list(model.labels),
        "truncated": model.truncated,
        "relations": {
            name: sorted([list(t) for t in tuples])
            for name, tuples in model.relations.items()
        },
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def model_from_json(text: str) -> Model:
    doc = json.loads(text)
    return Model(
        objects=tuple(doc["objects"]),
        labels=tuple(doc["labels"]),
        relations={
            name: frozenset(tuple(t) for t in tuples)
            for name, tuples in doc["relations"].items()
        },
        image_id=doc.get("image_id", ""),
        truncated=doc.get("truncated", False),
    )
