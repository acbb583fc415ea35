#!/usr/bin/env python3
"""Build the hand-authored concept fixtures under fixtures/.

Each concept gets one desk-scale puzzle: detection files realizing the
concept description, a manifest with the expected candidate, and the
target concept as formula text.  Every fixture is verified on build: the
target concept must be a discriminator selecting the expected candidate.

Run from the repository root:  python3 scripts/build_fixtures.py
"""

from __future__ import annotations

import json
import shutil
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "src"))

from vdp.harness import load_manifest, load_puzzle
from vdp.syntax import parse_formula
from vdp.synthesis import is_discriminator

W, H = 640, 480

Box = tuple[str, int, int, int, int]  # label, x, y, w, h


def scene(image_id: str, boxes: list[Box]) -> dict:
    return {
        "schema_version": "1.0",
        "image_id": image_id,
        "width": W,
        "height": H,
        "detections": [
            {"label": label, "score": 0.9, "bbox": [x, y, w, h]}
            for label, x, y, w, h in boxes
        ],
    }


def shift(boxes: list[Box], dx: int, dy: int) -> list[Box]:
    return [(label, x + dx, y + dy, w, h) for label, x, y, w, h in boxes]


def row(label: str, xs: list[int], y: int, size: int = 50) -> list[Box]:
    return [(label, x, y, size, size) for x in xs]


# --- concept scene definitions -------------------------------------------

FIXTURES: dict[str, dict] = {}


def fixture(name, concept, train, candidates, expected):
    FIXTURES[name] = {
        "concept": concept,
        "train": train,
        "candidates": candidates,
        "expected": expected,
    }


# Two cats on one couch (also the introduction's example puzzle).
_two_cats_train0 = [
    ("couch", 100, 250, 400, 150),
    ("cat", 150, 280, 80, 80),
    ("cat", 300, 280, 80, 80),
]
fixture(
    "two_cats_on_couch",
    "(exists x (forall y (exists z (and (within z x) (not (= z y))))))",
    [
        _two_cats_train0,
        [("couch", 60, 260, 480, 140), ("cat", 100, 290, 70, 70), ("cat", 400, 290, 70, 70)],
        [
            ("couch", 120, 240, 380, 160),
            ("cat", 140, 260, 90, 90),
            ("cat", 330, 270, 80, 80),
            ("dog", 30, 40, 70, 70),
        ],
        [("couch", 80, 230, 420, 170), ("cat", 120, 250, 100, 100), ("cat", 280, 260, 90, 90)],
    ],
    [
        [("couch", 100, 250, 400, 150), ("cat", 200, 280, 80, 80)],
        shift(_two_cats_train0, 5, 5),
        [("couch", 100, 250, 400, 150), ("cat", 20, 60, 80, 80)],
        [("couch", 100, 250, 400, 150), ("dog", 200, 280, 80, 80)],
    ],
    expected=1,
)

_all_cats_train0 = [("sofa", 100, 250, 400, 150), ("cat", 150, 280, 80, 80)]
fixture(
    "all_cats_on_sofas",
    "(forall x (exists y (implies (labelOf x cat) (within x y))))",
    [
        _all_cats_train0,
        [
            ("sofa", 50, 250, 250, 150),
            ("sofa", 350, 250, 250, 140),
            ("cat", 100, 280, 70, 70),
            ("cat", 400, 280, 70, 70),
        ],
        [
            ("sofa", 100, 240, 400, 160),
            ("cat", 130, 270, 80, 80),
            ("cat", 380, 270, 80, 80),
            ("dog", 30, 40, 70, 70),
        ],
        [("sofa", 120, 260, 380, 140), ("cat", 200, 290, 70, 70)],
    ],
    [
        [("sofa", 100, 250, 400, 150), ("cat", 30, 60, 80, 80)],
        shift(_all_cats_train0, 5, 5),
        [("sofa", 100, 250, 400, 150), ("cat", 150, 280, 80, 80), ("cat", 30, 60, 80, 80)],
        [("sofa", 100, 250, 400, 150), ("dog", 150, 280, 80, 80), ("cat", 30, 60, 80, 80)],
    ],
    expected=1,
)

_all_dogs_train0 = [("sofa", 100, 250, 400, 150), ("dog", 150, 280, 80, 80)]
fixture(
    "all_dogs_on_sofas",
    "(forall x (exists y (implies (labelOf x dog) (within x y))))",
    [
        _all_dogs_train0,
        [
            ("sofa", 60, 250, 240, 150),
            ("sofa", 340, 250, 260, 140),
            ("dog", 110, 280, 70, 70),
            ("dog", 390, 280, 70, 70),
        ],
        [
            ("sofa", 110, 240, 390, 160),
            ("dog", 140, 270, 80, 80),
            ("cat", 30, 40, 70, 70),
        ],
        [("sofa", 120, 260, 380, 140), ("dog", 200, 290, 70, 70)],
    ],
    [
        [("sofa", 100, 250, 400, 150), ("dog", 30, 60, 80, 80)],
        [("sofa", 100, 250, 400, 150), ("dog", 150, 280, 80, 80), ("dog", 30, 60, 80, 80)],
        shift(_all_dogs_train0, 5, 5),
        [("sofa", 100, 250, 400, 150), ("cat", 150, 280, 80, 80), ("dog", 30, 60, 80, 80)],
    ],
    expected=2,
)

_kitchen_train0 = [("refrigerator", 50, 100, 120, 300), ("sink", 300, 250, 100, 60)]
fixture(
    "kitchen",
    "(exists x (exists y (and (labelOf x refrigerator) (labelOf y sink))))",
    [
        _kitchen_train0,
        [
            ("refrigerator", 400, 90, 130, 310),
            ("sink", 100, 260, 110, 60),
            ("chair", 250, 300, 80, 120),
        ],
        [("refrigerator", 80, 120, 110, 280), ("sink", 350, 240, 100, 70)],
        [("refrigerator", 300, 100, 120, 300), ("sink", 100, 250, 100, 60)],
    ],
    [
        [("sink", 300, 250, 100, 60), ("chair", 100, 300, 80, 120)],
        [("refrigerator", 50, 100, 120, 300), ("chair", 300, 300, 80, 120)],
        shift(_kitchen_train0, 5, 5),
        [("chair", 200, 300, 80, 120)],
    ],
    expected=2,
)

_ties_train0 = [("person", 100, 100, 100, 250), ("tie", 400, 150, 40, 80)]
fixture(
    "people_and_ties",
    "(exists x (exists y (and (labelOf x person) (labelOf y tie))))",
    [
        _ties_train0,
        [("person", 350, 110, 100, 250), ("tie", 100, 140, 40, 80), ("car", 150, 320, 180, 120)],
        [("person", 200, 90, 100, 260), ("tie", 60, 160, 40, 80)],
        [("person", 80, 120, 100, 240), ("tie", 450, 140, 40, 80), ("car", 230, 320, 180, 120)],
    ],
    [
        [("person", 100, 100, 100, 250), ("car", 400, 320, 180, 120)],
        [("tie", 140, 150, 40, 80), ("car", 400, 320, 180, 120)],
        shift(_ties_train0, 5, 5),
        [("car", 250, 320, 180, 120)],
    ],
    expected=2,
)

# People wearing ties: candidates share the same layout and label counts;
# only the containment structure differs, so the worn tie is the only
# separating pattern.
_wear_layout_person = ("person", 100, 150, 120, 250)
_wear_layout_car = ("car", 400, 300, 180, 120)
fixture(
    "people_wearing_ties",
    "(exists x (exists y (and (labelOf x tie) (labelOf y person) (within x y))))",
    [
        [
            ("person", 100, 150, 120, 250),
            ("tie", 140, 200, 30, 70),
            ("car", 400, 300, 180, 120),
            ("bottle", 450, 330, 30, 60),
        ],
        [
            ("person", 380, 140, 120, 260),
            ("tie", 420, 190, 30, 70),
            ("car", 60, 300, 180, 120),
            ("bottle", 110, 330, 30, 60),
        ],
        [
            ("person", 250, 100, 120, 250),
            ("tie", 290, 150, 30, 70),
            ("car", 60, 60, 150, 100),
            ("bottle", 100, 80, 30, 60),
        ],
        [
            ("person", 80, 80, 110, 240),
            ("tie", 110, 130, 30, 60),
            ("car", 400, 100, 170, 110),
            ("bottle", 440, 130, 30, 60),
        ],
    ],
    [
        [
            _wear_layout_person,
            ("tie", 130, 60, 40, 80),
            _wear_layout_car,
            ("bottle", 450, 330, 30, 60),
        ],
        [
            _wear_layout_person,
            ("tie", 140, 200, 30, 70),
            _wear_layout_car,
            ("bottle", 450, 330, 30, 60),
        ],
        [
            _wear_layout_person,
            ("tie", 450, 330, 30, 70),
            _wear_layout_car,
            ("bottle", 140, 200, 30, 60),
        ],
        [
            _wear_layout_person,
            ("tie", 130, 60, 40, 80),
            _wear_layout_car,
            ("bottle", 480, 340, 30, 60),
        ],
    ],
    expected=1,
)

_cat_tv_train0 = [("tvmonitor", 200, 100, 240, 180), ("cat", 280, 150, 80, 80)]
fixture(
    "cat_on_tv",
    "(exists x (exists y (and (labelOf x cat) (within x y))))",
    [
        _cat_tv_train0,
        [("tvmonitor", 100, 120, 250, 190), ("cat", 150, 170, 90, 90), ("chair", 450, 300, 100, 140)],
        [("tvmonitor", 300, 90, 230, 170), ("cat", 370, 130, 80, 80)],
        [("tvmonitor", 150, 110, 260, 180), ("cat", 220, 160, 90, 90)],
    ],
    [
        [("tvmonitor", 200, 100, 240, 180), ("cat", 30, 330, 80, 80)],
        [("tvmonitor", 200, 100, 240, 180), ("chair", 450, 300, 100, 140)],
        shift(_cat_tv_train0, 5, 5),
        [("cat", 250, 200, 80, 80)],
    ],
    expected=2,
)

_tv_on_train0 = [("tvmonitor", 200, 100, 240, 180), ("person", 270, 140, 80, 110)]
fixture(
    "tv_is_on",
    "(exists x (exists y (within y x)))",
    [
        _tv_on_train0,
        [("tvmonitor", 120, 110, 250, 190), ("person", 180, 150, 90, 120)],
        [("tvmonitor", 280, 90, 240, 180), ("person", 340, 130, 80, 110), ("chair", 60, 300, 100, 140)],
        [("tvmonitor", 160, 120, 260, 180), ("person", 230, 160, 90, 110)],
    ],
    [
        shift(_tv_on_train0, 5, 5),
        [("tvmonitor", 200, 100, 240, 180), ("person", 30, 330, 80, 110)],
        [("tvmonitor", 200, 100, 240, 180), ("chair", 450, 320, 100, 140)],
        [("chair", 150, 300, 100, 140), ("person", 400, 280, 80, 110)],
    ],
    expected=0,
)

_bench_train0 = [("bench", 100, 250, 400, 120), ("person", 150, 270, 200, 80)]
fixture(
    "sleeping_on_bench",
    "(exists x (labelOf x person))",
    [
        _bench_train0,
        [("bench", 60, 260, 420, 110), ("person", 120, 280, 210, 70)],
        [("bench", 130, 240, 390, 130), ("person", 180, 260, 190, 80), ("dog", 30, 60, 70, 70)],
        [("bench", 90, 255, 410, 115), ("person", 140, 275, 200, 75)],
    ],
    [
        [("bench", 100, 250, 400, 120), ("dog", 150, 270, 90, 80)],
        [("bench", 100, 250, 400, 120)],
        shift(_bench_train0, 5, 5),
        [("bench", 100, 250, 400, 120), ("dog", 30, 60, 80, 80)],
    ],
    expected=2,
)

_umbrella_train0 = [("person", 100, 100, 100, 250), ("umbrella", 80, 40, 150, 60)]
fixture(
    "umbrella_weather",
    "(exists x (labelOf x umbrella))",
    [
        _umbrella_train0,
        [
            ("person", 350, 110, 100, 250),
            ("umbrella", 330, 50, 150, 60),
            ("car", 60, 320, 180, 120),
        ],
        [("person", 200, 90, 100, 260), ("umbrella", 180, 30, 150, 60)],
        [
            ("person", 80, 120, 100, 240),
            ("umbrella", 60, 60, 150, 60),
            ("car", 380, 320, 180, 120),
        ],
    ],
    [
        [("person", 100, 100, 100, 250), ("car", 400, 320, 180, 120)],
        shift(_umbrella_train0, 5, 5),
        [("person", 300, 100, 100, 250), ("car", 60, 320, 180, 120)],
        [("person", 250, 100, 100, 250)],
    ],
    expected=1,
)

_meter_train0 = [("parking_meter", 80, 150, 50, 180), ("car", 250, 250, 220, 130)]
fixture(
    "parking_meter_in_sight",
    "(exists x (labelOf x parking_meter))",
    [
        _meter_train0,
        [
            ("parking_meter", 500, 140, 50, 180),
            ("car", 120, 260, 220, 130),
            ("person", 380, 180, 80, 200),
        ],
        [("parking_meter", 300, 160, 50, 170), ("car", 60, 240, 220, 130)],
        [("parking_meter", 150, 150, 50, 180), ("person", 400, 180, 80, 200)],
    ],
    [
        [("car", 250, 250, 220, 130), ("person", 80, 180, 80, 200)],
        [("car", 180, 250, 220, 130)],
        shift(_meter_train0, 5, 5),
        [("person", 280, 180, 80, 200)],
    ],
    expected=2,
)

_ball_train0 = [("person", 100, 100, 100, 250), ("sports_ball", 400, 300, 60, 60)]
fixture(
    "people_playing_ball",
    "(exists x (exists y (and (labelOf x person) (labelOf y sports_ball))))",
    [
        _ball_train0,
        [("person", 350, 110, 100, 250), ("sports_ball", 120, 310, 60, 60)],
        [
            ("person", 200, 90, 100, 260),
            ("sports_ball", 450, 280, 60, 60),
            ("dog", 60, 330, 80, 70),
        ],
        [("person", 80, 120, 100, 240), ("sports_ball", 300, 320, 60, 60)],
    ],
    [
        [("person", 100, 100, 100, 250), ("dog", 400, 300, 90, 80)],
        [("sports_ball", 300, 280, 60, 60)],
        shift(_ball_train0, 5, 5),
        [("dog", 250, 300, 90, 80)],
    ],
    expected=2,
)

_herd_train0 = [("dog", 100, 200, 90, 80), ("sheep", 300, 180, 110, 90), ("sheep", 450, 190, 110, 90)]
fixture(
    "dog_herding_sheep",
    "(exists x (exists y (and (labelOf x dog) (labelOf y sheep))))",
    [
        _herd_train0,
        [("dog", 450, 210, 90, 80), ("sheep", 100, 180, 110, 90), ("sheep", 250, 190, 110, 90)],
        [("dog", 280, 220, 90, 80), ("sheep", 80, 170, 110, 90), ("person", 500, 120, 80, 200)],
        [("dog", 150, 210, 90, 80), ("sheep", 400, 180, 110, 90)],
    ],
    [
        [("sheep", 200, 180, 110, 90), ("person", 450, 120, 80, 200)],
        [("dog", 150, 200, 90, 80), ("person", 400, 120, 80, 200)],
        shift(_herd_train0, 5, 5),
        [("person", 280, 120, 80, 200)],
    ],
    expected=2,
)

_desk_train0 = [
    ("tvmonitor", 200, 100, 220, 160),
    ("keyboard", 200, 300, 220, 60),
    ("mouse", 460, 310, 50, 40),
]
fixture(
    "desktop_computer",
    "(exists x (exists y (and (labelOf x tvmonitor) (labelOf y keyboard))))",
    [
        _desk_train0,
        [("tvmonitor", 120, 110, 220, 160), ("keyboard", 130, 310, 210, 60), ("mouse", 380, 320, 50, 40)],
        [("tvmonitor", 260, 90, 230, 160), ("keyboard", 250, 290, 220, 60)],
        [("tvmonitor", 180, 120, 210, 150), ("keyboard", 170, 300, 220, 60), ("mouse", 430, 315, 50, 40)],
    ],
    [
        [("keyboard", 200, 300, 220, 60), ("mouse", 460, 310, 50, 40)],
        [("tvmonitor", 220, 110, 220, 160)],
        shift(_desk_train0, 5, 5),
        [("mouse", 300, 310, 50, 40)],
    ],
    expected=2,
)

_bus_train0 = [
    ("bus", 100, 100, 400, 250),
    ("person", 180, 160, 60, 100),
    ("person", 320, 160, 60, 100),
]
fixture(
    "bus_with_people",
    "(exists x (exists y (and (labelOf x person) (within x y))))",
    [
        _bus_train0,
        [("bus", 60, 110, 420, 240), ("person", 140, 170, 60, 100)],
        [("bus", 130, 90, 390, 250), ("person", 200, 150, 60, 100), ("car", 30, 380, 150, 80)],
        [("bus", 90, 105, 410, 245), ("person", 160, 165, 60, 100), ("person", 300, 165, 60, 100)],
    ],
    [
        [("bus", 100, 100, 400, 250), ("person", 20, 370, 60, 100)],
        [("bus", 100, 100, 400, 250), ("car", 30, 380, 150, 80)],
        shift(_bus_train0, 5, 5),
        [("person", 200, 200, 60, 100), ("car", 400, 380, 150, 80)],
    ],
    expected=2,
)

_diag_train0 = row("orange", [60, 180, 300, 420], 0, 50)
_diag_train0 = [("orange", x, y, 50, 50) for (x, y) in [(60, 60), (180, 140), (300, 220), (420, 300)]]
fixture(
    "oranges_diagonal",
    "(forall x (forall y (implies (toRight y x) (below y x))))",
    [
        _diag_train0,
        [("orange", x, y, 50, 50) for (x, y) in [(80, 40), (220, 160), (360, 280)]],
        [("orange", x, y, 50, 50) for (x, y) in [(40, 80), (160, 150), (280, 230), (400, 310), (520, 390)]],
        [("orange", x, y, 50, 50) for (x, y) in [(100, 100), (260, 210), (420, 330)]],
    ],
    [
        [("orange", x, y, 50, 50) for (x, y) in [(60, 200), (180, 200), (300, 200), (420, 200)]],
        shift(_diag_train0, 5, 5),
        [("orange", x, y, 50, 50) for (x, y) in [(60, 300), (180, 220), (300, 140), (420, 60)]],
        [("orange", x, y, 50, 50) for (x, y) in [(100, 100), (300, 100), (200, 250), (400, 260)]],
    ],
    expected=1,
)

_level_train0 = [("orange", x, 200, 50, 50) for x in [60, 180, 300, 420]]
fixture(
    "oranges_level",
    "(forall x (forall y (not (below x y))))",
    [
        _level_train0,
        [("orange", x, 260, 50, 50) for x in [100, 250, 400]],
        [("orange", x, 150, 50, 50) for x in [40, 160, 280, 400, 520]],
        [("orange", x, 220, 50, 50) for x in [120, 300, 480]],
    ],
    [
        shift(_level_train0, 5, 0),
        [("orange", x, y, 50, 50) for (x, y) in [(60, 60), (180, 140), (300, 220), (420, 300)]],
        [("orange", 200, y, 50, 50) for y in [60, 160, 260, 360]],
        [("orange", x, y, 50, 50) for (x, y) in [(60, 200), (180, 200), (300, 120), (420, 200)]],
    ],
    expected=0,
)

_top_train0 = [
    ("orange", 240, 60, 50, 50),
    ("orange", 120, 200, 50, 50),
    ("orange", 360, 200, 50, 50),
    ("orange", 240, 320, 50, 50),
]
fixture(
    "topmost_orange",
    "(exists x (forall y (implies (not (= x y)) (above x y))))",
    [
        _top_train0,
        [("orange", x, y, 50, 50) for (x, y) in [(300, 80), (150, 240), (450, 260)]],
        [("orange", x, y, 50, 50) for (x, y) in [(180, 50), (80, 180), (280, 200), (400, 180), (520, 300)]],
        [("orange", x, y, 50, 50) for (x, y) in [(350, 70), (200, 220), (500, 230)]],
    ],
    [
        [("orange", x, 200, 50, 50) for x in [60, 180, 300, 420]],
        [("orange", x, y, 50, 50) for (x, y) in [(150, 100), (400, 100), (150, 300), (400, 300)]],
        shift(_top_train0, 5, 5),
        [("orange", x, y, 50, 50) for (x, y) in [(100, 100), (100, 250), (400, 100), (400, 250)]],
    ],
    expected=2,
)

_aba_train0 = [
    ("bottle", 100, 200, 50, 100),
    ("cup", 250, 220, 50, 80),
    ("bottle", 400, 200, 50, 100),
]
fixture(
    "aba_arrangement",
    "(exists x (exists y (exists z (and (same x z) (toLeft x y) (toRight z y)))))",
    [
        _aba_train0,
        [
            ("banana", 80, 220, 60, 60),
            ("cup", 240, 220, 50, 80),
            ("banana", 420, 220, 60, 60),
        ],
        [
            ("cup", 120, 220, 50, 80),
            ("bottle", 270, 200, 50, 100),
            ("cup", 430, 220, 50, 80),
        ],
        [
            ("bottle", 90, 200, 50, 100),
            ("banana", 260, 230, 60, 60),
            ("bottle", 410, 200, 50, 100),
        ],
    ],
    [
        [
            ("bottle", 100, 200, 50, 100),
            ("bottle", 250, 200, 50, 100),
            ("cup", 400, 220, 50, 80),
        ],
        [
            ("bottle", 100, 200, 50, 100),
            ("cup", 250, 220, 50, 80),
            ("banana", 400, 230, 60, 60),
        ],
        shift(_aba_train0, 5, 5),
        [
            ("cup", 100, 220, 50, 80),
            ("banana", 250, 230, 60, 60),
            ("banana", 400, 230, 60, 60),
        ],
    ],
    expected=2,
)


# --- build ----------------------------------------------------------------


def write_fixture(base: Path, name: str, spec: dict) -> None:
    out = base / f"{name}__p1"
    out.mkdir(parents=True)
    train_paths, cand_paths = [], []
    for i, boxes in enumerate(spec["train"]):
        p = out / f"train_{i}.json"
        p.write_text(json.dumps(scene(f"{name}/train_{i}", boxes), indent=2) + "\n")
        train_paths.append(p.name)
    for i, boxes in enumerate(spec["candidates"]):
        p = out / f"candidate_{i}.json"
        p.write_text(json.dumps(scene(f"{name}/candidate_{i}", boxes), indent=2) + "\n")
        cand_paths.append(p.name)
    manifest = {
        "schema_version": "1.0",
        "name": f"{name}__p1",
        "train": train_paths,
        "candidates": cand_paths,
        "expected_candidate": spec["expected"],
        "target_concept": spec["concept"],
    }
    (out / "puzzle.json").write_text(json.dumps(manifest, indent=2) + "\n")


def verify(base: Path) -> bool:
    ok = True
    for mpath in sorted(base.glob("*/puzzle.json")):
        manifest = load_manifest(mpath)
        puzzle = load_puzzle(manifest)
        concept = parse_formula(manifest.target_concept, puzzle.signature)
        got = is_discriminator(puzzle, concept)
        status = "ok" if got == manifest.expected_candidate else "MISMATCH"
        if got != manifest.expected_candidate:
            ok = False
        print(f"{manifest.name:<28} concept -> {got} expected {manifest.expected_candidate} [{status}]")
    return ok


def main() -> int:
    table_dir = ROOT / "fixtures" / "concepts"
    if table_dir.exists():
        shutil.rmtree(table_dir)
    for name, spec in FIXTURES.items():
        write_fixture(table_dir, name, spec)
    # The introduction's puzzle doubles as a standalone fixture.
    fig_dir = ROOT / "fixtures" / "intro"
    if fig_dir.exists():
        shutil.rmtree(fig_dir)
    fig_dir.mkdir(parents=True)
    spec = FIXTURES["two_cats_on_couch"]
    write_fixture(fig_dir, "two_cats_on_couch", spec)
    ok = verify(table_dir) and verify(fig_dir)
    print("all fixtures verified" if ok else "FIXTURE VERIFICATION FAILED")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
