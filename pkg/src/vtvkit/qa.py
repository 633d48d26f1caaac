"""Template-based question/answer generation over annotated tactile videos.

Generation runs in three steps per pair: *selection* draws a candidate tuple
of videos, *filtration* rejects tuples whose answer would be ambiguous (ties
on the queried attribute), and *formulation* fills a phrasing template and
records the structured ground truth.
"""
from __future__ import annotations

import csv
import enum
import hashlib
import io
import itertools
import json
import random
from collections import Counter, OrderedDict
from dataclasses import dataclass, field

from .core import ATTRIBUTES, Manifest, SensorKind, TactileAnnotation
from .errors import InfeasibleMix, InsufficientHeldOutObjects, MissingAnnotation

SCHEMA_VERSION = 1
SPECIAL_TOKENS = ("<video_start>", "<video>", "<video_end>")
MAX_DRAWS = 10_000


class TaskKind(str, enum.Enum):
    FEATURE_ASSESSMENT_SINGLE = "fas"
    FEATURE_ASSESSMENT_COMBINED = "fac"
    SURFACE_FEATURE_DISTINCTION = "sfd"
    SURFACE_OPTIMALITY_IDENTIFICATION = "soi"
    OBJECT_SENSATION_CORRELATION = "osc"
    TEXTURE_OPTIMAL_SELECTION = "tos"
    TACTILE_SCENARIO_ANALYSIS = "tsa"


EVALUATION_ONLY = frozenset({TaskKind.TACTILE_SCENARIO_ANALYSIS})

DEFAULT_TRAIN_MIX = {
    TaskKind.FEATURE_ASSESSMENT_SINGLE: 0.25,
    TaskKind.FEATURE_ASSESSMENT_COMBINED: 0.15,
    TaskKind.SURFACE_FEATURE_DISTINCTION: 0.20,
    TaskKind.SURFACE_OPTIMALITY_IDENTIFICATION: 0.15,
    TaskKind.OBJECT_SENSATION_CORRELATION: 0.10,
    TaskKind.TEXTURE_OPTIMAL_SELECTION: 0.15,
}

DEFAULT_TEST_MIX = {
    TaskKind.FEATURE_ASSESSMENT_SINGLE: 0.20,
    TaskKind.FEATURE_ASSESSMENT_COMBINED: 0.10,
    TaskKind.SURFACE_FEATURE_DISTINCTION: 0.20,
    TaskKind.SURFACE_OPTIMALITY_IDENTIFICATION: 0.15,
    TaskKind.OBJECT_SENSATION_CORRELATION: 0.10,
    TaskKind.TEXTURE_OPTIMAL_SELECTION: 0.10,
    TaskKind.TACTILE_SCENARIO_ANALYSIS: 0.15,
}

# Level proportions reported for the collected objects.
REFERENCE_DISTRIBUTION = {
    "hardness": {"highly_deformable": 0.28, "moderately_deformable": 0.33, "extremely_hard": 0.39},
    "protrusion": {"absent": 0.41, "moderate": 0.26, "strong": 0.33},
    "elasticity": {"none": 0.42, "moderate": 0.30, "strong": 0.28},
    "friction": {"slight": 0.32, "moderate": 0.25, "strong": 0.43},
}

TEMPLATES = {
    TaskKind.FEATURE_ASSESSMENT_SINGLE: (
        "{videos} How would you rate the {attribute} of this object?",
        "{videos} Based on the visuo-tactile video, what is the {attribute} level of the touched surface?",
        "{videos} Describe the {attribute} you perceive in this tactile recording.",
    ),
    TaskKind.FEATURE_ASSESSMENT_COMBINED: (
        "{videos} Assess the hardness, protrusion, elasticity and friction of this object.",
        "{videos} Describe all four tactile attributes of the surface shown in the video.",
        "{videos} What are the hardness, protrusion, elasticity and friction levels of this object?",
    ),
    TaskKind.SURFACE_FEATURE_DISTINCTION: (
        "{videos} Which of the two objects has {comparator} {attribute}?",
        "{videos} Comparing the two surfaces, which one shows {comparator} {attribute}?",
        "{videos} Between the first and the second object, which exhibits {comparator} {attribute}?",
    ),
    TaskKind.SURFACE_OPTIMALITY_IDENTIFICATION: (
        "{videos} Which of these objects has the {comparator} {attribute}?",
        "{videos} Among the surfaces shown, identify the one with the {comparator} {attribute}.",
        "{videos} Select the object that exhibits the {comparator} {attribute}.",
    ),
    TaskKind.OBJECT_SENSATION_CORRELATION: (
        "{videos} Which video was recorded on an object that is {profile}?",
        "{videos} One of these objects is {profile}. Which one is it?",
        "{videos} Identify the recording that matches an object described as {profile}.",
    ),
    TaskKind.TEXTURE_OPTIMAL_SELECTION: (
        "{videos} Which of these surfaces {purpose}?",
        "{videos} If you had to pick one surface that {purpose}, which would you choose?",
        "{videos} Select the texture that {purpose}.",
    ),
    TaskKind.TACTILE_SCENARIO_ANALYSIS: (
        "{videos} {scenario} Answer yes or no.",
        "{videos} Consider the following situation. {scenario} Answer yes or no.",
        "{videos} {scenario} Please reply with yes or no.",
    ),
}

# purpose phrase -> (attribute, comparator)
PURPOSES = (
    ("would give the most secure grip", "friction", "most"),
    ("would be easiest to slide an object across", "friction", "least"),
    ("would be the softest to squeeze", "hardness", "least"),
    ("would make the most rigid support", "hardness", "most"),
    ("would spring back the most after pressing", "elasticity", "most"),
    ("would feel the smoothest to the touch", "protrusion", "least"),
    ("has the most pronounced bumps", "protrusion", "most"),
)

# scenario text -> (attribute, levels that make the answer "yes")
SCENARIOS = (
    ("Would this surface keep a phone from sliding off a tilted desk?", "friction", {"strong"}),
    ("Could a robot gripper squeeze this object safely without it yielding?", "hardness", {"extremely_hard"}),
    ("Would this material make a good cushion for a fragile item?", "hardness", {"highly_deformable", "moderately_deformable"}),
    ("Would a ball bounce noticeably off this surface?", "elasticity", {"strong"}),
    ("Is this surface smooth enough to write on comfortably?", "protrusion", {"absent"}),
    ("Would a sliding drawer move easily against this surface?", "friction", {"slight"}),
)

_ORDINAL_WORDS = ("first", "second", "third", "fourth")


def derive_seed(seed: int, *keys) -> int:
    """Deterministic sub-seed: first 8 bytes (little-endian) of sha256("seed:key1:key2...")."""
    text = ":".join([str(seed), *map(str, keys)])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "little")


# ----------------------------------------------------------------------------
# annotation table


@dataclass(frozen=True)
class TableRow:
    object_id: str
    region_id: int
    sensor: SensorKind
    annotation: TactileAnnotation
    videos: tuple = ()  # (interaction, path) pairs

    @property
    def key(self) -> tuple:
        return (self.object_id, self.region_id, self.sensor.value)

    @property
    def ref(self) -> str:
        return f"{self.object_id}:{self.region_id}:{self.sensor.value}"


@dataclass
class AnnotationTable:
    rows: list
    warnings: list = field(default_factory=list)

    def __len__(self):
        return len(self.rows)

    def refs(self) -> set:
        return {r.ref for r in self.rows}

    def by_ref(self) -> dict:
        return {r.ref: r for r in self.rows}

    def objects(self) -> OrderedDict:
        out = OrderedDict()
        for r in self.rows:
            out.setdefault(r.object_id, r.annotation)
        return out

    def subset(self, object_ids) -> "AnnotationTable":
        keep = set(object_ids)
        return AnnotationTable([r for r in self.rows if r.object_id in keep])

    @classmethod
    def from_annotations(cls, annotations, regions: int = 5, sensors=(SensorKind.GELSIGHT_MINI,)):
        rows = [TableRow(a.object_id, region, SensorKind(s), a)
                for a in annotations for s in sensors for region in range(regions)]
        return cls(rows)


def load_annotations(manifest: Manifest, annotations) -> AnnotationTable:
    """Join manifest entries with annotations, keyed by (object, region, sensor).

    ``annotations`` is a sequence of ``TactileAnnotation``. A repeated object
    keeps its last annotation and adds a warning.
    """
    by_object = {}
    warnings = []
    for a in annotations:
        if a.object_id in by_object:
            warnings.append(f"duplicate annotation for {a.object_id!r}; keeping the last one")
        by_object[a.object_id] = a
    rows = OrderedDict()
    for e in manifest.entries:
        ann = by_object.get(e.annotation_ref)
        if ann is None:
            raise MissingAnnotation(f"object {e.annotation_ref!r} has no annotation")
        key = (e.object_id, e.region_id, e.sensor.value)
        videos = rows[key].videos if key in rows else ()
        videos = videos + ((e.interaction.value, str(manifest.resolve(e))),)
        rows[key] = TableRow(e.object_id, e.region_id, e.sensor, ann, videos)
    return AnnotationTable(list(rows.values()), warnings)


# ----------------------------------------------------------------------------
# pairs


@dataclass(frozen=True)
class QAPair:
    id: str
    task: TaskKind
    video_refs: tuple
    question: str
    answer: str
    ground_truth: dict
    comparator: str | None = None
    attribute: str | None = None

    def to_dict(self) -> dict:
        return {
            "record": "pair",
            "id": self.id,
            "task": self.task.value,
            "video_refs": list(self.video_refs),
            "question": self.question,
            "answer": self.answer,
            "ground_truth": self.ground_truth,
            "comparator": self.comparator,
            "attribute": self.attribute,
        }

    @classmethod
    def from_dict(cls, d) -> "QAPair":
        return cls(d["id"], TaskKind(d["task"]), tuple(d["video_refs"]), d["question"], d["answer"],
                   d["ground_truth"], d.get("comparator"), d.get("attribute"))


def parse_mix(text) -> dict:
    """``"fas=0.5,sfd=0.5"`` -> ``{TaskKind: proportion}``; dicts pass through."""
    if isinstance(text, dict):
        return {TaskKind(k): float(v) for k, v in text.items()}
    mix = {}
    for part in str(text).split(","):
        if not part.strip():
            continue
        name, _, value = part.partition("=")
        mix[TaskKind(name.strip().lower())] = float(value)
    return mix


def _apportion(mix: dict, count: int) -> dict:
    """Largest-remainder split of ``count`` across the mix (ties in enum order)."""
    kinds = [k for k in TaskKind if mix.get(k, 0) > 0]
    raw = {k: mix[k] * count for k in kinds}
    out = {k: int(raw[k]) for k in kinds}
    rest = count - sum(out.values())
    for k in sorted(kinds, key=lambda k: -(raw[k] - out[k]))[:rest]:
        out[k] += 1
    return out


def _level(row, attribute) -> int:
    return row.annotation.level(attribute).ordinal


def _profile_text(ann: TactileAnnotation) -> str:
    return (f"{ann.hardness.label}, with {ann.protrusion.label} protrusion, "
            f"{ann.elasticity.label} elasticity and {ann.friction.label} friction")


def _videos_text(n: int) -> str:
    return " ".join(["<video>"] * n)


class _Generator:
    def __init__(self, table: AnnotationTable, attributes, rng: random.Random):
        self.rows = table.rows
        self.rng = rng
        self.attributes = list(attributes)
        self.by_level = {a: [[r for r in self.rows if _level(r, a) == lv] for lv in range(3)]
                         for a in ATTRIBUTES}

    # feasibility ------------------------------------------------------------
    def _extreme_feasible(self, attribute, comparator, n=3) -> bool:
        counts = [len(g) for g in self.by_level[attribute]]
        for lv in range(3):
            others = sum(counts[:lv]) if comparator == "most" else sum(counts[lv + 1:])
            if counts[lv] >= 1 and others >= n - 1:
                return True
        return False

    def options(self, task):
        """Feasible (attribute, comparator) choices for ``task``; empty means infeasible."""
        if not self.rows:
            return []
        if task in (TaskKind.FEATURE_ASSESSMENT_SINGLE,):
            return [(a, None) for a in self.attributes]
        if task in (TaskKind.FEATURE_ASSESSMENT_COMBINED, TaskKind.TACTILE_SCENARIO_ANALYSIS):
            return [(None, None)]
        if task is TaskKind.SURFACE_FEATURE_DISTINCTION:
            return [(a, c) for a in self.attributes for c in ("more", "less")
                    if sum(1 for g in self.by_level[a] if g) >= 2]
        if task is TaskKind.SURFACE_OPTIMALITY_IDENTIFICATION:
            return [(a, c) for a in self.attributes for c in ("most", "least")
                    if self._extreme_feasible(a, c)]
        if task is TaskKind.TEXTURE_OPTIMAL_SELECTION:
            return [(i, c) for i, (_, a, c) in enumerate(PURPOSES)
                    if a in self.attributes and self._extreme_feasible(a, c)]
        if task is TaskKind.OBJECT_SENSATION_CORRELATION:
            profiles = Counter(r.annotation.ordinals() for r in self.rows)
            ok = any(len(self.rows) - n >= 2 for n in profiles.values()) and len(profiles) >= 2
            return [(None, None)] if ok else []
        raise ValueError(task)

    # selection + filtration ---------------------------------------------------
    def _draw(self, n, accept):
        for _ in range(MAX_DRAWS):
            rows = self.rng.sample(self.rows, n)
            result = accept(rows)
            if result is not None:
                return rows, result
        raise InfeasibleMix("no admissible tuple found after filtration")

    @staticmethod
    def _unique_extreme(rows, attribute, comparator):
        levels = [_level(r, attribute) for r in rows]
        target = max(levels) if comparator in ("most", "more") else min(levels)
        hits = [i for i, lv in enumerate(levels) if lv == target]
        return hits[0] if len(hits) == 1 else None

    # formulation ------------------------------------------------------------
    def make(self, task, option):
        rng = self.rng
        template = rng.choice(TEMPLATES[task])
        attribute, comparator = option

        if task is TaskKind.FEATURE_ASSESSMENT_SINGLE:
            row = rng.choice(self.rows)
            level = row.annotation.level(attribute)
            q = template.format(videos=_videos_text(1), attribute=attribute)
            a = f"The {attribute} of this object is {level.label}."
            return [row], q, a, {"attribute": attribute, "level": level.value}, None, attribute

        if task is TaskKind.FEATURE_ASSESSMENT_COMBINED:
            row = rng.choice(self.rows)
            ann = row.annotation
            gt = {a: ann.level(a).value for a in ATTRIBUTES}
            q = template.format(videos=_videos_text(1))
            a = "; ".join(f"{k}: {ann.level(k).label}" for k in ATTRIBUTES) + "."
            return [row], q, a, gt, None, None

        if task is TaskKind.SURFACE_FEATURE_DISTINCTION:
            rows, sel = self._draw(2, lambda rs: self._unique_extreme(rs, attribute, comparator))
            q = template.format(videos=_videos_text(2), comparator=comparator, attribute=attribute)
            a = f"The {_ORDINAL_WORDS[sel]} object has {comparator} {attribute}."
            return rows, q, a, {"selected": sel}, comparator, attribute

        if task in (TaskKind.SURFACE_OPTIMALITY_IDENTIFICATION, TaskKind.TEXTURE_OPTIMAL_SELECTION):
            if task is TaskKind.TEXTURE_OPTIMAL_SELECTION:
                purpose, attribute, comparator = PURPOSES[attribute]
            n = rng.choice((3, 4))
            if not self._extreme_feasible(attribute, comparator, n):
                n = 3
            rows, sel = self._draw(n, lambda rs: self._unique_extreme(rs, attribute, comparator))
            if task is TaskKind.TEXTURE_OPTIMAL_SELECTION:
                q = template.format(videos=_videos_text(n), purpose=purpose)
                a = f"The {_ORDINAL_WORDS[sel]} surface {purpose}."
            else:
                q = template.format(videos=_videos_text(n), comparator=comparator, attribute=attribute)
                a = f"The {_ORDINAL_WORDS[sel]} object has the {comparator} {attribute}."
            return rows, q, a, {"selected": sel}, comparator, attribute

        if task is TaskKind.OBJECT_SENSATION_CORRELATION:
            def accept(rs):
                target = rs[0].annotation.ordinals()
                return 0 if all(r.annotation.ordinals() != target for r in rs[1:]) else None
            rows, _ = self._draw(3, accept)
            target = rows[0]
            rng.shuffle(rows)
            sel = next(i for i, r in enumerate(rows) if r is target)
            q = template.format(videos=_videos_text(3), profile=_profile_text(target.annotation))
            a = f"The {_ORDINAL_WORDS[sel]} video matches that description."
            return rows, q, a, {"selected": sel}, None, None

        if task is TaskKind.TACTILE_SCENARIO_ANALYSIS:
            scenario, attribute, yes_levels = rng.choice(SCENARIOS)
            row = rng.choice(self.rows)
            level = row.annotation.level(attribute)
            verdict = "yes" if level.value in yes_levels else "no"
            q = template.format(videos=_videos_text(1), scenario=scenario)
            a = f"{verdict.capitalize()}, because its {attribute} is {level.label}."
            return [row], q, a, {"answer": verdict, "attribute": attribute, "level": level.value}, None, attribute

        raise ValueError(task)


def generate_pairs(table: AnnotationTable, task_mix=None, count: int = 10_000, seed: int = 0,
                   attributes=None, id_prefix: str = "qa") -> list:
    """Generate exactly ``count`` pairs; deterministic in all arguments."""
    mix = parse_mix(task_mix) if task_mix is not None else dict(DEFAULT_TRAIN_MIX)
    if count < 1:
        raise ValueError("count must be >= 1")
    if not table.rows:
        raise ValueError("annotation table is empty")
    total = sum(mix.values())
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"task mix proportions sum to {total}, not 1")
    attributes = list(attributes) if attributes else list(ATTRIBUTES)
    rng = random.Random(seed)
    gen = _Generator(table, attributes, rng)

    quota = _apportion(mix, count)
    options = {}
    for task, n in quota.items():
        options[task] = gen.options(task)
        if n and not options[task]:
            raise InfeasibleMix(f"task {task.value} has no feasible tuples in this table")
    schedule = [task for task, n in quota.items() for _ in range(n)]
    rng.shuffle(schedule)

    pairs = []
    for index, task in enumerate(schedule):
        option = rng.choice(options[task])
        rows, q, a, gt, comparator, attribute = gen.make(task, option)
        refs = tuple(r.ref for r in rows)
        digest = hashlib.sha1(f"{seed}:{index}:{task.value}:{refs}:{q}".encode()).hexdigest()[:16]
        pairs.append(QAPair(f"{id_prefix}-{digest}", task, refs, q, a, gt, comparator, attribute))
    if len({p.id for p in pairs}) != len(pairs):
        raise RuntimeError("pair id collision")
    return pairs


# ----------------------------------------------------------------------------
# serialization


def dataset_header(seed, mix, count, split=None) -> dict:
    mix = parse_mix(mix) if mix is not None else DEFAULT_TRAIN_MIX
    return {
        "record": "header",
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "mix": {k.value: v for k, v in mix.items()},
        "count": count,
        "split": split,
        "special_tokens": list(SPECIAL_TOKENS),
    }


def to_jsonl(pairs, header: dict) -> str:
    lines = [json.dumps(header, sort_keys=True)]
    lines += [json.dumps(p.to_dict(), sort_keys=True) for p in pairs]
    return "\n".join(lines) + "\n"


def read_jsonl(text: str):
    header, pairs = None, []
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        if rec.get("record") == "header":
            header = rec
        else:
            pairs.append(QAPair.from_dict(rec))
    return header, pairs


# ----------------------------------------------------------------------------
# oracle


def expected_ground_truth(pair: QAPair, table: AnnotationTable) -> dict:
    """Recompute a pair's ground truth by brute force over the referenced rows."""
    lookup = table.by_ref()
    rows = [lookup[r] for r in pair.video_refs]
    if pair.task in (TaskKind.SURFACE_FEATURE_DISTINCTION, TaskKind.SURFACE_OPTIMALITY_IDENTIFICATION,
                     TaskKind.TEXTURE_OPTIMAL_SELECTION):
        levels = [_level(r, pair.attribute) for r in rows]
        pick_max = pair.comparator in ("more", "most")
        best = [i for i, lv in enumerate(levels)
                if all((lv > o) if pick_max else (lv < o) for j, o in enumerate(levels) if j != i)]
        return {"selected": best[0]} if len(best) == 1 else {}
    if pair.task is TaskKind.OBJECT_SENSATION_CORRELATION:
        profile = {k: v for k, v in _profiles_from_text(pair.question).items()}
        matches = [i for i, r in enumerate(rows)
                   if all(r.annotation.level(a).label == profile[a] for a in ATTRIBUTES)]
        return {"selected": matches[0]} if len(matches) == 1 else {}
    if pair.task is TaskKind.FEATURE_ASSESSMENT_SINGLE:
        return {"attribute": pair.attribute, "level": rows[0].annotation.level(pair.attribute).value}
    if pair.task is TaskKind.FEATURE_ASSESSMENT_COMBINED:
        return {a: rows[0].annotation.level(a).value for a in ATTRIBUTES}
    scenario = next(s for s in SCENARIOS if s[0] in pair.question)
    level = rows[0].annotation.level(scenario[1])
    return {"answer": "yes" if level.value in scenario[2] else "no", "attribute": scenario[1],
            "level": level.value}


def _profiles_from_text(question: str) -> dict:
    for ann_levels in _all_profiles():
        text = _profile_text(ann_levels)
        if text in question:
            return {a: ann_levels.level(a).label for a in ATTRIBUTES}
    raise ValueError("no attribute profile found in question")


def _all_profiles():
    for combo in itertools.product(*(list(k) for k in ATTRIBUTES.values())):
        yield TactileAnnotation("", *combo)


# ----------------------------------------------------------------------------
# distribution checks


@dataclass(frozen=True)
class AttributeCheck:
    attribute: str
    observed: dict
    expected: dict
    max_deviation: float
    passed: bool


@dataclass(frozen=True)
class DistributionReport:
    checks: tuple
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, attribute) -> AttributeCheck:
        return next(c for c in self.checks if c.attribute == attribute)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["attribute", "level", "observed", "expected", "deviation", "passed"])
        for c in self.checks:
            for level in c.expected:
                obs, exp = c.observed.get(level, 0.0), c.expected[level]
                w.writerow([c.attribute, level, f"{obs:.6f}", f"{exp:.6f}", f"{abs(obs - exp):.6f}", int(c.passed)])
        return buf.getvalue()


def validate_distribution(table, spec=None, tolerance: float = 0.01) -> DistributionReport:
    """Compare per-object level proportions against ``spec`` attribute by attribute.

    ``table`` may be an ``AnnotationTable`` or a sequence of annotations; each
    object is counted once.
    """
    spec = REFERENCE_DISTRIBUTION if spec is None else spec
    for attribute, props in spec.items():
        if abs(sum(props.values()) - 1.0) > 1e-6:
            raise ValueError(f"{attribute} proportions do not sum to 1")
    anns = list(table.objects().values()) if isinstance(table, AnnotationTable) else list(table)
    if not anns:
        raise ValueError("empty annotation table")
    checks = []
    for attribute, expected in spec.items():
        counts = Counter(a.level(attribute).value for a in anns)
        observed = {lv.value: counts.get(lv.value, 0) / len(anns) for lv in ATTRIBUTES[attribute]}
        dev = max(abs(observed.get(k, 0.0) - v) for k, v in expected.items())
        checks.append(AttributeCheck(attribute, observed, dict(expected), dev, dev <= tolerance + 1e-12))
    return DistributionReport(tuple(checks), tolerance)


def synthesize_annotations(n_objects: int, spec=None, seed: int = 0, prefix: str = "obj") -> list:
    """Annotations whose level counts follow ``spec`` as closely as integers allow."""
    spec = REFERENCE_DISTRIBUTION if spec is None else spec
    rng = random.Random(seed)
    columns = {}
    for attribute, kind in ATTRIBUTES.items():
        props = spec[attribute]
        raw = {lv: props.get(lv.value, 0.0) * n_objects for lv in kind}
        counts = {lv: int(raw[lv]) for lv in kind}
        for lv in sorted(kind, key=lambda lv: -(raw[lv] - counts[lv]))[: n_objects - sum(counts.values())]:
            counts[lv] += 1
        col = [lv for lv in kind for _ in range(counts[lv])]
        rng.shuffle(col)
        columns[attribute] = col
    return [TactileAnnotation(f"{prefix}{i:03d}", *(columns[a][i] for a in ATTRIBUTES))
            for i in range(n_objects)]


# ----------------------------------------------------------------------------
# splits


@dataclass
class SplitResult:
    stage2: list
    stage3: list
    test: list
    held_out: list
    seeds: dict


def split_disjoint(table: AnnotationTable, stage2_count: int = 10_000, stage3_count: int = 10_000,
                   test_count: int = 600, seed: int = 0, held_out=10, train_mix=None,
                   test_mix=None) -> SplitResult:
    """Two independently seeded training sets plus a test set on held-out objects.

    ``held_out`` is either a number of objects (drawn with ``seed``) or an
    explicit list of object ids. Evaluation-only tasks never enter the
    training sets.
    """
    objects = list(table.objects())
    if isinstance(held_out, int):
        k = held_out
        held = sorted(random.Random(derive_seed(seed, "held-out")).sample(objects, min(k, len(objects))))
    else:
        held = sorted(set(held_out))
        missing = set(held) - set(objects)
        if missing:
            raise MissingAnnotation(f"held-out objects not in table: {sorted(missing)}")
    if test_count > 0 and not held:
        raise InsufficientHeldOutObjects("test set requested but no objects are held out")
    train_objects = [o for o in objects if o not in set(held)]
    if not train_objects:
        raise InsufficientHeldOutObjects("every object is held out; nothing left for training")

    train_mix = parse_mix(train_mix) if train_mix is not None else dict(DEFAULT_TRAIN_MIX)
    leaked = [k.value for k, v in train_mix.items() if k in EVALUATION_ONLY and v > 0]
    if leaked:
        raise ValueError(f"evaluation-only tasks in training mix: {leaked}")
    test_mix = parse_mix(test_mix) if test_mix is not None else dict(DEFAULT_TEST_MIX)

    train_table = table.subset(train_objects)
    seeds = {name: derive_seed(seed, name) for name in ("stage2", "stage3", "test")}
    stage2 = generate_pairs(train_table, train_mix, stage2_count, seeds["stage2"], id_prefix="s2")
    stage3 = generate_pairs(train_table, train_mix, stage3_count, seeds["stage3"], id_prefix="s3")
    test = []
    if test_count > 0:
        try:
            test = generate_pairs(table.subset(held), test_mix, test_count, seeds["test"], id_prefix="test")
        except InfeasibleMix as exc:
            raise InsufficientHeldOutObjects(f"held-out objects cannot support the test mix: {exc}") from exc
    return SplitResult(stage2, stage3, test, held, seeds)
