import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vtvkit.core import Manifest, ManifestEntry, TactileAnnotation
from vtvkit.errors import InfeasibleMix, InsufficientHeldOutObjects, MissingAnnotation
from vtvkit.qa import (
    REFERENCE_DISTRIBUTION,
    AnnotationTable,
    TaskKind,
    dataset_header,
    derive_seed,
    expected_ground_truth,
    generate_pairs,
    load_annotations,
    parse_mix,
    read_jsonl,
    split_disjoint,
    synthesize_annotations,
    to_jsonl,
    validate_distribution,
)

LEVELS = {
    "hardness": ["highly_deformable", "moderately_deformable", "extremely_hard"],
    "protrusion": ["absent", "moderate", "strong"],
    "elasticity": ["none", "moderate", "strong"],
    "friction": ["slight", "moderate", "strong"],
}


def _ann(obj, h=0, p=0, e=0, f=0):
    return TactileAnnotation(obj, LEVELS["hardness"][h], LEVELS["protrusion"][p],
                             LEVELS["elasticity"][e], LEVELS["friction"][f])


def _manifest(objects, regions=5):
    entries = [ManifestEntry(f"{o}_{r}.vtf", o, r, "GelSightMini", "press") for o in objects for r in range(regions)]
    return Manifest(entries, ".")


def test_table_join():
    table = load_annotations(_manifest(["a", "b"]), [_ann("a"), _ann("b", 2)])
    assert len(table) == 10
    assert table.rows[0].videos[0][0] == "press"


def test_missing_annotation_named():
    with pytest.raises(MissingAnnotation, match="'b'"):
        load_annotations(_manifest(["a", "b"]), [_ann("a")])


def test_duplicate_annotation_last_wins():
    table = load_annotations(_manifest(["a"], 1), [_ann("a", 0), _ann("a", 2)])
    assert table.rows[0].annotation.hardness.ordinal == 2
    assert len(table.warnings) == 1


def test_ten_thousand_unique_pairs():
    table = AnnotationTable.from_annotations(synthesize_annotations(100, seed=1))
    pairs = generate_pairs(table, count=10_000, seed=3)
    assert len(pairs) == 10_000 and len({p.id for p in pairs}) == 10_000


def test_identical_friction_is_infeasible():
    table = AnnotationTable.from_annotations([_ann(f"o{i}", i % 3, 0, 0, 1) for i in range(6)])
    with pytest.raises(InfeasibleMix):
        generate_pairs(table, {"sfd": 1.0}, 10, attributes=["friction"])


def test_sfd_strong_vs_slight():
    table = AnnotationTable.from_annotations([_ann("strong", f=2), _ann("slight", f=0)], regions=1)
    pairs = generate_pairs(table, {"sfd": 1.0}, 50, seed=0, attributes=["friction"])
    checked = 0
    for p in pairs:
        first = p.video_refs[0].split(":")[0]
        if p.comparator == "more":
            assert p.ground_truth["selected"] == (0 if first == "strong" else 1)
            checked += 1
    assert checked > 0


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31), st.integers(8, 30))
def test_ground_truth_matches_oracle(seed, n_objects):
    rnd = random.Random(seed)
    anns = [_ann(f"o{i}", rnd.randrange(3), rnd.randrange(3), rnd.randrange(3), rnd.randrange(3))
            for i in range(n_objects)]
    table = AnnotationTable.from_annotations(anns, regions=2)
    mix = {"fas": 0.1, "fac": 0.1, "sfd": 0.2, "soi": 0.2, "osc": 0.1, "tos": 0.2, "tsa": 0.1}
    try:
        pairs = generate_pairs(table, mix, 200, seed)
    except InfeasibleMix:
        return
    refs = table.refs()
    for p in pairs:
        assert set(p.video_refs) <= refs
        assert expected_ground_truth(p, table) == p.ground_truth, p


def test_jsonl_determinism_and_roundtrip():
    table = AnnotationTable.from_annotations(synthesize_annotations(30, seed=2))
    a = to_jsonl(generate_pairs(table, count=500, seed=9), dataset_header(9, None, 500))
    b = to_jsonl(generate_pairs(table, count=500, seed=9), dataset_header(9, None, 500))
    assert a == b
    c = to_jsonl(generate_pairs(table, count=500, seed=10), dataset_header(10, None, 500))
    assert a != c
    header, pairs = read_jsonl(a)
    assert header["special_tokens"] == ["<video_start>", "<video>", "<video_end>"]
    assert len(pairs) == 500 and pairs[0].task in TaskKind


def test_mix_parsing():
    assert parse_mix("fas=0.5, SFD=0.5") == {TaskKind.FEATURE_ASSESSMENT_SINGLE: 0.5,
                                               TaskKind.SURFACE_FEATURE_DISTINCTION: 0.5}
    table = AnnotationTable.from_annotations(synthesize_annotations(20))
    with pytest.raises(ValueError):
        generate_pairs(table, {"fas": 0.5}, 10)
    counts = {}
    for p in generate_pairs(table, "fas=0.3,fac=0.7", 10):
        counts[p.task] = counts.get(p.task, 0) + 1
    assert counts == {TaskKind.FEATURE_ASSESSMENT_SINGLE: 3, TaskKind.FEATURE_ASSESSMENT_COMBINED: 7}


def test_derive_seed_stable():
    assert derive_seed(7, "a", 0) == derive_seed(7, "a", 0)
    assert derive_seed(7, "a", 0) != derive_seed(7, "a", 1)
    assert 0 <= derive_seed(0) < 2**64


def test_distribution_validation():
    anns = synthesize_annotations(100, seed=0)
    assert validate_distribution(anns, tolerance=0.01).passed
    assert validate_distribution(anns)["hardness"].observed == REFERENCE_DISTRIBUTION["hardness"]
    # rename friction levels cyclically (slight -> moderate -> strong -> slight)
    rename = dict(zip(LEVELS["friction"], LEVELS["friction"][1:] + LEVELS["friction"][:1]))
    wrong = [TactileAnnotation(a.object_id, a.hardness, a.protrusion, a.elasticity, rename[a.friction.value])
             for a in anns]
    assert not validate_distribution(wrong, tolerance=0.01).passed
    assert validate_distribution(wrong, tolerance=1.0).passed
    csv = validate_distribution(anns).to_csv()
    assert csv.splitlines()[0].startswith("attribute,level")


def test_splits():
    table = AnnotationTable.from_annotations(synthesize_annotations(100, seed=4))
    res = split_disjoint(table, 10_000, 10_000, 600, seed=5, held_out=10)
    assert (len(res.stage2), len(res.stage3), len(res.test)) == (10_000, 10_000, 600)
    ids = [{p.id for p in s} for s in (res.stage2, res.stage3, res.test)]
    assert not (ids[0] & ids[1]) and not (ids[0] & ids[2]) and not (ids[1] & ids[2])
    held = set(res.held_out)
    assert len(held) == 10
    for p in res.stage2 + res.stage3:
        assert p.task is not TaskKind.TACTILE_SCENARIO_ANALYSIS
        assert not {r.split(":")[0] for r in p.video_refs} & held
    assert all({r.split(":")[0] for r in p.video_refs} <= held for p in res.test)
    with pytest.raises(InsufficientHeldOutObjects):
        split_disjoint(table, 10, 10, 5, held_out=0)
    with pytest.raises(ValueError):
        split_disjoint(table, 10, 10, 5, train_mix={"tsa": 1.0})
