"""Mask loading, measurements, centerlines, and geometry edits."""

import numpy as np
import pytest

from ctkit import phantoms
from ctkit.errors import (
    DisconnectedLabel,
    GeometryMismatch,
    InvalidRadius,
    LabelNotFound,
    PointOutOfRange,
    UnsupportedDatatype,
)
from ctkit.morphometry import (
    MaskVolume,
    edit_geometry,
    extract_vessel_centerline,
    find_organ_center,
    inspect_mask_labels,
    load_mask,
    measure_distance,
    measure_max_diameter,
    segment_total_anatomy,
)
from ctkit.vocab import Vocabulary
from ctkit.volume import Volume, write_nifti


def make_volume(dims, spacing=(1.0, 1.0, 1.0)):
    return Volume(dims, spacing, np.zeros(dims, dtype=np.float64), source_digest="t")


def make_mask(labels, spacing=(1.0, 1.0, 1.0), names=None):
    labels = np.asarray(labels)
    return MaskVolume(labels.shape, spacing, labels.astype(np.int64), names or {})


# --- loading -------------------------------------------------------------

def test_load_mask_attaches_sidecar_names():
    labels = np.zeros((4, 4, 4), dtype=np.int16)
    labels[1:3, 1:3, 1:3] = 1
    vol = make_volume((4, 4, 4))
    vocab = Vocabulary.from_text("1\tlesion")
    mask = load_mask(write_nifti(labels, datatype=4), vol, vocab)
    info = inspect_mask_labels(mask)
    assert info[0].name == "lesion"
    assert info[0].voxel_count == 8


def test_load_mask_dims_mismatch():
    labels = np.zeros((3, 3, 3), dtype=np.int16)
    with pytest.raises(GeometryMismatch):
        load_mask(write_nifti(labels, datatype=4), make_volume((4, 4, 4)))


def test_load_mask_rejects_float_datatype():
    labels = np.zeros((4, 4, 4))
    with pytest.raises(UnsupportedDatatype):
        load_mask(write_nifti(labels, datatype=16), make_volume((4, 4, 4)))


def test_load_all_zero_mask():
    labels = np.zeros((4, 4, 4), dtype=np.int16)
    mask = load_mask(write_nifti(labels, datatype=4), make_volume((4, 4, 4)))
    assert mask.present_labels() == []
    assert inspect_mask_labels(mask) == []


def test_unnamed_labels_get_placeholders():
    labels = np.zeros((3, 3, 3), dtype=np.int64)
    labels[0, 0, 0] = 7
    mask = make_mask(labels)
    assert mask.label_names[7] == "label_7"


def test_inspect_labels_sorted_with_exact_counts():
    labels = np.zeros((5, 5, 5), dtype=np.int64)
    labels[0, 0, :3] = 3
    labels[1, 1, :] = 2
    labels[2, 2, 0] = 1
    mask = make_mask(labels)
    info = inspect_mask_labels(mask)
    assert [(e.label, e.voxel_count) for e in info] == [(1, 1), (2, 5), (3, 3)]


# --- centroids and distances ------------------------------------------------

def test_center_of_symmetric_cube():
    labels = np.zeros((6, 6, 6), dtype=np.int64)
    labels[2:5, 2:5, 2:5] = 1
    assert find_organ_center(make_mask(labels), 1).voxel == (3, 3, 3)


def test_center_rounds_half_up():
    labels = np.zeros((3, 3, 3), dtype=np.int64)
    labels[0, 0, 0] = 1
    labels[1, 0, 0] = 1
    point = find_organ_center(make_mask(labels), 1)
    assert point.voxel == (1, 0, 0)


def test_center_of_digital_ball():
    labels = phantoms.ball_mask((33, 33, 33), (16, 16, 16), 9.5).astype(np.int64)
    point = find_organ_center(make_mask(labels, spacing=(0.5, 0.5, 2.0)), 1)
    assert point.voxel == (16, 16, 16)
    assert point.mm == (8.0, 8.0, 32.0)


def test_center_of_missing_label():
    with pytest.raises(LabelNotFound):
        find_organ_center(make_mask(np.zeros((2, 2, 2), dtype=np.int64)), 1)


def test_distance_pythagorean():
    assert measure_distance((0, 0, 0), (3, 4, 0), (1, 1, 1)) == 5.0
    assert measure_distance((0, 0, 0), (3, 0, 0), (2, 1, 1)) == 6.0
    assert measure_distance((2, 2, 2), (2, 2, 2), (1, 1, 1)) == 0.0


def test_distance_range_check():
    with pytest.raises(PointOutOfRange):
        measure_distance((0, 0, 0), (4, 0, 0), (1, 1, 1), dims=(4, 4, 4))


def test_distance_symmetry_and_triangle_inequality():
    rng = np.random.default_rng(13)
    spacing = (0.9, 1.1, 2.0)
    for _ in range(50):
        a, b, c = (tuple(rng.integers(0, 20, size=3)) for _ in range(3))
        ab = measure_distance(a, b, spacing)
        ba = measure_distance(b, a, spacing)
        assert ab == ba
        assert ab <= measure_distance(a, c, spacing) + measure_distance(c, b, spacing) + 1e-12


# --- diameters ---------------------------------------------------------------

def all_pairs_diameter(labels, label, spacing):
    """Oracle: maximum over every voxel pair of the label, not just surface."""
    coords = np.argwhere(labels == label).astype(np.float64) * np.asarray(spacing)
    d2 = ((coords[:, None, :] - coords[None, :, :]) ** 2).sum(axis=2)
    return float(np.sqrt(d2.max()))


def test_diameter_two_point_case():
    labels = np.zeros((10, 3, 3), dtype=np.int64)
    labels[0, 0, 0] = 1
    labels[9, 0, 0] = 1
    result = measure_max_diameter(make_mask(labels), 1)
    assert result.mm == 9.0
    assert result.endpoints == ((0, 0, 0), (9, 0, 0))


def test_diameter_single_voxel():
    labels = np.zeros((3, 3, 3), dtype=np.int64)
    labels[1, 1, 1] = 1
    result = measure_max_diameter(make_mask(labels), 1)
    assert result.mm == 0.0
    assert result.endpoints[0] == result.endpoints[1]


def test_diameter_matches_all_pairs_oracle_on_small_fixtures():
    rng = np.random.default_rng(21)
    for trial in range(8):
        dims = tuple(rng.integers(5, 13, size=3))
        labels = (rng.random(dims) < 0.3).astype(np.int64)
        if not labels.any():
            continue
        spacing = tuple(float(s) for s in rng.choice([0.5, 1.0, 2.0], size=3))
        mask = make_mask(labels, spacing=spacing)
        got = measure_max_diameter(mask, 1).mm
        assert got == pytest.approx(all_pairs_diameter(labels, 1, spacing), abs=0.0)


def test_diameter_ball_range():
    labels = phantoms.ball_mask((25, 25, 25), (12, 12, 12), 10.0).astype(np.int64)
    result = measure_max_diameter(make_mask(labels), 1)
    assert 19.0 <= result.mm <= 20.5


def test_diameter_blocked_path_matches_single_block(monkeypatch):
    import ctkit.morphometry as morpho

    labels = phantoms.ball_mask((25, 25, 25), (12, 12, 12), 10.0).astype(np.int64)
    mask = make_mask(labels)
    whole = measure_max_diameter(mask, 1)
    monkeypatch.setattr(morpho, "_DIAMETER_BLOCK_ENTRIES", 64)  # many tiny blocks
    blocked = measure_max_diameter(mask, 1)
    assert blocked == whole


def test_diameter_tie_break_is_lexicographic():
    labels = np.zeros((3, 3, 1), dtype=np.int64)
    labels[0, 0, 0] = labels[2, 2, 0] = labels[0, 2, 0] = labels[2, 0, 0] = 1
    result = measure_max_diameter(make_mask(labels), 1)
    # two diagonals tie; smallest pair starts at (0,0,0)
    assert result.endpoints == ((0, 0, 0), (2, 2, 0))


# --- centerline -----------------------------------------------------------------

def oracle_shortest_path_cost(binary, start, goal):
    """Independent exhaustive search: scan-based relaxation, no heap."""
    import scipy.ndimage as ndi

    dt = ndi.distance_transform_edt(binary)
    cost = {tuple(p): 1.0 / (1.0 + dt[tuple(p)]) ** 2 for p in np.argwhere(binary)}
    dist = {start: cost[start]}
    done = set()
    while True:
        pending = {p: d for p, d in dist.items() if p not in done}
        if not pending:
            break
        node = min(pending, key=lambda p: (pending[p], p))
        if node == goal:
            return dist[node]
        done.add(node)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                for dk in (-1, 0, 1):
                    if (di, dj, dk) == (0, 0, 0):
                        continue
                    q = (node[0] + di, node[1] + dj, node[2] + dk)
                    if q in cost and dist[node] + cost[q] < dist.get(q, np.inf):
                        dist[q] = dist[node] + cost[q]
    return dist.get(goal)


def path_cost(binary, path):
    import scipy.ndimage as ndi

    dt = ndi.distance_transform_edt(binary)
    return sum(1.0 / (1.0 + dt[p]) ** 2 for p in path)


def test_centerline_of_thin_tube_is_the_tube():
    labels = phantoms.tube_mask((21, 11, 11), 0, 0, 20, (10, 5, 5)).astype(np.int64)
    path = extract_vessel_centerline(make_mask(labels), 1)
    assert path == [(i, 5, 5) for i in range(21)]
    assert extract_vessel_centerline(make_mask(labels), 1) == path


def test_centerline_of_thick_tube_rides_the_axis():
    labels = phantoms.tube_mask((15, 11, 11), 0, 2, 12, (7, 5, 5), thickness=3).astype(np.int64)
    binary = labels.astype(bool)
    path = extract_vessel_centerline(make_mask(labels), 1)
    assert all(p[1] == 5 and p[2] == 5 for p in path[1:-1])
    start, goal = path[0], path[-1]
    assert path_cost(binary, path) == pytest.approx(
        oracle_shortest_path_cost(binary, start, goal), rel=1e-12
    )


def test_centerline_l_tube_matches_oracle_length():
    labels = phantoms.l_tube_mask((10, 10, 3), (1, 1, 1), 7, 6).astype(np.int64)
    binary = labels.astype(bool)
    path = extract_vessel_centerline(make_mask(labels), 1)
    start, goal = path[0], path[-1]
    oracle_cost = oracle_shortest_path_cost(binary, start, goal)
    assert path_cost(binary, path) == pytest.approx(oracle_cost, rel=1e-12)
    # every tube voxel costs the same here, so min cost pins the voxel count
    assert len(path) == round(oracle_cost / (1.0 / 4.0))


def test_centerline_rejects_disconnected_label():
    labels = np.zeros((10, 5, 5), dtype=np.int64)
    labels[0:2, 2, 2] = 1
    labels[6:8, 2, 2] = 1
    with pytest.raises(DisconnectedLabel):
        extract_vessel_centerline(make_mask(labels), 1)


# --- geometry edits ---------------------------------------------------------------

def test_dilate_single_voxel_gives_plus_shape():
    labels = np.zeros((5, 5, 5), dtype=np.int64)
    labels[2, 2, 2] = 1
    edited = edit_geometry(make_mask(labels), 1, "dilate", 1.0)
    expected = {(2, 2, 2), (1, 2, 2), (3, 2, 2), (2, 1, 2), (2, 3, 2), (2, 2, 1), (2, 2, 3)}
    assert set(map(tuple, np.argwhere(edited.labels == 1))) == expected


def test_dilate_radius_respects_spacing():
    labels = np.zeros((5, 5, 5), dtype=np.int64)
    labels[2, 2, 2] = 1
    edited = edit_geometry(make_mask(labels, spacing=(1.0, 1.0, 2.0)), 1, "dilate", 1.0)
    got = set(map(tuple, np.argwhere(edited.labels == 1)))
    assert (2, 2, 1) not in got and (2, 2, 3) not in got
    assert (1, 2, 2) in got


def test_erode_to_empty_is_allowed():
    labels = np.zeros((5, 5, 5), dtype=np.int64)
    labels[2, 2, 2] = 1
    edited = edit_geometry(make_mask(labels), 1, "erode", 1.0)
    assert not (edited.labels == 1).any()


def test_close_is_identity_on_convex_block():
    labels = np.zeros((12, 12, 12), dtype=np.int64)
    labels[3:9, 3:9, 3:9] = 1
    edited = edit_geometry(make_mask(labels), 1, "close", 2.0)
    np.testing.assert_array_equal(edited.labels, labels)


def test_close_never_shrinks_original():
    rng = np.random.default_rng(31)
    for trial in range(5):
        labels = (rng.random((10, 10, 10)) < 0.2).astype(np.int64)
        if not labels.any():
            continue
        edited = edit_geometry(make_mask(labels), 1, "close", 1.5)
        assert ((labels == 1) <= (edited.labels == 1)).all()


def test_edit_preserves_other_labels():
    labels = np.zeros((8, 8, 8), dtype=np.int64)
    labels[2, 2, 2] = 1
    labels[3, 2, 2] = 2
    edited = edit_geometry(make_mask(labels), 1, "dilate", 1.0)
    assert edited.labels[3, 2, 2] == 2


def test_edit_rejects_bad_radius_and_missing_label():
    labels = np.zeros((4, 4, 4), dtype=np.int64)
    labels[1, 1, 1] = 1
    with pytest.raises(InvalidRadius):
        edit_geometry(make_mask(labels), 1, "dilate", 0.0)
    with pytest.raises(LabelNotFound):
        edit_geometry(make_mask(labels), 9, "dilate", 1.0)


# --- name-resolved summaries --------------------------------------------------------

def test_segment_total_anatomy_volume():
    labels = np.zeros((10, 10, 10), dtype=np.int64)
    labels[2:7, 2:7, 2:6] = 1  # 5*5*4 = 100 voxels
    mask = make_mask(labels, names={1: "lesion"})
    summary = segment_total_anatomy(mask, ["lesion"])
    assert summary.results["lesion"]["volume_mm3"] == 100.0
    assert summary.missing == ()


def test_segment_total_anatomy_spacing_scales_volume():
    labels = np.zeros((10, 10, 10), dtype=np.int64)
    labels[2:7, 2:7, 2:6] = 1
    mask = make_mask(labels, spacing=(0.5, 0.5, 2.0), names={1: "lesion"})
    summary = segment_total_anatomy(mask, ["lesion"])
    assert summary.results["lesion"]["volume_mm3"] == 50.0


def test_segment_total_anatomy_unknown_name_is_missing():
    labels = np.zeros((4, 4, 4), dtype=np.int64)
    labels[1, 1, 1] = 1
    summary = segment_total_anatomy(make_mask(labels, names={1: "lesion"}), ["unknownorgan"])
    assert summary.results == {}
    assert summary.missing == ("unknownorgan",)
