"""Self-contained demo benchmark: phantom volumes, lesion masks, and a
task manifest with expert SOPs, all regenerable byte-identically."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .evalkit import CASE_TYPES, SCENARIOS, TaskCase, write_task_manifest
from .orchestrate import ToolCall
from .phantoms import labeled_lesion_volume
from .volume import write_nifti

LESION_LABEL = 99  # "lesion" in the default anatomy vocabulary

_QUERIES = {
    "QA": "Quantify the dense lesion: what is its approximate mean attenuation and size?",
    "AM": "Where does the dense lesion sit within the volume, relative to the grid center?",
    "DD": "Considering density, shape, and texture, which characterization fits the lesion best?",
}

_OPTIONS = (
    "well-defined dense focal lesion",
    "diffuse ground-glass change",
    "air-filled cystic structure",
    "calcified linear scar",
)


def _sop_for(scenario: str, volume_path: str, mask_path: str) -> tuple[ToolCall, ...]:
    ingest = (
        ToolCall("load_data", {"path": volume_path}),
        ToolCall("load_mask", {"path": mask_path}),
    )
    if scenario == "QA":
        return ingest + (
            ToolCall("inspect_metadata", {}),
            ToolCall("analyze_hu_distribution", {"label": LESION_LABEL}),
            ToolCall("measure_max_diameter", {"label": LESION_LABEL}),
        )
    if scenario == "AM":
        return ingest + (
            ToolCall("find_organ_center", {"label": LESION_LABEL}),
            ToolCall("view_slice", {"axis": "axial", "index": 8, "preset": "soft_tissue"}),
        )
    return ingest + (
        ToolCall("view_mip", {"axis": "axial", "preset": "soft_tissue"}),
        ToolCall("extract_radiomics_signature", {"label": LESION_LABEL}),
    )


def build_demo_bench(root, n_cases: int = 12, seed: int = 0) -> Path:
    """Write volumes, masks, and manifest.jsonl under ``root``; returns the
    manifest path."""
    root = Path(root)
    (root / "cases").mkdir(parents=True, exist_ok=True)
    cases = []
    for i in range(n_cases):
        vox, labels = labeled_lesion_volume(dims=(24, 24, 16), seed=seed * 1009 + i,
                                            lesion_label=LESION_LABEL)
        volume_path = f"cases/vol_{i:03d}.nii"
        mask_path = f"cases/mask_{i:03d}.nii"
        (root / volume_path).write_bytes(write_nifti(np.round(vox), datatype=4))
        (root / mask_path).write_bytes(write_nifti(labels, datatype=4))
        scenario = SCENARIOS[i % len(SCENARIOS)]
        cases.append(
            TaskCase(
                id=f"demo-{i:03d}",
                scenario=scenario,
                case_type=CASE_TYPES[i % len(CASE_TYPES)],
                volume_path=volume_path,
                mask_path=mask_path,
                query=_QUERIES[scenario],
                options=_OPTIONS,
                answer_key="A",
                sop=_sop_for(scenario, volume_path, mask_path),
            )
        )
    manifest = root / "manifest.jsonl"
    write_task_manifest(manifest, cases)
    return manifest
