"""Tool registry: descriptors, argument validation, and dispatch.

The registry is the single source of tool existence.  Calls to names it
does not hold come back as name errors; arguments that fail the declared
schema or the workspace-dependent range checks come back as argument
errors, raised before the tool runs so erroneous calls never touch the
workspace.  Domain failures inside a tool surface as execution errors.
All three are returned in-band as results, never as transport faults.
"""

from __future__ import annotations

import base64
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .. import morphometry, radiomics, render, volume as volume_mod
from ..errors import (
    ARGS,
    CTKitError,
    FileNotFound,
    InvalidAblation,
    InvalidCategory,
    MaskRequired,
    PathDenied,
    VolumeRequired,
)
from ..render import BoundingBox
from ..vocab import Vocabulary, load_vocabulary, search_anatomy_names, suggest_names
from ..volume import PRESETS_BY_NAME
from .workspace import Workspace

# category order mirrors the four suites, ingestion first
CATEGORIES = ("ingestion", "global", "detail", "advanced")

NAME_ERROR = "name_error"
ARGS_ERROR = "args_error"
EXECUTION_ERROR = "execution_error"


class ArgsError(CTKitError):
    """Raised by the validator; always classified as an argument error."""

    category = ARGS


def text_block(text: str) -> dict:
    return {"type": "text", "text": text}


def data_block(data) -> dict:
    return {"type": "data", "data": data}


def image_block(payload: bytes, media_type: str, width: int, height: int) -> dict:
    return {
        "type": "image",
        "media_type": media_type,
        "data_b64": base64.b64encode(payload).decode("ascii"),
        "width": width,
        "height": height,
    }


@dataclass(frozen=True)
class ToolResult:
    """Outcome of one tool call: content blocks plus error classification."""

    content: tuple
    is_error: bool = False
    error_kind: str | None = None

    def as_payload(self) -> dict:
        payload = {"content": list(self.content), "isError": self.is_error}
        if self.is_error:
            payload["errorKind"] = self.error_kind
        return payload

    def canonical_json(self) -> str:
        return json.dumps(self.as_payload(), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_json().encode("utf-8")).hexdigest()


def error_result(kind: str, message: str, extra: dict | None = None) -> ToolResult:
    blocks = [text_block(message)]
    if extra:
        blocks.append(data_block(extra))
    return ToolResult(tuple(blocks), is_error=True, error_kind=kind)


@dataclass(frozen=True)
class ToolDescriptor:
    name: str
    category: str
    description: str
    input_schema: dict
    runtime_checks: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "category": self.category,
            "description": self.description,
            "inputSchema": self.input_schema,
        }


# --- schema fragments -------------------------------------------------------

def _point3() -> dict:
    return {
        "type": "array",
        "items": {"type": "integer", "minimum": 0},
        "minItems": 3,
        "maxItems": 3,
    }


def _box_schema() -> dict:
    return {
        "type": "object",
        "properties": {"lo": _point3(), "hi": _point3()},
        "required": ["lo", "hi"],
        "additionalProperties": False,
    }


_AXIS = {"type": "string", "enum": ["axial", "coronal", "sagittal"]}


def _window_props() -> dict:
    return {
        "preset": {"type": "string", "enum": sorted(PRESETS_BY_NAME)},
        "center": {"type": "number"},
        "width": {"type": "number", "exclusiveMinimum": 0},
    }


def _schema(properties: dict, required=()) -> dict:
    return {
        "type": "object",
        "properties": properties,
        "required": list(required),
        "additionalProperties": False,
    }


def build_descriptors() -> tuple[ToolDescriptor, ...]:
    """The full 24-tool registry in category order, alphabetical within."""
    label_prop = {"type": "integer", "minimum": 1}
    bins_prop = {"type": "integer", "minimum": 2, "maximum": 256}
    tools = [
        # I. ingestion
        ToolDescriptor(
            "inspect_mask_labels", "ingestion",
            "List the nonzero labels of the loaded mask with names and exact voxel counts.",
            _schema({}),
        ),
        ToolDescriptor(
            "inspect_metadata", "ingestion",
            "Report dims, spacing, datatype, and HU range of the loaded volume.",
            _schema({}),
        ),
        ToolDescriptor(
            "list_window_presets", "ingestion",
            "List the fixed intensity window presets (name, center, width).",
            _schema({}),
        ),
        ToolDescriptor(
            "load_data", "ingestion",
            "Load a NIfTI volume from a path under the data root into the workspace.",
            _schema({"path": {"type": "string", "minLength": 1}}, ["path"]),
            runtime_checks=("path_in_root",),
        ),
        ToolDescriptor(
            "load_mask", "ingestion",
            "Load an integer NIfTI mask registered to the loaded volume.",
            _schema({"path": {"type": "string", "minLength": 1}}, ["path"]),
            runtime_checks=("path_in_root",),
        ),
        ToolDescriptor(
            "search_anatomy_names", "ingestion",
            "Ranked anatomy vocabulary lookup: exact, prefix, substring, then fuzzy.",
            _schema({"query": {"type": "string", "minLength": 1}}, ["query"]),
        ),
        # II. global
        ToolDescriptor(
            "view_avgip", "global",
            "Average intensity projection along an axis, windowed, as PNG.",
            _schema({"axis": _AXIS, **_window_props()}, ["axis"]),
            runtime_checks=("window_args",),
        ),
        ToolDescriptor(
            "view_minip", "global",
            "Minimum intensity projection along an axis, windowed, as PNG.",
            _schema({"axis": _AXIS, **_window_props()}, ["axis"]),
            runtime_checks=("window_args",),
        ),
        ToolDescriptor(
            "view_mip", "global",
            "Maximum intensity projection along an axis, windowed, as PNG.",
            _schema({"axis": _AXIS, **_window_props()}, ["axis"]),
            runtime_checks=("window_args",),
        ),
        ToolDescriptor(
            "view_montage", "global",
            "Grid of evenly spaced slices along an axis with 1-pixel separators.",
            _schema(
                {
                    "axis": _AXIS,
                    "rows": {"type": "integer", "minimum": 1, "maximum": 8},
                    "cols": {"type": "integer", "minimum": 1, "maximum": 8},
                    **_window_props(),
                },
                ["axis", "rows", "cols"],
            ),
            runtime_checks=("window_args",),
        ),
        # III. detail
        ToolDescriptor(
            "auto_crop_body", "detail",
            "Bounding box of the largest connected body region above -500 HU.",
            _schema({}),
        ),
        ToolDescriptor(
            "edit_geometry", "detail",
            "Morphological edit (dilate/erode/open/close) of one mask label by a radius in mm.",
            _schema(
                {
                    "label": label_prop,
                    "op": {"type": "string", "enum": list(morphometry.GEOMETRY_OPS)},
                    "radius_mm": {"type": "number", "exclusiveMinimum": 0},
                },
                ["label", "op", "radius_mm"],
            ),
        ),
        ToolDescriptor(
            "extract_vessel_centerline", "detail",
            "Medial path of a tubular label between its max-diameter endpoints.",
            _schema({"label": label_prop}, ["label"]),
        ),
        ToolDescriptor(
            "find_organ_center", "detail",
            "Centroid of a mask label as voxel and mm coordinates.",
            _schema({"label": label_prop}, ["label"]),
        ),
        ToolDescriptor(
            "measure_distance", "detail",
            "Euclidean distance in mm between two voxel coordinates.",
            _schema({"p1": _point3(), "p2": _point3()}, ["p1", "p2"]),
            runtime_checks=("points_in_dims",),
        ),
        ToolDescriptor(
            "measure_max_diameter", "detail",
            "Maximum pairwise surface distance of a mask label, with endpoints.",
            _schema({"label": label_prop}, ["label"]),
        ),
        ToolDescriptor(
            "view_ortho", "detail",
            "Axial/coronal/sagittal views through a voxel point with crosshairs.",
            _schema({"point": _point3(), **_window_props()}, ["point"]),
            runtime_checks=("window_args", "points_in_dims"),
        ),
        ToolDescriptor(
            "view_slice", "detail",
            "One windowed slice along an axis at a given index, as PNG.",
            _schema(
                {"axis": _AXIS, "index": {"type": "integer", "minimum": 0}, **_window_props()},
                ["axis", "index"],
            ),
            runtime_checks=("window_args", "slice_index"),
        ),
        # IV. advanced
        ToolDescriptor(
            "analyze_hu_distribution", "advanced",
            "First-order HU statistics over a mask label or a voxel box.",
            _schema({"label": label_prop, "box": _box_schema()}),
            runtime_checks=("roi_selector",),
        ),
        ToolDescriptor(
            "analyze_lesion_texture", "advanced",
            "GLCM texture features (contrast, energy, homogeneity, correlation, entropy).",
            _schema({"label": label_prop, "box": _box_schema(), "bins": bins_prop}),
            runtime_checks=("roi_selector",),
        ),
        ToolDescriptor(
            "analyze_shape_properties", "advanced",
            "Volume, surface area, sphericity, and axis ratios of a mask label.",
            _schema({"label": label_prop}, ["label"]),
        ),
        ToolDescriptor(
            "extract_radiomics_signature", "advanced",
            "Combined first-order, shape, and texture features under namespaced keys.",
            _schema({"label": label_prop, "bins": bins_prop}, ["label"]),
        ),
        ToolDescriptor(
            "segment_total_anatomy", "advanced",
            "Resolve anatomy names against loaded mask labels; report volume and centroid.",
            _schema(
                {"names": {"type": "array", "items": {"type": "string"}, "minItems": 1}},
                ["names"],
            ),
        ),
        ToolDescriptor(
            "visualize_radiomics_chart", "advanced",
            "Deterministic SVG bar chart of a radiomics signature (by label or explicit values).",
            _schema(
                {
                    "label": label_prop,
                    "bins": bins_prop,
                    "signature": {"type": "object"},
                },
            ),
            runtime_checks=("chart_source",),
        ),
    ]
    order = {c: n for n, c in enumerate(CATEGORIES)}
    tools.sort(key=lambda t: (order[t.category], t.name))
    return tuple(tools)


ALL_DESCRIPTORS = build_descriptors()
TOOL_NAMES = tuple(t.name for t in ALL_DESCRIPTORS)


# --- argument validation ------------------------------------------------------

_TYPE_CHECKS = {
    "string": lambda v: isinstance(v, str),
    "integer": lambda v: isinstance(v, int) and not isinstance(v, bool),
    "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
    "boolean": lambda v: isinstance(v, bool),
    "array": lambda v: isinstance(v, list),
    "object": lambda v: isinstance(v, dict),
}


def _check_value(name: str, value, schema: dict) -> None:
    typ = schema.get("type")
    if typ and not _TYPE_CHECKS[typ](value):
        raise ArgsError(f"argument {name!r} must be of type {typ}")
    if "enum" in schema and value not in schema["enum"]:
        raise ArgsError(f"argument {name!r} must be one of {schema['enum']}")
    if "minimum" in schema and value < schema["minimum"]:
        raise ArgsError(f"argument {name!r} must be >= {schema['minimum']}")
    if "maximum" in schema and value > schema["maximum"]:
        raise ArgsError(f"argument {name!r} must be <= {schema['maximum']}")
    if "exclusiveMinimum" in schema and value <= schema["exclusiveMinimum"]:
        raise ArgsError(f"argument {name!r} must be > {schema['exclusiveMinimum']}")
    if "minLength" in schema and len(value) < schema["minLength"]:
        raise ArgsError(f"argument {name!r} must have length >= {schema['minLength']}")
    if typ == "array":
        if "minItems" in schema and len(value) < schema["minItems"]:
            raise ArgsError(f"argument {name!r} needs at least {schema['minItems']} items")
        if "maxItems" in schema and len(value) > schema["maxItems"]:
            raise ArgsError(f"argument {name!r} allows at most {schema['maxItems']} items")
        items = schema.get("items")
        if items:
            for pos, item in enumerate(value):
                _check_value(f"{name}[{pos}]", item, items)
    if typ == "object" and "properties" in schema:
        _check_object(name, value, schema)


def _check_object(name: str, value: dict, schema: dict) -> None:
    props = schema.get("properties", {})
    for key in schema.get("required", []):
        if key not in value:
            raise ArgsError(f"missing required argument {name}.{key}" if name else
                            f"missing required argument {key!r}")
    if not schema.get("additionalProperties", True):
        unknown = set(value) - set(props)
        if unknown:
            raise ArgsError(f"unknown argument(s): {', '.join(sorted(unknown))}")
    for key, sub in props.items():
        if key in value:
            _check_value(key if not name else f"{name}.{key}", value[key], sub)


def validate_args(descriptor: ToolDescriptor, args, toolbox: "Toolbox") -> None:
    """Schema plus workspace-dependent range checks; raises ArgsError-class
    errors only, and never executes the tool."""
    if not isinstance(args, dict):
        raise ArgsError("arguments must be a JSON object")
    _check_object("", args, descriptor.input_schema)
    for check in descriptor.runtime_checks:
        _RUNTIME_CHECKS[check](toolbox, args)


def _check_window_args(toolbox, args) -> None:
    if ("center" in args) != ("width" in args):
        raise ArgsError("center and width must be given together")


def _check_slice_index(toolbox, args) -> None:
    vol = toolbox.workspace.volume
    if vol is None:
        return  # execution reports the missing volume
    axis = args.get("axis")
    if axis in render.AXIS_INDEX:
        n = vol.dims[render.AXIS_INDEX[axis]]
        if not 0 <= args["index"] < n:
            raise ArgsError(f"index {args['index']} outside [0, {n - 1}] along {axis}")


def _check_points_in_dims(toolbox, args) -> None:
    vol = toolbox.workspace.volume
    if vol is None:
        return
    for key in ("p1", "p2", "point"):
        p = args.get(key)
        if p is not None and any(not 0 <= p[a] < vol.dims[a] for a in range(3)):
            raise ArgsError(f"argument {key!r}={p} outside dims {list(vol.dims)}")


def _check_path_in_root(toolbox, args) -> None:
    toolbox.resolve_path(args["path"])


def _check_roi_selector(toolbox, args) -> None:
    if ("label" in args) == ("box" in args):
        raise ArgsError("exactly one of 'label' or 'box' must be given")
    box = args.get("box")
    vol = toolbox.workspace.volume
    if box is not None:
        if any(box["lo"][a] > box["hi"][a] for a in range(3)):
            raise ArgsError("box lo must not exceed hi")
        if vol is not None and any(box["hi"][a] >= vol.dims[a] for a in range(3)):
            raise ArgsError(f"box extends outside dims {list(vol.dims)}")


def _check_chart_source(toolbox, args) -> None:
    if ("label" in args) == ("signature" in args):
        raise ArgsError("exactly one of 'label' or 'signature' must be given")


_RUNTIME_CHECKS = {
    "window_args": _check_window_args,
    "slice_index": _check_slice_index,
    "points_in_dims": _check_points_in_dims,
    "path_in_root": _check_path_in_root,
    "roi_selector": _check_roi_selector,
    "chart_source": _check_chart_source,
}


# --- toolbox -------------------------------------------------------------------

class Toolbox:
    """A session's tool dispatcher: registry plus workspace plus data root.

    ``disabled_categories`` removes whole suites from the registry (the
    ablation hook); ingestion can never be disabled.
    """

    def __init__(
        self,
        data_root,
        vocabulary: Vocabulary | str | None = None,
        disabled_categories=(),
        session_id: str = "local",
    ):
        disabled = frozenset(disabled_categories)
        unknown = disabled - set(CATEGORIES)
        if unknown:
            raise InvalidCategory(f"unknown categories: {sorted(unknown)}")
        if "ingestion" in disabled:
            raise InvalidAblation("the ingestion category cannot be disabled")
        self.data_root = Path(data_root).resolve()
        if isinstance(vocabulary, Vocabulary):
            self.vocabulary = vocabulary
        else:
            self.vocabulary = load_vocabulary(vocabulary)
        self.disabled_categories = disabled
        self.descriptors = tuple(t for t in ALL_DESCRIPTORS if t.category not in disabled)
        self._by_name = {t.name: t for t in self.descriptors}
        self.workspace = Workspace(session_id=session_id)

    # -- paths -----------------------------------------------------------

    def resolve_path(self, relative: str) -> Path:
        """Confine tool-chosen paths to the data root."""
        candidate = (self.data_root / relative).resolve()
        if not candidate.is_relative_to(self.data_root):
            raise PathDenied(f"path {relative!r} escapes the data root")
        return candidate

    # -- discovery ---------------------------------------------------------

    def list_tools(self, categories=None) -> list[ToolDescriptor]:
        """Registry contents, optionally filtered to a category subset."""
        if categories is None:
            return list(self.descriptors)
        wanted = set(categories)
        unknown = wanted - set(CATEGORIES)
        if unknown:
            raise InvalidCategory(f"unknown categories: {sorted(unknown)}")
        return [t for t in self.descriptors if t.category in wanted]

    # -- dispatch -----------------------------------------------------------

    def call_tool(self, name: str, args=None) -> ToolResult:
        """Run one tool; all failures come back in-band as error results."""
        args = {} if args is None else args
        descriptor = self._by_name.get(name)
        if descriptor is None:
            suggestions = suggest_names(str(name), self._by_name, k=3)
            return error_result(
                NAME_ERROR,
                f"unknown tool {name!r}; closest names: {', '.join(suggestions)}",
                {"suggestions": suggestions},
            )
        try:
            validate_args(descriptor, args, self)
        except CTKitError as err:
            return error_result(ARGS_ERROR, f"{err.name}: {err}")
        handler = _HANDLERS[name]
        try:
            blocks = handler(self, args)
        except CTKitError as err:
            kind = ARGS_ERROR if err.category == ARGS else EXECUTION_ERROR
            return error_result(kind, f"{err.name}: {err}")
        return ToolResult(tuple(blocks))

    # -- state guards ----------------------------------------------------------

    def require_volume(self):
        if self.workspace.volume is None:
            raise VolumeRequired("no volume loaded; call load_data first")
        return self.workspace.volume

    def require_mask(self):
        if self.workspace.mask is None:
            raise MaskRequired("no mask loaded; call load_mask first")
        return self.workspace.mask

    def resolve_window(self, args) -> tuple[float, float]:
        if "preset" in args:
            preset = PRESETS_BY_NAME[args["preset"]]
            return preset.center, preset.width
        if "center" in args:
            return float(args["center"]), float(args["width"])
        default = PRESETS_BY_NAME["soft_tissue"]
        return default.center, default.width


def _args_digest(args: dict) -> str:
    return hashlib.sha256(
        json.dumps(args, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


def _read_file(path: Path) -> bytes:
    if not path.is_file():
        raise FileNotFound(f"no such file: {path.name}")
    return path.read_bytes()


def _png_block(image: render.Image2D) -> dict:
    return image_block(render.encode_png(image), "image/png", image.width, image.height)


# --- handlers: ingestion ---------------------------------------------------------

def _h_load_data(tb: Toolbox, args) -> list:
    path = tb.resolve_path(args["path"])
    vol = volume_mod.parse_nifti(_read_file(path))
    tb.workspace.install_volume(vol)
    tb.workspace.history.append(("load_data", _args_digest(args)))
    return [data_block(volume_mod.inspect_metadata(vol).as_dict())]


def _h_load_mask(tb: Toolbox, args) -> list:
    vol = tb.require_volume()
    path = tb.resolve_path(args["path"])
    mask = morphometry.load_mask(_read_file(path), vol, tb.vocabulary)
    tb.workspace.install_mask(mask)
    tb.workspace.history.append(("load_mask", _args_digest(args)))
    labels = [info.as_dict() for info in morphometry.inspect_mask_labels(mask)]
    return [data_block({"dims": list(mask.dims), "labels": labels})]


def _h_inspect_metadata(tb: Toolbox, args) -> list:
    return [data_block(volume_mod.inspect_metadata(tb.require_volume()).as_dict())]


def _h_inspect_mask_labels(tb: Toolbox, args) -> list:
    labels = [info.as_dict() for info in morphometry.inspect_mask_labels(tb.require_mask())]
    return [data_block({"labels": labels})]


def _h_search_anatomy_names(tb: Toolbox, args) -> list:
    matches = search_anatomy_names(args["query"], tb.vocabulary)
    return [data_block({"matches": [m.as_dict() for m in matches]})]


def _h_list_window_presets(tb: Toolbox, args) -> list:
    presets = [
        {"name": p.name, "center": p.center, "width": p.width}
        for p in volume_mod.list_window_presets()
    ]
    return [data_block({"presets": presets})]


# --- handlers: global views ----------------------------------------------------

def _projection_handler(mode: str):
    def handler(tb: Toolbox, args) -> list:
        vol = tb.require_volume()
        image = render.project(vol, args["axis"], mode, tb.resolve_window(args))
        return [_png_block(image)]

    return handler


def _h_view_montage(tb: Toolbox, args) -> list:
    vol = tb.require_volume()
    image = render.montage(vol, args["axis"], args["rows"], args["cols"], tb.resolve_window(args))
    return [_png_block(image)]


# --- handlers: detail views and measurements --------------------------------------

def _h_view_slice(tb: Toolbox, args) -> list:
    vol = tb.require_volume()
    image = render.extract_slice(vol, args["axis"], args["index"], tb.resolve_window(args))
    return [_png_block(image)]


def _h_view_ortho(tb: Toolbox, args) -> list:
    vol = tb.require_volume()
    image = render.ortho_views(vol, tuple(args["point"]), tb.resolve_window(args))
    return [_png_block(image)]


def _h_measure_distance(tb: Toolbox, args) -> list:
    vol = tb.require_volume()
    mm = morphometry.measure_distance(args["p1"], args["p2"], vol.spacing, vol.dims)
    return [data_block({"mm": mm})]


def _h_measure_max_diameter(tb: Toolbox, args) -> list:
    result = morphometry.measure_max_diameter(tb.require_mask(), args["label"])
    return [data_block(result.as_dict())]


def _h_find_organ_center(tb: Toolbox, args) -> list:
    point = morphometry.find_organ_center(tb.require_mask(), args["label"])
    return [data_block(point.as_dict())]


def _h_extract_vessel_centerline(tb: Toolbox, args) -> list:
    path = morphometry.extract_vessel_centerline(tb.require_mask(), args["label"])
    return [data_block({"path": [list(p) for p in path], "voxel_count": len(path)})]


def _h_auto_crop_body(tb: Toolbox, args) -> list:
    return [data_block(render.auto_crop_body(tb.require_volume()).as_dict())]


def _h_edit_geometry(tb: Toolbox, args) -> list:
    mask = tb.require_mask()
    before = int((mask.labels == args["label"]).sum())
    edited = morphometry.edit_geometry(mask, args["label"], args["op"], args["radius_mm"])
    tb.workspace.install_mask(edited)
    after = int((edited.labels == args["label"]).sum())
    return [
        data_block(
            {
                "label": args["label"],
                "op": args["op"],
                "radius_mm": args["radius_mm"],
                "voxels_before": before,
                "voxels_after": after,
            }
        )
    ]


# --- handlers: advanced analytics ------------------------------------------------

def _roi_from_args(args) -> radiomics.RoiSelector:
    if "label" in args:
        return radiomics.RoiSelector.from_label(args["label"])
    box = args["box"]
    return radiomics.RoiSelector.from_box(BoundingBox(tuple(box["lo"]), tuple(box["hi"])))


def _h_segment_total_anatomy(tb: Toolbox, args) -> list:
    summary = morphometry.segment_total_anatomy(tb.require_mask(), args["names"])
    return [data_block(summary.as_dict())]


def _h_analyze_hu_distribution(tb: Toolbox, args) -> list:
    vol = tb.require_volume()
    stats = radiomics.analyze_hu_distribution(vol, _roi_from_args(args), tb.workspace.mask)
    return [data_block(stats.as_dict())]


def _h_analyze_shape_properties(tb: Toolbox, args) -> list:
    report = radiomics.analyze_shape_properties(tb.require_mask(), args["label"])
    return [data_block(report.as_dict())]


def _h_analyze_lesion_texture(tb: Toolbox, args) -> list:
    vol = tb.require_volume()
    features = radiomics.analyze_lesion_texture(
        vol, _roi_from_args(args), args.get("bins", radiomics.DEFAULT_GLCM_BINS), tb.workspace.mask
    )
    return [data_block(features.as_dict())]


def _h_extract_radiomics_signature(tb: Toolbox, args) -> list:
    signature = radiomics.extract_radiomics_signature(
        tb.require_volume(),
        tb.require_mask(),
        args["label"],
        args.get("bins", radiomics.DEFAULT_GLCM_BINS),
    )
    return [data_block({"signature": signature.as_dict()})]


def _h_visualize_radiomics_chart(tb: Toolbox, args) -> list:
    if "signature" in args:
        values = {str(k): float(v) for k, v in args["signature"].items()}
        svg = radiomics.visualize_radiomics_chart(values)
        rows = len(values)
    else:
        signature = radiomics.extract_radiomics_signature(
            tb.require_volume(),
            tb.require_mask(),
            args["label"],
            args.get("bins", radiomics.DEFAULT_GLCM_BINS),
        )
        svg = radiomics.visualize_radiomics_chart(signature)
        rows = len(signature.values)
    width, height = radiomics.chart_size(rows)
    return [image_block(svg, "image/svg+xml", width, height)]


_HANDLERS = {
    "load_data": _h_load_data,
    "load_mask": _h_load_mask,
    "inspect_metadata": _h_inspect_metadata,
    "inspect_mask_labels": _h_inspect_mask_labels,
    "search_anatomy_names": _h_search_anatomy_names,
    "list_window_presets": _h_list_window_presets,
    "view_mip": _projection_handler("max"),
    "view_minip": _projection_handler("min"),
    "view_avgip": _projection_handler("avg"),
    "view_montage": _h_view_montage,
    "view_slice": _h_view_slice,
    "view_ortho": _h_view_ortho,
    "measure_distance": _h_measure_distance,
    "measure_max_diameter": _h_measure_max_diameter,
    "find_organ_center": _h_find_organ_center,
    "extract_vessel_centerline": _h_extract_vessel_centerline,
    "auto_crop_body": _h_auto_crop_body,
    "edit_geometry": _h_edit_geometry,
    "segment_total_anatomy": _h_segment_total_anatomy,
    "analyze_hu_distribution": _h_analyze_hu_distribution,
    "analyze_shape_properties": _h_analyze_shape_properties,
    "analyze_lesion_texture": _h_analyze_lesion_texture,
    "extract_radiomics_signature": _h_extract_radiomics_signature,
    "visualize_radiomics_chart": _h_visualize_radiomics_chart,
}

assert set(_HANDLERS) == set(TOOL_NAMES)
