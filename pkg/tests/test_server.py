"""Protocol layer: registry closure, validation taxonomy, dispatch
determinism, workspace safety, and JSON-RPC framing."""

import base64
import json

import pytest

from ctkit import phantoms
from ctkit.errors import InvalidAblation, InvalidCategory
from ctkit.render import project
from ctkit.server import Server, Toolbox
from ctkit.server.registry import ALL_DESCRIPTORS
from ctkit.volume import write_nifti

# the full tool taxonomy, by suite
INGESTION = [
    "load_data", "load_mask", "inspect_metadata",
    "inspect_mask_labels", "search_anatomy_names", "list_window_presets",
]
GLOBAL = ["view_montage", "view_mip", "view_minip", "view_avgip"]
DETAIL = [
    "view_slice", "view_ortho", "measure_distance", "measure_max_diameter",
    "find_organ_center", "extract_vessel_centerline", "auto_crop_body", "edit_geometry",
]
ADVANCED = [
    "segment_total_anatomy", "analyze_hu_distribution", "analyze_shape_properties",
    "extract_radiomics_signature", "visualize_radiomics_chart", "analyze_lesion_texture",
]


def test_registry_closure_against_documented_taxonomy():
    names = {t.name for t in ALL_DESCRIPTORS}
    assert names == set(INGESTION + GLOBAL + DETAIL + ADVANCED)
    by_cat = {}
    for t in ALL_DESCRIPTORS:
        by_cat.setdefault(t.category, set()).add(t.name)
    assert by_cat["ingestion"] == set(INGESTION)
    assert by_cat["global"] == set(GLOBAL)
    assert by_cat["detail"] == set(DETAIL)
    assert by_cat["advanced"] == set(ADVANCED)


def test_list_tools_counts_and_order(loaded_toolbox):
    tools = loaded_toolbox.list_tools()
    assert len(tools) == 24
    cats = [t.category for t in tools]
    assert cats == sorted(cats, key=["ingestion", "global", "detail", "advanced"].index)
    assert [t.name for t in loaded_toolbox.list_tools(["ingestion"])] == sorted(INGESTION)
    assert len(loaded_toolbox.list_tools(["global", "advanced"])) == 10


def test_list_tools_unknown_category(loaded_toolbox):
    with pytest.raises(InvalidCategory):
        loaded_toolbox.list_tools(["bogus"])


def test_projection_tools_map_to_project_modes(loaded_toolbox):
    vol = loaded_toolbox.workspace.volume
    for tool, mode in (("view_mip", "max"), ("view_minip", "min"), ("view_avgip", "avg")):
        result = loaded_toolbox.call_tool(tool, {"axis": "coronal", "preset": "lung"})
        expected = project(vol, "coronal", mode, (-600.0, 1500.0))
        block = result.content[0]
        from ctkit.render import encode_png

        assert base64.b64decode(block["data_b64"]) == encode_png(expected)


def test_unknown_name_gives_suggestions(loaded_toolbox):
    result = loaded_toolbox.call_tool("view_slcie", {"axis": "axial", "index": 0})
    assert result.is_error and result.error_kind == "name_error"
    suggestions = result.content[1]["data"]["suggestions"]
    assert suggestions[0] == "view_slice"
    assert len(suggestions) == 3


def test_args_error_taxonomy(loaded_toolbox):
    # missing required
    r = loaded_toolbox.call_tool("view_slice", {"axis": "axial"})
    assert r.error_kind == "args_error"
    # wrong type
    r = loaded_toolbox.call_tool("view_slice", {"axis": "axial", "index": "zero"})
    assert r.error_kind == "args_error"
    # out of range per workspace dims
    r = loaded_toolbox.call_tool("view_slice", {"axis": "axial", "index": 9999})
    assert r.error_kind == "args_error"
    # unknown argument name
    r = loaded_toolbox.call_tool("view_slice", {"axis": "axial", "index": 0, "zoom": 2})
    assert r.error_kind == "args_error"
    # enum violation
    r = loaded_toolbox.call_tool("view_slice", {"axis": "oblique", "index": 0})
    assert r.error_kind == "args_error"


def test_execution_error_taxonomy(loaded_toolbox):
    r = loaded_toolbox.call_tool("find_organ_center", {"label": 42})
    assert r.error_kind == "execution_error"
    assert "LabelNotFound" in r.content[0]["text"]


def test_state_preconditions_are_execution_errors(lesion_root):
    toolbox = Toolbox(lesion_root)
    r = toolbox.call_tool("view_slice", {"axis": "axial", "index": 0})
    assert r.error_kind == "execution_error"
    assert "VolumeRequired" in r.content[0]["text"]
    r = toolbox.call_tool("inspect_mask_labels", {})
    assert "MaskRequired" in r.content[0]["text"]


def test_error_results_never_mutate_workspace(loaded_toolbox):
    before = loaded_toolbox.workspace.digest()
    calls = [
        ("view_slcie", {}),
        ("view_slice", {"axis": "axial", "index": 9999}),
        ("find_organ_center", {"label": 42}),
        ("load_data", {"path": "../escape.nii"}),
        ("load_data", {"path": "missing.nii"}),
        ("edit_geometry", {"label": 99, "op": "dilate", "radius_mm": -1}),
    ]
    for name, args in calls:
        result = loaded_toolbox.call_tool(name, args)
        assert result.is_error
        assert loaded_toolbox.workspace.digest() == before


def test_args_errors_reproducible_by_validator_alone(loaded_toolbox):
    from ctkit.errors import CTKitError
    from ctkit.server.registry import validate_args

    cases = [
        ("view_slice", {"axis": "axial", "index": 9999}),
        ("view_slice", {"axis": "axial"}),
        ("load_data", {"path": "../x"}),
        ("analyze_hu_distribution", {"label": 1, "box": {"lo": [0, 0, 0], "hi": [1, 1, 1]}}),
        ("edit_geometry", {"label": 99, "op": "stretch", "radius_mm": 1.0}),
    ]
    for name, args in cases:
        result = loaded_toolbox.call_tool(name, args)
        assert result.error_kind == "args_error"
        descriptor = next(t for t in loaded_toolbox.list_tools() if t.name == name)
        with pytest.raises(CTKitError):
            validate_args(descriptor, args, loaded_toolbox)


def test_path_traversal_denied(loaded_toolbox):
    r = loaded_toolbox.call_tool("load_data", {"path": "../../etc/passwd"})
    assert r.error_kind == "args_error"
    assert "PathDenied" in r.content[0]["text"]
    r = loaded_toolbox.call_tool("load_data", {"path": "/etc/passwd"})
    assert r.error_kind == "args_error"


def test_missing_file_is_execution_error(loaded_toolbox):
    r = loaded_toolbox.call_tool("load_data", {"path": "nope.nii"})
    assert r.error_kind == "execution_error"
    assert "FileNotFound" in r.content[0]["text"]


def test_parse_failure_carries_parser_error_name(lesion_root):
    (lesion_root / "bad.nii").write_bytes(b"x" * 400)
    toolbox = Toolbox(lesion_root)
    r = toolbox.call_tool("load_data", {"path": "bad.nii"})
    assert r.error_kind == "execution_error"
    assert "MalformedHeader" in r.content[0]["text"]


def test_call_tool_is_deterministic(loaded_toolbox):
    for name, args in [
        ("inspect_metadata", {}),
        ("view_slice", {"axis": "axial", "index": 8, "preset": "lung"}),
        ("extract_radiomics_signature", {"label": 99}),
        ("visualize_radiomics_chart", {"label": 99}),
        ("view_slcie", {}),
    ]:
        a = loaded_toolbox.call_tool(name, args)
        b = loaded_toolbox.call_tool(name, args)
        assert a.canonical_json() == b.canonical_json()
        assert a.digest() == b.digest()


def test_reload_volume_drops_stale_mask(lesion_root, loaded_toolbox):
    vox = phantoms.constant_volume((8, 8, 8), 0.0)
    (lesion_root / "other.nii").write_bytes(write_nifti(vox, datatype=4))
    assert loaded_toolbox.workspace.mask is not None
    r = loaded_toolbox.call_tool("load_data", {"path": "other.nii"})
    assert not r.is_error
    assert loaded_toolbox.workspace.mask is None
    assert loaded_toolbox.workspace.volume.dims == (8, 8, 8)


def test_load_history_records_tool_and_digest(loaded_toolbox):
    assert [name for name, _ in loaded_toolbox.workspace.history] == ["load_data", "load_mask"]


def test_disabled_category_turns_calls_into_name_errors(lesion_root):
    toolbox = Toolbox(lesion_root, disabled_categories=("global", "detail"))
    assert len(toolbox.list_tools()) == 12
    toolbox.call_tool("load_data", {"path": "vol.nii"})
    r = toolbox.call_tool("view_slice", {"axis": "axial", "index": 0})
    assert r.error_kind == "name_error"


def test_ingestion_cannot_be_disabled(lesion_root):
    with pytest.raises(InvalidAblation):
        Toolbox(lesion_root, disabled_categories=("ingestion",))


# --- JSON-RPC framing ---------------------------------------------------------------

def rpc(method, id_=None, params=None):
    msg = {"jsonrpc": "2.0", "method": method}
    if id_ is not None:
        msg["id"] = id_
    if params is not None:
        msg["params"] = params
    return json.dumps(msg)


def test_lifecycle_and_id_echo(lesion_root):
    server = Server(Toolbox(lesion_root))
    # call before initialize
    (line,) = server.handle_message(rpc("tools/call", 1, {"name": "list_window_presets"}))
    assert json.loads(line)["error"]["code"] == -32002
    (line,) = server.handle_message(rpc("initialize", 2))
    body = json.loads(line)
    assert body["id"] == 2
    assert body["result"]["protocolVersion"]
    assert body["result"]["capabilities"]["tools"] == {}
    # duplicate initialize
    (line,) = server.handle_message(rpc("initialize", 3))
    assert "AlreadyInitialized" in json.loads(line)["error"]["message"]
    (line,) = server.handle_message(rpc("tools/list", 7))
    body = json.loads(line)
    assert body["id"] == 7
    assert len(body["result"]["tools"]) == 24


def test_malformed_json_and_framing(lesion_root):
    server = Server(Toolbox(lesion_root))
    (line,) = server.handle_message("this is not json")
    body = json.loads(line)
    assert body["error"]["code"] == -32700 and body["id"] is None
    # missing jsonrpc field
    (line,) = server.handle_message(json.dumps({"id": 1, "method": "initialize"}))
    assert json.loads(line)["error"]["code"] == -32600
    # unknown method as a request
    server.handle_message(rpc("initialize", 1))
    (line,) = server.handle_message(rpc("bogus/method", 9))
    assert json.loads(line)["error"]["code"] == -32601
    # unknown method as a notification: silence
    assert server.handle_message(rpc("bogus/method")) == []
    # responses are single lines
    assert "\n" not in line


def test_tools_call_over_wire(lesion_root):
    server = Server(Toolbox(lesion_root))
    server.handle_message(rpc("initialize", 0))
    server.handle_message(rpc("tools/call", 1, {"name": "load_data", "arguments": {"path": "vol.nii"}}))
    (line,) = server.handle_message(
        rpc("tools/call", 2, {"name": "measure_distance", "arguments": {"p1": [0, 0, 0], "p2": [3, 4, 0]}})
    )
    body = json.loads(line)
    assert body["result"]["isError"] is False
    assert body["result"]["content"][0]["data"] == {"mm": 5.0}


def test_tools_list_category_filter_over_wire(lesion_root):
    server = Server(Toolbox(lesion_root))
    server.handle_message(rpc("initialize", 0))
    (line,) = server.handle_message(rpc("tools/list", 1, {"categories": ["ingestion"]}))
    assert len(json.loads(line)["result"]["tools"]) == 6
    (line,) = server.handle_message(rpc("tools/list", 2, {"categories": ["nope"]}))
    assert json.loads(line)["error"]["code"] == -32602


def scripted_session(lesion_root):
    """The conformance session: lifecycle, discovery, happy path, the two
    error families, and transport faults."""
    server = Server(Toolbox(lesion_root))
    transcript = []
    messages = [
        rpc("initialize", 1),
        rpc("tools/list", 2),
        rpc("tools/call", 3, {"name": "load_data", "arguments": {"path": "vol.nii"}}),
        rpc("tools/call", 4, {"name": "view_slcie", "arguments": {}}),
        rpc("tools/call", 5, {"name": "view_slice", "arguments": {"axis": "axial", "index": 9999}}),
        "{broken json",
    ]
    for message in messages:
        transcript.extend(server.handle_message(message))
    fresh = Server(Toolbox(lesion_root))
    transcript.extend(fresh.handle_message(rpc("tools/call", 6, {"name": "inspect_metadata"})))
    return "\n".join(transcript)


def test_golden_transcript_is_byte_stable(lesion_root):
    first = scripted_session(lesion_root)
    second = scripted_session(lesion_root)
    assert first == second
    assert first.count("\n") + 1 == 7
