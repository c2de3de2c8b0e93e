"""Benchmark kit: task manifests, option randomization, trajectory-level
validation, tool-use statistics, accuracy scoring, SOP alignment, and
category-ablation runs.

Trajectory validation re-executes every recorded action against a fresh
workspace and compares canonical observation digests, so a trajectory is
consistent exactly when all of its observations are reproducible from the
raw volume and its final answer matches the ground truth.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import (
    EmptyInput,
    InvalidAblation,
    ManifestError,
    SopUnavailable,
    UnknownCase,
    ValidationImpossible,
)
from .orchestrate import (
    AgentMove,
    FinalAnswer,
    ScriptedAgent,
    ToolCall,
    Trajectory,
    run_episode,
    trajectory_to_dict,
)
from .server.registry import Toolbox
from .vocab import levenshtein

SCENARIOS = ("QA", "AM", "DD")
CASE_TYPES = ("A", "B", "C")
OPTION_LABELS = "ABCDE"

REPRODUCED = "reproduced"
DIVERGENT = "divergent"
NOT_EXECUTABLE = "not_executable"


@dataclass(frozen=True)
class TaskCase:
    """One benchmark instance; options are positional, labeled A onward."""

    id: str
    scenario: str
    case_type: str
    volume_path: str
    query: str
    options: tuple[str, ...]
    answer_key: str
    mask_path: str | None = None
    sop: tuple[ToolCall, ...] | None = None

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(OPTION_LABELS[: len(self.options)])

    def as_dict(self) -> dict:
        out = {
            "id": self.id,
            "scenario": self.scenario,
            "case_type": self.case_type,
            "volume_path": self.volume_path,
            "query": self.query,
            "options": list(self.options),
            "answer_key": self.answer_key,
        }
        if self.mask_path is not None:
            out["mask_path"] = self.mask_path
        if self.sop is not None:
            out["sop"] = [{"name": c.name, "args": c.args} for c in self.sop]
        return out


def _relative_path_ok(path: str) -> bool:
    p = Path(path)
    return not p.is_absolute() and ".." not in p.parts


def _parse_case(record: dict, line: int) -> TaskCase:
    def fail(fieldname: str, message: str):
        raise ManifestError(line, fieldname, message)

    case_id = record.get("id")
    if not isinstance(case_id, str) or not case_id:
        fail("id", "must be a non-empty string")
    scenario = record.get("scenario")
    if scenario not in SCENARIOS:
        fail("scenario", f"must be one of {SCENARIOS}")
    case_type = record.get("case_type")
    if case_type not in CASE_TYPES:
        fail("case_type", f"must be one of {CASE_TYPES}")
    volume_path = record.get("volume_path")
    if not isinstance(volume_path, str) or not _relative_path_ok(volume_path):
        fail("volume_path", "must be a relative path under the data root")
    mask_path = record.get("mask_path")
    if mask_path is not None and (not isinstance(mask_path, str) or not _relative_path_ok(mask_path)):
        fail("mask_path", "must be a relative path under the data root")
    query = record.get("query")
    if not isinstance(query, str) or not query:
        fail("query", "must be a non-empty string")
    options = record.get("options")
    if not isinstance(options, list) or not 2 <= len(options) <= 5 or not all(
        isinstance(o, str) for o in options
    ):
        fail("options", "must be a list of 2 to 5 strings")
    answer_key = record.get("answer_key")
    labels = tuple(OPTION_LABELS[: len(options)])
    if answer_key not in labels:
        fail("answer_key", f"must be one of {list(labels)}")
    sop_raw = record.get("sop")
    sop = None
    if sop_raw is not None:
        if not isinstance(sop_raw, list):
            fail("sop", "must be a list of tool calls")
        calls = []
        for entry in sop_raw:
            if not isinstance(entry, dict) or not isinstance(entry.get("name"), str):
                fail("sop", "each entry needs a string 'name'")
            args = entry.get("args", {})
            if not isinstance(args, dict):
                fail("sop", "entry 'args' must be an object")
            calls.append(ToolCall(entry["name"], args))
        sop = tuple(calls)
    return TaskCase(
        id=case_id,
        scenario=scenario,
        case_type=case_type,
        volume_path=volume_path,
        query=query,
        options=tuple(options),
        answer_key=answer_key,
        mask_path=mask_path,
        sop=sop,
    )


def load_task_manifest(data) -> list[TaskCase]:
    """Parse a JSON-lines manifest; every violation names its line and field."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    cases = []
    seen = set()
    for line_no, line in enumerate(data.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as err:
            raise ManifestError(line_no, "json", str(err))
        if not isinstance(record, dict):
            raise ManifestError(line_no, "json", "each line must be an object")
        case = _parse_case(record, line_no)
        if case.id in seen:
            raise ManifestError(line_no, "id", f"duplicate case id {case.id!r}")
        seen.add(case.id)
        cases.append(case)
    return cases


def write_task_manifest(path, cases) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for case in cases:
            fh.write(json.dumps(case.as_dict(), sort_keys=True, separators=(",", ":")) + "\n")


# --- option randomization ------------------------------------------------------

_MASK64 = (1 << 64) - 1


class SplitMix64:
    """Tiny deterministic PRNG; identical output on every platform."""

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        return self.next_u64() % n


def stable_hash64(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "little")


def randomize_options(case: TaskCase, seed: int) -> tuple[TaskCase, dict[str, str]]:
    """Shuffle a case's options with a per-case deterministic permutation.

    Returns the rewritten case plus ``key_map`` from new labels back to the
    original ones, so answers given against the shuffled case can always be
    mapped back to the manifest's ground truth.
    """
    rng = SplitMix64(seed ^ stable_hash64(case.id))
    n = len(case.options)
    perm = list(range(n))  # perm[new_position] = original_position
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    new_options = tuple(case.options[perm[p]] for p in range(n))
    labels = case.labels
    key_map = {labels[p]: labels[perm[p]] for p in range(n)}
    new_answer = labels[perm.index(labels.index(case.answer_key))]
    return replace(case, options=new_options, answer_key=new_answer), key_map


def stratified_sample(cases, per_scenario: int, seed: int) -> list[TaskCase]:
    """Deterministic balanced subset: up to ``per_scenario`` cases from each
    scenario, selected by a seeded shuffle of the id-sorted pool.  Output
    order follows the canonical scenario order, ids ascending."""
    selected = []
    for scenario in SCENARIOS:
        pool = sorted((c for c in cases if c.scenario == scenario), key=lambda c: c.id)
        rng = SplitMix64(seed ^ stable_hash64(scenario))
        for i in range(len(pool) - 1, 0, -1):
            j = rng.below(i + 1)
            pool[i], pool[j] = pool[j], pool[i]
        selected.extend(sorted(pool[:per_scenario], key=lambda c: c.id))
    return selected


# --- trajectory validation -----------------------------------------------------

@dataclass(frozen=True)
class ValidationReport:
    step_verdicts: tuple[str, ...]
    answer_correct: bool
    consistent: bool

    def __post_init__(self):
        expected = all(v == REPRODUCED for v in self.step_verdicts) and self.answer_correct
        if self.consistent != expected:
            raise ValueError("consistent must equal (all reproduced) and answer_correct")

    @classmethod
    def build(cls, verdicts, answer_correct: bool) -> "ValidationReport":
        verdicts = tuple(verdicts)
        return cls(verdicts, answer_correct, all(v == REPRODUCED for v in verdicts) and answer_correct)

    def as_dict(self) -> dict:
        return {
            "step_verdicts": list(self.step_verdicts),
            "answer_correct": self.answer_correct,
            "consistent": self.consistent,
        }


def _as_traj_dict(trajectory) -> dict:
    if isinstance(trajectory, Trajectory):
        return trajectory_to_dict(trajectory)
    return trajectory


def _answer_correct(traj: dict, case: TaskCase) -> bool:
    final = traj.get("final_answer")
    if not final or final.get("option") is None:
        return False
    option = final["option"]
    key_map = traj.get("key_map")
    if key_map:
        option = key_map.get(option, option)
    return option == case.answer_key


def validate_trajectory(
    trajectory,
    case: TaskCase,
    data_root,
    vocabulary=None,
    disabled_categories=(),
) -> ValidationReport:
    """Re-execute a recorded trajectory against a fresh workspace.

    A step is reproduced iff the recomputed observation's canonical digest
    equals the recorded one; re-execution faults mark the step
    not_executable.  The final answer is mapped through the trajectory's
    key_map (when option randomization was used) before comparison with
    the case's ground truth.
    """
    traj = _as_traj_dict(trajectory)
    root = Path(data_root)
    if not (root / case.volume_path).is_file():
        raise ValidationImpossible(f"volume file missing: {case.volume_path}")
    if case.mask_path and not (root / case.mask_path).is_file():
        raise ValidationImpossible(f"mask file missing: {case.mask_path}")

    toolbox = Toolbox(root, vocabulary, disabled_categories)
    verdicts = []
    for step in traj["steps"]:
        try:
            result = toolbox.call_tool(step["action"]["name"], step["action"]["args"])
        except Exception:
            verdicts.append(NOT_EXECUTABLE)
            continue
        verdicts.append(REPRODUCED if result.digest() == step["observation_digest"] else DIVERGENT)
    return ValidationReport.build(verdicts, _answer_correct(traj, case))


# --- metrics ----------------------------------------------------------------------

@dataclass(frozen=True)
class ToolUsageStats:
    cases: int
    avg_calls: float
    avg_name_errors: float
    avg_args_errors: float

    def as_dict(self) -> dict:
        return {
            "cases": self.cases,
            "avg_calls": self.avg_calls,
            "avg_name_errors": self.avg_name_errors,
            "avg_args_errors": self.avg_args_errors,
        }


def compute_tool_stats(trajectories) -> ToolUsageStats:
    """Per-case averages of tool calls and the two error families."""
    trajs = [_as_traj_dict(t) for t in trajectories]
    if not trajs:
        raise EmptyInput("no trajectories given")
    calls = name_errors = args_errors = 0
    for traj in trajs:
        calls += len(traj["steps"])
        for step in traj["steps"]:
            kind = step["observation"].get("errorKind")
            if kind == "name_error":
                name_errors += 1
            elif kind == "args_error":
                args_errors += 1
    n = len(trajs)
    return ToolUsageStats(n, calls / n, name_errors / n, args_errors / n)


@dataclass(frozen=True)
class AccuracyReport:
    per_scenario: dict[str, float]
    overall: float | None
    counts: dict[str, int] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "per_scenario": dict(self.per_scenario),
            "overall": self.overall,
            "counts": dict(self.counts),
        }


def score_accuracy(trajectories, cases) -> AccuracyReport:
    """Accuracy in percent per scenario plus their unweighted mean.

    Scenarios with no trajectories are absent from the report rather than
    scored as zero.
    """
    by_id = {c.id: c for c in cases}
    hits: dict[str, list[bool]] = {}
    for trajectory in trajectories:
        traj = _as_traj_dict(trajectory)
        case = by_id.get(traj["case_id"])
        if case is None:
            raise UnknownCase(f"trajectory references unknown case {traj['case_id']!r}")
        hits.setdefault(case.scenario, []).append(_answer_correct(traj, case))
    per_scenario = {
        scenario: 100.0 * sum(flags) / len(flags)
        for scenario, flags in hits.items()
    }
    overall = (
        sum(per_scenario.values()) / len(per_scenario) if per_scenario else None
    )
    counts = {scenario: len(flags) for scenario, flags in hits.items()}
    return AccuracyReport(per_scenario, overall, counts)


@dataclass(frozen=True)
class SopAlignment:
    exact_match: bool
    common_prefix_len: int
    edit_distance: int

    def as_dict(self) -> dict:
        return {
            "exact_match": self.exact_match,
            "common_prefix_len": self.common_prefix_len,
            "edit_distance": self.edit_distance,
        }


def compare_to_sop(trajectory, sop) -> SopAlignment:
    """Align the executed tool-name sequence against the expert SOP."""
    if sop is None:
        raise SopUnavailable("case carries no SOP")
    traj = _as_traj_dict(trajectory)
    executed = [step["action"]["name"] for step in traj["steps"]]
    expected = [call.name for call in sop]
    prefix = 0
    for a, b in zip(executed, expected):
        if a != b:
            break
        prefix += 1
    distance = levenshtein(executed, expected)
    return SopAlignment(executed == expected, prefix, distance)


# --- episode running ----------------------------------------------------------------

def sop_agent(case: TaskCase) -> ScriptedAgent:
    """Gold-standard scripted agent: replay the case's SOP, then answer
    with the case's own answer key."""
    if case.sop is None:
        raise SopUnavailable(f"case {case.id} carries no SOP")
    moves = [AgentMove(thought="", action=call) for call in case.sop]
    moves.append(AgentMove(thought="", action=FinalAnswer(text="per SOP", option=case.answer_key)))
    return ScriptedAgent(moves)


def run_benchmark(
    cases,
    agent_factory,
    data_root,
    budget: int = 16,
    randomize_seed: int | None = None,
    disabled_categories=(),
    vocabulary=None,
) -> list[Trajectory]:
    """Run one episode per case over isolated workspaces.

    ``agent_factory`` receives the (possibly option-randomized) case and
    returns a fresh agent; the applied key_map is attached to each
    trajectory.
    """
    trajectories = []
    for case in cases:
        key_map = None
        if randomize_seed is not None:
            case, key_map = randomize_options(case, randomize_seed)
        toolbox = Toolbox(data_root, vocabulary, disabled_categories)
        trajectory = run_episode(case, agent_factory(case), toolbox, budget)
        trajectory.key_map = key_map
        trajectories.append(trajectory)
    return trajectories


@dataclass(frozen=True)
class AblationResult:
    disabled: tuple[str, ...]
    accuracy: AccuracyReport
    stats: ToolUsageStats

    def as_dict(self) -> dict:
        return {
            "disabled": list(self.disabled),
            "accuracy": self.accuracy.as_dict(),
            "stats": self.stats.as_dict(),
        }


def run_ablation(
    cases,
    agent_factory,
    categories_to_disable,
    data_root,
    budget: int = 16,
    randomize_seed: int | None = None,
    vocabulary=None,
) -> tuple[AblationResult, list[Trajectory]]:
    """Run the benchmark with whole tool categories removed.

    Calls to tools in a disabled category become name errors because the
    tools are absent from the registry.  Ingestion is the foundational
    prerequisite and may never be disabled.
    """
    disabled = tuple(sorted(set(categories_to_disable)))
    if "ingestion" in disabled:
        raise InvalidAblation("the ingestion category cannot be disabled")
    trajectories = run_benchmark(
        cases,
        agent_factory,
        data_root,
        budget=budget,
        randomize_seed=randomize_seed,
        disabled_categories=disabled,
        vocabulary=vocabulary,
    )
    result = AblationResult(
        disabled=disabled,
        accuracy=score_accuracy(trajectories, cases),
        stats=compute_tool_stats(trajectories),
    )
    return result, trajectories


# --- report rendering ----------------------------------------------------------------

STATS_COLUMNS = ("Calls", "Name Errors", "Args Errors")


def format_stats_table(stats: ToolUsageStats) -> str:
    header = f"{'Cases':>6}  {'Calls':>7}  {'Name Errors':>11}  {'Args Errors':>11}"
    row = (
        f"{stats.cases:>6}  {stats.avg_calls:>7.3f}  "
        f"{stats.avg_name_errors:>11.3f}  {stats.avg_args_errors:>11.3f}"
    )
    return header + "\n" + row


def format_accuracy_table(report: AccuracyReport) -> str:
    cells = []
    for scenario in SCENARIOS:
        value = report.per_scenario.get(scenario)
        cells.append(f"{value:.2f}" if value is not None else "-")
    avg = f"{report.overall:.2f}" if report.overall is not None else "-"
    header = f"{'QA':>8}  {'AM':>8}  {'DD':>8}  {'Avg.':>8}"
    row = "  ".join(f"{c:>8}" for c in cells + [avg])
    return header + "\n" + row


def render_report(accuracy: AccuracyReport, stats: ToolUsageStats) -> str:
    return (
        "Accuracy (%)\n"
        + format_accuracy_table(accuracy)
        + "\n\nTool usage per case\n"
        + format_stats_table(stats)
        + "\n"
    )
