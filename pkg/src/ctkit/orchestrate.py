"""The reasoning-acting loop: alternate agent moves with tool execution,
record every step verbatim, and enforce the step budget.

Agents implement a single method, ``next_move(query, steps) -> AgentMove``.
Tool errors come back in-band as observations and the episode continues;
the loop only ends on a final answer, budget exhaustion, or an agent
fault.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Protocol

import requests

from .server.registry import ToolResult, Toolbox

TERMINATED_ANSWER = "answer"
TERMINATED_BUDGET = "budget"
TERMINATED_AGENT_FAILURE = "agent_failure"
DEFAULT_BUDGET = 16


@dataclass(frozen=True)
class ToolCall:
    name: str
    args: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FinalAnswer:
    text: str
    option: str | None = None


@dataclass(frozen=True)
class AgentMove:
    """One agent turn: free-form thought plus exactly one action."""

    thought: str
    action: ToolCall | FinalAnswer


@dataclass
class TrajectoryStep:
    index: int
    thought: str
    action: ToolCall
    observation: ToolResult
    # set when loaded from disk; keeps the recorded digest authoritative
    # even if the serialized content was altered
    recorded_digest: str | None = None

    def observation_digest(self) -> str:
        return self.recorded_digest or self.observation.digest()


@dataclass
class Trajectory:
    query: str
    case_id: str
    steps: list[TrajectoryStep]
    final_answer: FinalAnswer | None
    terminated_by: str
    key_map: dict[str, str] | None = None


class Agent(Protocol):
    def next_move(self, query: str, steps: list[TrajectoryStep]) -> AgentMove: ...


class ScriptExhausted(Exception):
    pass


class ScriptedAgent:
    """Deterministic test double: plays back a fixed move sequence
    regardless of observations.  The script must end in a final answer."""

    def __init__(self, script):
        script = list(script)
        if not script:
            raise ValueError("script must be non-empty")
        if not isinstance(script[-1].action, FinalAnswer):
            raise ValueError("script must end with a FinalAnswer move")
        self._script = script
        self._cursor = 0

    def next_move(self, query: str, steps) -> AgentMove:
        if self._cursor >= len(self._script):
            raise ScriptExhausted("script exhausted before a final answer was requested")
        move = self._script[self._cursor]
        self._cursor += 1
        return move


def run_episode(task, agent: Agent, toolbox: Toolbox, budget: int = DEFAULT_BUDGET) -> Trajectory:
    """Drive one episode of the loop over a task's query.

    Every tool call is recorded with its observation, including in-band
    errors.  A final answer ends the episode; a tool-call move past the
    budget terminates it with ``terminated_by="budget"``; agent exceptions
    or malformed moves preserve the partial trajectory.
    """
    if budget < 1:
        raise ValueError("budget must be positive")
    steps: list[TrajectoryStep] = []
    while True:
        try:
            move = agent.next_move(task.query, steps)
        except Exception:
            return Trajectory(task.query, task.id, steps, None, TERMINATED_AGENT_FAILURE)
        if not isinstance(move, AgentMove):
            return Trajectory(task.query, task.id, steps, None, TERMINATED_AGENT_FAILURE)
        if isinstance(move.action, FinalAnswer):
            return Trajectory(task.query, task.id, steps, move.action, TERMINATED_ANSWER)
        if not isinstance(move.action, ToolCall):
            return Trajectory(task.query, task.id, steps, None, TERMINATED_AGENT_FAILURE)
        if len(steps) >= budget:
            return Trajectory(task.query, task.id, steps, None, TERMINATED_BUDGET)
        observation = toolbox.call_tool(move.action.name, move.action.args)
        steps.append(TrajectoryStep(len(steps), move.thought, move.action, observation))


def format_observation(result: ToolResult) -> str:
    """Render a tool result as the agent-visible message.

    Text inlines, data becomes canonical JSON, images collapse to a stable
    digest token plus their pixel dimensions; error results get a fixed
    ``ERROR(kind):`` prefix.
    """
    parts = []
    for block in result.content:
        kind = block.get("type")
        if kind == "text":
            parts.append(block["text"])
        elif kind == "data":
            parts.append(json.dumps(block["data"], sort_keys=True, separators=(",", ":")))
        elif kind == "image":
            token = result.digest()[:12]
            parts.append(f"[image {token} {block['width']}x{block['height']}]")
    body = "\n".join(parts)
    if result.is_error:
        return f"ERROR({result.error_kind}): {body}"
    return body


# --- trajectory (de)serialization -------------------------------------------------

def trajectory_to_dict(traj: Trajectory) -> dict:
    return {
        "case_id": traj.case_id,
        "query": traj.query,
        "steps": [
            {
                "index": s.index,
                "thought": s.thought,
                "action": {"name": s.action.name, "args": s.action.args},
                "observation": s.observation.as_payload(),
                "observation_digest": s.observation_digest(),
            }
            for s in traj.steps
        ],
        "final_answer": (
            {"text": traj.final_answer.text, "option": traj.final_answer.option}
            if traj.final_answer
            else None
        ),
        "terminated_by": traj.terminated_by,
        "key_map": traj.key_map,
    }


def trajectory_from_dict(data: dict) -> Trajectory:
    steps = [
        TrajectoryStep(
            index=s["index"],
            thought=s["thought"],
            action=ToolCall(s["action"]["name"], s["action"]["args"]),
            observation=ToolResult(
                tuple(s["observation"]["content"]),
                s["observation"]["isError"],
                s["observation"].get("errorKind"),
            ),
            recorded_digest=s.get("observation_digest"),
        )
        for s in data["steps"]
    ]
    fa = data.get("final_answer")
    return Trajectory(
        query=data["query"],
        case_id=data["case_id"],
        steps=steps,
        final_answer=FinalAnswer(fa["text"], fa.get("option")) if fa else None,
        terminated_by=data["terminated_by"],
        key_map=data.get("key_map"),
    )


def write_trajectories(path, trajectories) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for traj in trajectories:
            fh.write(json.dumps(trajectory_to_dict(traj), sort_keys=True, separators=(",", ":")))
            fh.write("\n")


def read_trajectories(path) -> list[Trajectory]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(trajectory_from_dict(json.loads(line)))
    return out


def recorded_step_digest(traj_dict_step: dict) -> str:
    return traj_dict_step["observation_digest"]


# --- external model adapter ---------------------------------------------------------

SYSTEM_PROMPT = (
    "You are a radiology assistant working over a 3D CT volume through tools. "
    "Call tools to gather evidence. When you are ready to answer, reply with a "
    'JSON object {"option": "<letter>", "text": "<justification>"} and no tool call.'
)


class ConfigurationError(Exception):
    pass


class AgentUnavailable(Exception):
    pass


@dataclass
class ExternalAgentConfig:
    endpoint: str
    model: str
    api_key: str | None = None
    max_retries: int = 3
    timeout_s: float = 60.0


class ExternalAgent:
    """Bridge to a chat-with-tool-calls HTTP endpoint.

    Tool descriptors become the function schema; a model tool call maps to
    a ToolCall move and a plain message maps to a FinalAnswer.  Transport
    retries with exponential backoff; persistent failure raises, which the
    episode loop records as agent_failure.
    """

    def __init__(self, config: ExternalAgentConfig, descriptors):
        if not config.endpoint or not config.model:
            raise ConfigurationError("external agent needs an endpoint and a model id")
        if not config.api_key:
            raise ConfigurationError("no credentials configured for the external agent")
        self.config = config
        self.tools = [
            {
                "type": "function",
                "function": {
                    "name": d.name,
                    "description": d.description,
                    "parameters": d.input_schema,
                },
            }
            for d in descriptors
        ]

    def _messages(self, query: str, steps) -> list[dict]:
        messages = [
            {"role": "system", "content": SYSTEM_PROMPT},
            {"role": "user", "content": query},
        ]
        for step in steps:
            messages.append(
                {
                    "role": "assistant",
                    "content": step.thought,
                    "tool_calls": [
                        {
                            "id": f"step-{step.index}",
                            "type": "function",
                            "function": {
                                "name": step.action.name,
                                "arguments": json.dumps(step.action.args),
                            },
                        }
                    ],
                }
            )
            messages.append(
                {
                    "role": "tool",
                    "tool_call_id": f"step-{step.index}",
                    "content": format_observation(step.observation),
                }
            )
        return messages

    def _post(self, payload: dict) -> dict:
        delay = 0.5
        last_error = None
        for _ in range(self.config.max_retries):
            try:
                response = requests.post(
                    self.config.endpoint,
                    json=payload,
                    headers={"Authorization": f"Bearer {self.config.api_key}"},
                    timeout=self.config.timeout_s,
                )
                if response.status_code >= 500:
                    raise requests.RequestException(f"server error {response.status_code}")
                response.raise_for_status()
                return response.json()
            except (requests.RequestException, ValueError) as err:
                last_error = err
                time.sleep(delay)
                delay *= 2
        raise AgentUnavailable(f"endpoint unreachable after {self.config.max_retries} attempts: {last_error}")

    def next_move(self, query: str, steps) -> AgentMove:
        payload = {
            "model": self.config.model,
            "messages": self._messages(query, steps),
            "tools": self.tools,
        }
        data = self._post(payload)
        message = data["choices"][0]["message"]
        tool_calls = message.get("tool_calls") or []
        if tool_calls:
            fn = tool_calls[0]["function"]
            args = json.loads(fn["arguments"]) if isinstance(fn["arguments"], str) else fn["arguments"]
            if not isinstance(args, dict):
                raise ValueError("tool call arguments must decode to an object")
            return AgentMove(thought=message.get("content") or "", action=ToolCall(fn["name"], args))
        content = message.get("content") or ""
        option = None
        text = content
        try:
            parsed = json.loads(content)
            if isinstance(parsed, dict) and "option" in parsed:
                option = str(parsed["option"])
                text = str(parsed.get("text", ""))
        except (json.JSONDecodeError, TypeError):
            pass
        return AgentMove(thought="", action=FinalAnswer(text=text, option=option))


def external_agent_adapter(config: ExternalAgentConfig, toolbox: Toolbox) -> ExternalAgent:
    """Wire an external chat endpoint to the move contract using the
    toolbox's own descriptors as the function schema."""
    return ExternalAgent(config, toolbox.list_tools())
