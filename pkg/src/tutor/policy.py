"""Prompt assembly, hint escalation, and the no-full-solutions guardrail.

Everything here is a pure function except `enforce_guardrail`, whose single
regeneration attempt calls back into the provider. The assembled prompt has a
fixed section order (system, course material, task, code, history, user
message) that serializes with explicit markers so tests can parse it back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Sequence

from .errors import MissingContext
from .kb import CourseChunk
from .provider import ChatProvider

SECTION_COURSE = "course_material"
SECTION_TASK = "task_description"
SECTION_CODE = "student_code"

GROUNDING_INSTRUCTION = ("answer only from the provided course material; do not provide "
                         "complete solutions; respond with hints and guiding questions")

DEFAULT_SYSTEM_TEMPLATE = (
    "You are the programming tutor for {course_name}.\n"
    "Your job is didactic guidance: " + GROUNDING_INSTRUCTION + ".\n"
    "If the course material below does not cover the question, say so instead of inventing an answer.\n"
    "Current hint level: {hint_level} of 3. Higher levels may narrow the solution space, "
    "but never hand over a full implementation."
)

GUARDRAIL_REMINDER = ("Reminder: your previous draft contained too much code. Do not provide "
                      "complete solutions or long code blocks; replace code with hints and "
                      "guiding questions.")

REDACTION_PLACEHOLDER = "[code withheld — try building this step yourself; ask for a hint]"

DEFAULT_SOLUTION_KEYWORDS = (
    "implement",
    "write the code",
    "full solution",
    "solve it for me",
    "give me the code",
)


class Awareness(str, Enum):
    """Which live student context accompanies a prompt."""

    NONE = "none"
    TASK = "task"
    CODE = "code"
    TASK_AND_CODE = "task_and_code"

    @property
    def wants_task(self) -> bool:
        return self in (Awareness.TASK, Awareness.TASK_AND_CODE)

    @property
    def wants_code(self) -> bool:
        return self in (Awareness.CODE, Awareness.TASK_AND_CODE)


@dataclass(frozen=True)
class HintState:
    """Hint depth for one thread; level tracks the trailing run of solution requests."""

    level: int = 1
    consecutive_solution_requests: int = 0


@dataclass(frozen=True)
class LeakReport:
    """Result of scanning a response for solution-sized code blocks."""

    leaked: bool
    offending_blocks: tuple[tuple[int, int, int], ...] = ()  # (start_line, end_line, non_blank_lines)
    action_taken: str = "none"  # none | regenerated | redacted


@dataclass
class PromptBundle:
    """The fully assembled provider request."""

    system_text: str
    context_sections: list[tuple[str, str]]
    history: list[tuple[str, str]]  # (role in {student, tutor}, text)
    user_message: str
    token_estimate: int = 0

    def render_text(self) -> str:
        """Flatten to one string with section markers (used for estimates and tests)."""
        parts = ["<<system>>\n" + self.system_text]
        for label, text in self.context_sections:
            parts.append(f"<<section:{label}>>\n{text}")
        for role, text in self.history:
            parts.append(f"<<history:{role}>>\n{text}")
        parts.append("<<user>>\n" + self.user_message)
        return "\n\n".join(parts)

    def to_messages(self) -> list[dict[str, str]]:
        """Chat-completions message array: system carries policy plus context sections."""
        system = self.system_text
        if self.context_sections:
            rendered = "\n\n".join(f"[{label}]\n{text}" for label, text in self.context_sections)
            system = system + "\n\n" + rendered
        messages = [{"role": "system", "content": system}]
        for role, text in self.history:
            messages.append({"role": "user" if role == "student" else "assistant", "content": text})
        messages.append({"role": "user", "content": self.user_message})
        return messages


def estimate_tokens(text: str) -> int:
    """Default token estimator: ceil(chars / 4)."""
    return math.ceil(len(text) / 4)


def classify_solution_request(message: str, keywords: Sequence[str] | None = None) -> bool:
    """True iff the lowercased message contains any configured keyword or phrase."""
    haystack = message.lower()
    for keyword in keywords if keywords is not None else DEFAULT_SOLUTION_KEYWORDS:
        if keyword.lower() in haystack:
            return True
    return False


def update_hint_state(state: HintState, is_solution_request: bool) -> HintState:
    """Escalate on a solution request (capped at 3), reset otherwise."""
    if not is_solution_request:
        return HintState(level=1, consecutive_solution_requests=0)
    runs = state.consecutive_solution_requests + 1
    return HintState(level=min(3, 1 + runs), consecutive_solution_requests=runs)


def truncate_history(history: list[tuple[str, str]], token_budget: int,
                     estimator: Callable[[str], int] = estimate_tokens) -> list[tuple[str, str]]:
    """Drop whole oldest turns until the estimate fits the budget (result is a suffix)."""
    if token_budget < 0:
        raise ValueError("token budget must be >= 0")
    kept = list(history)
    while kept and sum(estimator(text) for _, text in kept) > token_budget:
        kept.pop(0)
    return kept


def assemble_prompt(*, history: list[tuple[str, str]], hint_level: int, user_message: str,
                    awareness: Awareness, retrieved_chunks: Sequence[CourseChunk],
                    task_text: str | None = None, code_snapshot: str | None = None,
                    course_name: str = "the course",
                    system_template: str = DEFAULT_SYSTEM_TEMPLATE,
                    token_budget: int = 3000,
                    estimator: Callable[[str], int] = estimate_tokens) -> PromptBundle:
    """Build the provider-bound bundle for one student message.

    Section order is fixed: system, retrieved chunks, task (if the awareness
    level includes it), code (likewise), truncated history, user message.
    Raises MissingContext when the awareness level demands absent context.
    """
    if awareness.wants_task and not task_text:
        raise MissingContext(f"awareness {awareness.value!r} requires a task description")
    if awareness.wants_code and not code_snapshot:
        raise MissingContext(f"awareness {awareness.value!r} requires a code snapshot")

    system_text = system_template.format(hint_level=hint_level, course_name=course_name)
    sections: list[tuple[str, str]] = [(SECTION_COURSE, chunk.text) for chunk in retrieved_chunks]
    if awareness.wants_task:
        sections.append((SECTION_TASK, task_text))
    if awareness.wants_code:
        sections.append((SECTION_CODE, code_snapshot))

    base = PromptBundle(system_text=system_text, context_sections=sections,
                        history=[], user_message=user_message)
    history_budget = max(0, token_budget - estimator(base.render_text()))
    kept = truncate_history(list(history), history_budget, estimator)
    bundle = PromptBundle(system_text=system_text, context_sections=sections,
                          history=kept, user_message=user_message)
    # Marker overhead is not covered by the per-turn estimator; trim further if needed.
    while bundle.history and estimator(bundle.render_text()) > token_budget:
        bundle.history = bundle.history[1:]
    bundle.token_estimate = estimator(bundle.render_text())
    return bundle


# --- solution-leak detection ------------------------------------------------

def _is_fence(line: str) -> bool:
    # Markdown allows up to 3 leading spaces; 4+ means indented code, not a fence.
    return line.lstrip().startswith("```") and (len(line) - len(line.lstrip())) < 4


def _is_indented_code(line: str) -> bool:
    return bool(line.strip()) and (line.startswith("    ") or line.startswith("\t"))


def detect_solution_leak(response_text: str, max_code_lines: int = 8) -> LeakReport:
    """Flag fenced blocks and indented runs with more than max_code_lines non-blank lines.

    Block coordinates are 1-based content line numbers; the per-block rule
    never sums across blocks.
    """
    lines = response_text.splitlines()
    blocks: list[tuple[int, int, int]] = []  # content (start, end, non_blank)

    in_fence = False
    fence_start = 0
    outside = []  # indices of lines outside any fence
    for i, line in enumerate(lines):
        if _is_fence(line):
            if not in_fence:
                in_fence = True
                fence_start = i + 1
            else:
                blocks.append(_block_span(lines, fence_start, i - 1))
                in_fence = False
            continue
        if not in_fence:
            outside.append(i)
    if in_fence and fence_start <= len(lines) - 1:
        blocks.append(_block_span(lines, fence_start, len(lines) - 1))

    run: list[int] = []
    for i in outside:
        line = lines[i]
        if _is_indented_code(line):
            run.append(i)
        elif not line.strip() and run:
            pass  # interior blank lines keep an indented run open
        else:
            if run:
                blocks.append(_block_span(lines, run[0], run[-1]))
            run = []
    if run:
        blocks.append(_block_span(lines, run[0], run[-1]))

    offending = tuple(b for b in sorted(blocks) if b[2] > max_code_lines)
    return LeakReport(leaked=bool(offending), offending_blocks=offending)


def _block_span(lines: list[str], start: int, end: int) -> tuple[int, int, int]:
    non_blank = sum(1 for i in range(start, end + 1) if lines[i].strip())
    return (start + 1, end + 1, non_blank)


def redact_blocks(response_text: str, blocks: Sequence[tuple[int, int, int]]) -> str:
    """Replace offending blocks (including their fences) with the placeholder."""
    lines = response_text.splitlines()
    for start, end, _count in sorted(blocks, reverse=True):
        lo, hi = start - 1, end - 1
        if lo - 1 >= 0 and _is_fence(lines[lo - 1]):
            lo -= 1
        if hi + 1 < len(lines) and _is_fence(lines[hi + 1]):
            hi += 1
        lines[lo:hi + 1] = [REDACTION_PLACEHOLDER]
    return "\n".join(lines)


def enforce_guardrail(response_text: str, leak: LeakReport, provider: ChatProvider,
                      bundle: PromptBundle, max_code_lines: int = 8) -> tuple[str, LeakReport]:
    """Apply the no-full-solutions rule: one regeneration attempt, then redaction."""
    if not leak.leaked:
        return response_text, replace(leak, action_taken="none")

    retry_bundle = PromptBundle(
        system_text=bundle.system_text + "\n\n" + GUARDRAIL_REMINDER,
        context_sections=list(bundle.context_sections),
        history=list(bundle.history),
        user_message=bundle.user_message,
        token_estimate=bundle.token_estimate,
    )
    second = provider.complete(retry_bundle)
    second_leak = detect_solution_leak(second.text, max_code_lines)
    if not second_leak.leaked:
        return second.text, LeakReport(leaked=True, offending_blocks=leak.offending_blocks,
                                       action_taken="regenerated")
    redacted = redact_blocks(second.text, second_leak.offending_blocks)
    return redacted, LeakReport(leaked=True, offending_blocks=second_leak.offending_blocks,
                                action_taken="redacted")
