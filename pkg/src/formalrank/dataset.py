"""Problem/candidate schema and the JSONL dataset loader.

One problem per line.  MATH-style files label each candidate by hand
(``labels``); miniF2F-style files carry a reference formalization
(``oracle_formal``) and correctness is derived by equivalence checking.
A file must not mix the two modes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .parser import ParseError, parse_statement
from .statement import FormalStatement


class SchemaError(Exception):
    def __init__(self, message: str, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}")
        self.line = line


@dataclass
class Candidate:
    id: str
    formal_text: str
    logprob: float | None = None
    baseline_rank: int | None = None
    parse: FormalStatement | None = None
    parse_error: str = ""
    s_sym: float | None = None
    s_sem: float | None = None
    combined: float | None = None

    def ensure_parsed(self) -> None:
        """Parse lazily; unparseable candidates stay opaque, never dropped."""
        if self.parse is not None or self.parse_error:
            return
        try:
            self.parse = parse_statement(self.formal_text)
        except ParseError as exc:
            self.parse_error = str(exc)


@dataclass
class Problem:
    id: str
    informal_text: str
    candidates: list[Candidate]
    oracle_formal: str | None = None
    labels: list[bool] | None = None


@dataclass
class LabeledProblem:
    problem: Problem

    @property
    def manual(self) -> bool:
        return self.problem.labels is not None

    def label_map(self) -> dict[str, bool]:
        if self.problem.labels is None:
            raise SchemaError(f"problem {self.problem.id} carries no manual labels")
        return {
            c.id: bool(lab)
            for c, lab in zip(self.problem.candidates, self.problem.labels)
        }


_PROBLEM_KEYS = {"id", "informal_text", "candidates", "oracle_formal", "labels"}
_CANDIDATE_KEYS = {"id", "formal_text", "logprob", "baseline_rank"}


def _parse_problem(record: dict, line: int) -> Problem:
    unknown = set(record) - _PROBLEM_KEYS
    if unknown:
        raise SchemaError(f"unknown problem keys {sorted(unknown)}", line)
    for key in ("id", "informal_text", "candidates"):
        if key not in record:
            raise SchemaError(f"problem missing {key!r}", line)
    candidates = []
    seen_ids = set()
    for entry in record["candidates"]:
        unknown = set(entry) - _CANDIDATE_KEYS
        if unknown:
            raise SchemaError(f"unknown candidate keys {sorted(unknown)}", line)
        if "id" not in entry or "formal_text" not in entry:
            raise SchemaError("candidate missing id or formal_text", line)
        if entry["id"] in seen_ids:
            raise SchemaError(f"duplicate candidate id {entry['id']!r}", line)
        seen_ids.add(entry["id"])
        candidates.append(
            Candidate(
                id=str(entry["id"]),
                formal_text=entry["formal_text"],
                logprob=entry.get("logprob"),
                baseline_rank=entry.get("baseline_rank"),
            )
        )
    labels = record.get("labels")
    oracle = record.get("oracle_formal")
    if labels is not None and oracle is not None:
        raise SchemaError("problem has both labels and oracle_formal", line)
    if labels is not None and len(labels) != len(candidates):
        raise SchemaError(
            f"{len(labels)} labels for {len(candidates)} candidates", line
        )
    return Problem(
        id=str(record["id"]),
        informal_text=record["informal_text"],
        candidates=candidates,
        oracle_formal=oracle,
        labels=[bool(x) for x in labels] if labels is not None else None,
    )


def load_dataset(path: str | Path) -> list[LabeledProblem]:
    """Load and schema-check a JSONL problem file.

    Labeling mode (manual vs oracle) must be consistent across the file;
    fully unlabeled problems are allowed (rank-only use) but any labeled
    one pins the mode.
    """
    problems: list[LabeledProblem] = []
    mode: str | None = None
    seen_ids: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"invalid JSON: {exc.msg}", line_no) from exc
            problem = _parse_problem(record, line_no)
            if problem.id in seen_ids:
                raise SchemaError(f"duplicate problem id {problem.id!r}", line_no)
            seen_ids.add(problem.id)
            this_mode = None
            if problem.labels is not None:
                this_mode = "manual"
            elif problem.oracle_formal is not None:
                this_mode = "oracle"
            if this_mode is not None:
                if mode is None:
                    mode = this_mode
                elif mode != this_mode:
                    raise SchemaError(
                        f"mixed labeling modes in one file ({mode} then {this_mode})",
                        line_no,
                    )
            problems.append(LabeledProblem(problem))
    return problems
