"""Reference score producers.

Converts externally supplied artifacts into standard per-image score tables:

* requirement-question answers on a dependency DAG, combined either as the
  flat correct-answer rate (``tifa`` accumulation) or with ancestor gating,
  where a question only counts if it and every question upstream of it are
  answered correctly (``dsg`` accumulation);
* precomputed text/image embedding vectors, scored by cosine similarity
  clamped below at zero.

No model is ever run here; question generation, visual question answering,
and embedding extraction all happen upstream and enter as files.

Formats: question graphs are JSON objects
``{"prompt_id": str, "questions": [{"id": str, "parent_ids": [str, ...],
"expected_answer": str}, ...]}`` (a top-level array of such objects is also
accepted); answers are CSV ``seg_id,image_id,question_id,answer``;
embeddings are text files with one ``id v1 v2 ...`` record per line.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Mapping

from .errors import CoverageError, ParseError, ValidationError
from .metametrics import ScoreTable
from .seg import SegCollection

AccumulationMode = Literal["tifa", "dsg"]

ACCUMULATION_MODES = ("tifa", "dsg")


@dataclass(frozen=True)
class Question:
    id: str
    parent_ids: tuple[str, ...]
    expected_answer: str


@dataclass(frozen=True)
class QuestionGraph:
    prompt_id: str
    questions: tuple[Question, ...]

    def question_ids(self) -> set[str]:
        return {q.id for q in self.questions}


@dataclass(frozen=True)
class AnswerTable:
    """Answers keyed by (seg_id, image_id, question_id)."""

    entries: Mapping[tuple[str, str, str], str]

    def images(self) -> list[tuple[str, str]]:
        seen = []
        found = set()
        for seg_id, image_id, _ in self.entries:
            if (seg_id, image_id) not in found:
                found.add((seg_id, image_id))
                seen.append((seg_id, image_id))
        return sorted(seen)

    def answers_for(self, seg_id: str, image_id: str) -> dict[str, str]:
        return {
            qid: ans
            for (sid, iid, qid), ans in self.entries.items()
            if sid == seg_id and iid == image_id
        }


def _normalize_answer(text: str) -> str:
    return text.strip().casefold()


def _check_acyclic(qg: QuestionGraph, source: str) -> None:
    parents = {q.id: q.parent_ids for q in qg.questions}
    state: dict[str, int] = {}

    def visit(qid: str) -> bool:
        state[qid] = 0
        for pid in parents[qid]:
            s = state.get(pid)
            if s == 0 or (s is None and visit(pid)):
                return True
        state[qid] = 1
        return False

    for qid in parents:
        if qid not in state and visit(qid):
            raise ValidationError(
                f"{source}: question graph {qg.prompt_id!r} has a cyclic dependency"
            )


def _parse_question_graph(data: dict, source: str) -> QuestionGraph:
    if not isinstance(data, dict):
        raise ParseError("question graph must be an object", source=source)
    for key in ("prompt_id", "questions"):
        if key not in data:
            raise ParseError(f"question graph missing field {key!r}", source=source)
    prompt_id = data["prompt_id"]
    if not isinstance(prompt_id, str):
        raise ParseError("field 'prompt_id' must be a string", source=source)
    questions = []
    ids = set()
    for i, q in enumerate(data["questions"]):
        where = f"questions[{i}]"
        if not isinstance(q, dict):
            raise ParseError(f"{where}: must be an object", source=source)
        for key in ("id", "parent_ids", "expected_answer"):
            if key not in q:
                raise ParseError(f"{where}: missing field {key!r}", source=source)
        qid = q["id"]
        if not isinstance(qid, str) or not qid:
            raise ParseError(f"{where}: field 'id' must be a non-empty string", source=source)
        if qid in ids:
            raise ValidationError(f"{source}: duplicate question id {qid!r}")
        ids.add(qid)
        parent_ids = q["parent_ids"]
        if not isinstance(parent_ids, list) or not all(isinstance(p, str) for p in parent_ids):
            raise ParseError(f"{where}: field 'parent_ids' must be a list of strings", source=source)
        expected = q["expected_answer"]
        if not isinstance(expected, str):
            raise ParseError(f"{where}: field 'expected_answer' must be a string", source=source)
        questions.append(Question(id=qid, parent_ids=tuple(parent_ids), expected_answer=expected))
    for q in questions:
        for pid in q.parent_ids:
            if pid not in ids:
                raise ValidationError(
                    f"{source}: question {q.id!r} references unknown parent {pid!r}"
                )
    qg = QuestionGraph(prompt_id=prompt_id, questions=tuple(questions))
    _check_acyclic(qg, source)
    return qg


def load_question_graphs(path: str | Path) -> list[QuestionGraph]:
    """One or more question graphs from a JSON file (object or array)."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}", source=str(path)) from exc
    items = data if isinstance(data, list) else [data]
    if not items:
        raise ParseError("no question graphs in file", source=str(path))
    graphs = [_parse_question_graph(item, str(path)) for item in items]
    seen: set[str] = set()
    for g in graphs:
        if g.prompt_id in seen:
            raise ValidationError(f"{path}: duplicate prompt_id {g.prompt_id!r}")
        seen.add(g.prompt_id)
    return graphs


def load_answer_table(path: str | Path) -> AnswerTable:
    path = Path(path)
    header = ["seg_id", "image_id", "question_id", "answer"]
    entries: dict[tuple[str, str, str], str] = {}
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise ParseError("empty answer file", source=str(path)) from None
        if got != header:
            raise ParseError(f"bad header {got!r}, expected {header!r}", source=str(path))
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(f"line {lineno}: expected 4 fields, got {len(row)}", source=str(path))
            key = (row[0], row[1], row[2])
            if key in entries:
                raise ParseError(f"line {lineno}: duplicate answer for {key}", source=str(path))
            entries[key] = row[3]
    return AnswerTable(entries=entries)


# ---------------------------------------------------------------------------
# accumulation


def _correctness(qg: QuestionGraph, answers: Mapping[str, str]) -> dict[str, bool]:
    missing = sorted(q.id for q in qg.questions if q.id not in answers)
    if missing:
        raise CoverageError(
            "missing answer(s) for question id(s): " + ", ".join(missing), missing=missing
        )
    return {
        q.id: _normalize_answer(answers[q.id]) == _normalize_answer(q.expected_answer)
        for q in qg.questions
    }


def tifa_accumulate(qg: QuestionGraph, answers: Mapping[str, str]) -> float:
    """Flat correct-answer rate over all questions, in [0, 1]."""
    correct = _correctness(qg, answers)
    return sum(correct.values()) / len(correct)


def dsg_accumulate(qg: QuestionGraph, answers: Mapping[str, str]) -> float:
    """Ancestor-gated satisfaction rate, in [0, 1].

    A question is satisfied iff its own answer is correct and every parent
    question is satisfied (so a wrong answer anywhere upstream removes
    credit for the whole subtree).
    """
    correct = _correctness(qg, answers)
    parents = {q.id: q.parent_ids for q in qg.questions}
    satisfied: dict[str, bool] = {}

    def sat(qid: str) -> bool:
        if qid not in satisfied:
            satisfied[qid] = correct[qid] and all(sat(p) for p in parents[qid])
        return satisfied[qid]

    return sum(sat(q.id) for q in qg.questions) / len(qg.questions)


def accumulate_scores(
    graphs: list[QuestionGraph],
    answers: AnswerTable,
    mode: AccumulationMode,
    metric_name: str | None = None,
) -> ScoreTable:
    """Score every (seg, image) in the answer table under one accumulation rule.

    With a single graph it applies to every seg in the table; with several,
    each seg uses the graph whose prompt_id equals the seg id.  The metric
    name defaults to the prompt id (or "questions") suffixed ``-{mode}-acc``.
    """
    if mode not in ACCUMULATION_MODES:
        raise ValueError(f"unknown accumulation mode: {mode!r}")
    if not graphs:
        raise ValueError("no question graphs given")
    accumulate = tifa_accumulate if mode == "tifa" else dsg_accumulate
    by_prompt = {g.prompt_id: g for g in graphs}
    base = metric_name or (graphs[0].prompt_id if len(graphs) == 1 else "questions")
    name = f"{base}-{mode}-acc"

    entries: dict[tuple[str, str], float] = {}
    for seg_id, image_id in answers.images():
        if len(graphs) == 1:
            qg = graphs[0]
        elif seg_id in by_prompt:
            qg = by_prompt[seg_id]
        else:
            raise CoverageError(
                f"no question graph with prompt_id {seg_id!r} for seg {seg_id!r}"
            )
        per_image = answers.answers_for(seg_id, image_id)
        unknown = sorted(set(per_image) - qg.question_ids())
        if unknown:
            raise ValidationError(
                f"answers for seg {seg_id!r} image {image_id!r} reference unknown "
                "question id(s): " + ", ".join(unknown)
            )
        try:
            entries[(seg_id, image_id)] = accumulate(qg, per_image)
        except CoverageError as exc:
            raise CoverageError(
                f"seg {seg_id!r} image {image_id!r}: {exc}", missing=exc.missing
            ) from exc
    return ScoreTable(metric_name=name, entries=entries)


# ---------------------------------------------------------------------------
# embedding correlation


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    kind: Literal["text", "image"]

    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.values))


def load_embeddings(path: str | Path, kind: Literal["text", "image"]) -> dict[str, EmbeddingVector]:
    """Parse ``id v1 v2 ...`` records; all vectors must share a dimension."""
    path = Path(path)
    vectors: dict[str, EmbeddingVector] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            vec_id, raw = parts[0], parts[1:]
            if not raw:
                raise ParseError(f"line {lineno}: record {vec_id!r} has no values", source=str(path))
            if vec_id in vectors:
                raise ParseError(f"line {lineno}: duplicate id {vec_id!r}", source=str(path))
            try:
                values = tuple(float(tok) for tok in raw)
            except ValueError:
                raise ParseError(f"line {lineno}: non-numeric value in record {vec_id!r}", source=str(path)) from None
            if not all(math.isfinite(v) for v in values):
                raise ParseError(f"line {lineno}: non-finite value in record {vec_id!r}", source=str(path))
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise ParseError(
                    f"line {lineno}: record {vec_id!r} has dimension {len(values)}, expected {dim}",
                    source=str(path),
                )
            vec = EmbeddingVector(values=values, kind=kind)
            if vec.norm() == 0.0:
                raise ParseError(f"line {lineno}: zero-norm vector {vec_id!r}", source=str(path))
            vectors[vec_id] = vec
    if not vectors:
        raise ParseError("no embedding records found", source=str(path))
    return vectors


def embedding_correlation_score(text_vec: EmbeddingVector, image_vec: EmbeddingVector) -> float:
    """Cosine similarity clamped to [0, 1]."""
    if len(text_vec.values) != len(image_vec.values):
        raise ValueError(
            f"dimension mismatch: {len(text_vec.values)} vs {len(image_vec.values)}"
        )
    nt, ni = text_vec.norm(), image_vec.norm()
    if nt == 0.0 or ni == 0.0:
        raise ValueError("zero-norm embedding vector")
    dot = sum(a * b for a, b in zip(text_vec.values, image_vec.values))
    return min(1.0, max(0.0, dot / (nt * ni)))


def embedding_score_table(
    collection: SegCollection,
    text_embeddings: Mapping[str, EmbeddingVector],
    image_embeddings: Mapping[str, EmbeddingVector],
    metric_name: str = "embedding-corr",
) -> ScoreTable:
    """Score every image of every SEG against its prompt's text embedding.

    Text vectors are keyed by seg id, image vectors by image id.
    """
    entries: dict[tuple[str, str], float] = {}
    missing: list[tuple[str, str]] = []
    for seg in collection:
        if seg.id not in text_embeddings:
            missing.append((seg.id, "<prompt>"))
            continue
        tv = text_embeddings[seg.id]
        for img in seg.image_ids():
            if img not in image_embeddings:
                missing.append((seg.id, img))
                continue
            entries[(seg.id, img)] = embedding_correlation_score(tv, image_embeddings[img])
    if missing:
        raise CoverageError(
            "missing embedding(s) for: "
            + ", ".join(f"{s}/{i}" for s, i in missing[:10])
            + ("..." if len(missing) > 10 else ""),
            missing=missing,
        )
    return ScoreTable(metric_name=metric_name, entries=entries)
