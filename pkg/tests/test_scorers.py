"""Question-DAG accumulation and embedding-correlation scorers."""

from __future__ import annotations

import json
import math
import random

import pytest

from segeval.errors import CoverageError, ParseError, ValidationError
from segeval.scorers import (
    AnswerTable,
    EmbeddingVector,
    Question,
    QuestionGraph,
    accumulate_scores,
    dsg_accumulate,
    embedding_correlation_score,
    embedding_score_table,
    load_answer_table,
    load_embeddings,
    load_question_graphs,
    tifa_accumulate,
)
from segeval.synth import SynthConfig, generate_segs

from conftest import chain_seg, collection_of


def qgraph(*questions: tuple[str, list[str], str], prompt_id: str = "p1") -> QuestionGraph:
    return QuestionGraph(
        prompt_id=prompt_id,
        questions=tuple(
            Question(id=qid, parent_ids=tuple(parents), expected_answer=ans)
            for qid, parents, ans in questions
        ),
    )


def random_dag(rng: random.Random, n_questions: int) -> QuestionGraph:
    questions = []
    for i in range(n_questions):
        n_parents = rng.randint(0, min(i, 2))
        parents = rng.sample([f"q{j}" for j in range(i)], n_parents)
        questions.append((f"q{i}", parents, "yes"))
    return qgraph(*questions)


def oracle_dsg(qg: QuestionGraph, answers: dict[str, str]) -> float:
    """Transitive-closure oracle: a question counts iff it and every ancestor
    (computed by explicit closure) are answered correctly."""
    parents = {q.id: set(q.parent_ids) for q in qg.questions}
    ancestors: dict[str, set[str]] = {}
    changed = True
    for qid in parents:
        ancestors[qid] = set(parents[qid])
    while changed:
        changed = False
        for qid in ancestors:
            extra = set()
            for a in ancestors[qid]:
                extra |= ancestors[a]
            if not extra <= ancestors[qid]:
                ancestors[qid] |= extra
                changed = True
    correct = {
        q.id: answers[q.id].strip().casefold() == q.expected_answer.strip().casefold()
        for q in qg.questions
    }
    n_ok = sum(
        1
        for q in qg.questions
        if correct[q.id] and all(correct[a] for a in ancestors[q.id])
    )
    return n_ok / len(qg.questions)


# ---------------------------------------------------------------------------
# tifa


def test_tifa_fraction_of_correct_answers():
    qg = qgraph(*[(f"q{i}", [], "yes") for i in range(8)])
    answers = {f"q{i}": "yes" for i in range(6)} | {"q6": "no", "q7": "no"}
    assert tifa_accumulate(qg, answers) == 0.75


def test_tifa_all_correct():
    qg = qgraph(("q1", [], "yes"), ("q2", ["q1"], "blue"))
    assert tifa_accumulate(qg, {"q1": "yes", "q2": "blue"}) == 1.0


def test_tifa_ignores_parent_failure():
    qg = qgraph(("q1", [], "yes"), ("q2", ["q1"], "yes"))
    assert tifa_accumulate(qg, {"q1": "no", "q2": "yes"}) == 0.5


def test_tifa_matching_is_trimmed_case_insensitive():
    qg = qgraph(("q1", [], "Yes"))
    assert tifa_accumulate(qg, {"q1": "  yes "}) == 1.0


def test_tifa_missing_answer_names_question():
    qg = qgraph(("q1", [], "yes"), ("q2", [], "yes"))
    with pytest.raises(CoverageError, match="q2"):
        tifa_accumulate(qg, {"q1": "yes"})


# ---------------------------------------------------------------------------
# dsg


def test_dsg_gates_child_on_wrong_parent():
    qg = qgraph(("q1", [], "yes"), ("q2", ["q1"], "yes"))
    assert dsg_accumulate(qg, {"q1": "no", "q2": "yes"}) == 0.0


def test_dsg_all_correct():
    qg = qgraph(("q1", [], "yes"), ("q2", ["q1"], "yes"))
    assert dsg_accumulate(qg, {"q1": "yes", "q2": "yes"}) == 1.0


def test_dsg_chain_counts_only_head():
    qg = qgraph(("q1", [], "yes"), ("q2", ["q1"], "yes"), ("q3", ["q2"], "yes"))
    answers = {"q1": "yes", "q2": "no", "q3": "yes"}
    assert dsg_accumulate(qg, answers) == pytest.approx(1 / 3)


def test_dsg_equals_tifa_on_flat_graph():
    rng = random.Random(23)
    qg = qgraph(*[(f"q{i}", [], "yes") for i in range(6)])
    for _ in range(20):
        answers = {f"q{i}": rng.choice(["yes", "no"]) for i in range(6)}
        assert dsg_accumulate(qg, answers) == tifa_accumulate(qg, answers)


def test_dsg_never_exceeds_tifa_on_random_dags():
    rng = random.Random(29)
    for _ in range(100):
        qg = random_dag(rng, rng.randint(1, 10))
        answers = {q.id: rng.choice(["yes", "no"]) for q in qg.questions}
        assert dsg_accumulate(qg, answers) <= tifa_accumulate(qg, answers)


def test_dsg_matches_transitive_closure_oracle():
    rng = random.Random(31)
    for _ in range(100):
        qg = random_dag(rng, rng.randint(1, 10))
        answers = {q.id: rng.choice(["yes", "no"]) for q in qg.questions}
        assert dsg_accumulate(qg, answers) == oracle_dsg(qg, answers)


# ---------------------------------------------------------------------------
# question graph / answer files


def test_question_graph_file_roundtrip(tmp_path):
    path = tmp_path / "q.json"
    path.write_text(
        json.dumps(
            {
                "prompt_id": "0001",
                "questions": [
                    {"id": "q1", "parent_ids": [], "expected_answer": "yes"},
                    {"id": "q2", "parent_ids": ["q1"], "expected_answer": "yes"},
                ],
            }
        )
    )
    graphs = load_question_graphs(path)
    assert len(graphs) == 1
    assert graphs[0].prompt_id == "0001"
    assert graphs[0].questions[1].parent_ids == ("q1",)


def test_question_graph_array_form(tmp_path):
    path = tmp_path / "q.json"
    path.write_text(
        json.dumps(
            [
                {"prompt_id": "a", "questions": [{"id": "q", "parent_ids": [], "expected_answer": "y"}]},
                {"prompt_id": "b", "questions": [{"id": "q", "parent_ids": [], "expected_answer": "y"}]},
            ]
        )
    )
    assert [g.prompt_id for g in load_question_graphs(path)] == ["a", "b"]


def test_cyclic_question_graph_rejected_at_load(tmp_path):
    path = tmp_path / "q.json"
    path.write_text(
        json.dumps(
            {
                "prompt_id": "p",
                "questions": [
                    {"id": "q1", "parent_ids": ["q2"], "expected_answer": "y"},
                    {"id": "q2", "parent_ids": ["q1"], "expected_answer": "y"},
                ],
            }
        )
    )
    with pytest.raises(ValidationError, match="cyclic"):
        load_question_graphs(path)


def test_unknown_parent_rejected(tmp_path):
    path = tmp_path / "q.json"
    path.write_text(
        json.dumps(
            {
                "prompt_id": "p",
                "questions": [{"id": "q1", "parent_ids": ["nope"], "expected_answer": "y"}],
            }
        )
    )
    with pytest.raises(ValidationError, match="unknown parent"):
        load_question_graphs(path)


def test_answer_table_csv(tmp_path):
    path = tmp_path / "a.csv"
    path.write_text(
        "seg_id,image_id,question_id,answer\n"
        "s1,i1,q1,yes\n"
        "s1,i1,q2,no\n"
        "s1,i2,q1,yes\n"
    )
    table = load_answer_table(path)
    assert table.images() == [("s1", "i1"), ("s1", "i2")]
    assert table.answers_for("s1", "i1") == {"q1": "yes", "q2": "no"}


def test_answer_table_bad_header(tmp_path):
    path = tmp_path / "a.csv"
    path.write_text("a,b,c,d\n")
    with pytest.raises(ParseError, match="bad header"):
        load_answer_table(path)


def test_accumulate_scores_builds_table():
    qg = qgraph(("q1", [], "yes"), ("q2", ["q1"], "yes"))
    answers = AnswerTable(
        entries={
            ("s1", "i1", "q1"): "yes",
            ("s1", "i1", "q2"): "yes",
            ("s1", "i2", "q1"): "no",
            ("s1", "i2", "q2"): "yes",
        }
    )
    tifa = accumulate_scores([qg], answers, "tifa")
    dsg = accumulate_scores([qg], answers, "dsg")
    assert tifa.metric_name == "p1-tifa-acc"
    assert dsg.metric_name == "p1-dsg-acc"
    assert tifa.entries[("s1", "i1")] == 1.0
    assert tifa.entries[("s1", "i2")] == 0.5
    assert dsg.entries[("s1", "i2")] == 0.0
    # gating only removes credit
    for key in tifa.entries:
        assert dsg.entries[key] <= tifa.entries[key]


def test_accumulate_scores_incomplete_answers_rejected():
    qg = qgraph(("q1", [], "yes"), ("q2", [], "yes"))
    answers = AnswerTable(entries={("s1", "i1", "q1"): "yes"})
    with pytest.raises(CoverageError, match="q2"):
        accumulate_scores([qg], answers, "tifa")


def test_accumulate_scores_multi_graph_matches_by_seg_id():
    qa = qgraph(("q1", [], "yes"), prompt_id="sa")
    qb = qgraph(("q1", [], "no"), prompt_id="sb")
    answers = AnswerTable(entries={("sa", "i", "q1"): "yes", ("sb", "i", "q1"): "yes"})
    table = accumulate_scores([qa, qb], answers, "tifa")
    assert table.metric_name == "questions-tifa-acc"
    assert table.entries[("sa", "i")] == 1.0
    assert table.entries[("sb", "i")] == 0.0


# ---------------------------------------------------------------------------
# embeddings


def test_cosine_identical_unit_vectors():
    v = EmbeddingVector(values=(1.0, 0.0), kind="text")
    w = EmbeddingVector(values=(1.0, 0.0), kind="image")
    assert embedding_correlation_score(v, w) == 1.0


def test_cosine_antipodal_clamped_to_zero():
    v = EmbeddingVector(values=(1.0, 0.0), kind="text")
    w = EmbeddingVector(values=(-1.0, 0.0), kind="image")
    assert embedding_correlation_score(v, w) == 0.0


def test_cosine_45_degrees():
    v = EmbeddingVector(values=(1.0, 0.0), kind="text")
    w = EmbeddingVector(values=(1 / math.sqrt(2), 1 / math.sqrt(2)), kind="image")
    assert embedding_correlation_score(v, w) == pytest.approx(0.7071068, abs=1e-6)


def test_cosine_scale_invariance():
    rng = random.Random(5)
    for _ in range(25):
        a = EmbeddingVector(values=tuple(rng.gauss(0, 1) for _ in range(8)), kind="text")
        b = EmbeddingVector(values=tuple(rng.gauss(0, 1) for _ in range(8)), kind="image")
        scaled = EmbeddingVector(values=tuple(4.25 * v for v in b.values), kind="image")
        assert embedding_correlation_score(a, scaled) == pytest.approx(
            embedding_correlation_score(a, b), abs=1e-12
        )


def test_cosine_dimension_mismatch_and_zero_norm():
    v = EmbeddingVector(values=(1.0, 0.0), kind="text")
    with pytest.raises(ValueError, match="dimension"):
        embedding_correlation_score(v, EmbeddingVector(values=(1.0,), kind="image"))
    with pytest.raises(ValueError, match="zero-norm"):
        embedding_correlation_score(v, EmbeddingVector(values=(0.0, 0.0), kind="image"))


def test_embedding_file_roundtrip(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("a 1.0 0.0\nb 0.5 0.5\n")
    vectors = load_embeddings(path, "image")
    assert set(vectors) == {"a", "b"}
    assert vectors["a"].values == (1.0, 0.0)
    assert vectors["a"].kind == "image"


def test_embedding_file_dimension_and_norm_checks(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("a 1.0 0.0\nb 0.5\n")
    with pytest.raises(ParseError, match="dimension"):
        load_embeddings(path, "text")
    path.write_text("a 0 0\n")
    with pytest.raises(ParseError, match="zero-norm"):
        load_embeddings(path, "text")


def test_embedding_score_table_pairs_prompt_with_images():
    seg = chain_seg([1, 1], seg_id="s")
    col = collection_of(seg)
    text = {"s": EmbeddingVector(values=(1.0, 0.0), kind="text")}
    images = {
        "0-0.jpg": EmbeddingVector(values=(1.0, 0.0), kind="image"),
        "1-0.jpg": EmbeddingVector(values=(0.0, 1.0), kind="image"),
    }
    table = embedding_score_table(col, text, images)
    assert table.entries[("s", "0-0.jpg")] == 1.0
    assert table.entries[("s", "1-0.jpg")] == 0.0
    with pytest.raises(CoverageError):
        embedding_score_table(col, {}, images)


def test_embedding_scores_feed_the_meta_metrics():
    from segeval.metametrics import rank_score

    collection = generate_segs(SynthConfig(seed=51, seg_count=3))
    for seg in collection:
        # image vectors rotate away from the prompt vector as errors grow
        text = {seg.id: EmbeddingVector(values=(1.0, 0.0), kind="text")}
        images = {}
        max_count = max(n.error_count for n in seg.nodes)
        for node in seg.nodes:
            angle = (math.pi / 2) * node.error_count / max_count
            for img in node.images:
                images[img] = EmbeddingVector(
                    values=(math.cos(angle), math.sin(angle)), kind="image"
                )
        table = embedding_score_table(collection_of(seg), text, images)
        assert rank_score(seg, table) == 1.0
