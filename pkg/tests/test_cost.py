"""FLOP estimation and the cost-quality Pareto frontier."""

from __future__ import annotations

import json
import math
import random

import pytest

from segeval.cost import (
    CostModel,
    CostStage,
    QualityCostPoint,
    estimate_flops,
    load_cost_models,
    pareto_frontier,
)
from segeval.errors import ParseError, ValidationError


def oracle_frontier(points):
    """O(n^2) pairwise dominance scan."""
    out = []
    for p in points:
        dominated = any(
            q.quality >= p.quality
            and q.cost_flops <= p.cost_flops
            and (q.quality > p.quality or q.cost_flops < p.cost_flops)
            for q in points
        )
        if not dominated:
            out.append(p)
    return sorted(out, key=lambda p: (p.cost_flops, p.quality, p.metric_name))


# ---------------------------------------------------------------------------
# estimate_flops


def test_embedding_metric_reproduces_604M():
    model = CostModel("clip-style", (CostStage(calls=2, tokens_per_call=1, model_params=1.51e8),))
    assert estimate_flops(model) == 6.04e8


def test_vqa_stage():
    model = CostModel("vqa", (CostStage(calls=8, tokens_per_call=20, model_params=7e9),))
    assert estimate_flops(model) == pytest.approx(2.24e12)


def test_stages_sum():
    model = CostModel(
        "two-stage",
        (
            CostStage(calls=8, tokens_per_call=40, model_params=1.75e11),
            CostStage(calls=8, tokens_per_call=20, model_params=7e9),
        ),
    )
    assert estimate_flops(model) == pytest.approx(8 * 40 * 2 * 1.75e11 + 8 * 20 * 2 * 7e9)


def test_invalid_models_rejected():
    with pytest.raises(ValueError, match="no stages"):
        estimate_flops(CostModel("empty", ()))
    with pytest.raises(ValueError, match="calls"):
        estimate_flops(CostModel("neg", (CostStage(calls=0, tokens_per_call=1, model_params=1.0),)))
    with pytest.raises(ValueError, match="model_params"):
        estimate_flops(CostModel("neg", (CostStage(calls=1, tokens_per_call=1, model_params=0.0),)))


def test_cost_model_file(tmp_path):
    path = tmp_path / "costs.json"
    path.write_text(
        json.dumps(
            [
                {"metric": "a", "stages": [{"calls": 2, "tokens_per_call": 1, "model_params": 1.51e8}]},
                {"metric": "b", "stages": [{"calls": 8, "tokens_per_call": 20, "model_params": 7e9}]},
            ]
        )
    )
    models = load_cost_models(path)
    assert set(models) == {"a", "b"}
    assert estimate_flops(models["a"]) == 6.04e8
    # single-object form
    path.write_text(json.dumps({"metric": "solo", "stages": [{"calls": 1, "tokens_per_call": 1, "model_params": 10}]}))
    assert set(load_cost_models(path)) == {"solo"}


def test_fixture_configurations_load():
    """Plausible stage decompositions; only the embedding total is pinned
    (the others are order-of-magnitude estimates, not ground truth)."""
    from pathlib import Path

    path = Path(__file__).parent / "fixtures" / "cost_models.json"
    models = load_cost_models(path)
    assert estimate_flops(models["embedding-corr"]) == 6.04e8
    flops = {name: estimate_flops(m) for name, m in models.items()}
    assert all(v > 0 for v in flops.values())
    assert flops["embedding-corr"] < flops["caption-llm"] < flops["vqa-flat-13b"]


def test_cost_model_file_errors(tmp_path):
    path = tmp_path / "costs.json"
    path.write_text(json.dumps({"metric": "x"}))
    with pytest.raises(ParseError, match="stages"):
        load_cost_models(path)
    path.write_text(
        json.dumps(
            [
                {"metric": "x", "stages": [{"calls": 1, "tokens_per_call": 1, "model_params": 1}]},
                {"metric": "x", "stages": [{"calls": 1, "tokens_per_call": 1, "model_params": 1}]},
            ]
        )
    )
    with pytest.raises(ValidationError, match="duplicate"):
        load_cost_models(path)


# ---------------------------------------------------------------------------
# pareto_frontier


def table2_points():
    # quality/cost fixture values taken from the published comparison table
    return [
        QualityCostPoint("clip-style", 71.4, 6.04e8),
        QualityCostPoint("vqa-flat", 76.5, 2.24e14),
        QualityCostPoint("vqa-gated", 79.6, 8.6e14),
    ]


def test_monotone_cost_quality_chain_all_on_frontier():
    frontier = pareto_frontier(table2_points())
    assert [p.metric_name for p in frontier] == ["clip-style", "vqa-flat", "vqa-gated"]


def test_dominated_point_excluded():
    points = table2_points() + [QualityCostPoint("weak", 70.0, 2.24e14)]
    frontier = pareto_frontier(points)
    assert "weak" not in [p.metric_name for p in frontier]
    assert len(frontier) == 3


def test_single_point_is_its_own_frontier():
    p = QualityCostPoint("solo", 50.0, 1e9)
    assert pareto_frontier([p]) == [p]


def test_ties_in_both_dimensions_both_retained():
    points = [
        QualityCostPoint("a", 50.0, 1e9),
        QualityCostPoint("b", 50.0, 1e9),
    ]
    assert {p.metric_name for p in pareto_frontier(points)} == {"a", "b"}


def test_duplicate_metric_names_rejected():
    points = [QualityCostPoint("a", 1.0, 1.0), QualityCostPoint("a", 2.0, 2.0)]
    with pytest.raises(ValidationError, match="duplicate"):
        pareto_frontier(points)


def test_frontier_matches_oracle_on_50_random_sets():
    rng = random.Random(61)
    for _ in range(50):
        n = rng.randint(1, 50)
        points = [
            QualityCostPoint(
                f"m{i}",
                rng.choice([rng.uniform(0, 100), rng.randint(0, 10) * 10.0]),
                rng.choice([rng.uniform(1, 1e15), float(rng.randint(1, 5)) * 1e9]),
            )
            for i in range(n)
        ]
        got = pareto_frontier(points)
        assert got == oracle_frontier(points)
        costs = [p.cost_flops for p in got]
        assert costs == sorted(costs)


def test_frontier_invariant_under_monotone_cost_rescaling():
    rng = random.Random(67)
    points = [
        QualityCostPoint(f"m{i}", rng.uniform(0, 100), rng.uniform(1, 1e12)) for i in range(30)
    ]
    base = {p.metric_name for p in pareto_frontier(points)}
    rescaled = [
        QualityCostPoint(p.metric_name, p.quality, math.log1p(p.cost_flops) + 1.0)
        for p in points
    ]
    assert {p.metric_name for p in pareto_frontier(rescaled)} == base


def test_every_point_on_frontier_or_dominated():
    rng = random.Random(71)
    points = [
        QualityCostPoint(f"m{i}", rng.uniform(0, 100), rng.uniform(1, 1e12)) for i in range(40)
    ]
    frontier = pareto_frontier(points)
    names = {p.metric_name for p in frontier}
    for p in points:
        if p.metric_name in names:
            continue
        assert any(
            f.quality >= p.quality
            and f.cost_flops <= p.cost_flops
            and (f.quality > p.quality or f.cost_flops < p.cost_flops)
            for f in frontier
        )
