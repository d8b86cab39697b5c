import json
import math
import random
from fractions import Fraction

import pytest

from whatif.graph import (
    BipartiteGraph,
    UNIT_COSTS,
    build_graph,
    decision_information,
    ged_exact,
    ged_named,
)
from whatif.model import INF, to_standard_form
from whatif.parser import parse_model
from whatif.patch import apply_patch, parse_patch

from oracles import perturb_graph, random_graph


def graph_of(source: str) -> BipartiteGraph:
    return build_graph(to_standard_form(parse_model(source)))


@pytest.fixture()
def aircraft_graph(aircraft_source):
    return graph_of(aircraft_source)


@pytest.fixture()
def q5_graph(aircraft_q5_source):
    return graph_of(aircraft_q5_source)


class TestBuildGraph:
    def test_aircraft_counts(self, aircraft_graph):
        assert len(aircraft_graph.constraint_vertices) == 2
        assert len(aircraft_graph.variable_vertices) == 2
        assert len(aircraft_graph.edges) == 4
        assert aircraft_graph.size == 4 + 2 * 2 + 3 * 2 == 14

    def test_attributes(self, aircraft_graph):
        cons = aircraft_graph.constraint_attrs()
        assert cons["PassengerDemand"] == (10000.0, INF)
        assert cons["Operational"] == (-INF, 50.0)
        variables = aircraft_graph.variable_attrs()
        assert variables["A"] == (0.0, INF, 10000.0)
        assert variables["B"] == (0.0, INF, 5000.0)
        assert aircraft_graph.edges[("PassengerDemand", "A")] == 500.0

    def test_q5_counts(self, q5_graph):
        assert len(q5_graph.constraint_vertices) == 4
        assert len(q5_graph.variable_vertices) == 2
        assert len(q5_graph.edges) == 6
        assert q5_graph.size == 20

    def test_isolated_vertices_preserved(self):
        # y never appears with a nonzero coefficient; r2 is an empty row
        graph = graph_of(
            "# EOR DATA BEGIN\n# EOR DATA END\n"
            "minimize: x + 0 y\n"
            "subject to:\n# EOR CONSTRAINT BEGIN\n"
            "  r: x - x + y - y + x >= 1\n"
            "  r2: y - y >= -5\n"
            "# EOR CONSTRAINT END\n"
        )
        assert len(graph.variable_vertices) == 2
        assert len(graph.constraint_vertices) == 2
        assert ("r", "y") not in graph.edges
        assert not any(c == "r2" for c, _ in graph.edges)
        assert graph.size == 1 + 2 * 2 + 3 * 2


class TestGedNamed:
    def test_identity(self, aircraft_graph):
        report = ged_named(aircraft_graph, aircraft_graph)
        assert report.ged == 0
        assert report.nged == 0.0

    def test_query5_insertions(self, aircraft_graph, q5_graph):
        report = ged_named(q5_graph, aircraft_graph)
        assert report.ged == 6
        assert report.nged == pytest.approx(6 / 20, abs=1e-12)
        assert report.breakdown["constraint-insert"] == 2
        assert report.breakdown["edge-insert"] == 2
        assert report.size_original == 14 and report.size_updated == 20

    def test_query1_substitution(self, aircraft_source):
        patched = apply_patch(
            aircraft_source, parse_patch('{"ADD DATA": "param costA = 8000"}')
        )
        report = ged_named(graph_of(patched), graph_of(aircraft_source))
        assert report.ged == 1
        assert report.nged == pytest.approx(1 / 14, abs=1e-12)
        assert report.breakdown["variable-substituted-attrs"] == 1

    def test_ged_equals_weighted_breakdown(self, aircraft_graph, q5_graph):
        report = ged_named(q5_graph, aircraft_graph)
        assert report.ged == sum(
            UNIT_COSTS[key] * count for key, count in report.breakdown.items()
        )

    def test_symmetry(self, aircraft_graph, q5_graph):
        assert ged_named(q5_graph, aircraft_graph).ged == ged_named(aircraft_graph, q5_graph).ged

    def test_duplicate_names_rejected(self):
        dup = BipartiteGraph(
            (("c", (0.0, 1.0)), ("c", (0.0, 2.0))), (("x", (0.0, INF, 1.0)),), {}
        )
        ok = BipartiteGraph((("c", (0.0, 1.0)),), (("x", (0.0, INF, 1.0)),), {})
        with pytest.raises(ValueError, match="duplicate"):
            ged_named(dup, ok)

    def test_matching_lists_correspondence(self, aircraft_graph, q5_graph):
        report = ged_named(q5_graph, aircraft_graph)
        pairs = dict(
            (u, o) for u, o in report.matching["constraints"] if u is not None
        )
        assert pairs["PassengerDemand"] == "PassengerDemand"
        assert pairs["MaxTypeA"] is None


class TestGedExact:
    def test_equals_named_on_query5(self, aircraft_graph, q5_graph):
        exact = ged_exact(q5_graph, aircraft_graph)
        named = ged_named(q5_graph, aircraft_graph)
        assert exact.ged == named.ged == 6

    def test_rename_costs_nothing_exactly(self):
        a = graph_of(
            "# EOR DATA BEGIN\n# EOR DATA END\nminimize: x\n"
            "subject to:\n# EOR CONSTRAINT BEGIN\n  C1: x >= 1\n# EOR CONSTRAINT END\n"
        )
        b = graph_of(
            "# EOR DATA BEGIN\n# EOR DATA END\nminimize: x\n"
            "subject to:\n# EOR CONSTRAINT BEGIN\n  D1: x >= 1\n# EOR CONSTRAINT END\n"
        )
        assert ged_exact(b, a).ged == 0
        assert ged_named(b, a).ged > 0

    def test_minimality_dominates_named(self):
        rng = random.Random(99)
        for _ in range(40):
            original = random_graph(rng, n_cons=(1, 3), n_vars=(1, 3))
            updated = perturb_graph(rng, original)
            exact = ged_exact(updated, original)
            named = ged_named(updated, original)
            assert exact.ged <= named.ged

    def test_size_cap(self):
        rng = random.Random(1)
        big = random_graph(rng, n_cons=(9, 9), n_vars=(2, 2))
        with pytest.raises(ValueError, match="size_cap"):
            ged_exact(big, big)

    def test_triangle_inequality_on_small_graphs(self):
        rng = random.Random(7)
        for _ in range(12):
            a = random_graph(rng, n_cons=(1, 3), n_vars=(1, 3))
            b = perturb_graph(rng, a)
            c = perturb_graph(rng, b)
            ab = ged_exact(a, b).ged
            bc = ged_exact(b, c).ged
            ac = ged_exact(a, c).ged
            assert ac <= ab + bc


class TestDecisionInformation:
    def test_identity(self, aircraft_model):
        assert decision_information(aircraft_model, aircraft_model).nged == 0.0

    def test_query5(self, aircraft_model, aircraft_q5_source):
        report = decision_information(aircraft_model, parse_model(aircraft_q5_source))
        assert report.ged == 6
        assert report.nged == pytest.approx(0.3, abs=1e-12)

    def test_query4_two_substitutions(self, aircraft_source, aircraft_model):
        patched = apply_patch(
            aircraft_source,
            parse_patch('{"ADD DATA": "param costA = 11000\\nparam costB = 5500"}'),
        )
        report = decision_information(aircraft_model, parse_model(patched))
        assert report.ged == 2
        assert report.nged == pytest.approx(2 / 14, abs=1e-12)
        assert report.breakdown["variable-substituted-attrs"] == 2

    def test_matches_exact_oracle_on_all_bundled_patches(
        self, aircraft_source, bundled_patches
    ):
        base = graph_of(aircraft_source)
        for patch_doc in bundled_patches:
            patched = apply_patch(aircraft_source, parse_patch(json.dumps(patch_doc)))
            updated = graph_of(patched)
            named = ged_named(updated, base)
            exact = ged_exact(updated, base)
            assert named.ged == exact.ged, patch_doc


class TestNormalization:
    def test_exact_fraction(self, aircraft_graph, q5_graph):
        report = ged_named(q5_graph, aircraft_graph)
        assert report.nged == pytest.approx(float(Fraction(6, 20)), abs=1e-15)

    def test_nged_in_unit_interval_on_perturbations(self):
        rng = random.Random(246)
        for _ in range(200):
            original = random_graph(rng)
            updated = perturb_graph(rng, original)
            report = ged_named(updated, original)
            assert 0.0 <= report.nged <= 1.0

    def test_empty_graphs(self):
        empty = BipartiteGraph((), (), {})
        report = ged_named(empty, empty)
        assert report.ged == 0 and report.nged == 0.0


class TestAttributeTolerance:
    def test_tiny_float_noise_matches(self):
        a = BipartiteGraph(
            (("c", (1.0, 2.0)),), (("x", (0.0, INF, 3.0)),), {("c", "x"): 1.0}
        )
        b = BipartiteGraph(
            (("c", (1.0 + 1e-12, 2.0)),),
            (("x", (0.0, INF, 3.0 - 1e-12)),),
            {("c", "x"): 1.0 + 1e-13},
        )
        assert ged_named(b, a).ged == 0

    def test_infinities_match_by_sign(self):
        a = BipartiteGraph((("c", (-INF, 5.0)),), (), {})
        b = BipartiteGraph((("c", (-INF, 5.0)),), (), {})
        c = BipartiteGraph((("c", (INF, INF)),), (), {})
        assert ged_named(b, a).ged == 0
        assert ged_named(c, a).ged == 2
