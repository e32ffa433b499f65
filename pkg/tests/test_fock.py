"""Truncated Fock module: creation, annihilation and the Toeplitz symbol."""
from utils.local_imports import *
from pimsner.algebra import AlgebraElement
from pimsner.bimodule import VertexFunction, point_mass
from pimsner.errors import DegreeMismatchError
from pimsner.fock import (
    annihilation,
    band_violations,
    build_fock,
    commutes_with_right_action,
    compress,
    creation,
    fock_relations_report,
    identity,
    left_action,
    level_projection,
    monomial_operator,
    right_action,
    toeplitz,
)
from pimsner.graph_core import Path


@pytest.mark.smoke
class TestFockModule:
    """Basis, levels and the elementary operators."""

    def test_basis_size(self):
        fock = build_fock(self.o2, 3)
        assert fock.size == 15
        assert len(fock.levels(3, 3)) == 8
        assert fock.basis[0] == Path.vertex("v")

    def test_invalid_mode(self):
        with pytest.raises(ValueError):
            build_fock(self.o2, 2, "symbolic")

    def test_creation_shifts_levels(self):
        fock = build_fock(self.fib, 3)
        e2 = Path.of(self.fib, ["e2"])
        operator = creation(fock, point_mass(self.fib, e2))
        source = fock.position[Path.vertex("v")]
        target = fock.position[e2]
        assert operator.entries[(target, source)] == 1
        assert operator.clean == (0, 2)
        assert operator.band == (1, 1)
        assert not band_violations(operator)

    def test_creation_beyond_level_raises(self):
        fock = build_fock(self.o2, 1)
        with pytest.raises(DegreeMismatchError):
            creation(fock, point_mass(self.o2, Path.of(self.o2, ["a", "a"])))

    def test_annihilation_is_the_adjoint(self):
        fock = build_fock(self.fib, 3)
        xi = point_mass(self.fib, Path.of(self.fib, ["e1", "e2"]))
        assert dict(annihilation(fock, xi).entries) == dict(creation(fock, xi).adjoint().entries)

    def test_operators_commute_with_right_action(self):
        fock = build_fock(self.fib, 3)
        for x in (creation(fock, point_mass(self.fib, Path.of(self.fib, ["e3"]))),
                  monomial_operator(fock, Path.of(self.fib, ["e2"]), Path.of(self.fib, ["e1", "e2"]))):
            assert commutes_with_right_action(x)
            f = VertexFunction(self.fib.vertices, (sympy.Integer(2), sympy.Integer(5)))
            assert dict((x @ right_action(fock, f)).entries) == dict((right_action(fock, f) @ x).entries)

    def test_level_projection_bounds(self):
        fock = build_fock(self.o2, 2)
        assert len(level_projection(fock, 2).entries) == 4
        with pytest.raises(DegreeMismatchError):
            level_projection(fock, 3)


@pytest.mark.regression
class TestToeplitzSymbol:
    """The symbol map x ↦ T(x) on F_{≤K}."""

    def test_vertex_projection_acts_through_source(self):
        fock = build_fock(self.fib, 2)
        p_v = toeplitz(fock, AlgebraElement.vertex(self.fib, "v"))
        expected = left_action(fock, VertexFunction.indicator(self.fib, "v"))
        assert dict(p_v.entries) == dict(expected.entries)

    def test_unit_is_identity(self):
        fock = build_fock(self.o2, 2)
        assert dict(toeplitz(fock, AlgebraElement.one(self.o2)).entries) == dict(identity(fock).entries)

    def test_isometry_on_clean_window(self):
        allure.before("T(S_a)*T(S_a) = Id on the clean window")
        fock = build_fock(self.o2, 3)
        s_a = toeplitz(fock, AlgebraElement.generator(self.o2, Path.of(self.o2, ["a"])))
        product = s_a.adjoint() @ s_a
        assert product.agrees_on_clean(identity(fock))

    def test_cuntz_krieger_fails_on_the_vacuum(self):
        # T(p_v) − Σ T(S_e)T(S_e)* is the vacuum projection
        fock = build_fock(self.o2, 2)
        defect = toeplitz(fock, AlgebraElement.vertex(self.o2, "v"))
        for edge in ("a", "b"):
            s_e = AlgebraElement.generator(self.o2, Path.of(self.o2, [edge]))
            defect = defect - toeplitz(fock, s_e * s_e.adjoint())
        assert dict(defect.entries) == {(0, 0): 1}

    def test_compress_matches_theta(self):
        fock = build_fock(self.o2, 2)
        mu, nu = Path.of(self.o2, ["a"]), Path.of(self.o2, ["b"])
        block = compress(monomial_operator(fock, mu, nu), 1)
        assert block.entry(mu, nu) == 1
        assert block.entry(nu, mu) == 0


@pytest.mark.regression
class TestRelationsReport:
    """Frame identity and Toeplitz relation over whole graphs."""

    @pytest.mark.parametrize("name", ["o2", "fib", "c2"])
    def test_exact_relations_hold(self, name):
        report = fock_relations_report(self.graphs[name], 3)
        Log.info(f"{name}: {len(report['checks'])} relation checks")
        assert report["failures"] == 0
        assert report["mode"] == "exact"

    def test_float_relations_hold(self):
        report = fock_relations_report(self.fib, 3, mode="float")
        assert report["failures"] == 0
