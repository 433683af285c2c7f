import itertools

import numpy as np
import pytest

from gridmarket.optim import LinExpr, Model, ModelError, Status, quicksum


def test_bounded_maximum():
    m = Model(eq_slack=0)
    x = m.add_var("x", 0, 10)
    m.add(x <= 5)
    m.maximize(x)
    sol = m.solve()
    assert sol.status is Status.OPTIMAL
    assert sol.value(x) == pytest.approx(5)


def test_infeasible_box():
    m = Model()
    x = m.add_var("x", -10, 10)
    m.add(x <= 0)
    m.add(x >= 1)
    m.minimize(LinExpr())
    assert m.solve().status is Status.INFEASIBLE


def test_unbounded_reported():
    m = Model()
    x = m.add_var("x", 0)
    m.maximize(x)
    assert m.solve().status is Status.UNBOUNDED


def test_knapsack_matches_enumeration():
    values, weights, cap = [3, 4, 5], [2, 3, 4], 5
    best = max(sum(v for v, k in zip(values, pick) if k)
               for pick in itertools.product((0, 1), repeat=3)
               if sum(w for w, k in zip(weights, pick) if k) <= cap)
    m = Model()
    xs = [m.add_var(f"x{i}", binary=True) for i in range(3)]
    m.add(quicksum(w * x for w, x in zip(weights, xs)) <= cap)
    m.maximize(quicksum(v * x for v, x in zip(values, xs)))
    sol = m.solve()
    assert sol.objective == pytest.approx(best) == pytest.approx(7)
    assert all(sol.value(x) in (0.0, 1.0) for x in xs)


@pytest.mark.parametrize("b,y,expected", [(0, 7, 0), (1, 7, 7), (1, -3, -3), (0, -3, 0)])
def test_indicator_product_fixed_inputs(b, y, expected):
    m = Model(eq_slack=0)
    bv = m.add_var("b", binary=True)
    yv = m.add_var("y", -10, 10)
    m.add(bv == b)
    m.add(yv == y)
    z = m.indicator_product(bv, yv, -10, 10)
    for sense in (m.minimize, m.maximize):
        sense(z)
        assert m.solve().value(z) == pytest.approx(expected)


def test_indicator_product_random_samples():
    rng = np.random.default_rng(3)
    for _ in range(20):
        b, y = int(rng.integers(0, 2)), float(rng.uniform(-5, 5))
        m = Model(eq_slack=0)
        bv, yv = m.add_var("b", binary=True), m.add_var("y", -5, 5)
        m.add(bv == b)
        m.add(yv == y)
        z = m.indicator_product(bv, yv, -5, 5)
        m.minimize(rng.normal() * z)
        assert m.solve().value(z) == pytest.approx(b * y, abs=1e-7)


def test_abs_value_penalised():
    m = Model(eq_slack=0)
    e = m.add_var("e", -10, 10)
    m.add(e == -4)
    a = m.abs_value(e, 10)
    m.minimize(a)
    assert m.solve().value(a) == pytest.approx(4)


def test_abs_value_zero():
    m = Model(eq_slack=0)
    e = m.add_var("e", -10, 10)
    m.add(e == 0)
    a = m.abs_value(e, 10)
    m.minimize(a)
    assert m.solve().value(a) == pytest.approx(0)


def test_abs_value_needs_positive_weight():
    m = Model()
    e = m.add_var("e", -1, 1)
    a = m.abs_value(e, 1)
    m.maximize(a)
    with pytest.raises(ModelError):
        m.solve()


def test_sum_of_abs_matches_grid_search():
    # minimise sum |x_i - c_i| + coupling cost, compared with a grid search
    c = [1.5, -2.0, 0.5]
    grid = np.linspace(-3, 3, 61)
    best = min(sum(abs(x - ci) for x, ci in zip(xs, c)) + abs(sum(xs) - 2)
               for xs in itertools.product(grid, repeat=3))
    m = Model(eq_slack=0)
    xs = [m.add_var(f"x{i}", -3, 3) for i in range(3)]
    terms = [m.abs_value(x - ci, 10, f"a{i}") for i, (x, ci) in enumerate(zip(xs, c))]
    terms.append(m.abs_value(quicksum(xs) - 2, 20, "s"))
    m.minimize(quicksum(terms))
    assert m.solve().objective == pytest.approx(best, abs=1e-9)


def test_equality_slack_is_applied():
    m = Model(eq_slack=1e-3)
    x = m.add_var("x", -5, 5)
    m.add(x == 1)
    m.maximize(x)
    assert m.solve().value(x) == pytest.approx(1 + 1e-3)


def test_resolve_is_deterministic():
    def build():
        m = Model()
        xs = [m.add_var(f"x{i}", 0, 5, binary=i % 2 == 0) for i in range(6)]
        m.add(quicksum(xs) <= 7.5)
        m.maximize(quicksum((i + 1) * x for i, x in enumerate(xs)))
        return m
    assert build().solve().objective == pytest.approx(build().solve().objective, abs=1e-9)


def test_lp_strong_duality():
    m = Model(eq_slack=0)
    x, y = m.add_var("x", 0), m.add_var("y", 0)
    c1 = m.add(x + 2 * y <= 14)
    c2 = m.add(3 * x - y >= 0)
    c3 = m.add(x - y <= 2)
    m.maximize(3 * x + 4 * y)
    sol = m.solve()
    dual_obj = sum(sol.dual(c) * rhs for c, rhs in ((c1, 14), (c2, 0), (c3, 2)))
    assert sol.objective == pytest.approx(dual_obj, abs=1e-6)


def test_duals_unavailable_for_milp():
    m = Model()
    x = m.add_var("x", binary=True)
    c = m.add(x <= 1)
    m.maximize(x)
    with pytest.raises(ModelError):
        m.solve().dual(c)


def test_lp_dump(tmp_path):
    m = Model("demo")
    x = m.add_var("x", 0, 3)
    b = m.add_var("b", binary=True)
    m.add(x + b <= 2, "cap")
    m.maximize(x + b)
    path = tmp_path / "demo.lp"
    m.solve(dump_lp=str(path))
    text = path.read_text()
    assert "Maximize" in text and "cap:" in text and "Binaries" in text


def test_unknown_column_rejected():
    m = Model()
    other = Model()
    other.add_var("a")
    v = other.add_var("b")
    with pytest.raises(ModelError):
        m.add(v <= 1)
