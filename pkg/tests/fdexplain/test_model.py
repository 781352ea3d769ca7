import pytest
from hypothesis import given, settings, strategies as st

from fdexplain.model import (
    Assignment,
    ConstraintDef,
    CspModel,
    Form,
    InputError,
    VariableId,
    enumerate_solutions,
    family_leq,
    is_solution,
)
from csp_strategies import csp_models, leq_model, subfamily, triangle_model


def assignment(model, **values):
    return Assignment.from_dict({model.variable(name): e for name, e in values.items()})


def test_build():
    model = triangle_model()
    assert [str(v) for v in model.variables] == ['x', 'y', 'z']
    assert [c.id for c in model.constraints] == ['c1', 'c2', 'c3']
    assert str(model.constraints[2]) == 'z < x'
    assert model.domain(model.variable('y')) == {0, 1, 2}
    with pytest.raises(InputError):
        model.variable('w')
    with pytest.raises(InputError):
        CspModel.build({'x': {0}}, [(Form.LESS_THAN, ['x', 'q'])])


def test_model_invariants():
    x, y = VariableId(0, 'x'), VariableId(1, 'y')
    with pytest.raises(InputError):
        CspModel((x, y), (frozenset({0}), frozenset()))  # empty initial domain
    with pytest.raises(InputError):
        CspModel((x, VariableId(1, 'x')), (frozenset({0}), frozenset({0})))
    with pytest.raises(InputError):
        CspModel((y,), (frozenset({0}),))  # index does not match position
    with pytest.raises(InputError):
        ConstraintDef('c1', Form.LESS_THAN, (x,))  # arity
    with pytest.raises(InputError):
        ConstraintDef('c1', Form.LESS_THAN, (x, x))  # repeated variable
    with pytest.raises(InputError):
        ConstraintDef('c1', Form.TABLE, (x,), frozenset({(0,)}))  # unary table
    with pytest.raises(InputError):  # table value outside D_y
        CspModel.build({'x': {0, 1}, 'y': {0, 1}}, [(Form.TABLE, ['x', 'y'], [(0, 5)])])


def test_holds():
    x, y, z = (VariableId(i, n) for i, n in enumerate('xyz'))
    assert ConstraintDef('c', Form.LESS_THAN, (x, y)).holds((0, 1))
    assert not ConstraintDef('c', Form.LESS_THAN, (x, y)).holds((1, 1))
    assert ConstraintDef('c', Form.LESS_EQ, (x, y)).holds((1, 1))
    assert ConstraintDef('c', Form.OFFSET_EQ, (x, y), offset=-2).holds((1, 3))
    assert ConstraintDef('c', Form.SUM3, (x, y, z)).holds((3, 1, 2))
    assert not ConstraintDef('c', Form.SUM3, (x, y, z)).holds((3, 2, 2))
    table = ConstraintDef('c', Form.TABLE, (x, y), frozenset({(1, 0)}))
    assert table.holds((1, 0)) and not table.holds((0, 1))


def test_relation():
    model = leq_model()
    assert model.constraints[0].relation(model) == [(0, 0), (0, 1), (1, 1)]


def test_is_solution():
    model = leq_model()
    assert is_solution(model, assignment(model, x=0, y=1))
    assert not is_solution(model, assignment(model, x=1, y=0))
    free = CspModel.build({'x': {0, 1}, 'y': {0, 1}})
    assert is_solution(free, assignment(free, x=1, y=0))
    with pytest.raises(InputError):
        is_solution(model, assignment(model, x=0))  # missing variable
    with pytest.raises(InputError):
        is_solution(model, assignment(model, x=0, y=7))  # outside D_y


def test_assignment():
    model = leq_model()
    x, y = model.variables
    t = assignment(model, y=1, x=0)
    assert t.scope == (x, y)
    assert t.value(y) == 1
    assert t.restrict((y, x)) == (1, 0)
    assert t.as_dict() == {x: 0, y: 1}
    assert str(t) == 'x=0 y=1'
    with pytest.raises(InputError):
        Assignment((x,), (0, 1))
    with pytest.raises(InputError):
        Assignment((x, x), (0, 1))


def test_enumerate_solutions():
    assert enumerate_solutions(triangle_model()) == []
    model = leq_model()
    assert [t.values for t in enumerate_solutions(model)] == [(0, 0), (0, 1), (1, 1)]
    x = model.variable('x')
    emptied = model.initial_family().replace(x, ())
    assert enumerate_solutions(model, emptied) == []
    with pytest.raises(InputError):
        enumerate_solutions(model, model.initial_family().replace(x, {5}))


def test_family_leq():
    model = leq_model()
    x, _ = model.variables
    d = model.initial_family()
    assert family_leq(d, d)
    assert family_leq(d.replace(x, {0}), d)
    assert not family_leq(d.replace(x, {2}), d.replace(x, {0, 1}))
    with pytest.raises(InputError):
        family_leq(d, triangle_model().initial_family())


def test_domain_family():
    model = triangle_model()
    x, y, z = model.variables
    d = model.initial_family().replace(y, {2}).replace(z, ())
    assert d[y] == {2}
    assert d.empty_variables() == [z]
    assert d.size() == 4
    assert str(d) == 'x: {0, 1, 2}\ny: {2}\nz: {}'
    assert list(d.replace(x, {1, 0}).product()) == []
    t = assignment(model, x=1, z=0)
    singleton = model.singleton_family(t)
    assert singleton[x] == {1} and singleton[y] == {0, 1, 2} and singleton[z] == {0}


@settings(max_examples=200, deadline=None)
@given(csp_models(), st.data())
def test_family_leq_is_a_partial_order(model, data):
    a = subfamily(data, model.initial_family())
    b = subfamily(data, a)
    c = subfamily(data, b)
    assert family_leq(a, a)
    assert family_leq(c, a)  # transitivity through b
    if family_leq(a, b):
        assert a == b  # antisymmetry, as b ⊑ a by construction


@settings(max_examples=200, deadline=None)
@given(csp_models(), st.data())
def test_solutions_are_monotone_and_satisfy_every_constraint(model, data):
    inner = subfamily(data, model.initial_family())
    all_solutions = enumerate_solutions(model)
    inner_solutions = enumerate_solutions(model, inner)
    assert set(inner_solutions) <= set(all_solutions)
    for t in all_solutions:
        for c in model.constraints:
            assert t.restrict(c.scope) in c.relation(model)
