import pytest
from hypothesis import given, settings, strategies as st

from fdexplain.deduction import Withdrawal
from fdexplain.model import (
    ConfigurationError,
    CspModel,
    Form,
    InputError,
    enumerate_solutions,
    family_leq,
)
from fdexplain.propagation import (
    Iteration,
    Run,
    Status,
    Strategy,
    TraceLine,
    fair_runs,
    format_trace,
    is_common_fixpoint,
    iterate,
    parse_trace,
    simultaneous_closure,
)
from fdexplain.rules import reduce_operator, rules_for_model
from csp_strategies import leq_model, rule_sets, triangle_model


def events_of(result):
    return [(ev.step, ev.rule.label, str(ev.withdrawal)) for ev in result.trace.events]


def test_scripted_steps():
    model = triangle_model()
    rules = {r.label: r for r in rules_for_model(model)}
    x, y, z = model.variables
    it = Iteration(model, list(rules.values()), stop_on_failure=False)
    it.apply(rules['r5'])
    assert it.d[z] == {0, 1}
    it.apply(rules['r3'])
    assert it.d[y] == {0}
    it.apply(rules['r1'])
    assert 0 not in it.d[x]
    assert it.withdrawn_at(Withdrawal(0, x)) == 3


def test_scripted_run():
    model = triangle_model()
    result = iterate(model, rules_for_model(model), Run.scripted(['r5', 'r3', 'r1']))
    assert [r.label for r in result.trace.applied[:3]] == ['r5', 'r3', 'r1']
    assert events_of(result)[:6] == [
        (1, 'r5', '(2, z)'),
        (2, 'r3', '(1, y)'),
        (2, 'r3', '(2, y)'),
        (3, 'r1', '(0, x)'),
        (3, 'r1', '(1, x)'),
        (3, 'r1', '(2, x)'),
    ]
    assert result.status is Status.CLOSED
    assert result.closure.size() == 0


def test_worklist_stops_on_failure():
    model = triangle_model()
    result = iterate(model, rules_for_model(model), Run(), stop_on_failure=True)
    assert result.status is Status.FAILED
    assert str(result.failed_variable) == 'z'
    assert str(result) == 'FAILED (z emptied)'
    assert [r.label for r in result.trace.applied] == ['r1', 'r2', 'r3', 'r4', 'r5']
    assert events_of(result) == [
        (1, 'r1', '(2, x)'),
        (2, 'r2', '(0, y)'),
        (3, 'r3', '(2, y)'),
        (4, 'r4', '(0, z)'),
        (4, 'r4', '(1, z)'),
        (5, 'r5', '(2, z)'),
    ]
    assert str(result.closure) == 'x: {0, 1}\ny: {1}\nz: {}'
    assert enumerate_solutions(model) == []


def test_worklist_runs_to_closure():
    model = triangle_model()
    result = iterate(model, rules_for_model(model), Run(), stop_on_failure=False)
    assert result.status is Status.CLOSED
    assert result.failed_variable is None
    assert len(result.trace.applied) == 12
    assert len(result.trace.events) == 9
    x = model.variable('x')
    first_for_x = result.trace.event(0, x)
    assert (first_for_x.step, first_for_x.rule.label) == (6, 'r6')
    assert first_for_x.deduction.is_fact


@pytest.mark.parametrize('run', [Run(Strategy.ROUND_ROBIN), Run(Strategy.SEEDED_RANDOM, 3)])
def test_other_strategies_reach_the_same_closure(run):
    model = triangle_model()
    result = iterate(model, rules_for_model(model), run)
    assert result.status is Status.CLOSED
    assert result.closure == simultaneous_closure(model, rules_for_model(model))
    assert result.closure.size() == 0


def test_seeded_random_is_deterministic():
    model = triangle_model()
    rules = rules_for_model(model)
    first = iterate(model, rules, Run(Strategy.SEEDED_RANDOM, 42))
    second = iterate(model, rules, Run(Strategy.SEEDED_RANDOM, 42))
    assert first.trace.applied == second.trace.applied
    assert format_trace(first.trace) == format_trace(second.trace)


def test_no_rules():
    model = triangle_model()
    result = iterate(model, [])
    assert result.status is Status.CLOSED
    assert result.closure == model.initial_family()
    assert result.trace.events == ()
    assert simultaneous_closure(model, []) == model.initial_family()


def test_simultaneous_closure_and_fixpoints():
    model = triangle_model()
    rules = rules_for_model(model)
    closure = simultaneous_closure(model, rules)
    assert closure.size() == 0
    assert is_common_fixpoint(rules, closure)
    assert not is_common_fixpoint(rules, model.initial_family())
    leq = leq_model()
    assert simultaneous_closure(leq, rules_for_model(leq)) == leq.initial_family()
    assert is_common_fixpoint(rules_for_model(leq), leq.initial_family())


def test_online_deduction_for_hyper_arc():
    # y = w + 2 removes 1 and 2 from y, then x = y + z loses 3
    model = CspModel.build(
        {'x': {1, 2, 3}, 'y': {1, 2, 3}, 'z': {1, 2, 3}, 'w': {1}},
        [(Form.SUM3, ['x', 'y', 'z']), (Form.OFFSET_EQ, ['y', 'w'], 2)],
    )
    result = iterate(model, rules_for_model(model), Run.scripted(['r4', 'r1']))
    event = result.trace.event(3, model.variable('x'))
    assert event.step == 2
    assert [str(w) for w in event.deduction.body] == ['(1, y)', '(2, y)']
    assert event.deduction.name == '(3, r1, t{(1,2)->y (2,1)->y})'


def test_run_parse():
    assert Run.parse('worklist') == Run()
    assert Run.parse('roundrobin', ['r2']) == Run(Strategy.ROUND_ROBIN, 0, ('r2',))
    assert Run.parse('random:7') == Run(Strategy.SEEDED_RANDOM, 7)
    assert str(Run.parse('random:7', ['r5', 'r3'])) == 'script r5,r3 then random:7'
    with pytest.raises(ConfigurationError):
        Run.parse('depth-first')


def test_fair_runs():
    runs = fair_runs(20)
    assert len(set(runs)) == 20
    assert runs[:2] == [Run(Strategy.WORKLIST), Run(Strategy.ROUND_ROBIN)]
    assert runs[2:4] == [Run(Strategy.SEEDED_RANDOM, 0), Run(Strategy.SEEDED_RANDOM, 1)]
    assert fair_runs(2) == [Run(Strategy.WORKLIST), Run(Strategy.ROUND_ROBIN)]
    with pytest.raises(InputError):
        fair_runs(-1)


def test_bad_rules_and_scripts():
    model = triangle_model()
    rules = rules_for_model(model)
    with pytest.raises(InputError):
        iterate(model, rules, Run.scripted(['r9']))
    with pytest.raises(InputError):
        iterate(model, rules + rules[:1])
    with pytest.raises(InputError):
        iterate(leq_model(), rules)  # rules of another model


def test_trace_format():
    model = triangle_model()
    result = iterate(model, rules_for_model(model), Run(), stop_on_failure=True)
    text = format_trace(result.trace)
    assert text.splitlines()[:2] == ['1\tr1\tx=2\t0', '2\tr2\ty=0\t0']
    lines = parse_trace(text)
    assert len(lines) == 6
    assert lines[4] == TraceLine(4, 'r4', 'z', 1, 0)
    assert parse_trace('') == []
    with pytest.raises(InputError):
        parse_trace('1 r1 x=2 0\n')


@pytest.mark.timeout(600)
@settings(max_examples=200, deadline=None)
@given(rule_sets())
def test_fair_runs_are_confluent(model_rules):
    model, rules = model_rules
    closure = simultaneous_closure(model, rules)
    for run in fair_runs(20):
        result = iterate(model, rules, run)
        assert result.status is Status.CLOSED
        assert result.closure == closure
        assert is_common_fixpoint(rules, result.closure)


@pytest.mark.timeout(300)
@settings(max_examples=200, deadline=None)
@given(rule_sets())
def test_solutions_survive_propagation(model_rules):
    model, rules = model_rules
    solutions = enumerate_solutions(model)
    closure = simultaneous_closure(model, rules)
    assert enumerate_solutions(model, closure) == solutions
    result = iterate(model, rules, Run(), stop_on_failure=True)
    if result.status is Status.FAILED:
        assert solutions == []
        assert not result.closure[result.failed_variable]


@pytest.mark.timeout(300)
@settings(max_examples=200, deadline=None)
@given(rule_sets(), st.data())
def test_any_script_then_fair_run_reaches_the_closure(model_rules, data):
    model, rules = model_rules
    labels = [rule.label for rule in rules]
    script = data.draw(st.lists(st.sampled_from(labels), max_size=12)) if labels else []
    seed = data.draw(st.integers(min_value=0, max_value=1000))
    closure = simultaneous_closure(model, rules)
    for run in (Run.scripted(script), Run.parse(f'random:{seed}', script)):
        result = iterate(model, rules, run)
        assert result.status is Status.CLOSED
        assert result.closure == closure
        assert list(result.trace.applied[: len(script)]) == [
            next(r.id for r in rules if r.label == label) for label in script
        ]


@pytest.mark.timeout(300)
@settings(max_examples=200, deadline=None)
@given(rule_sets(), st.data())
def test_replaying_applied_rules_descends_to_the_final_family(model_rules, data):
    model, rules = model_rules
    run = data.draw(st.sampled_from(fair_runs(5)))
    stop_on_failure = data.draw(st.booleans())
    trace = iterate(model, rules, run, stop_on_failure).trace
    by_id = {rule.id: rule for rule in rules}
    d = model.initial_family()
    for rule_id in trace.applied:
        reduced = reduce_operator(by_id[rule_id], d)
        assert family_leq(reduced, d)
        d = reduced
    assert d == trace.final
