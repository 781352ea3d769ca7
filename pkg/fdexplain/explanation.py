"""Value withdrawal explanations: proof trees of deduction rules.

An explanation for (e, y) is a finite tree whose root is labelled (e, y), whose edges to the
children of a node are given by one deduction rule with that node as head, and whose leaves are
facts. One exists exactly when e is outside the downward closure of y. From an iteration the
tree is read off the trace: the root is the event that removed (e, y), its children are the
events that removed the body of the attached deduction rule, and so on down to facts.
"""

import collections
import dataclasses
import logging
from typing import Iterator, Sequence

from fdexplain.deduction import DeductionRule, Withdrawal, deduction_rule
from fdexplain.model import ConsistencyError, CspModel, InputError, VariableId
from fdexplain.propagation import (
    Run,
    WithdrawalEvent,
    WithdrawalTrace,
    iterate,
    simultaneous_closure,
)
from fdexplain.rules import ReductionRule, RuleId

logger = logging.getLogger(__name__)
logger.setLevel(logging.DEBUG)  # will be throttled by handler log level (file, console)


class NotExplainableError(InputError):
    pass  # the value was not withdrawn in this trace; an explanation may still exist


@dataclasses.dataclass(frozen=True)
class Explanation:
    root: Withdrawal
    rule: DeductionRule  # links the root to its children
    children: tuple['Explanation', ...] = ()  # one per body element, in body order

    def __post_init__(self) -> None:
        if self.rule.head != self.root:
            raise InputError(f"F58201 rule {self.rule.name} does not conclude {self.root}")
        if tuple(child.root for child in self.children) != self.rule.body:
            raise InputError(
                f"F58202 children of {self.root} do not match the body of {self.rule.name}"
            )

    def breadth_first(self) -> list['Explanation']:
        """Every node, root first; shared subtrees are visited once per occurrence."""
        nodes = []
        queue = collections.deque([self])
        while queue:
            node = queue.popleft()
            nodes.append(node)
            queue.extend(node.children)
        return nodes

    def subtrees(self) -> Iterator['Explanation']:
        """Distinct subtrees, each itself an explanation, children before parents."""
        seen = set()
        order = []
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if id(node) in seen and not expanded:
                continue
            if expanded:
                order.append(node)
                continue
            seen.add(id(node))
            stack.append((node, True))
            stack.extend((child, False) for child in reversed(node.children))
        return iter(order)

    def node_count(self) -> int:
        counts: dict[int, int] = dict()
        for node in self.subtrees():
            counts[id(node)] = 1 + sum(counts[id(child)] for child in node.children)
        return counts[id(self)]

    def rule_ids(self) -> set[RuleId]:
        return {node.rule.rule for node in self.subtrees()}

    def __str__(self) -> str:
        return render_text(self)


###
### extraction from a trace
###


def explain_from_trace(trace: WithdrawalTrace, e: int, y: VariableId) -> Explanation:
    """The tree expl(e, y, i) where i is the step that withdrew e from y in `trace`."""
    top = trace.event(e, y)
    if top is None:
        raise NotExplainableError(f"F58210 ({e}, {y}) was not withdrawn in this iteration")
    # collect the events below top, then build bottom-up: steps strictly decrease downwards
    reachable: dict[Withdrawal, WithdrawalEvent] = {top.withdrawal: top}
    stack = [top]
    while stack:
        event = stack.pop()
        for w in event.deduction.body:
            child = trace.index.get(w)
            if child is None or child.step >= event.step:
                raise ConsistencyError(
                    f"F58211 trace has no earlier withdrawal of {w} for step {event.step}"
                )
            if w not in reachable:
                reachable[w] = child
                stack.append(child)
    built: dict[Withdrawal, Explanation] = dict()
    for event in sorted(reachable.values(), key=lambda ev: ev.step):
        built[event.withdrawal] = Explanation(
            event.withdrawal,
            event.deduction,
            tuple(built[w] for w in event.deduction.body),
        )
    return built[top.withdrawal]


def explain_failure(trace: WithdrawalTrace, y: VariableId) -> list[Explanation]:
    """One explanation per value of an emptied domain, by value."""
    if trace.final[y]:
        raise InputError(f"F58220 the domain of {y} is not empty")
    events = sorted((ev for ev in trace.events if ev.variable == y), key=lambda ev: ev.value)
    return [explain_from_trace(trace, ev.value, y) for ev in events]


###
### declarative side
###


def explanation_exists(
    model: CspModel, rules: Sequence[ReductionRule], e: int, y: VariableId
) -> bool:
    """There is an explanation for (e, y) iff e is outside the downward closure at y."""
    if e not in model.domain(y):
        raise InputError(f"F58230 {e} is not in the initial domain of {y}")
    return e not in simultaneous_closure(model, rules)[y]


def is_explanation(expl: Explanation, rules: Sequence[ReductionRule]) -> bool:
    """Is every node linked to its children by a deduction rule of one of `rules`?"""
    by_label = {rule.label: rule for rule in rules}
    for node in expl.subtrees():
        rule = by_label.get(node.rule.rule.label)
        if rule is None or rule.id != node.rule.rule or node.root.variable != rule.out_var:
            return False
        try:
            expected = deduction_rule(rule, node.root.value, node.rule.arc_index, node.rule.choice)
        except InputError:
            return False
        if expected != node.rule:
            return False
    return True


def replay(
    expl: Explanation, model: CspModel, rules: Sequence[ReductionRule]
) -> list[RuleId]:
    """r_1 ... r_n: the rules of the nodes, breadth first from the root, reversed.

    Any iteration whose run starts with this script has withdrawn the value of node i by
    step i, the root last.
    """
    by_label = {rule.label: rule for rule in rules}
    nodes = expl.breadth_first()
    for node in nodes:
        rule = by_label.get(node.rule.rule.label)
        if rule is None:
            raise InputError(f"F58240 explanation uses unknown rule {node.rule.rule.label}")
        out = rule.out_var
        if out.index >= len(model.variables) or model.variables[out.index] != node.root.variable:
            raise InputError(f"F58241 {node.root} is not a withdrawal of this model")
    return [node.rule.rule for node in reversed(nodes)]


def verify_replay(expl: Explanation, model: CspModel, rules: Sequence[ReductionRule]) -> bool:
    script = replay(expl, model, rules)
    result = iterate(model, rules, Run.scripted(r.label for r in script), stop_on_failure=False)
    for i, node in enumerate(reversed(expl.breadth_first()), start=1):
        step = result.trace.withdrawn_at(node.root)
        if step is None or step > i:
            logger.info(f"F58250 replay left {node.root} in place at step {i}")
            return False
    return True


###
### rendering
###


def render_text(expl: Explanation) -> str:
    """Indented tree, two spaces per level: node, then the deduction rule used there."""
    lines = []
    stack = [(expl, 0)]
    while stack:
        node, depth = stack.pop()
        lines.append(f"{'  ' * depth}{node.root} <- {node.rule.name}")
        stack.extend((child, depth + 1) for child in reversed(node.children))
    return '\n'.join(lines) + '\n'


def _dot_quote(text: str) -> str:
    return '"' + text.replace('\\', '\\\\').replace('"', '\\"') + '"'


def export_dot(expl: Explanation) -> str:
    """Graphviz text; repeated subtrees become distinct nodes so the output stays a tree."""
    lines = ['digraph explanation {', '  node [shape=box];']
    edges = []
    counter = 0
    stack = [(expl, None)]
    while stack:
        node, parent = stack.pop()
        counter += 1
        name = f'n{counter}'
        attrs = f'label={_dot_quote(str(node.root))}'
        if node.rule.is_fact:
            attrs += f', xlabel={_dot_quote(node.rule.name)}'
        lines.append(f'  {name} [{attrs}];')
        if parent is not None:
            edges.append(f'  {parent[0]} -> {name} [label={_dot_quote(parent[1])}];')
        stack.extend((child, (name, node.rule.name)) for child in reversed(node.children))
    return '\n'.join(lines + edges + ['}']) + '\n'
