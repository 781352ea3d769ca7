"""Deduction rules: the inductive definition behind value withdrawal explanations.

For a reduction rule r, a value e of out_r, a support function arc ∈ Arc_r and (when in_r has
several variables) a choice function t : arc(e) → in_r, the deduction rule named (e, r, arc, t) is

    (e, out_r) ← { (f_{t(f)}, t(f)) | f ∈ arc(e) }

read as: once every body value is withdrawn, e is withdrawn from out_r. An empty body is a fact.
"""

import dataclasses
import itertools
import logging
from typing import Callable, NamedTuple

from fdexplain.model import ConsistencyError, InputError, VariableId
from fdexplain.rules import ReductionRule, RuleId

logger = logging.getLogger(__name__)
logger.setLevel(logging.DEBUG)  # will be throttled by handler log level (file, console)


class Withdrawal(NamedTuple):
    """The pair (value, variable) that heads or sits in the body of a deduction rule."""

    value: int
    variable: VariableId

    def __str__(self) -> str:
        return f"({self.value}, {self.variable})"


# t as (f, t(f)) pairs, in arc(e) order
Choice = tuple[tuple[tuple[int, ...], VariableId], ...]


def _support_text(f: tuple[int, ...]) -> str:
    return '(' + ','.join(str(v) for v in f) + ')'


@dataclasses.dataclass(frozen=True)
class DeductionRule:
    value: int
    rule: RuleId
    arc_index: int
    arc_name: str | None  # set only when Arc_r holds several functions
    choice: Choice | None  # set only when in_r holds several variables
    head: Withdrawal
    body: tuple[Withdrawal, ...]  # no duplicates, by variable index then value

    @property
    def is_fact(self) -> bool:
        return not self.body

    @property
    def name(self) -> str:
        parts = [str(self.value), self.rule.label]
        if self.arc_name is not None:
            parts.append(self.arc_name)
        if self.choice is not None:
            pairs = ' '.join(f"{_support_text(f)}->{x}" for f, x in self.choice)
            parts.append(f"t{{{pairs}}}")
        return '(' + ', '.join(parts) + ')'

    def __str__(self) -> str:
        body = ', '.join(str(w) for w in self.body)
        return f"{self.name}: {self.head} <- {{{body}}}"


def deduction_rule(
    rule: ReductionRule,
    e: int,
    arc_index: int = 0,
    choice: Choice | None = None,
) -> DeductionRule:
    """Build the deduction rule (e, r, arc, t) for an explicit choice function t."""
    if not 0 <= arc_index < len(rule.arcs):
        raise InputError(f"F35110 rule {rule.label} has no support function #{arc_index}")
    supports = rule.arcs[arc_index](e)
    if len(rule.in_vars) == 1:
        body = {Withdrawal(f[0], rule.in_vars[0]) for f in supports}
        chosen = None
    else:
        if choice is None:
            raise InputError(f"F35111 rule {rule.label} needs a choice function")
        chosen_by_support = dict(choice)
        if len(chosen_by_support) != len(choice) or set(chosen_by_support) != set(supports):
            raise InputError(
                f"F35112 choice for ({e}, {rule.label}) must be defined exactly on arc({e})"
            )
        body = set()
        for f, x in choice:
            if x not in rule.in_vars:
                raise InputError(f"F35113 {x} is not an input variable of {rule.label}")
            body.add(Withdrawal(f[rule.in_vars.index(x)], x))
        chosen = tuple((f, chosen_by_support[f]) for f in supports)
    return DeductionRule(
        value=e,
        rule=rule.id,
        arc_index=arc_index,
        arc_name=rule.arcs[arc_index].name if len(rule.arcs) > 1 else None,
        choice=chosen,
        head=Withdrawal(e, rule.out_var),
        body=tuple(sorted(body, key=lambda w: (w.variable.index, w.value))),
    )


def all_deduction_instances(rule: ReductionRule, e: int, arc_index: int = 0) -> list[DeductionRule]:
    """Every deduction rule (e, r, arc, t), one per choice function t : arc(e) → in_r."""
    if len(rule.in_vars) == 1:
        return [deduction_rule(rule, e, arc_index)]
    supports = rule.arcs[arc_index](e)
    return [
        deduction_rule(rule, e, arc_index, tuple(zip(supports, picks)))
        for picks in itertools.product(rule.in_vars, repeat=len(supports))
    ]


def deduction_instance(
    rule: ReductionRule,
    e: int,
    arc_index: int,
    withdrawn_at: Callable[[Withdrawal], int | None],
) -> DeductionRule:
    """The deduction rule justifying a withdrawal of e by `rule` through arc #arc_index.

    `withdrawn_at` gives the step at which a pair was withdrawn earlier in the iteration, or
    None. Each support f is attributed to the input variable whose value f_x left first (ties
    broken by variable index).
    """
    choice = []
    for f in rule.arcs[arc_index](e):
        best = None
        for x, f_x in zip(rule.in_vars, f):
            step = withdrawn_at(Withdrawal(f_x, x))
            if step is not None and (best is None or (step, x.index) < best[0]):
                best = ((step, x.index), x)
        if best is None:
            raise ConsistencyError(
                f"F35120 {rule.label} removed {e} from {rule.out_var} but support "
                f"{_support_text(f)} was never withdrawn"
            )
        choice.append((f, best[1]))
    if len(rule.in_vars) == 1:
        return deduction_rule(rule, e, arc_index)
    return deduction_rule(rule, e, arc_index, tuple(choice))
