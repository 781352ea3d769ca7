"""Reduction rules in abstract hyper-arc form and their reduction operators.

A rule r of type (in_r ∪ {out_r}, out_r) keeps a value e of out_r only while every support
function arc ∈ Arc_r still has a support tuple for e inside the current domains of in_r:

    r(d) = { e ∈ d_out | for each arc in Arc_r, arc(e) ∩ ∏_{x ∈ in_r} d_x ≠ ∅ }

Rules are labelled r1, r2, ... in constraint declaration order, and within a constraint in
the order of the output variable in the scope. For the model x < y, y < z, z < x this gives
r1 (x of x<y), r2 (y of x<y), r3 (y of y<z), r4 (z of y<z), r5 (z of z<x), r6 (x of z<x).
"""

import collections
import dataclasses
import enum
import logging
from typing import Callable, Iterable, Mapping, Sequence

from fdexplain.model import (
    Assignment,
    ConfigurationError,
    ConstraintDef,
    CspModel,
    DomainFamily,
    Form,
    InputError,
    VariableId,
    enumerate_solutions,
)

logger = logging.getLogger(__name__)
logger.setLevel(logging.DEBUG)  # will be throttled by handler log level (file, console)


@dataclasses.dataclass(frozen=True, order=True)
class RuleId:
    index: int
    label: str  # r<index+1>

    def __str__(self) -> str:
        return self.label


class Mode(enum.Enum):
    FULL = 'full'  # (hyper-)arc consistency: one support function derived from T_c
    BOUNDS = 'bounds'  # partial consistency on bounds: x in min(y)+c..max(y)+c

    def __str__(self) -> str:
        return self.value


@dataclasses.dataclass(frozen=True, eq=False)
class SupportFn:
    """arc : D_out → P(∏_{x ∈ in_r} D_x); supports are tuples in in_vars order."""

    name: str  # 'arc', or 'arc1'/'arc2' when a rule has several
    supports: Callable[[int], Sequence[tuple[int, ...]]]

    def __call__(self, e: int) -> tuple[tuple[int, ...], ...]:
        return tuple(self.supports(e))

    @staticmethod
    def from_table(name: str, table: Mapping[int, Sequence[tuple[int, ...]]]) -> 'SupportFn':
        frozen = {e: tuple(fs) for e, fs in table.items()}
        return SupportFn(name, lambda e: frozen.get(e, ()))


@dataclasses.dataclass(frozen=True)
class ReductionOutcome:
    new_domain: frozenset[int]
    removed: tuple[tuple[int, int], ...]  # (value, index in Arc_r of the exhausted arc), by value


@dataclasses.dataclass(frozen=True, eq=False)
class ReductionRule:
    id: RuleId
    in_vars: tuple[VariableId, ...]
    out_var: VariableId
    arcs: tuple[SupportFn, ...]  # Arc_r, in declaration order
    origin: str = ''  # id of the constraint this rule implements
    description: str = ''

    def __post_init__(self) -> None:
        if not self.in_vars:
            raise InputError(f"F20511 rule {self.id} has no input variable")
        if not self.arcs:
            raise InputError(f"F20512 rule {self.id} has no support function")

    @property
    def label(self) -> str:
        return self.id.label

    @property
    def type_vars(self) -> tuple[VariableId, ...]:
        """W = in_r ∪ {out_r}."""
        if self.out_var in self.in_vars:
            return self.in_vars
        return self.in_vars + (self.out_var,)

    def is_supported(self, arc: SupportFn, e: int, d: DomainFamily) -> bool:
        return any(all(f_x in d[x] for x, f_x in zip(self.in_vars, f)) for f in arc(e))

    def exhausted_arc(self, e: int, d: DomainFamily) -> int | None:
        """Index of the first support function with no surviving support for e, if any."""
        for i, arc in enumerate(self.arcs):
            if not self.is_supported(arc, e, d):
                return i
        return None

    def apply(self, d: DomainFamily) -> ReductionOutcome:
        kept = []
        removed = []
        for e in sorted(d[self.out_var]):
            witness = self.exhausted_arc(e, d)
            if witness is None:
                kept.append(e)
            else:
                removed.append((e, witness))
        return ReductionOutcome(frozenset(kept), tuple(removed))

    def __str__(self) -> str:
        ins = ', '.join(v.name for v in self.in_vars)
        text = f"{self.label}: {self.out_var} from {{{ins}}}"
        return f"{text} ({self.description})" if self.description else text


def apply_rule(rule: ReductionRule, d: DomainFamily) -> ReductionOutcome:
    return rule.apply(d)


def reduce_operator(rule: ReductionRule, d: DomainFamily) -> DomainFamily:
    """reduc_r: d with the domain of out_r replaced by r(d|_W)."""
    outcome = rule.apply(d)
    if not outcome.removed:
        return d
    return d.replace(rule.out_var, outcome.new_domain)


###
### rule constructors
###


def _binary_arc(name: str, domain: Iterable[int], accepts: Callable[[int, int], bool]):
    values = sorted(domain)
    return SupportFn(name, lambda e: [(f,) for f in values if accepts(e, f)])


def _sum_arc(name: str, first: Iterable[int], second: Iterable[int], other: Callable):
    # supports (f1, f2) with f1 from `first` and f2 = other(e, f1) from `second`
    firsts = sorted(first)
    seconds = frozenset(second)
    return SupportFn(
        name, lambda e: [(f, other(e, f)) for f in firsts if other(e, f) in seconds]
    )


def _full_arc(c: ConstraintDef, out_pos: int, model: CspModel) -> SupportFn:
    ins = [x for i, x in enumerate(c.scope) if i != out_pos]
    if c.form is Form.TABLE:
        table = collections.defaultdict(list)
        for t in sorted(c.table):
            table[t[out_pos]].append(t[:out_pos] + t[out_pos + 1 :])
        return SupportFn.from_table('arc', table)
    domains = [model.domain(x) for x in ins]
    if c.form is Form.LESS_THAN:
        accepts = (lambda e, f: e < f) if out_pos == 0 else (lambda e, f: f < e)
        return _binary_arc('arc', domains[0], accepts)
    if c.form is Form.LESS_EQ:
        accepts = (lambda e, f: e <= f) if out_pos == 0 else (lambda e, f: f <= e)
        return _binary_arc('arc', domains[0], accepts)
    if c.form is Form.OFFSET_EQ:
        k = c.offset
        accepts = (lambda e, f: f + k == e) if out_pos == 0 else (lambda e, f: e + k == f)
        return _binary_arc('arc', domains[0], accepts)
    # Form.SUM3, x = y + z
    if out_pos == 0:
        return _sum_arc('arc', domains[0], domains[1], lambda e, fy: e - fy)
    return _sum_arc('arc', domains[0], domains[1], lambda e, fx: fx - e)


def _bounds_arcs(c: ConstraintDef, out_pos: int, model: CspModel) -> tuple[SupportFn, ...]:
    # x in min(y)+c..max(y)+c and y in min(x)-c..max(x)-c
    k = c.offset if out_pos == 0 else -c.offset
    domain = model.domain(c.scope[1 - out_pos])
    return (
        _binary_arc('arc1', domain, lambda e, f: f + k <= e),
        _binary_arc('arc2', domain, lambda e, f: e <= f + k),
    )


def _bounds_description(c: ConstraintDef, out_pos: int) -> str:
    out, inp = c.scope[out_pos], c.scope[1 - out_pos]
    k = c.offset if out_pos == 0 else -c.offset
    shift = f"+{k}" if k >= 0 else str(k)
    return f"{out} in min({inp}){shift}..max({inp}){shift}"


def rules_for_constraint(
    c: ConstraintDef,
    mode: Mode,
    model: CspModel,
    first_index: int = 0,
) -> list[ReductionRule]:
    """One rule per scope variable as output, numbered from `first_index`."""
    if mode is Mode.BOUNDS and c.form is not Form.OFFSET_EQ:
        raise ConfigurationError(
            f"F20530 bounds rules exist only for 'x = y + c', not for constraint {c.id} ({c})"
        )
    rules = []
    for out_pos, out in enumerate(c.scope):
        rule_id = RuleId(first_index + out_pos, f'r{first_index + out_pos + 1}')
        ins = tuple(x for i, x in enumerate(c.scope) if i != out_pos)
        if mode is Mode.BOUNDS:
            arcs = _bounds_arcs(c, out_pos, model)
            description = _bounds_description(c, out_pos)
        else:
            arcs = (_full_arc(c, out_pos, model),)
            description = f"{out} of {c}"
        rules.append(ReductionRule(rule_id, ins, out, arcs, c.id, description))
    return rules


def rules_for_model(
    model: CspModel,
    mode: Mode = Mode.FULL,
    overrides: Mapping[str, Mode] | None = None,
) -> list[ReductionRule]:
    """Rules for every constraint, labelled r1, r2, ...

    With mode BOUNDS, constraints without a bounds implementation get FULL rules; a mode
    given explicitly in `overrides` (constraint id → mode) is never substituted.
    """
    overrides = overrides or {}
    rules = []
    for c in model.constraints:
        if c.id in overrides:
            c_mode = overrides[c.id]
        elif mode is Mode.BOUNDS and c.form is not Form.OFFSET_EQ:
            c_mode = Mode.FULL
        else:
            c_mode = mode
        rules.extend(rules_for_constraint(c, c_mode, model, first_index=len(rules)))
    logger.debug(f"{len(rules)} rules for {len(model.constraints)} constraints ({mode})")
    return rules


def max_bound_rule(
    rule_id: RuleId,
    out_var: VariableId,
    in_var: VariableId,
    model: CspModel,
    origin: str = '',
) -> ReductionRule:
    """The indexical x in 0..max(y): arc(e) = {f ∈ D_y | e ≤ f} for e ≥ 0."""
    arc = _binary_arc('arc', model.domain(in_var), lambda e, f: 0 <= e <= f)
    return ReductionRule(
        rule_id, (in_var,), out_var, (arc,), origin, f"{out_var} in 0..max({in_var})"
    )


###
### correctness
###


def _keeps_exactly(rule: ReductionRule, d: DomainFamily, t: Assignment) -> bool:
    return rule.apply(d).new_domain == {t.value(rule.out_var)}


def check_correct_wrt_constraint(rule: ReductionRule, c: ConstraintDef, model: CspModel) -> bool:
    """r is correct w.r.t. c iff r(({t_x})_{x ∈ W}) = {t_y} for each t ∈ T_c."""
    if not set(rule.type_vars) <= set(c.scope):
        raise InputError(f"F20540 rule {rule.label} reaches outside the scope of {c.id}")
    for values in c.relation(model):
        t = Assignment(c.scope, values)
        if not _keeps_exactly(rule, model.singleton_family(t), t):
            logger.info(f"F20541 rule {rule.label} removes {t} of constraint {c.id}")
            return False
    return True


def check_correct(rule: ReductionRule, model: CspModel) -> bool:
    """r is correct iff r(({t_x})_{x ∈ W}) = {t_y} for each solution t of the model."""
    for t in enumerate_solutions(model):
        if not _keeps_exactly(rule, model.singleton_family(t), t):
            logger.info(f"F20542 rule {rule.label} removes solution {t}")
            return False
    return True
