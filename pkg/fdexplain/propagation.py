"""Iterations of a rule set: chaotic iteration to the downward closure, with a withdrawal trace.

Runs are change driven: a rule is pending while one of its input variables shrank since its
last application, and the iteration stops when nothing is pending (a common fix-point) or,
with `stop_on_failure`, as soon as a domain becomes empty (a failure iteration). Every value
removal is recorded with its step d^{i-1} → d^i and the deduction rule that justifies it, so
explanations can be read back from the trace without re-running anything.
"""

import collections
import dataclasses
import enum
import logging
import random
import re
from typing import Iterable, Mapping, NamedTuple, Sequence

import fdexplain.logs as logs
from fdexplain.deduction import DeductionRule, Withdrawal, deduction_instance
from fdexplain.model import (
    ConfigurationError,
    ConsistencyError,
    CspModel,
    DomainFamily,
    InputError,
    VariableId,
)
from fdexplain.rules import ReductionRule, RuleId

logger = logging.getLogger(__name__)
logger.setLevel(logging.DEBUG)  # will be throttled by handler log level (file, console)


###
### runs
###


class Strategy(enum.Enum):
    WORKLIST = 'worklist'  # FIFO of pending rules, rule id as secondary key
    ROUND_ROBIN = 'roundrobin'  # sweep all rules in id order until a sweep changes nothing
    SEEDED_RANDOM = 'random'  # pick uniformly among pending rules


@dataclasses.dataclass(frozen=True)
class Run:
    strategy: Strategy = Strategy.WORKLIST
    seed: int = 0  # Strategy.SEEDED_RANDOM only
    script: tuple[str, ...] = ()  # rule labels applied first, even when they change nothing

    @staticmethod
    def scripted(labels: Iterable[str]) -> 'Run':
        return Run(script=tuple(labels))

    @staticmethod
    def parse(text: str, script: Sequence[str] = ()) -> 'Run':
        """'worklist', 'roundrobin' or 'random:<seed>'."""
        match = re.fullmatch(r'\s*(worklist|roundrobin|random:(-?\d+))\s*', text)
        if match is None:
            raise ConfigurationError(
                f"F44301 unknown strategy '{text}'; use worklist, roundrobin or random:<seed>"
            )
        if match.group(2) is not None:
            return Run(Strategy.SEEDED_RANDOM, int(match.group(2)), tuple(script))
        return Run(Strategy(match.group(1)), 0, tuple(script))

    def __str__(self) -> str:
        text = self.strategy.value
        if self.strategy is Strategy.SEEDED_RANDOM:
            text += f':{self.seed}'
        if self.script:
            text = f"script {','.join(self.script)} then {text}"
        return text


def fair_runs(k: int) -> list[Run]:
    """k distinct fair strategies: worklist, round robin, then random with seeds 0, 1, ..."""
    if k < 1:
        raise InputError(f"F44302 need at least one fair run, not {k}")
    runs = [Run(Strategy.WORKLIST), Run(Strategy.ROUND_ROBIN)]
    runs += [Run(Strategy.SEEDED_RANDOM, seed) for seed in range(max(0, k - 2))]
    return runs[:k]


###
### traces
###


@dataclasses.dataclass(frozen=True)
class WithdrawalEvent:
    value: int
    variable: VariableId
    step: int  # i such that e ∈ d^{i-1} and e ∉ d^i
    rule: RuleId
    arc_index: int  # support function found exhausted
    deduction: DeductionRule

    @property
    def withdrawal(self) -> Withdrawal:
        return Withdrawal(self.value, self.variable)

    def trace_line(self) -> str:
        return f"{self.step}\t{self.rule.label}\t{self.variable}={self.value}\t{self.arc_index}"


@dataclasses.dataclass(frozen=True)
class WithdrawalTrace:
    events: tuple[WithdrawalEvent, ...]
    index: Mapping[Withdrawal, WithdrawalEvent]  # p(e,i) lookups
    applied: tuple[RuleId, ...]
    final: DomainFamily

    def event(self, e: int, y: VariableId) -> WithdrawalEvent | None:
        return self.index.get(Withdrawal(e, y))

    def withdrawn_at(self, w: Withdrawal) -> int | None:
        event = self.index.get(w)
        return None if event is None else event.step


class TraceLine(NamedTuple):
    step: int
    rule_label: str
    variable: str
    value: int
    arc_index: int


def format_trace(trace: WithdrawalTrace) -> str:
    """One line per event: step<TAB>rule_label<TAB>var=value<TAB>arc_index."""
    return ''.join(event.trace_line() + '\n' for event in trace.events)


def parse_trace(text: str) -> list[TraceLine]:
    lines = []
    for n, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        match = re.fullmatch(r'(\d+)\t(r\d+)\t([A-Za-z_]\w*)=(-?\d+)\t(\d+)', line)
        if match is None:
            raise InputError(f"F44310 trace line {n} is malformed: {line!r}")
        step, label, var, value, arc_index = match.groups()
        lines.append(TraceLine(int(step), label, var, int(value), int(arc_index)))
    return lines


###
### iterations
###


class Status(enum.Enum):
    CLOSED = 'CLOSED'
    FAILED = 'FAILED'


@dataclasses.dataclass(frozen=True)
class ClosureResult:
    closure: DomainFamily
    trace: WithdrawalTrace
    status: Status
    failed_variable: VariableId | None = None  # the first emptied domain, when FAILED

    def __str__(self) -> str:
        if self.status is Status.FAILED:
            return f"{self.status.value} ({self.failed_variable} emptied)"
        return self.status.value


class Iteration:
    """Mutable state of one iteration d^0 = D, d^1, d^2, ...; owned by a single caller."""

    def __init__(
        self,
        model: CspModel,
        rules: Sequence[ReductionRule],
        stop_on_failure: bool,
    ) -> None:
        self.rules = sorted(rules, key=lambda r: r.id)
        self.by_label: dict[str, ReductionRule] = dict()
        self.readers: dict[VariableId, list[ReductionRule]] = collections.defaultdict(list)
        for rule in self.rules:
            if rule.label in self.by_label:
                raise InputError(f"F44320 duplicate rule label {rule.label}")
            self.by_label[rule.label] = rule
            for var in rule.type_vars:
                if var.index >= len(model.variables) or model.variables[var.index] != var:
                    raise InputError(f"F44321 rule {rule.label} uses unknown variable {var}")
            for var in rule.in_vars:
                self.readers[var].append(rule)
        self.model = model
        self.stop_on_failure = stop_on_failure
        self.d = model.initial_family()
        self.events: list[WithdrawalEvent] = list()
        self.index: dict[Withdrawal, WithdrawalEvent] = dict()
        self.applied: list[RuleId] = list()
        self.first_emptied: VariableId | None = None

    @property
    def stopped(self) -> bool:
        return self.stop_on_failure and self.first_emptied is not None

    def rule(self, label: str) -> ReductionRule:
        try:
            return self.by_label[label]
        except KeyError:
            raise InputError(f"F44322 unknown rule label {label}")

    def withdrawn_at(self, w: Withdrawal) -> int | None:
        event = self.index.get(w)
        return None if event is None else event.step

    def apply(self, rule: ReductionRule) -> bool:
        """d^i = reduc_r(d^{i-1}); returns True when the domain of out_r shrank."""
        step = len(self.applied) + 1
        outcome = rule.apply(self.d)
        self.applied.append(rule.id)
        if not outcome.removed:
            return False
        # deductions only see withdrawals of earlier steps, so record after computing all of them
        new_events = [
            WithdrawalEvent(
                e,
                rule.out_var,
                step,
                rule.id,
                arc_index,
                deduction_instance(rule, e, arc_index, self.withdrawn_at),
            )
            for e, arc_index in outcome.removed
        ]
        for event in new_events:
            if event.withdrawal in self.index:
                raise ConsistencyError(f"F44330 {event.withdrawal} withdrawn twice")
            self.events.append(event)
            self.index[event.withdrawal] = event
        self.d = self.d.replace(rule.out_var, outcome.new_domain)
        logger.debug(
            "step %d %s removes %s from %s",
            step,
            rule.label,
            logs.r(lambda vs: ', '.join(str(e) for e, _ in vs), outcome.removed),
            rule.out_var,
        )
        if not outcome.new_domain and self.first_emptied is None:
            self.first_emptied = rule.out_var
        return True

    def run_script(self, labels: Sequence[str]) -> None:
        for rule in [self.rule(label) for label in labels]:
            if self.stopped:
                return
            self.apply(rule)

    def run_worklist(self) -> None:
        queue = collections.deque(self.rules)
        pending = {rule.id for rule in self.rules}
        while queue and not self.stopped:
            rule = queue.popleft()
            pending.discard(rule.id)
            if self.apply(rule):
                for reader in self.readers[rule.out_var]:
                    if reader.id not in pending:
                        queue.append(reader)
                        pending.add(reader.id)

    def run_round_robin(self) -> None:
        changed = True
        while changed and not self.stopped:
            changed = False
            for rule in self.rules:
                changed |= self.apply(rule)
                if self.stopped:
                    return

    def run_seeded_random(self, seed: int) -> None:
        rng = random.Random(seed)
        pending = {rule.id: rule for rule in self.rules}
        while pending and not self.stopped:
            rule = pending.pop(rng.choice(sorted(pending)))
            if self.apply(rule):
                for reader in self.readers[rule.out_var]:
                    pending[reader.id] = reader

    def result(self) -> ClosureResult:
        trace = WithdrawalTrace(
            tuple(self.events),
            dict(self.index),
            tuple(self.applied),
            self.d,
        )
        if self.stopped:
            return ClosureResult(self.d, trace, Status.FAILED, self.first_emptied)
        if not is_common_fixpoint(self.rules, self.d):
            raise ConsistencyError("F44340 iteration ended outside a common fix-point")
        return ClosureResult(self.d, trace, Status.CLOSED)


def iterate(
    model: CspModel,
    rules: Sequence[ReductionRule],
    run: Run = Run(),
    stop_on_failure: bool = False,
) -> ClosureResult:
    """Apply rules one at a time from D along a fair run, recording every withdrawal."""
    it = Iteration(model, rules, stop_on_failure)
    it.run_script(run.script)
    if not it.stopped:
        if run.strategy is Strategy.WORKLIST:
            it.run_worklist()
        elif run.strategy is Strategy.ROUND_ROBIN:
            it.run_round_robin()
        else:
            it.run_seeded_random(run.seed)
    result = it.result()
    logger.info(
        f"{result} after {len(it.applied)} steps ({run}); "
        f"{len(it.events)} of {model.initial_family().size()} values withdrawn"
    )
    return result


def simultaneous_closure(model: CspModel, rules: Sequence[ReductionRule]) -> DomainFamily:
    """Fix-point from D of d ↦ (⋂_{r ∈ R} reduc_r(d)_x)_{x ∈ V}."""
    d = model.initial_family()
    sweeps = 0
    while True:
        domains = list(d.domains)
        for rule in rules:
            out = rule.out_var.index
            domains[out] = domains[out] & rule.apply(d).new_domain
        reduced = DomainFamily(d.variables, tuple(domains))
        sweeps += 1
        if reduced == d:
            logger.debug(f"simultaneous closure after {sweeps} sweeps")
            return d
        d = reduced


def is_common_fixpoint(rules: Iterable[ReductionRule], d: DomainFamily) -> bool:
    return all(not rule.apply(d).removed for rule in rules)
