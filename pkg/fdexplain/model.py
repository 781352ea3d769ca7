"""CSP model (V, C, var, D, T): variables, finite integer domains, constraints, domain families.

Also holds the error hierarchy shared by every other module, and the generate-and-test
oracle used to check the propagation engine against brute force.
"""

import dataclasses
import enum
import itertools
import logging
from typing import Final, Iterable, Iterator, Mapping, Sequence

logger = logging.getLogger(__name__)
logger.setLevel(logging.DEBUG)  # will be throttled by handler log level (file, console)

# values must fit a signed machine word
int_min: Final[int] = -(2**63)
int_max: Final[int] = 2**63 - 1


###
### errors
###


class FdxError(Exception):
    def __init__(self, message="") -> None:
        self.message = message
        super().__init__(self.message)


class InputError(FdxError):
    pass  # caller or model file is at fault; CLI exit code 1


class ConfigurationError(InputError):
    pass


class ConsistencyError(FdxError):
    pass  # an internal invariant does not hold; CLI exit code 2


###
### variables and assignments
###


@dataclasses.dataclass(frozen=True, order=True)
class VariableId:
    index: int  # position in CspModel.variables
    name: str

    def __str__(self) -> str:
        return self.name


@dataclasses.dataclass(frozen=True)
class Assignment:
    """One value per variable of `scope` (a tuple of the CSP in the family notation)."""

    scope: tuple[VariableId, ...]
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.scope) != len(self.values):
            raise InputError(
                f"F40127 assignment has {len(self.scope)} variables but {len(self.values)} values"
            )
        if len(set(self.scope)) != len(self.scope):
            raise InputError("F40128 assignment repeats a variable")

    @staticmethod
    def from_dict(mapping: Mapping[VariableId, int]) -> 'Assignment':
        scope = tuple(sorted(mapping))
        return Assignment(scope, tuple(mapping[v] for v in scope))

    def value(self, var: VariableId) -> int:
        try:
            return self.values[self.scope.index(var)]
        except ValueError:
            raise InputError(f"F40129 variable {var} is not assigned")

    def restrict(self, scope: Sequence[VariableId]) -> tuple[int, ...]:
        return tuple(self.value(v) for v in scope)

    def as_dict(self) -> dict[VariableId, int]:
        return dict(zip(self.scope, self.values))

    def __str__(self) -> str:
        return ' '.join(f'{v}={e}' for v, e in zip(self.scope, self.values))


###
### constraints
###


class Form(enum.Enum):
    TABLE = 'table'  # extensional relation T_c
    LESS_THAN = '<'  # x #< y
    LESS_EQ = '<='  # x ≤ y
    OFFSET_EQ = '+'  # x #= y + c
    SUM3 = '++'  # x #=# y + z

    def arity(self) -> int | None:
        if self is Form.TABLE:
            return None  # any arity
        return 3 if self is Form.SUM3 else 2


@dataclasses.dataclass(frozen=True)
class ConstraintDef:
    id: str
    form: Form
    scope: tuple[VariableId, ...]  # var(c), an ordered set
    table: frozenset[tuple[int, ...]] = frozenset()  # Form.TABLE only; values in scope order
    offset: int = 0  # Form.OFFSET_EQ only: scope[0] = scope[1] + offset

    def __post_init__(self) -> None:
        arity = self.form.arity()
        if len(self.scope) == 0:
            raise InputError(f"F51302 constraint {self.id} has an empty scope")
        if arity is not None and len(self.scope) != arity:
            raise InputError(
                f"F51303 constraint {self.id}: '{self.form.value}' needs {arity} variables, "
                f"got {len(self.scope)}"
            )
        if len(set(self.scope)) != len(self.scope):
            raise InputError(f"F51304 constraint {self.id} repeats a variable")
        if self.form is Form.TABLE and len(self.scope) < 2:
            raise InputError(f"F51306 table {self.id} needs at least two variables")
        for t in self.table:
            if len(t) != len(self.scope):
                raise InputError(f"F51305 constraint {self.id}: tuple {t} has the wrong arity")

    def holds(self, values: Sequence[int]) -> bool:
        """Is the tuple `values` (in scope order) a member of T_c?"""
        if self.form is Form.TABLE:
            return tuple(values) in self.table
        if self.form is Form.LESS_THAN:
            return values[0] < values[1]
        if self.form is Form.LESS_EQ:
            return values[0] <= values[1]
        if self.form is Form.OFFSET_EQ:
            return values[0] == values[1] + self.offset
        return values[0] == values[1] + values[2]  # Form.SUM3

    def relation(self, model: 'CspModel') -> list[tuple[int, ...]]:
        """T_c restricted to the initial domains, in lexicographic order.

        Intensional forms are materialized here, for the oracle and the correctness checks only.
        """
        if self.form is Form.TABLE:
            return sorted(self.table)
        ranges = [sorted(model.domain(x)) for x in self.scope]
        return [t for t in itertools.product(*ranges) if self.holds(t)]

    def __str__(self) -> str:
        names = [v.name for v in self.scope]
        if self.form is Form.TABLE:
            return f"table({', '.join(names)})"
        if self.form is Form.OFFSET_EQ:
            return f"{names[0]} = {names[1]} + {self.offset}"
        if self.form is Form.SUM3:
            return f"{names[0]} = {names[1]} ++ {names[2]}"
        return f"{names[0]} {self.form.value} {names[1]}"


###
### models and domain families
###


@dataclasses.dataclass(frozen=True)
class DomainFamily:
    """An element of the search space: one set of still-possible values per variable."""

    variables: tuple[VariableId, ...]
    domains: tuple[frozenset[int], ...]  # indexed by VariableId.index

    def __getitem__(self, var: VariableId) -> frozenset[int]:
        return self.domains[var.index]

    def replace(self, var: VariableId, domain: Iterable[int]) -> 'DomainFamily':
        domains = list(self.domains)
        domains[var.index] = frozenset(domain)
        return DomainFamily(self.variables, tuple(domains))

    def empty_variables(self) -> list[VariableId]:
        return [v for v in self.variables if not self.domains[v.index]]

    def size(self) -> int:
        return sum(len(d) for d in self.domains)

    def product(self) -> Iterator[tuple[int, ...]]:
        """Every tuple of ∏ d, lexicographic by variable index then value."""
        return itertools.product(*(sorted(d) for d in self.domains))

    def __str__(self) -> str:
        return '\n'.join(f"{v}: {format_domain(self[v])}" for v in self.variables)


def format_domain(domain: Iterable[int]) -> str:
    return '{' + ', '.join(str(e) for e in sorted(domain)) + '}'


@dataclasses.dataclass(frozen=True)
class CspModel:
    variables: tuple[VariableId, ...]
    initial_domains: tuple[frozenset[int], ...]  # D, indexed by VariableId.index
    constraints: tuple[ConstraintDef, ...] = ()

    def __post_init__(self) -> None:
        if len(self.variables) != len(self.initial_domains):
            raise InputError("F62810 one initial domain is needed per variable")
        names = set()
        for i, v in enumerate(self.variables):
            if v.index != i:
                raise InputError(f"F62811 variable {v} has index {v.index}, expected {i}")
            if v.name in names:
                raise InputError(f"F62812 duplicate variable {v}")
            names.add(v.name)
            if not self.initial_domains[i]:
                raise InputError(f"F62813 variable {v} has an empty domain")
        ids = set()
        for c in self.constraints:
            if c.id in ids:
                raise InputError(f"F62814 duplicate constraint id {c.id}")
            ids.add(c.id)
            for x in c.scope:
                if x.index >= len(self.variables) or self.variables[x.index] != x:
                    raise InputError(f"F62815 constraint {c.id} uses unknown variable {x}")
            for t in c.table:
                for x, e in zip(c.scope, t):
                    if e not in self.initial_domains[x.index]:
                        raise InputError(
                            f"F62816 constraint {c.id}: value {e} is not in the domain of {x}"
                        )

    @staticmethod
    def build(
        domains: Mapping[str, Iterable[int]],
        constraints: Iterable[tuple] = (),
    ) -> 'CspModel':
        """Build a model from plain names.

        Each constraint is `(form, names)`, `(Form.OFFSET_EQ, names, offset)` or
        `(Form.TABLE, names, tuples)`; ids are c1, c2, ... in order.
        """
        variables = tuple(VariableId(i, name) for i, name in enumerate(domains))
        by_name = {v.name: v for v in variables}
        defs = []
        for k, spec in enumerate(constraints, start=1):
            form, names, *extra = spec
            try:
                scope = tuple(by_name[n] for n in names)
            except KeyError as e:
                raise InputError(f"F62817 unknown variable {e.args[0]}")
            kwargs = {}
            if form is Form.OFFSET_EQ:
                kwargs['offset'] = extra[0] if extra else 0
            elif form is Form.TABLE:
                kwargs['table'] = frozenset(tuple(t) for t in (extra[0] if extra else ()))
            defs.append(ConstraintDef(f'c{k}', form, scope, **kwargs))
        return CspModel(
            variables,
            tuple(frozenset(d) for d in domains.values()),
            tuple(defs),
        )

    def variable(self, name: str) -> VariableId:
        for v in self.variables:
            if v.name == name:
                return v
        raise InputError(f"F62818 unknown variable {name}")

    def domain(self, var: VariableId) -> frozenset[int]:
        return self.initial_domains[var.index]

    def initial_family(self) -> DomainFamily:
        return DomainFamily(self.variables, self.initial_domains)

    def singleton_family(self, t: Assignment) -> DomainFamily:
        """({t_x}) on the variables of t, initial domains elsewhere."""
        d = self.initial_family()
        for var, e in zip(t.scope, t.values):
            d = d.replace(var, {e})
        return d


###
### oracle
###


def family_leq(a: DomainFamily, b: DomainFamily) -> bool:
    """a ⊑ b: per-variable inclusion."""
    if a.variables != b.variables:
        raise InputError("F73020 domain families range over different variables")
    return all(da <= db for da, db in zip(a.domains, b.domains))


def is_solution(model: CspModel, t: Assignment) -> bool:
    if set(t.scope) != set(model.variables):
        raise InputError("F73021 a candidate must assign every model variable exactly once")
    for var, e in zip(t.scope, t.values):
        if e not in model.domain(var):
            raise InputError(f"F73022 value {e} is not in the domain of {var}")
    return all(c.holds(t.restrict(c.scope)) for c in model.constraints)


def enumerate_solutions(model: CspModel, within: DomainFamily | None = None) -> list[Assignment]:
    """Generate and test: every solution inside ∏ within, in lexicographic order."""
    if within is None:
        within = model.initial_family()
    if not family_leq(within, model.initial_family()):
        raise InputError("F73023 search space must lie below the initial domains")
    solutions = []
    for values in within.product():
        if all(c.holds(tuple(values[x.index] for x in c.scope)) for c in model.constraints):
            solutions.append(Assignment(model.variables, values))
    logger.debug(f"oracle: {len(solutions)} solutions")
    return solutions
