"""Template instantiation by explicit-stack depth-first search."""

from __future__ import annotations

from dataclasses import dataclass

from .formula import BOOL, Formula, Template, substitute, type_of

DEFAULT_MAX_INSTANCES = 10_000


class ConfigurationError(ValueError):
    pass


@dataclass(frozen=True)
class InstantiatedTautology:
    formula: Formula
    template: str
    seeds: tuple[str, ...]

    @property
    def provenance(self) -> tuple[str, tuple[str, ...]]:
        return (self.template, self.seeds)

    @property
    def name(self) -> str:
        if self.template == "seed":
            return self.seeds[0]
        return f"{self.template}[{','.join(self.seeds)}]"


def count_instances(templates, seeds) -> int:
    return sum(len(seeds) ** len(t.placeholders) for t in templates)


def _instantiate(template: Template, chosen: list[Formula]) -> InstantiatedTautology:
    mapping = {p: s.root for p, s in zip(template.placeholders, chosen)}
    tuple_names = tuple(s.name for s in chosen)
    root = substitute(template.skeleton, mapping)
    name = f"{template.name}[{','.join(tuple_names)}]"
    return InstantiatedTautology(Formula(root, name), template.name, tuple_names)


def synthesize(templates, seeds, max_instances: int = DEFAULT_MAX_INSTANCES
               ) -> list[InstantiatedTautology]:
    """Instantiate every template with every tuple of seeds.

    For each template the stack starts with (0, []); popping (m, partial)
    either emits the finished tuple (m == n) or pushes one extension per
    seed, in seed order.  Extensions are independent copies.  Because the
    stack is LIFO the last seed is explored first.
    """
    seeds = list(seeds)
    for s in seeds:
        if type_of(s.root) != BOOL:
            raise ConfigurationError(f"seed {s.name!r} is not boolean-valued")
    total = count_instances(templates, seeds)
    if total > max_instances:
        raise ConfigurationError(
            f"synthesis would produce {total} instances, above the cap of {max_instances}")

    out: list[InstantiatedTautology] = []
    for template in templates:
        n = len(template.placeholders)
        if n and not seeds:
            raise ConfigurationError(
                f"template {template.name!r} has placeholders but the seed set is empty")
        stack: list[tuple[int, list[Formula]]] = [(0, [])]
        while stack:
            m, partial = stack.pop()
            if m == n:
                out.append(_instantiate(template, partial))
                continue
            for seed in seeds:
                stack.append((m + 1, partial + [seed]))
    return out


def seed_instances(seeds) -> list[InstantiatedTautology]:
    """Wrap each seed as an instance of itself (template name ``seed``)."""
    return [InstantiatedTautology(s, "seed", (s.name,)) for s in seeds]
