"""Brute-force oracles and random generators shared by the test suite.

Everything here is independent of the implementation strategy it
cross-checks: the model enumerator interprets normal-form axioms
directly over explicit finite structures, and the homomorphism
reference works on unfoldings element by element.
"""

import itertools

from hornsep.models import TGNode, TypeGraph, type_graph, n_bounded_hom_oracle
from hornsep.syntax import ConjSub, Role, SubAll, SubBot, SubEx, TopSub


# ---------------------------------------------------------------------------
# finite model enumeration


class FiniteModel:
    __slots__ = ("size", "labels", "edges")

    def __init__(self, size, labels, edges):
        self.size = size
        self.labels = labels  # element -> frozenset of concept names
        self.edges = edges  # role name -> frozenset of (x, y)

    def succ(self, x, role: Role):
        pairs = self.edges.get(role.name, frozenset())
        if role.inverted:
            return [a for a, b in pairs if b == x]
        return [b for a, b in pairs if a == x]

    def pairs(self, role: Role):
        pairs = self.edges.get(role.name, frozenset())
        if role.inverted:
            return {(b, a) for a, b in pairs}
        return set(pairs)


def finite_models(concepts, role_names, max_size):
    """Every interpretation with 1..max_size elements over the names."""
    concepts = sorted(concepts)
    role_names = sorted(role_names)
    label_choices = [
        frozenset(s)
        for k in range(len(concepts) + 1)
        for s in itertools.combinations(concepts, k)
    ]
    for size in range(1, max_size + 1):
        elems = list(range(size))
        all_pairs = [(x, y) for x in elems for y in elems]
        pair_sets = [
            frozenset(s)
            for k in range(len(all_pairs) + 1)
            for s in itertools.combinations(all_pairs, k)
        ]
        for labeling in itertools.product(label_choices, repeat=size):
            labels = dict(zip(elems, labeling))
            for rels in itertools.product(pair_sets, repeat=len(role_names)):
                yield FiniteModel(size, labels, dict(zip(role_names, rels)))


def concept_extension(c, m: FiniteModel) -> set:
    from hornsep.syntax import And, Bot, Exists, Forall, Name, Top

    if isinstance(c, Top):
        return set(range(m.size))
    if isinstance(c, Bot):
        return set()
    if isinstance(c, Name):
        return {x for x in range(m.size) if c.name in m.labels[x]}
    if isinstance(c, And):
        return concept_extension(c.left, m) & concept_extension(c.right, m)
    inner = concept_extension(c.arg, m)
    if isinstance(c, Exists):
        return {
            x
            for x in range(m.size)
            if any(y in inner for y in m.succ(x, c.role))
        }
    if isinstance(c, Forall):
        return {
            x
            for x in range(m.size)
            if all(y in inner for y in m.succ(x, c.role))
        }
    raise TypeError(f"unsupported concept {c!r}")


def model_satisfies_raw(m: FiniteModel, tbox) -> bool:
    """Direct satisfaction of a parsed (unnormalized) TBox."""
    for left, right in tbox.cis:
        if not concept_extension(left, m) <= concept_extension(right, m):
            return False
    for r, s in tbox.ris:
        if not m.pairs(r) <= m.pairs(s):
            return False
    for f in tbox.fas:
        if any(len(m.succ(x, f)) > 1 for x in range(m.size)):
            return False
    return True


def model_satisfies(m: FiniteModel, ntbox) -> bool:
    for ci in ntbox.cis:
        if isinstance(ci, TopSub):
            if any(ci.sup not in m.labels[x] for x in range(m.size)):
                return False
        elif isinstance(ci, SubBot):
            if any(ci.sub in m.labels[x] for x in range(m.size)):
                return False
        elif isinstance(ci, ConjSub):
            for x in range(m.size):
                if (
                    ci.sub1 in m.labels[x]
                    and ci.sub2 in m.labels[x]
                    and ci.sup not in m.labels[x]
                ):
                    return False
        elif isinstance(ci, SubEx):
            for x in range(m.size):
                if ci.sub in m.labels[x] and not any(
                    ci.sup in m.labels[y] for y in m.succ(x, ci.role)
                ):
                    return False
        elif isinstance(ci, SubAll):
            for x in range(m.size):
                if ci.sub in m.labels[x] and any(
                    ci.sup not in m.labels[y] for y in m.succ(x, ci.role)
                ):
                    return False
    for r, s in ntbox.ris:
        if not m.pairs(r) <= m.pairs(s):
            return False
    for f in ntbox.fas:
        for x in range(m.size):
            if len(m.succ(x, f)) > 1:
                return False
    return True


class BruteForceReasoner:
    """Subsumption by exhaustive search over bounded finite models of a
    parsed (unnormalized) TBox; fresh names never enter the picture, so
    this is a route fully independent of the normalizer."""

    def __init__(self, tbox, concepts, role_names, max_size=3):
        self.models = [
            m
            for m in finite_models(concepts, role_names, max_size)
            if model_satisfies_raw(m, tbox)
        ]

    def subsumes(self, t, a: str) -> bool:
        t = frozenset(t)
        for m in self.models:
            for x in range(m.size):
                if t <= m.labels[x] and a not in m.labels[x]:
                    return False
        return True


# ---------------------------------------------------------------------------
# bounded homomorphism reference


def con_sigma_view(tg: TypeGraph, sig) -> TypeGraph:
    """The part of a rooted type graph reachable through signature roles,
    with non-signature edges dropped."""

    def keep(rho):
        return any(s.name in sig.roles for s in rho)

    view = TypeGraph(root=tg.root)
    queue = [tg.root]
    while queue:
        node = queue.pop()
        if node in view.nodes:
            continue
        view.nodes.add(node)
        succs = [e for e in tg.out[node] if keep(e[1])]
        view.out[node] = succs
        for _r, _rho, child in succs:
            queue.append(child)
    return view


def fin_hom_reference(tb1, t1, tb2, t2, sig, n: int) -> bool:
    """Does every connected <= n element piece of the signature part of
    the canonical model of (tb2, t2) map into the canonical model of
    (tb1, t1)?  The reference for the mosaic procedure."""
    src = con_sigma_view(type_graph(tb2, frozenset(t2)), sig)
    tgt = type_graph(tb1, frozenset(t1))
    return n_bounded_hom_oracle(src, tgt, sig, n)


# ---------------------------------------------------------------------------
# random inputs


def random_tbox_text(rng, concepts, roles, max_axioms) -> str:
    """Random ELHIF-bot TBox text over the given name pools."""
    lines = []
    kinds = ["cc", "cex", "exc", "conj"] + (["ri"] if roles else [])
    for _ in range(rng.randint(0, max_axioms)):
        kind = rng.choice(kinds)
        c = lambda: rng.choice(concepts)  # noqa: E731
        if kind == "ri":
            r1, r2 = rng.choice(roles), rng.choice(roles)
            tgt = f"inv({r2})" if rng.random() < 0.3 else r2
            lines.append(f"{r1} subr {tgt}")
            continue
        if not roles and kind in ("cex", "exc"):
            kind = "cc"
        if kind == "cc":
            lines.append(f"{c()} sub {c()}")
        elif kind == "conj":
            lines.append(f"{c()} and {c()} sub {c()}")
        else:
            r = rng.choice(roles)
            rr = f"inv({r})" if rng.random() < 0.4 else r
            if kind == "cex":
                lines.append(f"{c()} sub some {rr} {c()}")
            else:
                lines.append(f"some {rr} {c()} sub {c()}")
    return "\n".join(lines)


def random_regular_tree(rng, labels, max_nodes):
    """A random regular tree representation over the given labels: every
    node gets 0-2 children drawn from the node pool, so back edges and
    infinite branches occur naturally."""
    from hornsep.automata import RegularTreeRep

    n = rng.randint(1, max_nodes)
    ids = [f"n{i}" for i in range(n)]
    lab = {nid: rng.choice(labels) for nid in ids}
    children = {}
    for nid in ids:
        kids = rng.sample(ids, rng.randint(0, min(2, n)))
        children[nid] = kids
    return RegularTreeRep(lab, children, ids[0])
