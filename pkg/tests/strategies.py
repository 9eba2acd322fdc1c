"""Hypothesis strategies for formulas, sequents and label maps."""

from hypothesis import strategies as st

from reflcalc.formula import OMEGA, TOP, And, Dia, Sequent, Var

VAR_NAMES = ("p", "q", "r")


def labels(pool=(0, 1, 2, OMEGA)):
    return st.sampled_from(pool)


def formulas(max_leaves: int = 8, names=VAR_NAMES, label_pool=(0, 1, 2, OMEGA)):
    atoms = st.sampled_from([TOP] + [Var(n) for n in names])
    return st.recursive(
        atoms,
        lambda inner: st.one_of(
            st.builds(And, inner, inner),
            st.builds(Dia, labels(label_pool), inner),
        ),
        max_leaves=max_leaves,
    )


def sequents(max_leaves: int = 6, **kw):
    return st.builds(Sequent, formulas(max_leaves, **kw), formulas(max_leaves, **kw))
