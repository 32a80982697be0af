"""Strategies for random small corpora and collision-rich query ASTs.

The vocabulary is tiny on purpose: with ~20 surface words the generated
queries keep hitting generated documents, which is what makes the oracle
comparison and the boolean-semantics properties bite.
"""

from hypothesis import strategies as st

from medrag.corpus import Corpus, Document
from medrag.querylang import And, Not, Or, Phrase, Term

VOCAB = [
    "gene", "genes", "therapy", "editing", "covid", "vaccine", "protein",
    "cell", "cells", "cancer", "quality", "of", "life", "mouse", "human",
    "trial", "the", "19", "disease", "patients",
]

_SENTENCE = st.lists(st.sampled_from(VOCAB), min_size=0, max_size=12).map(" ".join)
_TITLE = st.lists(st.sampled_from(VOCAB), min_size=1, max_size=5).map(" ".join)

documents = st.builds(
    Document,
    pmid=st.integers(min_value=1, max_value=999),
    title=_TITLE,
    abstract_text=_SENTENCE,
)

corpora = st.lists(documents, min_size=0, max_size=30, unique_by=lambda d: d.pmid).map(
    Corpus
)

_FIELD = st.sampled_from([None, "title", "abstract"])
_vocab_leaves = st.one_of(
    st.builds(Term, text=st.sampled_from(VOCAB + ["absent", "covid-19"]), field=_FIELD),
    st.builds(
        lambda words, field: Phrase(tuple(words), field),
        st.lists(st.sampled_from(VOCAB), min_size=1, max_size=3),
        _FIELD,
    ),
)

vocab_asts = st.recursive(
    _vocab_leaves,
    lambda inner: st.one_of(
        st.builds(Not, inner),
        st.builds(lambda cs: And(tuple(cs)), st.lists(inner, min_size=2, max_size=3)),
        st.builds(lambda cs: Or(tuple(cs)), st.lists(inner, min_size=2, max_size=3)),
    ),
    max_leaves=8,
)
