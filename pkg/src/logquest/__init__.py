"""Logic-based question answering over a passage corpus.

Questions are matched against templates, translated to conjunctive queries,
and proved by a hypertableau prover against retrieved passages plus a
background knowledge base; failed queries are relaxed subgoal by subgoal,
and two learned rankers order passages and answers.
"""

from .engine import AnswerRecord, AskResult, Engine, PipelineConfig
from .parsing import NoPatternMatch, ParseError
from .prover import Limits, ProofResult, prove, saturate
from .relaxation import prove_with_relaxation
from .retrieval import InvertedIndex, Passage
from .terms import Atom, Clause, Const, Query, Var

__version__ = "0.1.0"

__all__ = [
    "AnswerRecord",
    "AskResult",
    "Atom",
    "Clause",
    "Const",
    "Engine",
    "InvertedIndex",
    "Limits",
    "NoPatternMatch",
    "ParseError",
    "Passage",
    "PipelineConfig",
    "ProofResult",
    "Query",
    "Var",
    "prove",
    "prove_with_relaxation",
    "saturate",
    "__version__",
]
