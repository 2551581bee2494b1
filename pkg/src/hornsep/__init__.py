"""Entailment, inseparability, and conservative-extension checking for
Horn description logic TBoxes, with a brute-force witness-search oracle
for cross-validation."""

from .entailment import (
    Decision,
    PreconditionError,
    Problem,
    Witness,
    conservative_extension,
    decide_1tcq_entailment,
    decide_cq_entailment,
    decide_cq_entailment_incons,
    decide_deductive,
    inseparable,
    make_problem,
    oracle_witness_search,
    verify_witness,
)
from .syntax import (
    ABox,
    CQ,
    HornsepError,
    NormalTBox,
    ParseError,
    ProfileError,
    Role,
    Signature,
    TBox,
    normalize,
    parse_abox,
    parse_cq,
    parse_signature,
    parse_tbox,
)

__all__ = [
    "ABox",
    "CQ",
    "Decision",
    "HornsepError",
    "NormalTBox",
    "ParseError",
    "PreconditionError",
    "Problem",
    "ProfileError",
    "Role",
    "Signature",
    "TBox",
    "Witness",
    "conservative_extension",
    "decide_1tcq_entailment",
    "decide_cq_entailment",
    "decide_cq_entailment_incons",
    "decide_deductive",
    "inseparable",
    "make_problem",
    "normalize",
    "oracle_witness_search",
    "parse_abox",
    "parse_cq",
    "parse_signature",
    "parse_tbox",
    "verify_witness",
]

__version__ = "0.1.0"
