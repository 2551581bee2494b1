import warnings

import pytest

from conftest import problem
from hornsep import normalize, parse_cq, parse_signature, parse_tbox
from hornsep.entailment import (
    PreconditionError,
    Witness,
    conservative_extension,
    decide_1tcq_entailment,
    decide_cq_entailment,
    decide_cq_entailment_incons,
    decide_deductive,
    decide_universal,
    enumerate_tree_aboxes,
    inseparable,
    make_problem,
    oracle_witness_search,
    verify_witness,
)
from hornsep.syntax import ProfileError, abox_tree_shaped


def test_advisor_cq_not_entailed(advisor_problem):
    d = decide_cq_entailment(advisor_problem)
    assert d.mode == "cq"
    assert not d.entails
    assert d.precheck == {"ri": True}
    assert d.certificate is not None


def test_advisor_oracle_finds_replayable_witness(advisor_problem):
    p = advisor_problem
    w = oracle_witness_search(p.t1, p.t2, p.sigA, p.sigQ, 2, 1)
    assert w is not None
    assert verify_witness(p.t1, p.t2, w)
    # the separating query asks for the professor concept
    assert {c for c, _v in w.query.concept_atoms} == {"Prof"}


def test_disjointness_entailed_but_not_under_incons(disjointness_problem):
    assert decide_cq_entailment(disjointness_problem).entails
    assert not decide_cq_entailment_incons(disjointness_problem).entails


def test_inverse_chain_entailed(inverse_chain_problem):
    assert decide_cq_entailment(inverse_chain_problem).entails
    assert decide_1tcq_entailment(inverse_chain_problem).entails


def test_identical_tboxes_shortcut():
    p = problem("A sub B", "A sub B", "concepts: A B\nroles:",
                "concepts: A B\nroles:")
    d = decide_cq_entailment(p)
    assert d.entails
    assert d.stats.get("subset") is True


def test_role_inclusion_precheck_fails():
    p = problem("", "r subr s", "concepts:\nroles: r s",
                "concepts:\nroles: r s")
    d = decide_cq_entailment(p)
    assert not d.entails
    assert d.precheck == {"ri": False}


def test_deductive_requires_matching_signatures(advisor_problem):
    with pytest.raises(PreconditionError):
        decide_deductive(advisor_problem)


def test_deductive_disjointness_not_conservative():
    p = problem("", "A1 and A2 sub bot", "concepts: A1 A2 B\nroles:",
                "concepts: A1 A2 B\nroles:")
    assert not decide_deductive(p).entails


def test_deductive_plain_existential_is_conservative():
    p = problem("", "A sub some r B", "concepts: A B\nroles:",
                "concepts: A B\nroles:")
    assert decide_deductive(p).entails


def test_deductive_rejects_non_eli_profile():
    p = problem("", "A sub only r B", "concepts: A B\nroles: r",
                "concepts: A B\nroles: r")
    with pytest.raises(ProfileError):
        decide_deductive(p)


def test_universal_role_detection():
    t = normalize(parse_tbox("top sub B"))
    sa = parse_signature("concepts: A\nroles:")
    sq = parse_signature("concepts: B\nroles:")
    assert decide_universal(t, sa, sq)
    assert not decide_universal(normalize(parse_tbox("")), sa, sq)


def test_conservative_extension_needs_inclusion(inverse_chain_problem):
    with pytest.raises(PreconditionError):
        conservative_extension(inverse_chain_problem)


def test_conservative_extension_of_advisor():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        p = problem(
            "PhDStud sub some advBy Prof\nadv subr inv(advBy)",
            "PhDStud sub some advBy Prof\nadv subr inv(advBy)\nfunc(advBy)",
            "concepts: PhDStud Prof\nroles: adv advBy",
            "concepts: PhDStud Prof\nroles: adv advBy",
        )
        assert not conservative_extension(p).entails


def test_inseparable_identity():
    p = problem("A sub B", "A sub B", "concepts: A B\nroles:",
                "concepts: A B\nroles:")
    assert inseparable(p).entails


def test_oracle_none_when_entailed(disjointness_problem):
    p = disjointness_problem
    assert oracle_witness_search(p.t1, p.t2, p.sigA, p.sigQ, 2, 2) is None


def test_oracle_witness_is_small_and_tree_shaped(advisor_problem):
    p = advisor_problem
    w = oracle_witness_search(p.t1, p.t2, p.sigA, p.sigQ, 2, 1)
    assert len(w.abox.individuals()) <= 2
    assert abox_tree_shaped(w.abox)


def test_verify_witness_rejects_fabrications(advisor_problem):
    p = advisor_problem
    w = oracle_witness_search(p.t1, p.t2, p.sigA, p.sigQ, 2, 1)
    # same query but pointed at the student, which both TBoxes refute
    fake = Witness(w.abox, parse_cq("q(x0) <- PhDStud(x0)"), w.answer)
    assert not verify_witness(p.t1, p.t2, fake)


def test_enumerate_tree_aboxes_bounds():
    sig = parse_signature("concepts: A\nroles: r")
    seen = list(enumerate_tree_aboxes(sig, 2))
    assert seen
    for a in seen:
        assert len(a.individuals()) <= 2
        assert abox_tree_shaped(a) or not a.role_assertions
    # enumeration is deterministic
    again = list(enumerate_tree_aboxes(sig, 2))
    assert [sorted(a.concept_assertions) for a in seen] == [
        sorted(a.concept_assertions) for a in again
    ]


def test_decision_json_shape(advisor_problem):
    d = decide_cq_entailment(advisor_problem)
    obj = d.to_json_obj()
    assert set(obj) == {"mode", "entails", "precheck", "witness", "stats"}
    assert obj["witness"] is None
