from collections import Counter
from fractions import Fraction
from itertools import permutations

import pytest

from rogauction import (
    InputError,
    Instance,
    VertexCoverValuation,
    brute_force_opt,
    certified_opt,
    paper_lower_bound_instance,
    paper_opt_bundles,
    run_greedy,
)
from rogauction.instrumentation import (
    ClaimReport,
    annotate_run,
    before_count,
    check_classic,
    check_corollary_cor,
    check_edge_accounting,
    check_pos_neg,
    check_technical,
    competitor_map,
    expected_max_uniform,
    verify_instance,
)

P7 = paper_lower_bound_instance(7)
P7_PAPER_OPT = certified_opt(P7, paper_opt_bundles(7))


def test_competitor_map_paper_allocation():
    comp = competitor_map(P7, P7_PAPER_OPT)
    assert P7_PAPER_OPT.owner()[1] == 1  # player 2, 0-based
    assert comp[1] == 0
    assert P7_PAPER_OPT.owner()[7] == 0
    assert comp[7] == 1  # both others have degree 0: lowest index


def test_competitor_map_isolated_item():
    g = VertexCoverValuation.from_edges(3, [(1, 2)])
    inst = Instance.from_valuations([g, g, g])
    opt = brute_force_opt(inst)
    comp = competitor_map(inst, opt)
    owner = opt.owner()
    assert comp[3] == min(i for i in range(3) if i != owner[3])


def test_competitor_needs_two_players():
    inst = Instance.from_valuations([VertexCoverValuation.from_edges(2, [(1, 2)])])
    with pytest.raises(InputError):
        competitor_map(inst, brute_force_opt(inst))


def test_annotate_telescoping(small_suite):
    for inst in small_suite[:45]:
        opt = brute_force_opt(inst)
        for sigma in list(permutations(inst.items))[::13]:
            recs = annotate_run(inst, sigma, opt=opt)
            welfare = run_greedy(inst, sigma)[0].welfare
            assert sum(r.loss for r in recs) == opt.welfare
            assert sum(r.gain for r in recs) == welfare
            assert recs[-1].opt_residual == 0
            for r in recs:
                assert 0 <= r.b_opt <= r.v_opt
                if r.competitor is not None:
                    assert 0 <= r.b_comp <= r.v_comp


def test_b_comp_definition(small_suite):
    for inst in small_suite:
        if inst.n < 2:
            continue
        opt = brute_force_opt(inst)
        sigma = tuple(reversed(inst.items))
        recs = annotate_run(inst, sigma, opt=opt)
        _, trace = run_greedy(inst, sigma)
        for r, s in zip(recs, trace.steps):
            assert r.b_comp == r.v_comp - s.marginals[r.competitor]
            assert r.b_opt == r.v_opt - s.marginals[r.opt_owner]


def test_annotate_first_step_has_nothing_used():
    recs = annotate_run(P7, (7, 1, 2, 3, 4, 5, 6), opt=P7_PAPER_OPT)
    assert recs[0].b_opt == 0 and recs[0].b_comp == 0


def test_annotate_identity_order_last_step():
    recs = annotate_run(P7, tuple(range(1, 8)), opt=P7_PAPER_OPT)
    last = recs[-1]
    assert last.item == 7 and last.opt_owner == 0
    assert last.b_opt == 6
    assert last.winner == 0 and last.gain == 0


def test_edge_accounting_identity_order():
    recs = annotate_run(P7, tuple(range(1, 8)), opt=P7_PAPER_OPT)
    rep = check_edge_accounting(recs, 6)
    counted = sum(r.b_opt + r.b_comp for r in recs)
    assert rep.holds and rep.margin == 6 - counted


def test_single_player_claims_not_applicable():
    inst = Instance.from_valuations([VertexCoverValuation.from_edges(3, [(1, 2), (2, 3)])])
    opt = brute_force_opt(inst)
    recs = annotate_run(inst, (1, 2, 3), opt=opt)
    assert check_edge_accounting(recs, 2).status == "not-applicable"
    assert check_corollary_cor(recs, 2, 2).status == "not-applicable"
    assert check_classic(recs).holds
    assert [r.status for r in check_pos_neg(inst, opt=opt)] == ["not-applicable"] * 2


def test_corollary_single_item():
    g = VertexCoverValuation.from_edges(1, [])
    inst = Instance.from_valuations([g, g])
    opt = brute_force_opt(inst)
    recs = annotate_run(inst, (1,), opt=opt)
    rep = check_corollary_cor(recs, 0, opt.welfare)
    assert rep.holds and rep.margin == 0


def test_classic_equality_when_owner_wins_alone():
    a = VertexCoverValuation.from_edges(3, [(1, 2), (1, 3)])
    b = VertexCoverValuation.from_edges(3, [])
    inst = Instance.from_valuations([a, b])
    opt = brute_force_opt(inst)
    recs = annotate_run(inst, (1, 2, 3), opt=opt)
    assert recs[0].winner == recs[0].opt_owner
    assert recs[0].loss == recs[0].gain


def test_per_run_checks_paper_m7_exhaustive():
    opt = brute_force_opt(P7)
    worst = None
    for sigma in permutations(P7.items):
        recs = annotate_run(P7, sigma, opt=opt)
        w = sum(r.gain for r in recs)
        for rep in (check_edge_accounting(recs, w), check_corollary_cor(recs, w, opt.welfare),
                    check_classic(recs)):
            assert rep.holds
        cor = check_corollary_cor(recs, w, opt.welfare)
        worst = cor if worst is None else worst.merge(cor)
    assert worst.checked == 5040 and worst.margin >= 0


def test_expected_max_uniform_examples():
    assert expected_max_uniform(3, 1) == Fraction(7, 4)
    assert expected_max_uniform(2, 5) == 5
    assert expected_max_uniform(0, 0) == 0
    for x in range(10):
        assert expected_max_uniform(x, x) == x


def test_technical_formula_brute_force():
    rep = check_technical(20)
    assert rep.holds and rep.checked == 441 and rep.margin == 0


def test_before_count_examples():
    star = VertexCoverValuation.from_edges(4, [(1, 4), (2, 4), (3, 4)])
    assert before_count((4, 1, 2, 3), 4, star) == 0
    assert before_count((1, 2, 3, 4), 4, star) == 3
    dist = Counter(before_count(s, 4, star) for s in permutations(range(1, 5)))
    assert dist == {0: 6, 1: 6, 2: 6, 3: 6}


def test_before_count_mean_is_half_degree(small_suite):
    for inst in small_suite[:20]:
        v = inst.valuations[0]
        perms = list(permutations(inst.items))
        for j in inst.items:
            mean = Fraction(sum(before_count(s, j, v) for s in perms), len(perms))
            assert mean == Fraction(v.degrees[j], 2)


def test_pos_neg_paper_m5():
    reports = check_pos_neg(paper_lower_bound_instance(5))
    assert [r.claim for r in reports] == ["pos", "neg"]
    assert all(r.holds for r in reports)
    assert "reverse_direction" in reports[1].notes


def test_pos_neg_single_edge_two_players():
    g = VertexCoverValuation.from_edges(2, [(1, 2)])
    inst = Instance.from_valuations([g, g])
    pos, neg = check_pos_neg(inst)
    # OPT gives item 1 to player 1 and item 2 to player 2; both orders by hand:
    #   (1, 2): gains 1, 1; b_C(2) = 1; losses 1, 1
    #   (2, 1): gains 1, 1; b_C = 0;    losses 2 (item 2), 0 (item 1)
    # item 1: E[b_C] = 0,   E[LOSS] = 1/2
    # item 2: E[b_C] = 1/2, E[LOSS] = 3/2
    pos_slack_1 = 1 - (Fraction(1, 2) + Fraction(2, 4) - 0)
    pos_slack_2 = 1 - (Fraction(1, 2) + Fraction(2, 4) - Fraction(1, 2))
    neg_slack_1 = 1 - (Fraction(1, 2) - 1)
    neg_slack_2 = 1 - (Fraction(3, 2) - 1)
    assert pos.holds and pos.margin == min(pos_slack_1, pos_slack_2) == 0
    assert neg.holds and neg.margin == min(neg_slack_1, neg_slack_2) == Fraction(1, 2)


def test_claim_report_merge():
    a = ClaimReport("x", "per-run", "holds", 3, 1)
    b = ClaimReport("x", "per-run", "fails", -1, 1, {"step": 2})
    m = a.merge(b)
    assert m.status == "fails" and m.margin == -1 and m.checked == 2 and m.witness == {"step": 2}
    assert a.merge(ClaimReport("x", "per-run", "skipped")) is a


def test_failed_claim_carries_witness():
    recs = annotate_run(P7, tuple(range(1, 8)), opt=P7_PAPER_OPT)
    rep = check_edge_accounting(recs, -1, {"permutation": list(range(1, 8))})
    assert rep.status == "fails"
    assert rep.witness == {"permutation": list(range(1, 8))}


def test_verify_instance_paper_m5_all_hold():
    reports = verify_instance(paper_lower_bound_instance(5))
    assert all(r.holds for r in reports), [r.to_dict() for r in reports if not r.holds]


def test_verify_instance_sampled_mode_skips_expectations():
    reports = {r.claim: r for r in verify_instance(paper_lower_bound_instance(9), exact_budget=100,
                                                   samples=300, seed=4)}
    for c in ("half", "edge-accounting", "corollary-cor", "classic", "before-bound"):
        assert reports[c].holds and reports[c].notes["mode"] == "sampled"
    for c in ("four-sevenths", "pos", "neg", "before-uniform"):
        assert reports[c].status == "skipped"


def test_verify_with_paper_allocation_beyond_opt_budget():
    inst = paper_lower_bound_instance(7)
    reports = verify_instance(inst, opt_budget=10, known_opt=paper_opt_bundles(7))
    assert all(r.holds for r in reports)


def test_verify_skips_without_opt():
    reports = verify_instance(paper_lower_bound_instance(7), claims=["half"], opt_budget=10)
    assert reports[0].status == "skipped"


def test_verify_rejects_unknown_claim():
    with pytest.raises(InputError):
        verify_instance(P7, claims=["nonsense"])
