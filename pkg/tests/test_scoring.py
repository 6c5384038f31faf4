import math
import random

import pytest

from tailtyping.dataset import ContextSet, FrequencyRecord
from tailtyping.recovery import (STRATEGIES, STRATEGY_CAUSAL,
                                 STRATEGY_MLM_EQUAL,
                                 STRATEGY_MLM_PROGRESSIVE, RecoveryEstimate,
                                 average_salience, build_causal_prompt,
                                 correlate_salience_with_hits, mask_entity,
                                 recover_probability, write_salience_records)
from tailtyping.scorers import (MASK_SLOT, BigramScorer, TableScorer,
                                UniformScorer)

CONTEXT = "I saw John Paul Jones downtown"
SPAN = (6, 21)  # "John Paul Jones"


class TestStubScorers:
    def test_uniform_logprob(self):
        s = UniformScorer(100)
        ids = s.tokenize("a b c").ids
        assert s.score_causal(ids, ids[0]) == pytest.approx(-math.log(100))
        assert s.score_mlm([ids[0], MASK_SLOT], 1, ids[1]) == pytest.approx(
            -math.log(100))

    def test_table_conditional_overrides(self):
        s = TableScorer({"b": 0.5}, cond={("a", "b"): 0.25})
        ids = s.tokenize("a b").ids
        assert s.score_causal([ids[0]], ids[1]) == pytest.approx(math.log(0.25))
        assert s.score_causal([], ids[1]) == pytest.approx(math.log(0.5))

    def test_table_rejects_bad_probability(self):
        with pytest.raises(ValueError):
            TableScorer({"a": 1.5})
        with pytest.raises(ValueError):
            TableScorer({"a": 0.0})

    def test_bigram_probabilities_sum_sane(self):
        s = BigramScorer("the cat sat on the mat")
        ids = s.tokenize("the cat").ids
        lp = s.score_causal([ids[0]], ids[1])
        # count(the cat)=1, count(the)=2, V=5 -> (1+1)/(2+5)
        assert lp == pytest.approx(math.log(2 / 7))
        assert s.vocab_size == 5

    def test_logprobs_are_nonpositive_and_finite(self):
        for scorer in (UniformScorer(10), BigramScorer("a b a c a b")):
            ids = scorer.tokenize("a b c").ids
            for i in range(1, len(ids)):
                lp = scorer.score_causal(ids[:i], ids[i])
                assert math.isfinite(lp) and lp <= 0.0


class TestMaskEntity:
    def test_equal_mode(self):
        tokens = [10, 11, 12, 13, 14]
        masked = mask_entity(tokens, 1, 3, "equal")
        assert masked == [10, MASK_SLOT, MASK_SLOT, MASK_SLOT, 14]

    def test_single_mode(self):
        tokens = [10, 11, 12, 13, 14]
        masked = mask_entity(tokens, 1, 3, "single")
        assert masked == [10, MASK_SLOT, 14]

    def test_round_trip_reconstruction(self):
        tokens = [1, 2, 3, 4, 5, 6]
        entity = tokens[2:5]
        masked = mask_entity(tokens, 2, 3, "equal")
        filled = masked[:2] + entity + masked[5:]
        assert filled == tokens
        masked_single = mask_entity(tokens, 2, 3, "single")
        filled_single = masked_single[:2] + entity + masked_single[3:]
        assert filled_single == tokens

    def test_zero_tokens_rejected(self):
        with pytest.raises(ValueError):
            mask_entity([1, 2], 0, 0, "equal")


class TestCausalPrompt:
    def test_structure(self):
        prompt = build_causal_prompt("X attended Y.", (0, 1))
        lines = prompt.split("\n")
        assert lines[0] == ("Instruction: Fill in the appropriate entity "
                            "that completes the sentence below.")
        assert lines[1] == "Context: [blank] attended Y."
        assert lines[2] == "Response: [blank] can be replaced with:"

    def test_empty_right_context(self):
        prompt = build_causal_prompt("He met Jones", (7, 12))
        assert "Context: He met [blank]" in prompt

    def test_preexisting_blank_rejected(self):
        with pytest.raises(ValueError):
            build_causal_prompt("a [blank] b", (0, 1))


class TestRecoverProbability:
    def test_uniform_three_tokens(self):
        estimate = recover_probability(CONTEXT, SPAN, UniformScorer(100),
                                       STRATEGY_MLM_EQUAL)
        assert estimate.n == 3
        assert estimate.probability == pytest.approx(1e-6, rel=1e-12)

    def test_table_product(self):
        scorer = TableScorer({"John": 0.5, "Paul": 0.25}, default=1.0)
        estimate = recover_probability("I saw John Paul", (6, 15), scorer,
                                       STRATEGY_MLM_EQUAL)
        assert estimate.probability == pytest.approx(0.125, rel=1e-12)

    def test_single_token_collapses_product(self):
        scorer = TableScorer({"Jones": 0.125}, default=1.0)
        for strategy in STRATEGIES:
            est = recover_probability("I met Jones here", (6, 11), scorer,
                                      strategy)
            assert est.n == 1
            assert est.probability == pytest.approx(0.125, rel=1e-12)

    def test_strategies_agree_at_n1_exactly(self):
        scorer = TableScorer({"Jones": 0.37}, default=1.0)
        values = {
            recover_probability("I met Jones here", (6, 11), scorer, s).probability
            for s in STRATEGIES
        }
        assert len(values) == 1

    def test_product_bound_and_log_sum(self):
        rng = random.Random(17)
        scorer = BigramScorer(
            " ".join(rng.choice("a b c d e f".split()) for _ in range(300))
        )
        est = recover_probability("a b c d e", (0, 9), scorer,
                                  STRATEGY_CAUSAL)
        naive_sum = sum(est.token_logprobs)
        assert est.log_probability == pytest.approx(naive_sum, abs=1e-12)
        for p in est.token_probabilities:
            assert est.probability <= p

    def test_monotone_shrinkage(self):
        scorer = UniformScorer(50)
        short = recover_probability("x a b y", (2, 5), scorer,
                                    STRATEGY_MLM_EQUAL)
        long = recover_probability("x a b c y", (2, 7), scorer,
                                   STRATEGY_MLM_EQUAL)
        assert long.probability <= short.probability

    def test_capability_mismatch(self):
        mlm_only = UniformScorer(10, capabilities=("mlm",))
        with pytest.raises(ValueError, match="causal"):
            recover_probability(CONTEXT, SPAN, mlm_only, STRATEGY_CAUSAL)

    def test_determinism(self):
        scorer = BigramScorer("u v w u v w u w v")
        a = recover_probability("u v w", (0, 3), scorer, STRATEGY_CAUSAL)
        b = recover_probability("u v w", (0, 3), scorer, STRATEGY_CAUSAL)
        assert a.log_probability == b.log_probability

    def test_progressive_differs_from_equal_when_conditioned(self):
        # under the equal-masks strategy the mask to the right is still a
        # mask; the table keys only on the previous token so both agree here,
        # but the estimates must be valid products either way
        scorer = TableScorer({"John": 0.5, "Paul": 0.5},
                             cond={("John", "Paul"): 0.125}, default=1.0)
        eq = recover_probability("oh John Paul !", (3, 12), scorer,
                                 STRATEGY_MLM_EQUAL)
        prog = recover_probability("oh John Paul !", (3, 12), scorer,
                                   STRATEGY_MLM_PROGRESSIVE)
        assert eq.probability == pytest.approx(0.5 * 0.125, rel=1e-12)
        assert prog.probability == pytest.approx(0.5 * 0.125, rel=1e-12)

    def test_invalid_span(self):
        with pytest.raises(ValueError):
            recover_probability("abc", (2, 1), UniformScorer(5),
                                STRATEGY_MLM_EQUAL)


class TestRecoveryEstimate:
    def test_rejects_positive_logprob(self):
        with pytest.raises(ValueError):
            RecoveryEstimate("e", "c", (0.1,))

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            RecoveryEstimate("e", "c", ())

    def test_uniform_salience_depends_only_on_token_count(self):
        scorer = UniformScorer(20)
        for entity, n in (("Rex", 1), ("Carl Crawford", 2),
                          ("a b c d e", 5)):
            sentence = f"yesterday {entity} appeared"
            start = sentence.index(entity)
            est = recover_probability(sentence, (start, start + len(entity)),
                                      scorer, STRATEGY_MLM_EQUAL)
            assert est.probability == pytest.approx(20.0 ** -n, rel=1e-12)


class TestAverageSalience:
    def test_arithmetic_mean(self):
        scorer = TableScorer({"Rex": 0.2}, cond={("saw", "Rex"): 0.4},
                             default=1.0)
        contexts = ContextSet(entity="Rex",
                              sentences=("Rex barked.", "I saw Rex ."))
        record = average_salience("Rex", contexts, scorer,
                                  STRATEGY_MLM_PROGRESSIVE)
        assert record.mean_probability == pytest.approx(0.3, rel=1e-12)
        assert record.context_count == 2

    def test_single_context(self):
        scorer = TableScorer({"Rex": 0.25}, default=1.0)
        contexts = ContextSet(entity="Rex", sentences=("Rex barked.",))
        record = average_salience("Rex", contexts, scorer, STRATEGY_CAUSAL)
        assert record.mean_probability == pytest.approx(0.25, rel=1e-12)

    def test_ten_contexts(self):
        scorer = UniformScorer(10)
        sentences = tuple(f"sentence number {i} mentions Rex" for i in range(10))
        record = average_salience("Rex", ContextSet("Rex", sentences), scorer,
                                  STRATEGY_MLM_EQUAL)
        assert record.context_count == 10
        assert record.mean_probability == pytest.approx(0.1, rel=1e-12)

    def test_geometric_flag(self):
        scorer = TableScorer({"Rex": 0.1}, cond={("saw", "Rex"): 0.4},
                             default=1.0)
        contexts = ContextSet(entity="Rex",
                              sentences=("Rex barked.", "I saw Rex ."))
        record = average_salience("Rex", contexts, scorer,
                                  STRATEGY_MLM_PROGRESSIVE, geometric=True)
        assert record.mean_probability == pytest.approx(
            math.sqrt(0.1 * 0.4), rel=1e-12)

    def test_empty_contexts_rejected(self):
        with pytest.raises(ValueError):
            average_salience("Rex", ContextSet("Rex", ()), UniformScorer(5),
                             STRATEGY_MLM_EQUAL)


class TestCorrelation:
    def _salience(self, means: dict[str, float]):
        return [
            average_salience(
                e, ContextSet(e, (f"headline mentions {e} today",)),
                TableScorer({e: p}, default=1.0), STRATEGY_MLM_EQUAL)
            for e, p in means.items()
        ]

    def test_identical_order_gives_one(self):
        means = {"Kuno": 0.1, "Velo": 0.2, "Zarn": 0.4}
        sal = self._salience(means)
        freq = [FrequencyRecord(e, "t", "s", h)
                for e, h in {"Kuno": 1, "Velo": 10, "Zarn": 100}.items()]
        assert correlate_salience_with_hits(sal, freq) == 1.0

    def test_five_entity_fixture_matches_oracle(self):
        from oracles import brute_spearman
        means = {"Kuno": 0.5, "Velo": 0.1, "Zarn": 0.3, "Quex": 0.3,
                 "Mirt": 0.05}
        hits = {"Kuno": 900, "Velo": 20, "Zarn": 20, "Quex": 150, "Mirt": 3}
        sal = self._salience(means)
        freq = [FrequencyRecord(e, "t", "s", h) for e, h in hits.items()]
        rho = correlate_salience_with_hits(sal, freq)
        entities = sorted(means)
        expected = brute_spearman([float(hits[e]) for e in entities],
                                  [means[e] for e in entities])
        assert rho == pytest.approx(expected, abs=1e-12)

    def test_entity_mismatch(self):
        sal = self._salience({"Kuno": 0.5, "Velo": 0.1})
        freq = [FrequencyRecord("Kuno", "t", "s", 5)]
        with pytest.raises(ValueError):
            correlate_salience_with_hits(sal, freq)


def test_salience_file_output(tmp_path):
    scorer = UniformScorer(4)
    contexts = ContextSet("Rex", ("Rex barked.", "good dog Rex !"))
    record = average_salience("Rex", contexts, scorer, STRATEGY_MLM_EQUAL)
    per_ctx = tmp_path / "per_context.tsv"
    per_ent = tmp_path / "per_entity.tsv"
    write_salience_records([record], per_ctx, per_ent)
    ctx_lines = per_ctx.read_text().splitlines()
    assert len(ctx_lines) == 2
    entity, ctx_id, n, lp = ctx_lines[0].split("\t")
    assert entity == "Rex" and ctx_id == "ctx-0" and n == "1"
    assert float(lp) == pytest.approx(-math.log(4))
    ent_lines = per_ent.read_text().splitlines()
    assert ent_lines[0].split("\t")[0] == "Rex"
    assert float(ent_lines[0].split("\t")[2]) == pytest.approx(0.25)
