import math

import numpy as np
import pytest

from rede.corpus import Query, RankedList
from rede.errors import JudgeUnavailable, UnknownTemplate
from rede.gateway import MockGateway
from rede.judge import (
    JUDGE_TEMPLATE_IDS,
    LexicalJudge,
    LlmJudge,
    OracleJudge,
    judge_candidates,
    render_judge_prompt,
    score_relevance,
    truncate_tokens,
)

QUERY = Query("q1", "how do submarines navigate")


class TestRenderPrompt:
    def test_truncation_to_128_tokens(self):
        doc = " ".join(f"tok{i}" for i in range(200))
        prompt = render_judge_prompt("default", "q text", doc)
        assert "tok127" in prompt.rendered
        assert "tok128" not in prompt.rendered

    def test_short_doc_untouched(self):
        prompt = render_judge_prompt("default", "q text", "one two three four five")
        assert "one two three four five" in prompt.rendered

    def test_rg_yn_star_contains_relevance_definition(self):
        prompt = render_judge_prompt("rg_yn_star", "q", "d")
        assert "dedicated to the query and contains the exact answer" in prompt.rendered

    def test_placeholders_filled(self):
        for template_id in JUDGE_TEMPLATE_IDS:
            prompt = render_judge_prompt(template_id, "UNIQUE-QUERY", "UNIQUE-DOC")
            assert "UNIQUE-QUERY" in prompt.rendered
            assert "UNIQUE-DOC" in prompt.rendered
            assert "{query}" not in prompt.rendered
            assert "{document}" not in prompt.rendered

    def test_unknown_template(self):
        with pytest.raises(UnknownTemplate):
            render_judge_prompt("nope", "q", "d")

    def test_empty_query_rejected(self):
        with pytest.raises(ValueError):
            render_judge_prompt("default", "", "d")

    def test_custom_templates_dir(self, tmp_path):
        (tmp_path / "mine.txt").write_text("Q={query} D={document}")
        prompt = render_judge_prompt("mine", "a", "b", templates_dir=str(tmp_path))
        assert prompt.rendered == "Q=a D=b"

    def test_truncate_tokens_helper(self):
        assert truncate_tokens("a  b\tc\nd", 3) == "a b c"


def llm_judge_for(script, **kwargs):
    return LlmJudge(MockGateway(script), **kwargs)


class TestScoreRelevance:
    def test_softmax_value(self):
        judge = llm_judge_for(
            [{"match_substring": "", "text": "1", "first_token_logprobs": {"1": -0.1, "0": -2.3}}]
        )
        j = score_relevance(judge, QUERY, "d1", "some doc")
        assert j.p_relevant == pytest.approx(0.9002495108803148, abs=1e-9)
        assert j.label is True

    def test_equal_logprobs_label_false(self):
        judge = llm_judge_for(
            [{"match_substring": "", "text": "0", "first_token_logprobs": {"1": -1.0, "0": -1.0}}]
        )
        j = score_relevance(judge, QUERY, "d1", "doc")
        assert j.p_relevant == pytest.approx(0.5)
        assert j.label is False

    def test_shift_invariance(self):
        rng = np.random.default_rng(13)
        for _ in range(25):
            lp1, lp0 = float(-rng.uniform(0, 5)), float(-rng.uniform(0, 5))
            shift = float(rng.uniform(-3, 0))
            base = llm_judge_for(
                [{"match_substring": "", "text": "", "first_token_logprobs": {"1": lp1, "0": lp0}}]
            )
            shifted = llm_judge_for(
                [{"match_substring": "", "text": "",
                  "first_token_logprobs": {"1": lp1 + shift, "0": lp0 + shift}}]
            )
            a = score_relevance(base, QUERY, "d", "t").p_relevant
            b = score_relevance(shifted, QUERY, "d", "t").p_relevant
            assert a == pytest.approx(b, abs=1e-12)

    def test_one_token_missing_gets_floor(self):
        # "0" missing from the returned top-K: assign min(returned) - 10
        judge = llm_judge_for(
            [{"match_substring": "", "text": "1",
              "first_token_logprobs": {"1": -0.4, "the": -3.0}}]
        )
        j = score_relevance(judge, QUERY, "d1", "doc")
        expected = math.exp(-0.4) / (math.exp(-0.4) + math.exp(-13.0))
        assert j.p_relevant == pytest.approx(expected, abs=1e-12)
        assert j.label is True

    def test_both_tokens_missing(self):
        judge = llm_judge_for(
            [{"match_substring": "", "text": "x", "first_token_logprobs": {"the": -1.0}}]
        )
        with pytest.raises(JudgeUnavailable):
            score_relevance(judge, QUERY, "d1", "doc")

    def test_custom_tokens(self):
        judge = llm_judge_for(
            [{"match_substring": "", "text": "Yes",
              "first_token_logprobs": {"Yes": -0.2, "No": -1.9}}],
            template_id="rg_yn",
        )
        assert score_relevance(judge, QUERY, "d1", "doc").label is True

    def test_oracle(self):
        judge = OracleJudge({"q1": {"d1": 2, "d2": 0}})
        assert score_relevance(judge, QUERY, "d1", "ignored").p_relevant == 1.0
        assert score_relevance(judge, QUERY, "d2", "ignored").p_relevant == 0.0
        assert score_relevance(judge, QUERY, "dX", "ignored").p_relevant == 0.0

    def test_lexical(self):
        judge = LexicalJudge(threshold=0.5)
        hit = score_relevance(judge, Query("q", "a b"), "d", "a b")
        miss = score_relevance(judge, Query("q", "a b"), "d", "a c d e")
        assert hit.label is True
        assert miss.label is False

    def test_lexical_zero_threshold_always_relevant(self):
        judge = LexicalJudge(threshold=0.0)
        assert score_relevance(judge, QUERY, "d", "completely unrelated").label is True


def candidates(*doc_ids):
    return RankedList("q1", [(d, 1.0 - 0.01 * i) for i, d in enumerate(doc_ids)])


class ScriptedJudge:
    """p_relevant per doc text; used to drive ordering tests."""

    def __init__(self, probs):
        self.probs = probs

    def p_relevant(self, query, doc_text):
        return self.probs[doc_text]


class FailingJudge:
    def __init__(self, fail_for=()):
        self.fail_for = set(fail_for)

    def p_relevant(self, query, doc_text):
        if not self.fail_for or doc_text in self.fail_for:
            raise JudgeUnavailable("scripted failure")
        return 1.0


class TestJudgeCandidates:
    def test_threshold_and_ordering(self):
        texts = {"c1": "t1", "c2": "t2", "c3": "t3"}
        judge = ScriptedJudge({"t1": 0.9, "t2": 0.3, "t3": 0.7})
        result = judge_candidates(judge, QUERY, candidates("c1", "c2", "c3"), texts)
        assert result.docs == [("c1", 0.9), ("c3", 0.7)]
        assert len(result.judgments) == 3

    def test_ties_keep_original_rank(self):
        texts = {"c1": "t1", "c2": "t2", "c3": "t3"}
        judge = ScriptedJudge({"t1": 0.8, "t2": 0.8, "t3": 0.9})
        result = judge_candidates(judge, QUERY, candidates("c1", "c2", "c3"), texts)
        assert [d for d, _ in result.docs] == ["c3", "c1", "c2"]

    def test_all_below_threshold(self):
        texts = {"c1": "t1", "c2": "t2"}
        judge = ScriptedJudge({"t1": 0.2, "t2": 0.5})  # 0.5 is strictly not relevant
        result = judge_candidates(judge, QUERY, candidates("c1", "c2"), texts)
        assert result.docs == []
        assert result.kstar == 0

    def test_oracle_exact_set(self):
        qrels = {"q1": {"d2": 1, "d7": 3, "d9": 0}}
        texts = {d: d for d in ("d1", "d2", "d7", "d9")}
        result = judge_candidates(OracleJudge(qrels), QUERY, candidates("d1", "d2", "d7", "d9"), texts)
        assert sorted(d for d, _ in result.docs) == ["d2", "d7"]

    def test_empty_candidates(self):
        result = judge_candidates(ScriptedJudge({}), QUERY, RankedList("q1", []), {})
        assert result.docs == [] and result.judgments == []

    def test_order_invariance_of_scores(self):
        texts = {f"c{i}": f"t{i}" for i in range(5)}
        probs = {f"t{i}": 0.1 * i + 0.3 for i in range(5)}
        judge = ScriptedJudge(probs)
        forward = judge_candidates(judge, QUERY, candidates(*texts), texts)
        backward = judge_candidates(judge, QUERY, candidates(*reversed(list(texts))), texts)
        assert {j.doc_id: j.p_relevant for j in forward.judgments} == {
            j.doc_id: j.p_relevant for j in backward.judgments
        }

    def test_partial_failure_skips_with_warning(self, caplog):
        texts = {"c1": "t1", "c2": "t2"}
        judge = FailingJudge(fail_for={"t2"})
        with caplog.at_level("WARNING"):
            result = judge_candidates(judge, QUERY, candidates("c1", "c2"), texts)
        assert [j.doc_id for j in result.judgments] == ["c1"]
        assert any("skipping" in r.message for r in caplog.records)

    def test_all_failures_raise(self):
        texts = {"c1": "t1", "c2": "t2"}
        with pytest.raises(JudgeUnavailable):
            judge_candidates(FailingJudge(), QUERY, candidates("c1", "c2"), texts)

    def test_concurrent_matches_sequential(self):
        texts = {f"c{i}": f"t{i}" for i in range(8)}
        probs = {f"t{i}": (0.95 if i % 2 else 0.05) for i in range(8)}
        judge = ScriptedJudge(probs)
        seq = judge_candidates(judge, QUERY, candidates(*texts), texts, max_workers=1)
        par = judge_candidates(judge, QUERY, candidates(*texts), texts, max_workers=4)
        assert seq.docs == par.docs
        assert [j.doc_id for j in seq.judgments] == [j.doc_id for j in par.judgments]
