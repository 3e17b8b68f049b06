import json
import time

import pytest

from rede.errors import BackendTimeout, BackendUnavailable, LogprobsUnsupported
from rede.gateway import (
    CompletionRequest,
    HttpGateway,
    MockGateway,
    complete,
)


class TestRequestValidation:
    def test_bad_max_tokens(self):
        with pytest.raises(ValueError):
            CompletionRequest("p", max_new_tokens=0)

    def test_bad_temperature(self):
        with pytest.raises(ValueError):
            CompletionRequest("p", temperature=-0.1)

    def test_bad_top_logprobs(self):
        with pytest.raises(ValueError):
            CompletionRequest("p", top_logprobs=0)


SCRIPT = [
    {"match_substring": "Query: q1", "text": "1", "first_token_logprobs": {"1": -0.1, "0": -2.3}},
    {"match_substring": "", "text": "fallback"},
]


class TestMockGateway:
    def test_scripted_match(self):
        mock = MockGateway(SCRIPT)
        resp = complete(mock, CompletionRequest("judge this. Query: q1",
                                                want_first_token_logprobs=True))
        assert resp.text == "1"
        assert resp.first_token_logprobs == {"1": -0.1, "0": -2.3}

    def test_first_match_wins(self):
        mock = MockGateway(SCRIPT)
        assert complete(mock, CompletionRequest("anything else")).text == "fallback"

    def test_deterministic(self):
        mock = MockGateway(SCRIPT)
        req = CompletionRequest("Query: q1", temperature=0.0, want_first_token_logprobs=True)
        assert complete(mock, req) == complete(mock, req)

    def test_logprobs_unsupported(self):
        mock = MockGateway([{"match_substring": "", "text": "x"}])
        with pytest.raises(LogprobsUnsupported):
            complete(mock, CompletionRequest("p", want_first_token_logprobs=True))

    def test_no_match(self):
        mock = MockGateway([{"match_substring": "never-present", "text": "x"}], retries=1)
        with pytest.raises(BackendUnavailable):
            complete(mock, CompletionRequest("p"))

    def test_replay_from_file(self, tmp_path):
        path = tmp_path / "script.json"
        path.write_text(json.dumps(SCRIPT))
        mock = MockGateway.from_script_file(str(path))
        assert complete(mock, CompletionRequest("Query: q1")).text == "1"

    def test_counter_split(self):
        mock = MockGateway(SCRIPT)
        complete(mock, CompletionRequest("Query: q1", want_first_token_logprobs=True))
        complete(mock, CompletionRequest("gen"))
        complete(mock, CompletionRequest("gen"))
        assert mock.counter.total == 3
        assert mock.counter.logprob_calls == 1
        assert mock.counter.text_calls == 2

    def test_per_call_delay(self):
        mock = MockGateway(SCRIPT, logprob_delay_s=0.03, text_delay_s=0.0)
        t0 = time.perf_counter()
        complete(mock, CompletionRequest("Query: q1", want_first_token_logprobs=True))
        slow = time.perf_counter() - t0
        t0 = time.perf_counter()
        complete(mock, CompletionRequest("gen"))
        fast = time.perf_counter() - t0
        assert slow >= 0.03
        assert fast < 0.03


class TestHttpGateway:
    def test_happy_path(self, http_server):
        url, state = http_server
        state["handler"] = lambda body: (
            200,
            {"text": "1", "first_token_logprobs": {"1": -0.2, "0": -1.7}},
        )
        gw = HttpGateway(url, "test-model", retries=0)
        resp = complete(gw, CompletionRequest("judge", want_first_token_logprobs=True, top_logprobs=5))
        assert resp.text == "1"
        assert state["requests"][0]["model"] == "test-model"
        assert state["requests"][0]["logprobs"] == 5

    def test_logprobs_not_requested_not_sent(self, http_server):
        url, state = http_server
        state["handler"] = lambda body: (200, {"text": "out"})
        gw = HttpGateway(url, "m", retries=0)
        assert complete(gw, CompletionRequest("gen")).text == "out"
        assert "logprobs" not in state["requests"][0]

    def test_missing_logprobs_is_contract_error(self, http_server):
        url, state = http_server
        state["handler"] = lambda body: (200, {"text": "1"})
        gw = HttpGateway(url, "m", retries=3, backoff_s=0.0)
        with pytest.raises(LogprobsUnsupported):
            complete(gw, CompletionRequest("judge", want_first_token_logprobs=True))
        assert gw.counter.attempts == 1  # contract errors are not retried

    def test_bounded_retries_then_success(self, http_server):
        url, state = http_server
        failures = {"left": 2}

        def flaky(body):
            if failures["left"] > 0:
                failures["left"] -= 1
                return 500, {}
            return 200, {"text": "ok"}

        state["handler"] = flaky
        gw = HttpGateway(url, "m", retries=3, backoff_s=0.0)
        assert complete(gw, CompletionRequest("p")).text == "ok"
        assert gw.counter.attempts == 3
        assert gw.counter.total == 1

    def test_exhausted_retries(self, http_server):
        url, state = http_server
        state["handler"] = lambda body: (500, {})
        gw = HttpGateway(url, "m", retries=2, backoff_s=0.0)
        with pytest.raises(BackendUnavailable):
            complete(gw, CompletionRequest("p"))
        assert gw.counter.attempts == 3

    def test_timeout(self, http_server):
        url, state = http_server

        def slow(body):
            time.sleep(0.5)
            return 200, {"text": "late"}

        state["handler"] = slow
        gw = HttpGateway(url, "m", timeout=0.1, retries=1, backoff_s=0.0)
        with pytest.raises(BackendTimeout):
            complete(gw, CompletionRequest("p"))
