"""Mock agent determinism, the feedback loop, and the chat client."""

import logging

import pytest

from semstego.agents import (
    AgentRequest,
    ChatClient,
    CheckVerdict,
    EndpointConfig,
    FeedbackConfig,
    LiveExtractionAgent,
    MockCheckAgent,
    MockExtractionAgent,
    MockGenerationAgent,
    check_prompt,
    check_sentence,
    extract_sentence_type,
    extraction_prompt,
    generate_stego,
    generation_prompt,
)
from semstego.errors import (
    AgentAuthError,
    AgentHTTPError,
    AgentTimeoutError,
    ExtractionFailedError,
    GenerationFailedError,
)
from semstego.semantic_space import SemType, extract_type


@pytest.fixture
def vegas(tree):
    return SemType({tree.entity_by_path("Location/Tourism Location/Las Vegas").entity_id: 1})


def paths_for(tree, t):
    return tuple(tree.entity(eid).path for eid, _ in t.items())


# -- request validation ----------------------------------------------------


def test_request_validation():
    with pytest.raises(ValueError):
        AgentRequest(role="generate")
    with pytest.raises(ValueError):
        AgentRequest(role="check", sentence="x")
    with pytest.raises(ValueError):
        AgentRequest(role="extract")
    with pytest.raises(ValueError):
        AgentRequest(role="paraphrase", sentence="x")


def test_verdict_validation():
    with pytest.raises(ValueError):
        CheckVerdict(approved=False)
    with pytest.raises(ValueError):
        CheckVerdict(approved=True, hint="but")


# -- mock generation + checking --------------------------------------------


def test_mock_compliant_first_try(tree, vegas):
    ga = MockGenerationAgent(tree, seed=1)
    ca = MockCheckAgent(tree)
    sentence, iterations = generate_stego(
        vegas, paths_for(tree, vegas), FeedbackConfig(), ga, ca
    )
    assert iterations == 0
    assert "Las Vegas" in sentence
    assert extract_type(sentence, tree) == vegas


def test_mock_determinism(tree, vegas):
    a = MockGenerationAgent(tree, seed=9).generate(vegas, (), attempt=0)
    b = MockGenerationAgent(tree, seed=9).generate(vegas, (), attempt=0)
    c = MockGenerationAgent(tree, seed=10).generate(vegas, (), attempt=0)
    assert a == b
    assert a != c or True  # different seeds may coincide on tiny banks


def test_mock_fault_then_recovery(tree, vegas):
    """A stray entity on attempt 0 is fixed after the hint, one iteration."""
    ga = MockGenerationAgent(
        tree, seed=4, fault_rate=1.0, fault_modes=("extra",), converge_after=1
    )
    ca = MockCheckAgent(tree)
    first = ga.generate(vegas, (), attempt=0)
    verdict = ca.check(first, vegas)
    assert not verdict.approved
    assert "should not be in the sentence" in verdict.hint
    sentence, iterations = generate_stego(
        vegas, paths_for(tree, vegas), FeedbackConfig(), ga, ca
    )
    assert iterations == 1
    assert extract_type(sentence, tree) == vegas


class AlwaysReject:
    def check(self, sentence, target):
        return CheckVerdict(approved=False, hint="never good enough")


def test_feedback_exhaustion(tree, vegas):
    ga = MockGenerationAgent(tree, seed=0)
    cfg = FeedbackConfig(max_iterations=3)
    with pytest.raises(GenerationFailedError) as err:
        generate_stego(vegas, (), cfg, ga, AlwaysReject())
    assert err.value.last_hint == "never good enough"


def test_feedback_loop_bound(tree):
    """Iterations never exceed max_iterations even with heavy faults."""
    ca = MockCheckAgent(tree)
    cfg = FeedbackConfig(max_iterations=5)
    usable = [
        e.entity_id
        for e in tree.entities
        if extract_type(e.canonical_surface, tree) == SemType({e.entity_id: 1})
    ]
    for seed in range(30):
        ga = MockGenerationAgent(tree, seed=seed, fault_rate=0.9)
        t = SemType({usable[seed % len(usable)]: 1})
        _, iterations = generate_stego(t, paths_for(tree, t), cfg, ga, ca)
        assert iterations <= cfg.max_iterations


def test_mock_closure_property(tree):
    """Every approved sentence extracts back to exactly its target."""
    ca = MockCheckAgent(tree)
    ga = MockGenerationAgent(tree, seed=2, fault_rate=0.5)
    ids = [e.entity_id for e in tree.entities]
    targets = [
        SemType({}),
        SemType({ids[0]: 1}),
        SemType({ids[3]: 2}),
        SemType({ids[5]: 1, ids[9]: 1}),
        SemType({ids[11]: 1, ids[20]: 1, ids[30]: 1}),
    ]
    for t in targets:
        sentence, _ = generate_stego(t, paths_for(tree, t), FeedbackConfig(), ga, ca)
        assert extract_type(sentence, tree) == t


def test_mock_sentences_are_long_enough(tree):
    ga = MockGenerationAgent(tree, seed=0)
    lengths = []
    for ent in tree.entities[:20]:
        s = ga.generate(SemType({ent.entity_id: 1}), (), attempt=0)
        lengths.append(len(s.split()))
    assert sum(lengths) / len(lengths) >= 10


def test_check_sentence_cases(tree, vegas):
    ok = check_sentence("Las Vegas is lovely", vegas, tree)
    assert ok.approved and ok.hint == ""
    extra = check_sentence("Las Vegas and Taj Mahal", vegas, tree)
    assert not extra.approved and "Taj Mahal" in extra.hint
    missing = check_sentence("nothing here", vegas, tree)
    assert not missing.approved and "Las Vegas" in missing.hint


def test_empty_target_generates_entity_free_sentence(tree):
    ga = MockGenerationAgent(tree, seed=5)
    sentence, iterations = generate_stego(
        SemType({}), (), FeedbackConfig(), ga, MockCheckAgent(tree)
    )
    assert iterations == 0
    assert extract_type(sentence, tree) == SemType({})


def test_extract_sentence_type_delegates(tree, vegas):
    ea = MockExtractionAgent(tree)
    assert extract_sentence_type("we flew to Las Vegas", tree, ea) == vegas
    assert extract_sentence_type("", tree, ea) == SemType({})


# -- prompts -----------------------------------------------------------------


def test_generation_prompt_shape(tree, vegas):
    prompt = generation_prompt(vegas, paths_for(tree, vegas), tree, None, None)
    assert "Write a sentence containing the following keywords" in prompt
    assert "Las Vegas" in prompt
    assert "Location" in prompt  # concept category clause
    follow = generation_prompt(vegas, (), tree, "drop Tokyo", "Bad sentence")
    assert "drop Tokyo" in follow and "Bad sentence" in follow


def test_check_and_extraction_prompts(tree, vegas):
    assert "APPROVED" in check_prompt("hi", vegas, tree)
    p = extraction_prompt("hi", tree)
    assert "Concept/Subconcept/Entity: count" in p
    assert "NONE" in p


# -- chat client -------------------------------------------------------------


def scripted_transport(script):
    calls = []

    def transport(url, headers, body, timeout):
        calls.append({"url": url, "headers": dict(headers), "body": body})
        action = script[min(len(calls) - 1, len(script) - 1)]
        if isinstance(action, Exception):
            raise action
        return action

    transport.calls = calls
    return transport


def reply(text):
    return (200, {"choices": [{"message": {"content": text}}]})


CFG = EndpointConfig(endpoint_url="https://api.test/v1/chat", model_name="m1",
                     api_key_env="TEST_API_KEY", max_retries=3)


def test_client_retries_transient_then_succeeds():
    transport = scripted_transport([(503, {}), (503, {}), reply("hello")])
    naps = []
    client = ChatClient(CFG, transport=transport, sleep=naps.append,
                        env={"TEST_API_KEY": "sk-123"})
    assert client.call("hi") == "hello"
    assert len(transport.calls) == 3
    assert naps == [0.5, 1.0]  # exponential backoff


def test_client_auth_error_no_retry():
    transport = scripted_transport([(401, {})])
    client = ChatClient(CFG, transport=transport, sleep=lambda s: None,
                        env={"TEST_API_KEY": "sk-123"})
    with pytest.raises(AgentAuthError):
        client.call("hi")
    assert len(transport.calls) == 1


def test_client_missing_key_fails_before_request():
    transport = scripted_transport([reply("never reached")])
    client = ChatClient(CFG, transport=transport, sleep=lambda s: None, env={})
    with pytest.raises(AgentAuthError, match="TEST_API_KEY"):
        client.call("hi")
    assert transport.calls == []


def test_client_timeout_budget_exhausted():
    transport = scripted_transport([TimeoutError("slow")])
    client = ChatClient(CFG, transport=transport, sleep=lambda s: None,
                        env={"TEST_API_KEY": "sk-123"})
    with pytest.raises(AgentTimeoutError):
        client.call("hi")
    assert len(transport.calls) == CFG.max_retries + 1


def test_client_hard_http_error_no_retry():
    transport = scripted_transport([(404, {})])
    client = ChatClient(CFG, transport=transport, sleep=lambda s: None,
                        env={"TEST_API_KEY": "sk-123"})
    with pytest.raises(AgentHTTPError):
        client.call("hi")
    assert len(transport.calls) == 1


def test_client_redacts_secrets_in_logs(caplog):
    transport = scripted_transport([(503, {}), reply("done")])
    client = ChatClient(CFG, transport=transport, sleep=lambda s: None,
                        env={"TEST_API_KEY": "sk-SECRET-99"})
    with caplog.at_level(logging.DEBUG, logger="semstego.agents"):
        client.call("hi")
    assert "sk-SECRET-99" not in caplog.text
    assert "redacted" in caplog.text


# -- live extraction parsing --------------------------------------------------


def make_live_ea(tree, replies):
    transport = scripted_transport([reply(r) for r in replies])
    client = ChatClient(CFG, transport=transport, sleep=lambda s: None,
                        env={"TEST_API_KEY": "k"})
    return LiveExtractionAgent(client, tree, FeedbackConfig()), transport


def test_live_extraction_parses_reply(tree, vegas):
    ea, _ = make_live_ea(tree, ["Location/Tourism Location/Las Vegas: 1"])
    assert ea.extract("Las Vegas!") == vegas


def test_live_extraction_none(tree):
    ea, _ = make_live_ea(tree, ["NONE"])
    assert ea.extract("nothing") == SemType({})


def test_live_extraction_retries_once_then_fails(tree):
    ea, transport = make_live_ea(tree, ["gibberish", "more gibberish"])
    with pytest.raises(ExtractionFailedError):
        ea.extract("x")
    assert len(transport.calls) == 2


def test_live_extraction_recovers_on_retry(tree, vegas):
    ea, transport = make_live_ea(
        tree, ["not: parseable: at: all",
               "Location/Tourism Location/Las Vegas: 1"]
    )
    assert ea.extract("Las Vegas") == vegas
    assert len(transport.calls) == 2
