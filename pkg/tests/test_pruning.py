import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bli_toolkit.embeddings import EmbeddingSpace
from bli_toolkit.errors import BliError, ConfigError
from bli_toolkit.pruning import Decision, PrunePolicy, classify_token, load_policy, parse_ranges, prune_space
from oracles import keep_token

SINHALA = ((0x0D80, 0x0DFF),)
PERMISSIVE = PrunePolicy(False, ((0, 0x10FFFF),), True)


def test_ascii_letters():
    policy = PrunePolicy(forbid_ascii_letters=True)
    assert classify_token(policy, "house") is Decision.DROP
    assert classify_token(policy, "дом") is Decision.KEEP
    assert classify_token(policy, "123") is Decision.KEEP
    assert classify_token(policy, "-,.") is Decision.KEEP
    assert classify_token(policy, "домX") is Decision.DROP


def test_sinhala_range():
    policy = PrunePolicy(False, SINHALA, True)
    assert classify_token(policy, "කමල") is Decision.KEEP
    assert classify_token(policy, "123") is Decision.DROP


def test_policy_validation():
    with pytest.raises(ValueError, match="no active criterion"):
        PrunePolicy(False, None, False)
    with pytest.raises(ValueError, match="no active criterion"):
        PrunePolicy(False, SINHALA, False)
    with pytest.raises(ValueError, match="non-overlapping"):
        PrunePolicy(False, ((0x10, 0x20), (0x15, 0x30)), True)
    with pytest.raises(ValueError, match="non-overlapping"):
        PrunePolicy(False, ((0x40, 0x50), (0x10, 0x20)), True)


MIXED = "abZдомකමලக்字かナ1.-"


@settings(max_examples=400, deadline=None)
@given(
    token=st.text(MIXED, max_size=6),
    forbid=st.booleans(),
    use_ranges=st.booleans(),
    require=st.booleans(),
)
def test_matches_char_scan_oracle(token, forbid, use_ranges, require):
    ranges = ((0x0400, 0x04FF), (0x0D80, 0x0DFF)) if use_ranges else None
    try:
        policy = PrunePolicy(forbid, ranges, require)
    except ValueError:
        return
    expected = Decision.KEEP if keep_token(token, forbid, ranges, require) else Decision.DROP
    assert classify_token(policy, token) is expected


def _space(words):
    rng = np.random.default_rng(0)
    return EmbeddingSpace(words, rng.standard_normal((len(words), 3)))


def test_permissive_policy_is_identity():
    space = _space(["дом", "house", "123", "කමල"])
    pruned, removed = prune_space(PERMISSIVE, space)
    assert removed == 0 and pruned.words == space.words


def test_six_tokens_two_ascii():
    space = _space(["дом", "house", "кот", "cat", "12", "мир"])
    pruned, removed = prune_space(PrunePolicy(True), space)
    assert len(pruned) == 4 and removed == 2
    assert pruned.words == ("дом", "кот", "12", "мир")
    np.testing.assert_array_equal(pruned.matrix, space.matrix[[0, 2, 4, 5]])


def test_ten_thousand_random_tokens(rng):
    chars = list(MIXED)
    words = list(dict.fromkeys("".join(rng.choice(chars, rng.integers(1, 6))) for _ in range(12000)))[:10000]
    space = _space(words)
    policy = PrunePolicy.preset("si")
    pruned, removed = prune_space(policy, space)
    expected = sum(not keep_token(w, True, SINHALA, True) for w in words)
    assert removed == expected
    assert list(pruned.words) == [w for w in words if keep_token(w, True, SINHALA, True)]


def test_empty_result_is_error():
    with pytest.raises(BliError):
        prune_space(PrunePolicy(True), _space(["a", "b"]))


def test_presets():
    for lang in ("ru", "si", "ta", "zh", "ja"):
        assert PrunePolicy.preset(lang).require_allowed_char
    assert classify_token(PrunePolicy.preset("ja"), "ひらがな") is Decision.KEEP
    assert classify_token(PrunePolicy.preset("zh"), "中文") is Decision.KEEP
    assert classify_token(PrunePolicy.preset("ta"), "தமிழ்") is Decision.KEEP
    with pytest.raises(ConfigError):
        PrunePolicy.preset("klingon")


def test_policy_file(tmp_path):
    p = tmp_path / "si.policy"
    p.write_text("# Sinhala\nforbid_ascii_letters = true\nranges = 0D80-0DFF\nrequire_allowed_char = true\n")
    policy = load_policy(p)
    assert policy.forbid_ascii_letters and policy.allowed_script_ranges == SINHALA
    assert classify_token(policy, "123") is Decision.DROP


def test_policy_file_errors(tmp_path):
    p = tmp_path / "bad.policy"
    p.write_text("forbid_ascii_letters = maybe\n")
    with pytest.raises(ConfigError):
        load_policy(p)
    p.write_text("colour = blue\n")
    with pytest.raises(ConfigError):
        load_policy(p)
    p.write_text("forbid_ascii_letters = false\n")
    with pytest.raises(ConfigError, match="no active"):
        load_policy(p)


def test_parse_ranges():
    assert parse_ranges("0D80-0DFF, 0400-04FF") == ((0x0400, 0x04FF), (0x0D80, 0x0DFF))
    assert parse_ranges("3042") == ((0x3042, 0x3042),)
