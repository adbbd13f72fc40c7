import pytest
from hypothesis import given
from hypothesis import strategies as st

from asymsim.text import PAD, UNK, UNK_ID, Vocab, build_vocab, split_sentences, tokenize
from asymsim.corpus import Ticket


def test_split_sentences_basic():
    assert split_sentences("Disk is full. Please clean it!") == ["Disk is full.", "Please clean it!"]


def test_split_sentences_keeps_abbreviations():
    text = "Check the logs e.g. Syslog first. Then reboot."
    assert split_sentences(text) == ["Check the logs e.g. Syslog first.", "Then reboot."]


def test_split_sentences_no_break_before_lowercase():
    assert split_sentences("Version 2.5 is out. ok then") == ["Version 2.5 is out. ok then"]


def test_split_sentences_blank():
    assert split_sentences("   ") == []


def test_tokenize_lowercases_and_strips_punctuation():
    assert tokenize("Printer JAM, again! (#42)") == ["printer", "jam", "again", "#42"]


@given(st.text(alphabet=st.characters(codec="ascii"), max_size=60))
def test_tokenize_is_idempotent(s):
    once = tokenize(s)
    assert tokenize(" ".join(once)) == once


def test_vocab_requires_reserved_prefix():
    with pytest.raises(ValueError):
        Vocab(["a", "b"])


def test_vocab_unknown_word_and_blank_text():
    v = Vocab([UNK, PAD, "disk"])
    assert v.lookup("nothing") == UNK_ID
    seq = v.encode("")
    assert list(seq.ids) == [UNK_ID] and seq.surfaces == (UNK,)


def test_vocab_encode_truncates():
    v = Vocab([UNK, PAD, "a", "b"])
    assert len(v.encode("a b a b a", max_len=3)) == 3


def test_unknown_characters_map_to_reserved_index():
    v = Vocab([UNK, PAD, "ab"])
    assert v.char_ids("az") == [v.char_index["a"], 0]


def test_build_vocab_frequency_then_lexicographic():
    tickets = [Ticket("q", "b a a", "c b"), Ticket("r", "d", "c")]
    assert build_vocab(tickets).words == [UNK, PAD, "a", "b", "c", "d"]


def test_build_vocab_min_count():
    tickets = [Ticket("q", "b a a", "c")]
    assert build_vocab(tickets, min_count=2).words == [UNK, PAD, "a"]


def test_vocab_save_load_round_trip(tmp_path):
    v = Vocab([UNK, PAD, "x", "#7"])
    v.save(tmp_path / "v.txt")
    assert Vocab.load(tmp_path / "v.txt").words == v.words
