import textwrap

import pytest

from clozealign.bpe import TokenizerSpec, byte_unicode_map


@pytest.fixture
def toy_spec() -> TokenizerSpec:
    """The hand-checkable 'hello' tokenizer: 4 byte symbols + 4 merges."""
    vocab = {c: i for i, c in enumerate("helo")}
    vocab.update({"he": 4, "ll": 5, "hell": 6, "hello": 7})
    return TokenizerSpec(
        vocab=vocab,
        merges=(("h", "e"), ("l", "l"), ("he", "ll"), ("hell", "o")),
        name="toy",
    )


@pytest.fixture
def full_byte_spec() -> TokenizerSpec:
    """Tokenizer whose vocabulary is exactly the 256 mapped bytes, no merges."""
    byte_map = byte_unicode_map()
    vocab = {byte_map[b]: b for b in range(256)}
    return TokenizerSpec(vocab=vocab, merges=(), name="bytes-only")


@pytest.fixture
def norms_csv(tmp_path):
    """Small well-formed norms file: 2 stems, mixed counts."""
    path = tmp_path / "norms.csv"
    path.write_text(
        textwrap.dedent(
            """\
            stem_id,stem_text,response_text,response_count,cloze_prob
            s1,He hated bees and feared encountering a,hive,50,0.5
            s1,He hated bees and feared encountering a,bee,50,0.5
            s2,The chef tasted the,soup,75,0.75
            s2,The chef tasted the,stew,25,0.25
            """
        ),
        encoding="utf-8",
    )
    return str(path)
