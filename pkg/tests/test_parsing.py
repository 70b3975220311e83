import pytest
from hypothesis import given, strategies as st

from veriforge.errors import ParseError
from veriforge.parsing import (
    DnDOutput,
    ParseStatus,
    Verdict,
    parse_ambiguities,
    parse_bullets,
    parse_dnd,
    parse_verdict,
)

from conftest import fixture_text


class TestParseDndExemplars:
    def test_michael_collins_exemplar(self):
        out = parse_dnd(fixture_text("michael_collins_dnd.txt"))
        assert out.status is ParseStatus.COMPLETE
        assert len(out.subclaims) == 13
        assert len(out.pairs) == 13
        assert out.subclaims[0] == "Michael Collins was born in October."
        assert out.pairs[0] == (
            "Michael Collins was born in October.",
            "Michael Collins, the retired American astronaut and test pilot, "
            "was born in October.",
        )
        assert out.explanation.startswith('"Michael Collins" needs to be disambiguated')

    def test_stephen_miller_exemplar(self):
        # This transcript ends its pair list with a trailing comma.
        out = parse_dnd(fixture_text("stephen_miller_dnd.txt"))
        assert out.status is ParseStatus.COMPLETE
        assert len(out.subclaims) == 10
        assert len(out.pairs) == 10
        aligned = out.aligned_pairs()
        assert all(flag is False for _, _, flag in aligned)
        assert len(aligned) == 10

    def test_eight_pair_response(self):
        out = parse_dnd(fixture_text("table1_dnd.txt"))
        assert out.status is ParseStatus.COMPLETE
        assert len(out.pairs) == 8
        assert out.pairs[4] == (
            "'Schindler's List' is a film.",
            "'Schindler's List' is a film directed by Steven Spielberg.",
        )


MALFORMED = """- A is true.
- B is true.
- C is true.
##EXPLANATION##:
Pronouns refer to the topic.
##CONTEXT-SUBCLAIM PAIRS##:
[
    {"subclaim": "A is true.", "decontextualized": "Topic A is true."},
    {"subclaim": "B is true.", "decontextualized: broken record},
    {"subclaim": "C is true.", "decontextualized": "Topic C is true."}
]"""


class TestParseDndTolerance:
    def test_malformed_record_dropped_and_partial(self):
        out = parse_dnd(MALFORMED)
        assert out.status is ParseStatus.PARTIAL
        assert len(out.subclaims) == 3
        assert [s for s, _ in out.pairs] == ["A is true.", "C is true."]

    def test_aligned_pairs_identity_fallback(self):
        out = parse_dnd(MALFORMED)
        aligned = out.aligned_pairs()
        assert aligned[1] == ("B is true.", "B is true.", True)
        assert aligned[0] == ("A is true.", "Topic A is true.", False)

    def test_missing_pairs_section_raises(self):
        with pytest.raises(ParseError):
            parse_dnd("- A claim.\n##EXPLANATION##:\nnothing else")

    def test_zero_pair_records_raises(self):
        with pytest.raises(ParseError):
            parse_dnd("- A claim.\n##CONTEXT-SUBCLAIM PAIRS##:\n[]")

    def test_no_subclaims_raises(self):
        with pytest.raises(ParseError):
            parse_dnd('##CONTEXT-SUBCLAIM PAIRS##:\n[{"subclaim": "A.", "decontextualized": "B."}]')

    def test_missing_explanation_tolerated(self):
        out = parse_dnd(
            '- A claim.\n##CONTEXT-SUBCLAIM PAIRS##:\n'
            '[{"subclaim": "A claim.", "decontextualized": "The A claim."}]'
        )
        assert out.status is ParseStatus.COMPLETE
        assert out.explanation == ""

    def test_count_mismatch_is_partial(self):
        out = parse_dnd(
            "- A claim.\n- Another claim.\n##CONTEXT-SUBCLAIM PAIRS##:\n"
            '[{"subclaim": "A claim.", "decontextualized": "The A claim."}]'
        )
        assert out.status is ParseStatus.PARTIAL

    def test_leading_subclaims_header_accepted(self):
        out = parse_dnd(
            "##SUBCLAIMS##:\n- A claim.\n##CONTEXT-SUBCLAIM PAIRS##:\n"
            '[{"subclaim": "A claim.", "decontextualized": "The A claim."}]'
        )
        assert out.subclaims == ("A claim.",)
        assert out.status is ParseStatus.COMPLETE


class TestParseBullets:
    def test_table1_decomposition(self):
        claims = parse_bullets(fixture_text("table1_decomp.txt"))
        assert len(claims) == 6
        assert claims[0] == "He gained recognition in the mid-1990s."

    def test_continuation_lines_joined(self):
        claims = parse_bullets("- First half\n  second half.\n- Next claim.")
        assert claims == ["First half second half.", "Next claim."]

    def test_blank_and_empty_bullets_dropped(self):
        assert parse_bullets("- A.\n\n-\n- B.\n") == ["A.", "B."]

    def test_no_bullets(self):
        assert parse_bullets("Prose without any list markers.") == []


class TestParseVerdict:
    @pytest.mark.parametrize(
        "raw,expected",
        [
            ("True", Verdict.SUPPORTED),
            ("true.", Verdict.SUPPORTED),
            ("  TRUE\n", Verdict.SUPPORTED),
            ("Yes", Verdict.SUPPORTED),
            ("Supported", Verdict.SUPPORTED),
            ("True, because the text says so.", Verdict.SUPPORTED),
            ("False", Verdict.NOT_SUPPORTED),
            ("false!", Verdict.NOT_SUPPORTED),
            ("No", Verdict.NOT_SUPPORTED),
            ("Not Supported", Verdict.NOT_SUPPORTED),
            ("Not supported by the evidence.", Verdict.NOT_SUPPORTED),
            ("Maybe", Verdict.UNPARSEABLE),
            ("", Verdict.UNPARSEABLE),
            ("The answer depends on context.", Verdict.UNPARSEABLE),
        ],
    )
    def test_cases(self, raw, expected):
        assert parse_verdict(raw).verdict is expected

    def test_raw_text_preserved(self):
        result = parse_verdict("gibberish answer")
        assert result.verdict is Verdict.UNPARSEABLE
        assert result.raw == "gibberish answer"

    def test_never_raises(self):
        for raw in ("\x00", "{}", "42", "\n\n\n"):
            parse_verdict(raw)


class TestParseAmbiguities:
    def test_plain_dict(self):
        assert parse_ambiguities('{"He": "Liam Neeson"}') == {"He": "Liam Neeson"}

    def test_dict_embedded_in_prose(self):
        # The dictionary must be recoverable even when the model wraps it
        # in commentary before and after.
        text = (
            "Sure! Here are the ambiguities I found:\n"
            '{"He": "Liam Neeson", "the film": "Schindler\'s List"}\n'
            "Let me know if you need anything else."
        )
        assert parse_ambiguities(text) == {
            "He": "Liam Neeson",
            "the film": "Schindler's List",
        }

    def test_empty_dict(self):
        assert parse_ambiguities("{}") == {}
        assert parse_ambiguities("No ambiguities: {}") == {}

    def test_no_dict_returns_empty(self):
        assert parse_ambiguities("There are no ambiguities here.") == {}

    def test_multiline_dict(self):
        text = '{\n  "She": "Ada Lovelace",\n  "it": "the engine"\n}'
        assert parse_ambiguities(text) == {"She": "Ada Lovelace", "it": "the engine"}

    def test_skips_unparseable_block_then_finds_next(self):
        text = "{not a dict} then {\"k\": \"v\"}"
        assert parse_ambiguities(text) == {"k": "v"}


class TestRoundTrip:
    @given(
        st.lists(
            st.text(
                alphabet=st.characters(
                    codec="utf-8", exclude_characters="\n\r\x0b\x0c\x1c\x1d\x1e\x85  -"
                ),
                min_size=1,
            ).map(lambda s: " ".join(s.split())).filter(bool),
            min_size=1,
            max_size=8,
        )
    )
    def test_parse_bullets_inverts_rendering(self, claims):
        rendered = "\n".join(f"- {c}" for c in claims)
        assert parse_bullets(rendered) == claims

    def test_aligned_pairs_extra_pair_appended(self):
        out = DnDOutput(
            subclaims=("A.",),
            explanation="",
            pairs=(("A.", "Topic A."), ("B.", "Topic B.")),
            status=ParseStatus.PARTIAL,
        )
        aligned = out.aligned_pairs()
        assert aligned == (("A.", "Topic A.", False), ("B.", "Topic B.", False))
