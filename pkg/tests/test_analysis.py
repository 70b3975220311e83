from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from veriforge.analysis import (
    PRONOUNS,
    ChangeStats,
    change_stats,
    disagreement_examples,
    pronoun_replaced,
)
from veriforge.errors import LengthMismatch
from veriforge.parsing import Verdict, VerdictResult
from veriforge.scoring import Judgment, Mode


def judgment(verdict: Verdict, claim_id="c") -> Judgment:
    return Judgment(
        claim_id=claim_id,
        mode=Mode.FACTSCORE,
        verdict=VerdictResult(verdict=verdict, raw=verdict.value),
        evidence=("ev",) if verdict is not Verdict.UNPARSEABLE else (),
        prompt_digest="0" * 64,
    )


T = judgment(Verdict.SUPPORTED)
F = judgment(Verdict.NOT_SUPPORTED)
U = judgment(Verdict.UNPARSEABLE)


class TestPronounReplaced:
    @pytest.mark.parametrize(
        "subclaim,decontext,expected",
        [
            # Added-information rewrites without a pronoun swap.
            (
                "Prince Daniel is a member of the Swedish royal family.",
                "Prince Daniel, who is a sibling of Prince Carl Philip, is a member "
                "of the Swedish royal family.",
                False,
            ),
            (
                "She has appeared in several television series.",
                "Susan Sarandon has appeared in several television series.",
                True,
            ),
            (
                "The sitcom featured Matthew Perry as a lead actor.",
                "'The Matt Payne Show' featured Matthew Perry as a lead actor.",
                False,
            ),
            (
                "She wrote for the school's newspaper.",
                "Nikole Hannah-Jones wrote for the newspaper of Wesleyan University.",
                True,
            ),
            (
                "He began his wrestling career.",
                "Fuerza Guerrera, also known as Juan Conrado Aguilar Jáuregui, "
                "began his wrestling career.",
                True,
            ),
        ],
    )
    def test_qualitative_examples(self, subclaim, decontext, expected):
        assert pronoun_replaced(subclaim, decontext) is expected

    def test_pronoun_inventory(self):
        assert PRONOUNS == frozenset(
            {
                "she", "her", "hers", "herself",
                "he", "him", "his", "himself",
                "they", "them", "theirs", "themself",
            }
        )

    def test_word_token_matching_not_substring(self):
        # "their" is not in the inventory, and "hero" must not match "her".
        assert pronoun_replaced("Their hero won.", "The champion won.") is False
        assert pronoun_replaced("Theirs was the win.", "The team's was the win.") is True

    def test_case_insensitive(self):
        assert pronoun_replaced("SHE won.", "Ada won.") is True
        assert pronoun_replaced("She won.", "SHE won again.") is False

    def test_partial_replacement_any_semantics(self):
        # "He" replaced but "his" survives: any-pronoun semantics still fires.
        assert pronoun_replaced("He kept his title.", "Guerrera kept his title.") is True

    def test_partial_replacement_all_semantics(self):
        assert (
            pronoun_replaced("He kept his title.", "Guerrera kept his title.", require_all=True)
            is False
        )
        assert (
            pronoun_replaced("He kept his title.", "Guerrera kept the title.", require_all=True)
            is True
        )

    def test_no_pronoun_in_subclaim(self):
        assert pronoun_replaced("The film won awards.", "The 1993 film won awards.") is False

    @given(st.text(max_size=120))
    def test_identity_never_counts_as_replacement(self, text):
        assert pronoun_replaced(text, text) is False


class TestChangeStats:
    def test_hand_counted_example(self):
        a = [F, F, T, T]
        b = [T, F, T, F]
        pairs = [
            ("He won.", "Neeson won."),        # F -> T, pronoun replaced
            ("Same.", "Same."),
            ("Same again.", "Same again."),
            ("The film won.", "The 1993 film won."),  # T -> F, no pronoun
        ]
        stats = change_stats(a, b, pairs)
        assert stats.n_aligned == 4
        assert stats.pct_changed == Fraction(50)
        assert stats.pct_false_to_true == Fraction(25)
        assert stats.pct_true_to_false == Fraction(25)
        assert stats.pct_f2t_with_pronoun_replacement == Fraction(100)
        assert stats.pct_t2f_with_pronoun_replacement == Fraction(0)

    def test_changed_is_sum_of_directions(self):
        a = [F, T, F, T, F, T]
        b = [T, F, T, T, F, F]
        pairs = [("s.", "d.")] * 6
        stats = change_stats(a, b, pairs)
        assert stats.pct_changed == stats.pct_false_to_true + stats.pct_true_to_false

    def test_unparseable_treated_as_not_supported(self):
        stats = change_stats([U], [T], [("He won.", "Neeson won.")])
        assert stats.pct_false_to_true == Fraction(100)
        assert stats.pct_changed == Fraction(100)

    def test_empty_direction_percentages_are_none(self):
        stats = change_stats([F, F], [T, T], [("s.", "d.")] * 2)
        assert stats.pct_t2f_with_pronoun_replacement is None
        assert stats.pct_f2t_with_pronoun_replacement == Fraction(0)

    def test_empty_inputs(self):
        stats = change_stats([], [], [])
        assert stats == ChangeStats(0, Fraction(0), Fraction(0), Fraction(0), None, None)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            change_stats([T], [T, F], [("s.", "d."), ("s.", "d.")])

    def test_exact_fractions(self):
        # 1 change out of 3: exactly 100/3 percent, not a rounded float.
        stats = change_stats([F, F, F], [T, F, F], [("s.", "d.")] * 3)
        assert stats.pct_changed == Fraction(100, 3)

    @given(st.lists(st.booleans(), max_size=30))
    def test_identical_runs_have_no_changes(self, flags):
        run = [T if f else F for f in flags]
        pairs = [("He won.", "Neeson won.")] * len(run)
        stats = change_stats(run, run, pairs)
        assert stats.pct_changed == Fraction(0)
        assert stats.pct_f2t_with_pronoun_replacement is None
        assert stats.pct_t2f_with_pronoun_replacement is None


class TestDisagreementExamples:
    def test_collects_disagreements_in_order(self):
        a = [T, F, T]
        b = [T, T, F]
        pairs = [("a.", "A."), ("b.", "B."), ("c.", "C.")]
        rows = disagreement_examples(a, b, pairs, limit=10)
        assert rows == [
            ("b.", "B.", Verdict.NOT_SUPPORTED, Verdict.SUPPORTED),
            ("c.", "C.", Verdict.SUPPORTED, Verdict.NOT_SUPPORTED),
        ]

    def test_limit_respected(self):
        a = [F] * 5
        b = [T] * 5
        pairs = [(f"s{i}.", f"d{i}.") for i in range(5)]
        assert len(disagreement_examples(a, b, pairs, limit=2)) == 2
        assert disagreement_examples(a, b, pairs, limit=0) == []

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            disagreement_examples([T], [], [], limit=1)
