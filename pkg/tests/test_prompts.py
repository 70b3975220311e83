from pathlib import Path

import pytest

from veriforge import prompts
from veriforge.errors import InvalidInput

GOLDEN = Path(__file__).parent / "fixtures" / "golden_prompts"

PARAGRAPH = "Ada Lovelace was a mathematician. She wrote the first program."
SENTENCE = "She wrote the first program."


def rendered_cases() -> dict[str, str]:
    return {
        "dnd.txt": prompts.render_dnd(PARAGRAPH, SENTENCE),
        "decomp.txt": prompts.render_decomp(SENTENCE, prompts.default_decomp_exemplars()),
        "ambiguity.txt": prompts.render_ambiguity(SENTENCE, PARAGRAPH),
        "decontext.txt": prompts.render_decontext(SENTENCE, PARAGRAPH, {"She": "Ada Lovelace"}),
        "factscore_verify.txt": prompts.render_factscore_verify(
            "Ada Lovelace",
            [
                ("Ada Lovelace", "Ada Lovelace was an English mathematician."),
                ("Ada Lovelace", "She published the first algorithm."),
            ],
            "Ada Lovelace wrote the first program.",
        ),
        "dndscore_verify.txt": prompts.render_dndscore_verify(
            "Ada Lovelace",
            "Ada Lovelace was an English mathematician. She published the first algorithm.",
            "Ada Lovelace wrote the first program.",
            SENTENCE,
        ),
        "nli.txt": prompts.render_nli(
            "Ada Lovelace wrote the first program.", "Ada Lovelace was a programmer."
        ),
    }


@pytest.mark.parametrize("name", sorted(rendered_cases()))
def test_golden_render(name):
    golden = (GOLDEN / name).read_text(encoding="utf-8")
    assert rendered_cases()[name] == golden


def test_rendering_is_deterministic():
    first = rendered_cases()
    second = rendered_cases()
    assert first == second


class TestDndTemplate:
    def test_structure(self):
        prompt = prompts.render_dnd(PARAGRAPH, SENTENCE)
        assert "Ambiguity Criteria" in prompt
        assert "##CONTEXT-SUBCLAIM PAIRS##" in prompt
        assert "##EXPLANATION##" in prompt
        assert prompt.endswith("##SUBCLAIMS##:")
        assert f"##PARAGRAPH##: {PARAGRAPH}" in prompt
        assert f"##SENTENCE##: {SENTENCE}" in prompt

    def test_exemplars_present(self):
        prompt = prompts.render_dnd(PARAGRAPH, SENTENCE)
        assert "Michael Collins" in prompt
        assert "Stephen Miller" in prompt

    def test_no_unbound_placeholders(self):
        assert "{{" not in prompts.render_dnd(PARAGRAPH, SENTENCE)


class TestVerifyTemplates:
    def test_factscore_block_per_passage(self):
        prompt = prompts.render_factscore_verify(
            "T", [("A", "a text"), ("B", "b text"), ("C", "c text")], "claim"
        )
        assert prompt.count("Title: ") == 3
        assert prompt.count("Text: ") == 3
        assert prompt.endswith("Input: claim True or False?\nOutput:")

    def test_factscore_requires_evidence(self):
        with pytest.raises(InvalidInput):
            prompts.render_factscore_verify("T", [], "claim")

    def test_dndscore_contains_context_and_atom(self):
        prompt = prompts.render_dndscore_verify("T", "ref doc", "decontext claim", "atom")
        assert 'Given the following context: "decontext claim"' in prompt
        assert 'Input: Is "atom" True or False?\nOutput:' in prompt
        assert "Reference Document:\nref doc" in prompt

    def test_dndscore_rejects_empty_fields(self):
        with pytest.raises(InvalidInput):
            prompts.render_dndscore_verify("T", "", "c", "a")


class TestOtherTemplates:
    def test_decomp_requires_exemplar(self):
        with pytest.raises(InvalidInput):
            prompts.render_decomp(SENTENCE, [])

    def test_decomp_exemplar_blocks(self):
        prompt = prompts.render_decomp(
            SENTENCE, [("Ex one.", ["A.", "B."]), ("Ex two.", ["C."])]
        )
        assert "Sentence: Ex one.\nSubclaims:\n- A.\n- B." in prompt
        assert prompt.index("Ex one.") < prompt.index("Ex two.") < prompt.index(SENTENCE)

    def test_default_exemplars_shape(self):
        exemplars = prompts.default_decomp_exemplars()
        assert len(exemplars) == 2
        assert all(sentence and subclaims for sentence, subclaims in exemplars)

    def test_ambiguity_dict_serialized(self):
        prompt = prompts.render_decontext(SENTENCE, PARAGRAPH, {"She": "Ada Lovelace"})
        assert 'Ambiguities: {"She": "Ada Lovelace"}' in prompt

    def test_nli_fields(self):
        prompt = prompts.render_nli("p text", "h text")
        assert "Premise: p text" in prompt
        assert "Hypothesis: h text" in prompt

    def test_unknown_template_rejected(self):
        with pytest.raises(InvalidInput):
            prompts.load_template("nonexistent")

    def test_render_rejects_missing_values(self):
        with pytest.raises(InvalidInput):
            prompts.render("nli", {"premise": "p"})
