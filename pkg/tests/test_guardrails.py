import pytest

from heritage_studio.guardrails import (
    ARCHITECTURE_LOCK_CLAUSE,
    CULTURAL_CONTEXT_CLAUSE,
    TagSelection,
    TaskTheme,
    assemble_prompt,
    constraint_profile,
    revalidate,
    validate_idea,
    validate_tags,
)

HR = TaskTheme.HISTORICAL_RECONSTRUCTION
RE = TaskTheme.RISK_ESTIMATION
FP = TaskTheme.FUTURE_PRESERVATION


class TestConstraintProfiles:
    def test_temporal_rules(self, corpus):
        assert constraint_profile(HR, corpus).temporal_rule == "strict-1930s"
        assert constraint_profile(RE, corpus).temporal_rule == "present-or-near-future"
        assert constraint_profile(FP, corpus).temporal_rule == "speculative-future"

    def test_shared_invariant_clauses(self, corpus):
        profiles = [constraint_profile(t, corpus) for t in TaskTheme]
        locks = {p.architecture_lock_clause for p in profiles}
        contexts = {p.cultural_context_clause for p in profiles}
        assert locks == {ARCHITECTURE_LOCK_CLAUSE}
        assert contexts == {CULTURAL_CONTEXT_CLAUSE}

    def test_rejection_lexicon_nesting(self, corpus):
        r = {t: set(constraint_profile(t, corpus).rejection_lexicon) for t in TaskTheme}
        assert r[FP] <= r[RE] <= r[HR]


class TestValidateTags:
    def test_compliant_selection(self, corpus, exterior_selection):
        assert validate_tags(exterior_selection, HR, corpus) is None

    def test_decorative_patterns_requires_interior(self, corpus):
        sel = TagSelection.of(
            {
                "viewpoint": "close-up",
                "time-of-day": "afternoon",
                "rendering-style": "gongbi",
                "decorative-patterns": "plant",
            }
        )
        err = validate_tags(sel, HR, corpus)
        assert err is not None
        assert ("decorative-patterns", "interior-only") in err.problems
        assert err.message.zh and err.message.en

    def test_interior_view_allows_decorative_patterns(self, corpus):
        sel = TagSelection.of(
            {
                "viewpoint": "close-up",
                "time-of-day": "afternoon",
                "rendering-style": "gongbi",
                "decorative-patterns": "plant",
            },
            interior=True,
        )
        assert validate_tags(sel, HR, corpus) is None

    def test_unknown_option(self, corpus):
        sel = TagSelection.of(
            {"viewpoint": "orbital", "time-of-day": "morning", "rendering-style": "photorealistic"}
        )
        err = validate_tags(sel, HR, corpus)
        assert ("viewpoint", "unknown-option") in err.problems

    def test_missing_required_category(self, corpus):
        sel = TagSelection.of({"viewpoint": "medium", "time-of-day": "morning"})
        err = validate_tags(sel, HR, corpus)
        assert ("rendering-style", "missing-required") in err.problems


class TestGoldenNormalizations:
    """The documented example normalizations and field-reported cases."""

    def test_glass_curtain_wall_replaced(self, corpus, exterior_selection):
        out = validate_idea(
            "a Diaolou with a futuristic glass curtain wall", exterior_selection, HR, corpus
        )
        assert out.status == "Normalized"
        assert "masonry façades with iron-grille windows" in out.normalized_idea
        assert any(v.resolution == "Replaced" for v in out.violations)

    def test_tanks_and_armored_vehicles_removed(self, corpus, exterior_selection):
        out = validate_idea(
            "a war scene with tanks and armored vehicles by the tower",
            exterior_selection,
            HR,
            corpus,
        )
        assert out.status == "Normalized"
        assert "tanks" not in out.normalized_idea
        assert any(v.resolution == "Removed" for v in out.violations)

    def test_alien_attack_removed(self, corpus, exterior_selection):
        out = validate_idea("an alien attack on the village", exterior_selection, HR, corpus)
        assert out.status == "Normalized"
        assert "alien" not in out.normalized_idea.lower()
        assert any(v.resolution == "Removed" for v in out.violations)

    def test_demolished_becomes_deterioration(self, corpus, exterior_selection):
        out = validate_idea("the Diaolou completely demolished", exterior_selection, RE, corpus)
        assert out.status == "Normalized"
        assert "visible structural cracks and weathering" in out.normalized_idea
        assert "demolished" not in out.normalized_idea

    def test_spaceship_becomes_heritage_reuse(self, corpus, exterior_selection):
        out = validate_idea(
            "the tower should transform into sci-fi spaceship", exterior_selection, FP, corpus
        )
        assert out.status == "Normalized"
        assert "preserving original tower form" in out.normalized_idea
        assert "spaceship" not in out.normalized_idea

    def test_empty_desert_relocated(self, corpus, exterior_selection):
        out = validate_idea(
            "the Diaolou standing in an empty desert", exterior_selection, FP, corpus
        )
        assert out.status == "Normalized"
        assert "desert" not in out.normalized_idea
        assert "Kaiping village landscape" in out.normalized_idea
        assert any(v.resolution == "Relocated" for v in out.violations)

    def test_compliant_idea_accepted_unchanged(self, corpus, exterior_selection):
        idea = "a morning market in front of the tower with baskets of vegetables"
        out = validate_idea(idea, exterior_selection, HR, corpus)
        assert out.status == "Accepted"
        assert out.violations == ()
        assert out.normalized_idea == idea

    def test_violation_explanations_bilingual_with_alternatives(self, corpus, exterior_selection):
        out = validate_idea("tanks in an empty desert", exterior_selection, HR, corpus)
        assert out.violations
        for v in out.violations:
            assert v.explanation.zh and v.explanation.en
            assert v.alternatives_en and v.alternatives_zh

    def test_idea_normalizing_to_empty_is_flagged(self, corpus, exterior_selection):
        out = validate_idea("tanks", exterior_selection, HR, corpus)
        assert out.status == "Normalized"
        assert out.normalized_idea == ""
        assert any(v.rule_id == "empty-idea" for v in out.violations)


class TestTagPrecedence:
    def test_conflicting_span_overridden(self, corpus, exterior_selection):
        out = validate_idea(
            "the tower at night with lanterns", exterior_selection, HR, corpus
        )
        assert "night" not in out.normalized_idea
        assert any(v.resolution == "Overridden-by-tag" for v in out.violations)
        assert any(v.tier == 2 for v in out.violations)

    def test_tag_spec_present_conflict_absent_in_prompt(self, corpus, exterior_selection):
        out = validate_idea("a crowded scene at night", exterior_selection, HR, corpus)
        site = corpus.site("ruishi-lou")
        prompt = assemble_prompt(site, exterior_selection, out, HR, corpus)
        assert "low-angle golden light" in prompt.rendered
        assert "at night" not in prompt.rendered


class TestAssembly:
    def test_canonical_clause_content(self, corpus, exterior_selection):
        out = validate_idea("villagers drying rice", exterior_selection, HR, corpus)
        site = corpus.site("ruishi-lou")
        prompt = assemble_prompt(site, exterior_selection, out, HR, corpus)
        assert "1930s" in prompt.rendered
        assert ARCHITECTURE_LOCK_CLAUSE in prompt.rendered
        assert "Kaiping, Guangdong, China" in prompt.rendered
        origins = [c.origin for c in prompt.clauses]
        assert origins[0] == "tier1" and origins[3] == "site"
        assert origins[-1] == "enrichment"
        assert "idea" in origins

    def test_1930s_clause_only_for_historical_reconstruction(self, corpus, exterior_selection):
        out = validate_idea("", exterior_selection, RE, corpus)
        site = corpus.site("tianlu-lou")
        for theme in (RE, FP):
            prompt = assemble_prompt(site, exterior_selection, out, theme, corpus)
            assert "1930s" not in prompt.rendered

    def test_every_selected_tag_contributes_one_clause(self, corpus, exterior_selection):
        out = validate_idea("", exterior_selection, HR, corpus)
        site = corpus.site("mingshi-lou")
        prompt = assemble_prompt(site, exterior_selection, out, HR, corpus)
        for cid, oid in exterior_selection.choices:
            spec = corpus.category(cid).option(oid).specification_text
            tagged = [c for c in prompt.clauses if c.origin == f"tag:{cid}"]
            assert len(tagged) == 1
            assert spec in tagged[0].text

    def test_empty_idea_prompt_from_tags_alone(self, corpus, exterior_selection):
        out = validate_idea("", exterior_selection, HR, corpus)
        site = corpus.site("yinglong-lou")
        prompt = assemble_prompt(site, exterior_selection, out, HR, corpus)
        assert all(c.origin != "idea" for c in prompt.clauses)

    def test_deterministic_rendering(self, corpus, exterior_selection):
        out = validate_idea("ducks on the pond", exterior_selection, HR, corpus)
        site = corpus.site("yunhuan-lou")
        a = assemble_prompt(site, exterior_selection, out, HR, corpus)
        b = assemble_prompt(site, exterior_selection, out, HR, corpus)
        assert a.rendered == b.rendered

    def test_enrichment_filtered_by_style(self, corpus, exterior_selection):
        out = validate_idea("", exterior_selection, HR, corpus)
        romanesque_site = corpus.site("yinglong-lou")
        prompt = assemble_prompt(romanesque_site, exterior_selection, out, HR, corpus)
        enrichment = [c.text for c in prompt.clauses if c.origin == "enrichment"]
        assert enrichment
        assert "parapet" not in enrichment[0]  # parapet term excludes romanesque


class TestRevalidate:
    def test_deleted_lock_clause_reinserted(self, corpus, exterior_selection):
        out = validate_idea("villagers at work", exterior_selection, HR, corpus)
        site = corpus.site("ruishi-lou")
        prompt = assemble_prompt(site, exterior_selection, out, HR, corpus)
        edited = prompt.rendered.replace(ARCHITECTURE_LOCK_CLAUSE, "")
        result = revalidate(edited, exterior_selection, HR, corpus)
        assert ARCHITECTURE_LOCK_CLAUSE in result.normalized_idea
        tier1 = [v for v in result.violations if v.rule_id == "reassert:tier1"]
        assert len(tier1) == 1

    def test_compliant_append_preserved(self, corpus, exterior_selection):
        out = validate_idea("", exterior_selection, HR, corpus)
        site = corpus.site("ruishi-lou")
        prompt = assemble_prompt(site, exterior_selection, out, HR, corpus)
        edited = prompt.rendered + " A water buffalo rests by the pond."
        result = revalidate(edited, exterior_selection, HR, corpus)
        assert result.status == "Accepted"
        assert "water buffalo" in result.normalized_idea

    def test_appended_alien_attack_removed(self, corpus, exterior_selection):
        out = validate_idea("", exterior_selection, HR, corpus)
        site = corpus.site("ruishi-lou")
        prompt = assemble_prompt(site, exterior_selection, out, HR, corpus)
        edited = prompt.rendered + " Suddenly an alien attack begins."
        result = revalidate(edited, exterior_selection, HR, corpus)
        assert result.status == "Normalized"
        assert "alien" not in result.normalized_idea.lower()
        assert any(v.resolution == "Removed" for v in result.violations)


class TestIdempotence:
    @pytest.mark.parametrize(
        "idea",
        [
            "a futuristic glass curtain wall at night",
            "tanks and armored vehicles in an empty desert",
            "the Diaolou completely demolished",
            "transform into sci-fi spaceship above the clouds",
            "a quiet compliant village scene",
        ],
    )
    def test_validate_idea_idempotent(self, corpus, exterior_selection, idea):
        first = validate_idea(idea, exterior_selection, HR, corpus)
        second = validate_idea(first.normalized_idea, exterior_selection, HR, corpus)
        assert second.status == "Accepted"
        assert second.violations == ()
        assert second.normalized_idea == first.normalized_idea


class TestStrictnessOrdering:
    @pytest.mark.parametrize(
        "idea",
        [
            "a morning market in front of the tower",
            "children flying kites beside the rice fields",
            "an elder telling stories under the banyan tree",
        ],
    )
    def test_hr_accepted_ideas_pass_other_themes(self, corpus, exterior_selection, idea):
        hr = validate_idea(idea, exterior_selection, HR, corpus)
        assert hr.status == "Accepted"
        for theme in (RE, FP):
            out = validate_idea(idea, exterior_selection, theme, corpus)
            assert out.status == "Accepted"
            assert out.normalized_idea == idea
