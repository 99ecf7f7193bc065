import random
import statistics

import pytest

from heritage_studio.images import GenerationRequest, ImagePipeline, ImageStore, StubImageBackend
from heritage_studio.store import (
    ImageNotSaved,
    InvalidEntry,
    IterationEntry,
    SessionStore,
    StorageFailure,
    UnknownCreation,
    UnknownSession,
    load_pilot_fixture,
    replay_pilot_fixture,
)


@pytest.fixture
def store(tmp_path):
    return SessionStore(tmp_path / "data")


def entry(theme="historical-reconstruction", job="j1", prompt="a prompt"):
    return IterationEntry(
        theme=theme,
        tags={"viewpoint": "medium"},
        idea="an idea",
        outcome_status="Accepted",
        violation_count=0,
        final_prompt=prompt,
        job_id=job,
        image_ids=(f"{job}-0", f"{job}-1", f"{job}-2", f"{job}-3"),
    )


class TestSessions:
    def test_create_session(self, store):
        s = store.create_session("zh", "P1")
        assert s.language == "zh"
        assert store.sessions[s.session_id].participant_label == "P1"

    def test_distinct_ids(self, store):
        assert store.create_session("en", "a").session_id != store.create_session("en", "b").session_id

    def test_unwritable_path_storage_failure(self, tmp_path):
        blocker = tmp_path / "blocked"
        blocker.write_text("file, not a dir")
        with pytest.raises(StorageFailure):
            SessionStore(blocker / "data")


class TestIterations:
    def test_new_creation_gets_monotone_id(self, store):
        s = store.create_session("zh", "P1")
        first = store.record_iteration(s.session_id, entry(job="j1"))
        second = store.record_iteration(s.session_id, entry(job="j2"))
        assert second > first

    def test_append_to_existing_creation(self, store):
        s = store.create_session("zh", "P1")
        cid = store.record_iteration(s.session_id, entry(job="j1"))
        same = store.record_iteration(s.session_id, entry(job="j2"), creation_id=cid)
        assert same == cid
        assert len(store.creations[cid].iterations) == 2

    def test_wrong_image_count_rejected(self, store):
        s = store.create_session("zh", "P1")
        bad = IterationEntry(
            theme="historical-reconstruction",
            tags={},
            idea="",
            outcome_status="Accepted",
            violation_count=0,
            final_prompt="p",
            job_id="j",
            image_ids=("a", "b", "c"),
        )
        with pytest.raises(InvalidEntry):
            store.record_iteration(s.session_id, bad)

    def test_unknown_session(self, store):
        with pytest.raises(UnknownSession):
            store.record_iteration("ghost", entry())

    def test_append_only_across_reload(self, store, tmp_path):
        s = store.create_session("zh", "P1")
        cid = store.record_iteration(s.session_id, entry())
        reloaded = SessionStore(store.data_dir)
        assert cid in reloaded.creations
        assert len(reloaded.creations[cid].iterations) == 1
        next_cid = reloaded.record_iteration(s.session_id, entry(job="j9"))
        assert next_cid > cid


class TestFixtureAnalytics:
    def test_fixture_rows_grid_identity(self):
        rows = load_pilot_fixture()
        assert len(rows) == 54
        for row in rows:
            assert row["images"] == 4 * row["iterations"]

    def test_p17_task1_replay(self, store):
        rows = [r for r in load_pilot_fixture() if r["participant"] == "P17"]
        replay_pilot_fixture(store, rows)
        t1 = [
            c
            for c in store.creations.values()
            if c.theme == "historical-reconstruction"
        ]
        assert sum(len(c.iterations) for c in t1) == 4
        assert sum(len(it.image_ids) for c in t1 for it in c.iterations) == 16

    def test_summary_matches_direct_oracle(self, store):
        replay_pilot_fixture(store)
        rows = load_pilot_fixture()
        for summary in store.compute_summary():
            per = {}
            for row in rows:
                if row["theme"] == summary.theme:
                    per.setdefault(row["participant"], [0, 0])
                    per[row["participant"]][0] += row["iterations"]
                    per[row["participant"]][1] += row["images"]
            iters = [v[0] for v in per.values()]
            imgs = [v[1] for v in per.values()]
            assert summary.participants == 18
            assert summary.iterations_mean == pytest.approx(statistics.fmean(iters))
            assert summary.iterations_sd == pytest.approx(statistics.pstdev(iters))
            assert summary.images_mean == pytest.approx(statistics.fmean(imgs))
            assert summary.images_sd == pytest.approx(statistics.pstdev(imgs))

    def test_single_participant_sd_zero(self, store):
        s = store.create_session("zh", "solo")
        store.record_iteration(s.session_id, entry())
        summary = store.compute_summary("historical-reconstruction")
        assert summary[0].participants == 1
        assert summary[0].iterations_sd == 0.0

    def test_randomized_store_matches_brute_force(self, store):
        rng = random.Random(42)
        themes = ("historical-reconstruction", "risk-estimation", "future-preservation")
        expected = {}
        for p in range(6):
            s = store.create_session("zh", f"R{p}")
            for theme in themes:
                n = rng.randint(0, 3)
                for k in range(n):
                    store.record_iteration(s.session_id, entry(theme=theme, job=f"{p}-{theme}-{k}"))
                expected.setdefault(theme, {})[f"R{p}"] = n
        for summary in store.compute_summary():
            totals = [v for v in expected[summary.theme].values() if True]
            # participants with zero creations in a theme do not appear
            nonzero = [v for v in totals if v > 0]
            assert summary.participants == len(nonzero)
            assert summary.iterations_mean == pytest.approx(statistics.fmean(nonzero))
            assert summary.images_mean == pytest.approx(4 * summary.iterations_mean)


class TestExhibitCards:
    @pytest.fixture
    def pipeline(self, corpus, tmp_path):
        return ImagePipeline(corpus, ImageStore(tmp_path / "img"), StubImageBackend())

    def test_card_roundtrip_and_determinism(self, store, pipeline):
        job = pipeline.wait(
            pipeline.submit(
                GenerationRequest(
                    request_id="r", prompt="card prompt", base_rendering_ref="ruishi-lou.png", seed=1
                )
            )
        )
        s = store.create_session("en", "P1")
        e = IterationEntry(
            theme="historical-reconstruction",
            tags={"viewpoint": "medium"},
            idea="idea",
            outcome_status="Accepted",
            violation_count=0,
            final_prompt="card prompt",
            job_id=job.job_id,
            image_ids=job.image_ids,
        )
        cid = store.record_iteration(s.session_id, e)
        store.save_image(s.session_id, cid, job.image_ids[1])
        card = store.export_exhibit_card(cid, job.image_ids[1], pipeline.store)
        assert b"card prompt" in card
        assert card == store.export_exhibit_card(cid, job.image_ids[1], pipeline.store)

    def test_unsaved_image_rejected(self, store, pipeline):
        s = store.create_session("en", "P1")
        cid = store.record_iteration(s.session_id, entry())
        with pytest.raises(ImageNotSaved):
            store.export_exhibit_card(cid, "j1-0", pipeline.store)

    def test_unknown_creation(self, store, pipeline):
        with pytest.raises(UnknownCreation):
            store.export_exhibit_card(999, "x", pipeline.store)
