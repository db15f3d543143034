import json
import math
import random

import pytest

from airhmi.corpus import build_corpus, iter_corpus
from airhmi.model import FINGER_NAMES, FingerState, HandFrame, Vec3
from airhmi.recognizer import CLICK, SCROLL
from airhmi.synth import (
    InfeasibleSegment,
    ParseError,
    TrajectoryScript,
    circle,
    dwell,
    generate,
    jitter,
    line,
    load_script,
    record,
    replay,
    script_from_json,
    script_to_json,
    set_fingers,
    tap,
)

CY = 404.8


class TestGenerate:
    def test_tap_labels_exactly_one_click(self):
        stream = generate(TrajectoryScript(segments=(dwell(1.0), tap(15.0, 200.0), dwell(1.0))))
        assert [lab.kind for lab in stream.labels] == [CLICK]

    def test_two_cw_revolutions_label_eight_down(self):
        script = TrajectoryScript(
            segments=(dwell(0.4), circle((-20.0, CY, 0.0), 20.0, 2.0, "cw", 2 * math.pi), dwell(0.4))
        )
        stream = generate(script)
        scrolls = [lab for lab in stream.labels if lab.kind == SCROLL]
        assert len(scrolls) == 8
        assert all(lab.direction == "down" for lab in scrolls)

    def test_jitter_only_labels_empty(self):
        stream = generate(TrajectoryScript(segments=(jitter(1.0, 10.0),)), seed=5)
        assert stream.labels == []

    def test_infeasible_tap_grey_zone(self):
        # peak speed between the silent bound and the detectable bound
        with pytest.raises(InfeasibleSegment):
            generate(TrajectoryScript(segments=(dwell(0.3), tap(15.0, 100.0), dwell(0.3))))

    def test_infeasible_slow_reach(self):
        # detectable-speed poke that cannot reach its depth inside the window
        with pytest.raises(InfeasibleSegment):
            generate(TrajectoryScript(segments=(dwell(0.3), tap(30.0, 120.0), dwell(0.3))))

    def test_near_miss_tap_generates_silently(self):
        stream = generate(TrajectoryScript(segments=(dwell(0.3), tap(20.0, 30.0), dwell(0.3))))
        assert stream.labels == []

    def test_deterministic_given_seed(self):
        script = TrajectoryScript(segments=(jitter(1.5, 2.0), dwell(0.2)))
        a = generate(script, seed=21)
        b = generate(script, seed=21)
        assert a.frames == b.frames
        c = generate(script, seed=22)
        assert a.frames != c.frames

    def test_escaping_box_refused(self):
        with pytest.raises(InfeasibleSegment):
            generate(TrajectoryScript(segments=(line((5000.0, CY, 0.0), 400.0),)))

    def test_timestamps_strictly_increasing(self):
        stream = generate(TrajectoryScript(segments=(dwell(0.5), tap(12.0, 300.0), dwell(0.5))))
        ts = [f.ts_us for f in stream.frames]
        assert all(a < b for a, b in zip(ts, ts[1:]))

    def test_kinematic_continuity(self):
        script = TrajectoryScript(
            segments=(
                dwell(0.3),
                line((100.0, CY, 0.0), 200.0),
                tap(15.0, 300.0),
                circle((80.0, CY, 0.0), 20.0, 1.0, "ccw", 2 * math.pi),
                dwell(0.3),
            )
        )
        stream = generate(script)
        # fastest scripted motion: tap peak 300, line 200, circle tangential 40pi
        max_speed = max(300.0, 200.0, 20.0 * 2 * math.pi, 150.0)
        dt = 1.0 / script.frame_rate
        for a, b in zip(stream.frames, stream.frames[1:]):
            step = math.dist(a.index_tip.as_tuple(), b.index_tip.as_tuple())
            assert step <= max_speed * dt * 1.05


class TestScriptSerialization:
    def test_round_trip(self):
        script = TrajectoryScript(
            segments=(
                dwell(0.5),
                line((10.0, CY, -5.0), 120.0),
                tap(14.0, 260.0),
                circle((-15.0, CY, 0.0), 15.0, 2.0, "cw", 5.0),
                set_fingers(("thumb", "index")),
                jitter(0.8, 3.0),
            ),
            frame_rate=200.0,
        )
        assert script_from_json(script_to_json(script)) == script

    def test_bare_segment_array(self):
        script = script_from_json('[{"kind":"dwell","duration_s":1.0}]')
        assert script.frame_rate == 120.0
        assert script.segments[0].duration_s == 1.0


def random_frames(n, seed=0):
    rng = random.Random(seed)
    frames = []
    ts = 0
    for _ in range(n):
        ts += rng.randrange(1, 20_000)
        if rng.random() < 0.1:
            frames.append(HandFrame(ts_us=ts, hand_present=False))
            continue
        def v():
            return Vec3(rng.uniform(-300, 300), rng.uniform(100, 700), rng.uniform(-300, 300))
        fingers = tuple(
            FingerState(name=name, tip=v(), extended=rng.random() < 0.5) for name in FINGER_NAMES
        )
        frames.append(
            HandFrame(ts_us=ts, hand_present=True, palm=v(), palm_normal=Vec3(0.0, 0.0, -1.0), fingers=fingers)
        )
    return frames


class TestRecordReplay:
    def test_round_trip_10k_random_frames(self, tmp_path):
        frames = random_frames(10_000, seed=123)
        path = tmp_path / "frames.jsonl"
        record(frames, path)
        assert replay(path) == frames

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("")
        assert replay(path) == []

    def test_malformed_line_reports_line_number(self, tmp_path):
        frames = random_frames(10, seed=1)
        path = tmp_path / "frames.jsonl"
        record(frames, path)
        lines = path.read_text().splitlines()
        lines[6] = '{"ts_us": "broken"'
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ParseError) as exc_info:
            replay(path)
        assert exc_info.value.line_no == 7

    def test_wrong_schema_line_rejected(self, tmp_path):
        path = tmp_path / "frames.jsonl"
        path.write_text('{"ts_us":1,"hand":true}\n')
        with pytest.raises(ParseError):
            replay(path)


class TestCorpus:
    def test_composition(self):
        entries = build_corpus()
        names = [name for name, _, _ in entries]
        assert len(entries) == 53
        assert sum(n.startswith("tap_") for n in names) == 20
        assert sum(n.startswith("circle_") for n in names) == 12
        assert sum(n.startswith("drag_") for n in names) == 6
        assert sum(n.startswith("jitter_") for n in names) == 10
        assert sum(n.startswith("miss_") for n in names) == 5

    def test_checked_in_files_match_builder(self):
        built = {name: (script, seed) for name, script, seed in build_corpus()}
        loaded = {name: (script, seed) for name, script, seed in iter_corpus()}
        assert built == loaded

    def test_adversarial_scripts_have_no_labels(self):
        for name, script, seed in iter_corpus():
            if name.startswith(("miss_", "jitter_")):
                assert generate(script, seed=seed).labels == []


class TestCli:
    def test_synth_command_writes_frames_and_labels(self, tmp_path):
        from airhmi.cli import main

        script_path = tmp_path / "script.json"
        script_path.write_text(
            script_to_json(TrajectoryScript(segments=(dwell(0.3), tap(15.0, 300.0), dwell(0.3))))
        )
        out = tmp_path / "frames.jsonl"
        labels = tmp_path / "labels.jsonl"
        rc = main(["synth", "--script", str(script_path), "--out", str(out), "--labels", str(labels), "--seed", "3"])
        assert rc == 0
        assert len(replay(out)) > 60
        entries = [json.loads(l) for l in labels.read_text().splitlines()]
        assert [e["kind"] for e in entries] == ["click"]
