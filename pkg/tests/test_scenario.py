"""Scenario runner: directory loading, event replay, written artifacts."""

import importlib.resources
import json
import re

import pytest

from minisim.network import instantiate
from minisim.refconfig import generate_reference_config
from minisim.scenario import (
    ApplyConfig,
    FailLink,
    Grade,
    Hijack,
    RestoreLink,
    Snapshot,
    ScenarioError,
    Withdraw,
    load_scenario,
    run_scenario,
)
from minisim.topology import generate_reference_topology, render_topology_spec

TINY = """\
region west
as 1 role=transit region=west auto
as 2 role=transit region=west auto
as 3 role=transit region=west auto
l3template 1 routers=R1
l3template 2 routers=R1
l3template 3 routers=R1
link 1.R1 2.R1 rel=prov delay_us=1000 bw_bps=1000000
link 1.R1 3.R1 rel=prov delay_us=1000 bw_bps=1000000
"""


def write_tiny(root, events, rubrics=None, configs=None):
    root.mkdir(parents=True, exist_ok=True)
    (root / "topology.txt").write_text(TINY)
    (root / "events.txt").write_text(events)
    for name, text in (rubrics or {}).items():
        (root / "rubrics").mkdir(exist_ok=True)
        (root / "rubrics" / name).write_text(text)
    for (asn, device), text in (configs or {}).items():
        d = root / "configs" / str(asn)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{device}.cfg").write_text(text)
    return root


def matrix_file(result, tag):
    out = result.outputs[0].parent
    return json.loads((out / f"{tag}.matrix.json").read_text())


def data_rubric(name):
    return (importlib.resources.files("minisim") / "data"
            / f"{name}.rubric").read_text()


@pytest.fixture(scope="module")
def ladder_run(tmp_path_factory):
    """One full run on the small reference topology.

    Tier-1 and stub ASes configure themselves; the two transit ASes get
    startup configs from the configs/ directory, the way a packaged
    assignment would ship them.
    """
    root = tmp_path_factory.mktemp("ladder_scenario")
    spec = generate_reference_topology(1, 6)
    (root / "topology.txt").write_text(render_topology_spec(spec))
    probe = instantiate(spec)
    for asn in (3, 4):
        d = root / "configs" / str(asn)
        d.mkdir(parents=True)
        for device, script in generate_reference_config(probe, asn).items():
            (d / f"{device}.cfg").write_text(script)
    (root / "rubrics").mkdir()
    for name in ("default", "transit"):
        (root / "rubrics" / f"{name}.rubric").write_text(data_rubric(name))
    (root / "events.txt").write_text(
        "# exercise a link failure and grade everyone\n"
        "snapshot base\n"
        "fail_link 3.LYON 5.ZURI\n"
        "snapshot degraded\n"
        "restore_link 3.LYON 5.ZURI\n"
        "snapshot restored\n"
        "grade all rubrics/default.rubric\n"
        "grade 3 rubrics/transit.rubric\n")
    result = run_scenario(root)
    return root, result


def test_ladder_run_passes(ladder_run):
    root, result = ladder_run
    assert result.converged
    assert result.ok
    assert len(result.grades) == 7  # six ASes plus the transit rubric
    assert all(report.all_passed for _, report in result.grades)


def test_ladder_artifacts_on_disk(ladder_run):
    root, result = ladder_run
    out = root / "out"
    names = {p.name for p in out.iterdir()}
    for tag in ("base", "degraded", "restored"):
        assert f"{tag}.matrix.json" in names
        assert f"{tag}.lg.txt" in names
    for asn in range(1, 7):
        assert f"grade-06-default-as{asn}.json" in names
    assert "grade-07-transit-as3.txt" in names
    assert set(result.outputs) <= {out / n for n in names}


def test_ladder_matrix_green_throughout(ladder_run):
    # both failure-time paths survive: the other provider and the exchange
    root, result = ladder_run
    for tag in ("base", "degraded", "restored"):
        cells = matrix_file(result, tag)["cells"]
        assert all(c == "g" for row in cells for c in row)


def test_restore_returns_to_identical_state(ladder_run):
    root, result = ladder_run
    out = root / "out"
    strip = lambda text: re.sub(r"generation \d+", "generation N", text)
    base = strip((out / "base.lg.txt").read_text())
    restored = strip((out / "restored.lg.txt").read_text())
    assert base == restored


def test_grade_report_files_match_results(ladder_run):
    root, result = ladder_run
    report = json.loads((root / "out" / "grade-07-transit-as3.json")
                        .read_text())
    assert all(check["pass"] for check in report["checks"])
    assert report["score"] == sum(c["weight"] for c in report["checks"])
    text = (root / "out" / "grade-07-transit-as3.txt").read_text()
    assert "Grade report for AS 3" in text


def test_loaded_events_carry_parsed_payloads(ladder_run):
    root, _ = ladder_run
    scenario = load_scenario(root)
    kinds = [type(e) for e in scenario.events]
    assert kinds == [Snapshot, FailLink, Snapshot, RestoreLink, Snapshot,
                     Grade, Grade]
    fail = scenario.events[1]
    assert (fail.a, fail.b) == ((3, "LYON"), (5, "ZURI"))
    grade_all, grade_one = scenario.events[5], scenario.events[6]
    assert grade_all.asn is None
    assert grade_one.asn == 3
    assert grade_one.rubric_name == "transit"
    assert (3, "ZURI") in scenario.configs


def test_failed_only_link_cuts_the_column(tmp_path):
    """AS 3 hangs off one provider link; losing it isolates the AS."""
    root = write_tiny(tmp_path, "snapshot before\n"
                                "fail_link 1.R1 3.R1\n"
                                "snapshot after\n")
    result = run_scenario(root)
    assert result.ok
    before = matrix_file(result, "before")
    after = matrix_file(result, "after")
    assert all(c == "g" for row in before["cells"] for c in row)
    assert after["asns"] == [1, 2, 3]
    assert after["cells"] == [["g", "g", "r"],
                              ["g", "g", "r"],
                              ["r", "r", "g"]]


def test_hijack_withdraw_cycle(tmp_path):
    rubric = "check hj HijackReport weight=1 attacker=2 prefix=3.0.0.0/8\n"
    root = write_tiny(tmp_path,
                      "hijack 2 3.0.0.0/8 more_specific\n"
                      "snapshot hijacked\n"
                      "grade 3 rubrics/hj.rubric\n"
                      "withdraw 2 3.0.0.0/8\n"
                      "snapshot healed\n",
                      rubrics={"hj.rubric": rubric})
    result = run_scenario(root)
    assert result.ok
    hijacked = matrix_file(result, "hijacked")["cells"]
    # traffic toward the victim lands at the attacker instead
    assert hijacked[0][2] == "r" and hijacked[1][2] == "r"
    # one withdraw removes both injected halves
    healed = matrix_file(result, "healed")["cells"]
    assert all(c == "g" for row in healed for c in row)


def test_withdraw_without_hijack_drops_the_prefix(tmp_path):
    root = write_tiny(tmp_path, "withdraw 3 3.0.0.0/8\nsnapshot gone\n")
    result = run_scenario(root)
    cells = matrix_file(result, "gone")["cells"]
    assert cells[0][2] == "r" and cells[1][2] == "r"
    assert cells[2][0] == "g"  # the silent AS can still send outward


def test_fail_router_isolates_its_as(tmp_path):
    root = write_tiny(tmp_path, "fail_router 3 R1\nsnapshot dead\n")
    result = run_scenario(root)
    cells = matrix_file(result, "dead")["cells"]
    assert cells[0][2] == "r" and cells[2][0] == "r"


def test_apply_event_changes_the_network(tmp_path):
    # shut the provider-facing interface; the effect equals a link failure
    script = "interface ext_1\nshutdown\n"
    (tmp_path / "patch").mkdir(parents=True)
    root = write_tiny(tmp_path, "apply 3 R1 patch/shut.cfg\nsnapshot after\n")
    (root / "patch" / "shut.cfg").write_text(script)
    result = run_scenario(root)
    cells = matrix_file(result, "after")["cells"]
    assert cells[0][2] == "r"
    scenario = load_scenario(root)
    applied = scenario.events[0]
    assert isinstance(applied, ApplyConfig)
    assert applied.script == script
    assert applied.source == "patch/shut.cfg"


def test_empty_event_list_still_snapshots(tmp_path):
    root = write_tiny(tmp_path, "")
    result = run_scenario(root)
    assert result.ok
    names = {p.name for p in result.outputs}
    assert names == {"final.matrix.json", "final.lg.txt"}


def test_missing_events_file_means_no_events(tmp_path):
    root = write_tiny(tmp_path, "")
    (root / "events.txt").unlink()
    scenario = load_scenario(root)
    assert scenario.events == []


def test_consecutive_snapshots_are_identical(tmp_path):
    root = write_tiny(tmp_path, "snapshot one\nsnapshot two\n")
    result = run_scenario(root)
    out = root / "out"
    assert (out / "one.matrix.json").read_bytes() \
        == (out / "two.matrix.json").read_bytes()
    assert (out / "one.lg.txt").read_bytes() \
        == (out / "two.lg.txt").read_bytes()


def test_custom_output_directory(tmp_path):
    root = write_tiny(tmp_path / "scn", "snapshot only\n")
    result = run_scenario(root, out_dir=tmp_path / "elsewhere")
    assert (tmp_path / "elsewhere" / "only.matrix.json").is_file()
    assert all(p.parent == tmp_path / "elsewhere" for p in result.outputs)


def test_failing_grade_fails_the_run_without_raising(tmp_path):
    rubric = "check stp StpPattern weight=1 edges=SW1-SW2\n"
    root = write_tiny(tmp_path, "grade 1 rubrics/stp.rubric\n",
                      rubrics={"stp.rubric": rubric})
    result = run_scenario(root)
    assert result.converged
    assert not result.ok
    [(label, report)] = result.grades
    assert label == "stp:as1"
    assert report.score == 0
    text = (root / "out" / "grade-01-stp-as1.txt").read_text()
    assert "FAIL" in text


def test_comments_and_blanks_are_skipped(tmp_path):
    root = write_tiny(tmp_path, "# a comment\n\nsnapshot tag # trailing\n")
    scenario = load_scenario(root)
    assert scenario.events == [Snapshot("tag")]


@pytest.mark.parametrize("events, message", [
    ("explode now", "unknown event"),
    ("apply 1 R1", "apply takes"),
    ("apply 1 R1 nowhere.cfg", "no such file"),
    ("apply 1 R1 ../escape.cfg", "escapes the scenario"),
    ("fail_link 1R1 3.R1", "expected <asn>.<device>"),
    ("fail_link 1.R1", "takes two"),
    ("fail_router R1 1", "fail_router takes"),
    ("hijack 2 banana", "banana"),
    ("hijack 2 3.0.0.0/8 extra_loud", "unknown hijack flag"),
    ("withdraw 3", "withdraw takes"),
    ("snapshot a/b", "alphanumeric"),
    ("snapshot", "one tag"),
    ("grade nine rubrics/x.rubric", "ASN or 'all'"),
    ("grade 1 rubrics/absent.rubric", "no such file"),
    ("grade 9 rubrics/ok.rubric", "unknown AS 9"),
])
def test_malformed_events_are_rejected(tmp_path, events, message):
    root = write_tiny(tmp_path, events,
                      rubrics={"ok.rubric": "check a IntraReach weight=1\n"})
    with pytest.raises(ScenarioError, match=re.escape(message)):
        load_scenario(root)


def test_bad_rubric_file_is_rejected_at_load(tmp_path):
    root = write_tiny(tmp_path, "grade 1 rubrics/bad.rubric\n",
                      rubrics={"bad.rubric": "check x NoSuchKind weight=1\n"})
    with pytest.raises(ScenarioError, match="bad rubric"):
        load_scenario(root)


def test_missing_topology_is_rejected(tmp_path):
    (tmp_path / "events.txt").write_text("")
    with pytest.raises(ScenarioError, match="missing topology.txt"):
        load_scenario(tmp_path)


def test_unparseable_topology_is_rejected(tmp_path):
    (tmp_path / "topology.txt").write_text("region west\nas x role=transit\n")
    with pytest.raises(ScenarioError, match="topology.txt"):
        load_scenario(tmp_path)


def test_config_dir_names_must_be_asns(tmp_path):
    root = write_tiny(tmp_path, "")
    bad = root / "configs" / "xx"
    bad.mkdir(parents=True)
    (bad / "R1.cfg").write_text("hostname R1\n")
    with pytest.raises(ScenarioError, match="must be an ASN"):
        load_scenario(root)


def test_configs_for_unknown_as_are_rejected(tmp_path):
    root = write_tiny(tmp_path, "", configs={(9, "R1"): "hostname R1\n"})
    with pytest.raises(ScenarioError, match="no such AS"):
        load_scenario(root)


def test_startup_config_typo_is_logged_not_fatal(tmp_path):
    # the config language shrugs at unknown lines, so a typo degrades the
    # network instead of killing the run; the diagnostic lands in the log
    root = write_tiny(tmp_path, "",
                      configs={(1, "R1"): "frobnicate the uplink\n"})
    result = run_scenario(root)
    assert result.converged
    assert any("configs/1/R1.cfg" in line and "frobnicate" in line
               for line in result.log)


def test_failing_unknown_link_is_reported(tmp_path):
    root = write_tiny(tmp_path, "fail_link 2.R1 3.R1\n")
    with pytest.raises(ScenarioError, match="no link between"):
        run_scenario(root)


def test_failing_unknown_router_is_reported(tmp_path):
    root = write_tiny(tmp_path, "fail_router 3 R9\n")
    with pytest.raises(ScenarioError, match="no device 3.R9"):
        run_scenario(root)


def test_apply_to_unknown_device_is_reported(tmp_path):
    (tmp_path / "patch").mkdir(parents=True)
    root = write_tiny(tmp_path, "apply 1 NOPE patch/x.cfg\n")
    (root / "patch" / "x.cfg").write_text("hostname NOPE\n")
    with pytest.raises(ScenarioError, match="patch/x.cfg"):
        run_scenario(root)
