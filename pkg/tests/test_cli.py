import json

import pytest

from bpslicer.cli import RunConfig, main
from bpslicer.slicer import slice_trace
from bpslicer.trace import load_trace
from conftest import DATA, GOLDEN

BPEL = DATA / "bpel"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.mark.parametrize("mode,golden", [("asset", "usecase1_asset.json"),
                                          ("request", "usecase1_request.json")])
def test_slice_trace_golden(capsys, mode, golden):
    code, out, _ = run(capsys, "slice-trace", DATA / "usecase1.trace", "--mode", mode)
    assert code == 0
    assert out == (GOLDEN / golden).read_text()


def test_goldens_agree_with_library():
    report = slice_trace(load_trace(DATA / "usecase1.trace"))
    assets = json.loads((GOLDEN / "usecase1_asset.json").read_text())
    requests = json.loads((GOLDEN / "usecase1_request.json").read_text())
    assert assets == [c.to_dict() for c in report.rop_contexts]
    assert requests == [c.to_dict() for c in report.qop_contexts]


def test_slice_bpel_golden(capsys):
    code, out, _ = run(capsys, "slice-bpel", BPEL / "minimal.bpel",
                       "--bundle", BPEL / "minimal_bundle.json")
    assert code == 0
    assert out == (GOLDEN / "minimal_assembler.json").read_text()
    assert json.loads(out)["start_process"] is True


def test_graph_usecase2(capsys):
    code, out, _ = run(capsys, "graph", DATA / "usecase2.trace")
    assert code == 0
    nodes = [l for l in out.splitlines() if "shape=" in l]
    edges = [l for l in out.splitlines() if "->" in l]
    assert len(nodes) == 9
    assert len(edges) == 14
    failed = [l for l in edges if "color=blue" in l]
    assert len(failed) == 2 and all("style=dashed" in l for l in failed)


def test_graph_of_bpel(capsys):
    code, out, _ = run(capsys, "graph", BPEL / "minimal.bpel")
    assert code == 0 and out.startswith("digraph")
    assert '"S.v"' in out or "S." in out


def test_empty_trace(capsys):
    code, out, _ = run(capsys, "slice-trace", DATA / "empty.trace")
    assert code == 0
    assert json.loads(out)["rop_contexts"] == []


def test_denial_exit_code(capsys):
    code, out, _ = run(capsys, "negotiate", DATA / "usecase2_unfiltered.trace",
                       "--bundle", DATA / "usecase2_bundle.json", "--format", "text")
    assert code == 1
    denied = [l for l in out.splitlines() if l.endswith("denied")]
    assert denied == ["a.2 request C<-H Q_CH read: denied",
                      "a.3 request C<-I Q_CI read: denied"]


def test_positive_negotiation(capsys):
    code, out, _ = run(capsys, "negotiate", DATA / "usecase1.trace",
                       "--bundle", DATA / "usecase1_bundle.json")
    assert code == 0
    assert {e["decision"] for e in json.loads(out)} == {"satisfied"}


@pytest.mark.parametrize("argv", [
    ("slice-trace", "missing.trace"),
    ("negotiate", "data/usecase1.trace"),
    ("slice-bpel", "data/bpel/minimal.bpel", "--bundle", "missing.json"),
])
def test_input_errors(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == ""
    assert err.startswith("error:")


def test_malformed_trace(capsys, tmp_path):
    bad = tmp_path / "bad.trace"
    bad.write_text("1 : A -d-> B [in: x]\n2 : A ??? B\n")
    code, _, err = run(capsys, "slice-trace", bad)
    assert code == 2
    assert ":2" in err


def test_reruns_are_byte_identical(capsys):
    argv = ("slice-trace", DATA / "usecase2_unfiltered.trace", "--mode", "on-the-fly",
            "--bundle", DATA / "usecase2_bundle.json")
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second


def test_out_file(capsys, tmp_path):
    target = tmp_path / "o.json"
    code, out, _ = run(capsys, "slice-trace", DATA / "usecase1.trace", "--out", target)
    assert code == 0 and out == ""
    assert json.loads(target.read_text())["rop_contexts"]


def test_bench_columns(capsys):
    code, out, _ = run(capsys, "bench", BPEL)
    assert code == 0
    lines = out.splitlines()
    assert lines[0].split()[:4] == ["file", "links", "vars", "basic"]
    rows = {l.split()[0]: tuple(map(int, l.split()[1:4])) for l in lines[1:]}
    assert rows["sample3.bpel"] == (5, 7, 18)
    code, out, _ = run(capsys, "bench", BPEL, "--format", "json",
                       "--bundle", BPEL / "samples_bundle.json")
    rows = json.loads(out)
    assert [r["file"] for r in rows] == sorted(r["file"] for r in rows)
    assert {"io_ms", "parse_ms", "analysis_ms"} <= set(rows[0])


def test_text_formats(capsys):
    code, out, _ = run(capsys, "slice-trace", DATA / "usecase1.trace", "--format", "text")
    assert code == 0 and "R_CB" in out
    code, out, _ = run(capsys, "slice-bpel", BPEL / "minimal.bpel", "--format", "text",
                       "--bundle", BPEL / "minimal_bundle.json")
    assert out.splitlines() == ["R_KS.2: ok", "Q_KS.1: ok"]


def test_run_config_validation():
    with pytest.raises(ValueError):
        RunConfig("nope", ("x",))
    with pytest.raises(ValueError):
        RunConfig("negotiate", ("x",))
    assert RunConfig("graph", ("x",)).output_format == "json"
