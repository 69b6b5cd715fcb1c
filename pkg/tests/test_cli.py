import json


import oracles
from boxdim.cli import main
from boxdim.covers import check_cover, read_cover
from boxdim.quotients import read_edge_list


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    return code, json.loads(capsys.readouterr().out)


def test_quotient_build_writes_cycle(tmp_path, capsys):
    out = tmp_path / "c12.edges"
    code, summary = run(capsys, "quotient", "build", "--group", "z", "--level", 12, "--out", out)
    assert code == 0 and summary["index"] == 12
    X = read_edge_list(out.read_text())
    for i in range(12):
        for j in range(12):
            assert X.dist[i, j] == oracles.cycle_distance(12, i, j)


def test_dim_at_scale_arcs(tmp_path, capsys):
    edges, cert = tmp_path / "c12.edges", tmp_path / "c12.cover"
    run(capsys, "quotient", "build", "--group", "z", "--level", 12, "--out", edges)
    code, summary = run(capsys, "dim-at-scale", "--space", edges, "--R", 3, "--S", 5, "--mode", "exact", "--shape", "arcs", "--out", cert)
    assert code == 0 and summary["value"] == 2 and summary["optimality"] == "exact"
    X = read_edge_list(edges.read_text())
    c = read_cover(cert.read_text(), X)
    chk = check_cover(c, 3)
    assert chk.ok(2, 5)


def test_dim_at_scale_infeasible(tmp_path, capsys):
    edges = tmp_path / "c12.edges"
    run(capsys, "quotient", "build", "--group", "z", "--level", 12, "--out", edges)
    code, summary = run(capsys, "dim-at-scale", "--space", edges, "--R", 3, "--S", 2)
    assert code == 1 and summary["value"] is None


def test_hirsch(capsys):
    code, summary = run(capsys, "hirsch", "--tree", "ext(ab(1),ab(2))")
    assert code == 0 and summary["hirsch_length"] == 3
    code, summary = run(capsys, "hirsch", "--group", "heisenberg")
    assert summary["hirsch_length"] == 3


def test_rational_flags(capsys):
    code, summary = run(capsys, "radius", "iso", "--group", "z", "--level", 12, "--R", "3/2")
    assert code == 0 and summary["R"] == "3/2" and summary["holds"]


def test_verdict_exit_codes(capsys):
    code, summary = run(capsys, "check", "scs", "--group", "dinf", "--levels", "3,5,7", "--mode", 1, "--F", "r", "s")
    assert code == 0 and summary["verdict"]
    code, _ = run(capsys, "check", "separating", "--group", "z", "--levels", "2,4", "--F", "x^4")
    assert code == 1


def test_key_lemma_exit_code(capsys):
    code, summary = run(capsys, "verify", "key-lemma", "--group", "free_abelian", "--params", 2, "--level", 3, "--R", 1)
    assert code == 0 and all(summary["clauses"].values())
    code, summary = run(capsys, "verify", "key-lemma", "--group", "dinf", "--level", 5, "--reflection", 1, "--R", 2)
    assert code == 1 and summary["clauses"]["5"] is False


def test_errors_exit_2(capsys, tmp_path):
    code, summary = run(capsys, "metric", "dist", "--group", "z", "--level", 4, "--x", 0, "--y", 9)
    assert code == 2 and summary["error"] == "DomainError"
    code, summary = run(capsys, "hirsch", "--tree", "ext(ab(1)")
    assert code == 2
    code, summary = run(capsys, "dim-at-scale", "--space", tmp_path / "missing.edges", "--R", 1, "--S", 1)
    assert code == 2
    assert main(["no-such-command"]) == 2


def test_lift_cover(tmp_path, capsys):
    edges, cert, lifted = tmp_path / "c.edges", tmp_path / "c.cover", tmp_path / "l.cover"
    run(capsys, "quotient", "build", "--group", "z", "--level", 64, "--out", edges)
    run(capsys, "dim-at-scale", "--space", edges, "--R", 4, "--S", 8, "--shape", "arcs", "--out", cert)
    code, summary = run(capsys, "lift-cover", "--group", "z", "--level", 64, "--cover", cert, "--S", 8, "--window", 40, "--out", lifted)
    assert code == 0 and summary["preserved"]


def test_box_commands(tmp_path, capsys):
    code, summary = run(capsys, "box", "assemble", "--group", "z", "--levels", "2,4,8", "--lambda", "1,2,4")
    assert code == 0 and summary["points"] == 14
    out = tmp_path / "box.graph"
    code, summary = run(capsys, "box", "export", "--group", "z", "--levels", "2,4,8", "--R", 2, "--out", out)
    assert out.read_text().startswith("# R=2 sigma=2Z,4Z,8Z")
    code, summary = run(capsys, "box", "report", "--group", "z", "--levels", "2,4,8,16", "--scales", "2", "--S-max", 4)
    assert summary["scales"]["2"]["n"] == 1


def test_artifacts_are_deterministic(tmp_path, capsys):
    outs = []
    p, s = tmp_path / "run.cover", tmp_path / "run.json"
    for _ in range(2):
        main(["--summary", str(s), "dim-at-scale", "--group", "free_abelian", "--params", "2", "--level", "4", "--R", "1", "--S", "2", "--out", str(p)])
        outs.append((p.read_bytes(), s.read_bytes()))
    capsys.readouterr()
    assert outs[0] == outs[1]
