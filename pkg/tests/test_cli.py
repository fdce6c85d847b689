import json
import os
import subprocess
import sys
from pathlib import Path

from symkit.cli import (
    detect_route,
    main,
    problem_to_operator_pde,
    problem_to_evolution,
    symmetry_json_evolutionary,
    symmetry_json_operator,
)
from symkit.dsl import parse

REPO = Path(__file__).resolve().parent.parent
HEAT = REPO / "problems" / "heat.pde"
SCHRODINGER = REPO / "problems" / "schrodinger.pde"


def run_cli(*argv, env_extra=None):
    env = dict(os.environ)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "symkit", *argv],
        capture_output=True,
        text=True,
        cwd=REPO,
        env=env,
    )


def test_detect_routes():
    heat = parse(HEAT.read_text())
    schr = parse(SCHRODINGER.read_text())
    assert detect_route(heat) == "evolution"
    assert detect_route(schr) == "operator"


def test_problem_to_operator_pde():
    schr = parse(SCHRODINGER.read_text())
    pde = problem_to_operator_pde(schr)
    assert pde.axis_name == "t"
    assert pde.L.order == 2


def test_problem_to_evolution():
    heat = parse(HEAT.read_text())
    sys_ = problem_to_evolution(heat, 2)
    assert sys_.evolution_axis == 0
    assert sys_.jctx.max_order >= 4


def test_heat_operator_route_agrees_with_jet_oracle():
    """Operators R commuting with dt - dx^2 give characteristics R(u) that
    pass the independent evolutionary residual check."""
    from symkit.jet import (
        GenVectorField,
        JetContext,
        PdeSystem,
        apply_on_solutions,
    )
    from symkit.linop import operator_determining_solve
    from symkit.poly import ExpPoly

    p = parse(
        "vars t, x; unknowns u; translations t, x;"
        "eq D[u,t] - D[u,x,x] = 0; task solve order=2;"
    )
    assert detect_route(p) == "operator"
    pde = problem_to_operator_pde(p)
    basis = operator_determining_solve(pde, 2, dim_bound=6)
    assert len(basis) == 6

    jctx = JetContext(("t", "x"), ("u",), 6)
    sys_ = PdeSystem.evolution(jctx, jctx.jet_poly(0, (0, 2)))
    for op in basis:
        eta = ExpPoly.zero(jctx.ctx)
        for J, coeff in op.terms.items():
            eta = eta + coeff.embed(jctx.ctx) * jctx.jet_poly(0, J)
        field = GenVectorField.evolutionary(jctx, eta)
        assert all(r.is_zero for r in apply_on_solutions(field, sys_))


def test_operator_axis_autodetection():
    """A transposed defining operator evolves along x instead of t."""
    from symkit.linop import operator_determining_solve

    p = parse(
        "vars t, x; unknowns psi; translations t, x;"
        "eq i*D[psi,x] + D[psi,t,t] = 0; task solve order=1;"
    )
    assert detect_route(p) == "operator"
    pde = problem_to_operator_pde(p)
    assert pde.axis_name == "x"
    basis = operator_determining_solve(pde, 1, dim_bound=3)
    assert len(basis) == 3
    assert all(pde.is_symmetry(op) for op in basis)


def test_solve_heat_cli(tmp_path):
    out = tmp_path / "heat.json"
    result = run_cli("solve", str(HEAT), "--json", str(out), "--verify")
    assert result.returncode == 0, result.stderr
    payload = json.loads(out.read_text())
    assert payload["schema"] == 1
    assert payload["route"] == "evolution"
    assert payload["results"][0]["dimension"] == 6
    assert payload["verification"]["all_residuals_zero"] is True


def test_solve_schrodinger_cli(tmp_path):
    out = tmp_path / "s.json"
    result = run_cli("solve", str(SCHRODINGER), "--order", "1", "--json", str(out), "--verify")
    assert result.returncode == 0, result.stderr
    payload = json.loads(out.read_text())
    assert payload["route"] == "operator"
    assert payload["results"][0]["dimension"] == 3


def test_schrodinger_case_cli(tmp_path):
    out = tmp_path / "case.json"
    result = run_cli("schrodinger", "--qmax", "2", "--structure", "--json", str(out))
    assert result.returncode == 0, result.stderr
    payload = json.loads(out.read_text())
    dims = [row["dimension"] for row in payload["dimensions"]]
    assert dims == [1, 3, 6]
    assert all(row["spans_agree"] for row in payload["dimensions"])
    assert payload["structure"]["blocks"][0]["r"] == 6


def test_adjoint_cli(tmp_path):
    out = tmp_path / "adj.json"
    result = run_cli("adjoint", str(SCHRODINGER), "--order", "1", "--json", str(out))
    assert result.returncode == 0, result.stderr
    payload = json.loads(out.read_text())
    assert payload["space"]["dimension"] == 3
    assert payload["blocks"][0]["k"] == {"t": 2, "x": 2}
    # the canonical basis contains 2i*t*dx + x, whose t-derivative is 2i*dx
    mat_t = payload["adjoint_matrices"]["t"]
    assert any(entry != "0" for row in mat_t for entry in row)
    assert mat_t[2][1] == "2*i"


def test_evolution_cli(tmp_path):
    out = tmp_path / "evo.json"
    result = run_cli(
        "evolution", str(HEAT), "--order", "2", "--lambda", "1", "--json", str(out)
    )
    assert result.returncode == 0, result.stderr
    payload = json.loads(out.read_text())
    assert payload["verification"]["residuals_zero"] is True
    assert payload["verification"]["nonzero_weights_empty"] is True


def test_json_byte_stable(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    for path in (a, b):
        result = run_cli("solve", str(HEAT), "--json", str(path))
        assert result.returncode == 0
    assert a.read_bytes() == b.read_bytes()


def test_missing_file_is_input_error():
    result = run_cli("solve", "no_such_file.pde")
    assert result.returncode == 2


def test_bad_syntax_is_input_error(tmp_path):
    bad = tmp_path / "bad.pde"
    bad.write_text("vars t; unknowns u; eq D[u,t] = ;")
    result = run_cli("solve", str(bad))
    assert result.returncode == 2
    assert "expected" in result.stderr


def test_bracket_cli(tmp_path):
    import warnings
    from symkit.casestudies import heat_system
    from symkit.jet import evolution_determining_solve, lie_bracket, GenVectorField

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sys_ = heat_system(6)
        basis = evolution_determining_solve(sys_, 1, 1, 2)
    by_render = {b.render(): b for b in basis}
    uy = by_render["u_y"]
    gal = by_render["2*t*u_y + y*u"]
    fa = tmp_path / "a.json"
    fb = tmp_path / "b.json"
    fa.write_text(json.dumps(symmetry_json_evolutionary(uy, sys_.jctx)))
    fb.write_text(json.dumps(symmetry_json_evolutionary(gal, sys_.jctx)))
    out = tmp_path / "bracket.json"
    result = run_cli("bracket", str(fa), str(fb), "--json", str(out))
    assert result.returncode == 0, result.stderr
    payload = json.loads(out.read_text())
    # independent direct computation of the bracket characteristic
    big = heat_system(8)
    qa = GenVectorField.evolutionary(big.jctx, uy.embed(big.jctx.ctx))
    qb = GenVectorField.evolutionary(big.jctx, gal.embed(big.jctx.ctx))
    direct = lie_bracket(qa, qb).eta[0]
    assert payload["rendered"] == direct.render() == "-u"


def test_bracket_operator_cli(tmp_path):
    from symkit.casestudies import ansatz_route
    from symkit.linop import commutator

    ops = ansatz_route(1)
    fa = tmp_path / "a.json"
    fb = tmp_path / "b.json"
    fa.write_text(json.dumps(symmetry_json_operator(ops[1])))
    fb.write_text(json.dumps(symmetry_json_operator(ops[2])))
    out = tmp_path / "c.json"
    result = run_cli("bracket", str(fa), str(fb), "--json", str(out))
    assert result.returncode == 0, result.stderr
    payload = json.loads(out.read_text())
    direct = commutator(ops[1], ops[2])
    assert payload["rendered"] == direct.render()


def test_env_log_level(tmp_path):
    result = run_cli(
        "schrodinger", "--qmax", "0", env_extra={"SYMKIT_LOG": "DEBUG"}
    )
    assert result.returncode == 0


def test_main_inprocess(tmp_path, capsys):
    rc = main(["schrodinger", "--qmax", "1"])
    captured = capsys.readouterr()
    assert rc == 0
    assert "routes-agree" in captured.out


def test_invariant_violation_exit_code(monkeypatch, capsys):
    from symkit import cli as cli_module
    from symkit.errors import SpanMismatch

    def boom(q):
        raise SpanMismatch("forced for the exit-code test")

    monkeypatch.setattr(cli_module.casestudies, "cross_validate", boom)
    rc = main(["schrodinger", "--qmax", "0"])
    captured = capsys.readouterr()
    assert rc == 3
    assert "invariant violation" in captured.err
