import json

from mschemes import cli
from mschemes.cli import linnik_p1s, main, smooth_divisor
from mschemes.gf import is_prime


def run_cli(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, json.loads(out)


def test_factor_x3m1(capsys):
    code, payload = run_cli(capsys, ["factor", "--p", "7", "--poly", "6,0,0,1"])
    assert code == 0
    assert payload["status"] == "factored"
    assert payload["factor"] == [6, 1]  # x - 1


def test_factor_not_split(capsys):
    code, payload = run_cli(capsys, ["factor", "--p", "7", "--poly", "1,0,1"])
    assert code == 3
    assert payload["error"] == "NotSplit"


def test_factor_prime_degree(capsys):
    code, payload = run_cli(capsys, ["factor", "--p", "11", "--poly", "10,0,0,0,0,1", "--r", "2", "--l", "1"])
    assert code == 0
    assert payload["status"] == "factored"


def test_factor_stuck_exit_code(capsys):
    # degree-5 stuck-at-m=2 case over F_11
    code, payload = run_cli(capsys, ["factor", "--p", "11", "--poly", "0,1,4,8,8,1", "--m", "2"])
    assert code == 2
    assert payload["status"] == "stuck"
    assert payload["certificate"]["valid"]


def test_scheme_report_13_6(capsys):
    code, payload = run_cli(capsys, ["scheme-report", "--p", "13", "--e", "6"])
    assert code == 0
    assert payload["valencies"][1:] == [2] * 6
    assert payload["indistinguishing"][1:] == [1] * 6  # c(g) = k-1
    assert payload["small_intersection"]["2"] is not None
    assert payload["identity_suite"] == "ok"


def test_scheme_report_bad_e(capsys):
    code, payload = run_cli(capsys, ["scheme-report", "--p", "13", "--e", "5"])
    assert code == 3


def test_scheme_report_7_2_antisymmetric_pair(capsys):
    code, payload = run_cli(capsys, ["scheme-report", "--p", "7", "--e", "2"])
    assert code == 0
    assert payload["adjoint"] == [0, 2, 1]  # the two classes are mutual adjoints


def test_orbit_scan_z5(capsys):
    code, payload = run_cli(capsys, ["orbit-scan", "--catalog", "Z5", "--m", "4"])
    assert code == 0
    entry = payload["entries"][0]
    assert entry["homogeneous"] and entry["antisymmetric"]
    assert entry["matching_count"] > 0


def test_orbit_scan_z6(capsys):
    code, payload = run_cli(capsys, ["orbit-scan", "--catalog", "Z6", "--m", "4"])
    assert code == 0
    entry = payload["entries"][0]
    assert not entry["antisymmetric"]


def test_orbit_scan_catalog_sweep(capsys):
    code, payload = run_cli(capsys, ["orbit-scan", "--catalog", "all", "--m", "4"])
    assert code == 0  # zero conjecture-evidence failures
    assert payload["conjecture_failures"] == 0


def test_orbit_scan_custom_gens(capsys):
    code, payload = run_cli(capsys, ["orbit-scan", "--gens", "1,2,3,4,0", "--m", "3"])
    assert code == 0
    assert payload["homogeneous"]


def test_orbit_scan_bad_gens(capsys):
    code, payload = run_cli(capsys, ["orbit-scan", "--gens", "1,1,0", "--m", "2"])
    assert code == 3


def test_linnik_examples(capsys):
    assert linnik_p1s(8) == 17
    assert linnik_p1s(4) == 5
    assert linnik_p1s(1) == 2
    code, payload = run_cli(capsys, ["linnik", "--s", "8"])
    assert code == 0 and payload["prime"] == 17


def test_linnik_matches_direct_scan():
    for s in range(1, 60):
        direct = None
        n = 1
        while direct is None:
            n += s
            if is_prime(n):
                direct = n
        assert linnik_p1s(s) == direct


def test_smooth_examples(capsys):
    assert smooth_divisor(12, 3) == 12
    assert smooth_divisor(21, 2) == 1
    assert smooth_divisor(1, 5) == 1
    code, payload = run_cli(capsys, ["smooth", "--n", "12", "--r", "3"])
    assert code == 0 and payload["smooth_divisor"] == 12


def test_smooth_matches_factorization_oracle():
    def factorize(n):
        out = {}
        d = 2
        while d * d <= n:
            while n % d == 0:
                out[d] = out.get(d, 0) + 1
                n //= d
            d += 1
        if n > 1:
            out[n] = out.get(n, 0) + 1
        return out

    for n in list(range(1, 300)) + [720, 1024, 9973, 10000]:
        for r in (2, 3, 5):
            expect = 1
            for p, e in factorize(n).items():
                if p <= r:
                    expect *= p**e
            assert smooth_divisor(n, r) == expect


def test_cli_json_deterministic(capsys, tmp_path):
    out1 = tmp_path / "a.json"
    out2 = tmp_path / "b.json"
    main(["factor", "--p", "7", "--poly", "6,0,0,1", "--json", str(out1)])
    capsys.readouterr()
    main(["factor", "--p", "7", "--poly", "6,0,0,1", "--json", str(out2)])
    capsys.readouterr()
    assert out1.read_bytes() == out2.read_bytes()


def test_env_cap_override(capsys, monkeypatch):
    monkeypatch.setenv("MSCHEMES_DIM_CAP", "5")
    code, payload = run_cli(capsys, ["factor", "--p", "11", "--poly", "10,0,0,0,0,1", "--m", "3"])
    assert code == 4
    assert payload["error"] == "DimCapExceeded"
