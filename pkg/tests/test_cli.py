import json
import os
import subprocess
import sys

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mlab.cli import EXIT_CONFIG, EXIT_FAIL, EXIT_INTERNAL, EXIT_OK, context_from_config, resolve_threads
from mlab.config import ConfigError, RunConfig, parse_config
from mlab.lattice import BallPolicy


def run_mlab(*args, cwd, env=None):
    full_env = {**os.environ, **(env or {})}
    full_env.pop("MLAB_THREADS", None) if env is None else None
    return subprocess.run([sys.executable, "-m", "mlab.cli", *args], cwd=cwd, env=full_env,
                          capture_output=True, text=True, timeout=600)


def write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# -- parsing ------------------------------------------------------------------


def violations(text):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    return err.value.violations


def test_infinite_q_is_rejected():
    found = violations("[grid]\ndim = 1\nR = 4\nN = 512\n[params]\nalpha = 0.5\np = 2\nkappa = 0.25\nm = 1\n")
    assert any("1/q = 1/p − α/n" in v and "q = ∞" in v for v in found)
    assert any("1 < p < n/α" in v for v in found)


def test_finite_q_is_accepted():
    cfg = parse_config("[grid]\ndim = 1\n[params]\nalpha = 0.25\np = 2\n")
    assert cfg.derived_q == pytest.approx(4.0)


def test_kappa_at_p_over_q_is_rejected():
    found = violations("[params]\nalpha = 0.25\np = 2\nkappa = 0.5\n")
    assert any("0 ≤ κ < p/q" in v for v in found)


def test_explicit_q_must_match():
    found = violations("[params]\nalpha = 0.5\np = 1.5\nq = 3\n")
    assert found == ["1/q = 1/p − α/n violated: p=1.5, α=0.5, q=3"]


def test_all_violations_are_collected():
    text = "[grid]\ndim = 4\nN = 7\nbogus = 1\n[params]\nalpha = 2\nm = 0\ntau = 1\n[extra]\nx = 1\n"
    found = violations(text)
    assert "unknown key 'bogus' in [grid]" in found
    assert "unknown section [extra]" in found
    assert any(v.startswith("dim must be") for v in found)
    assert any("resolution 7" in v for v in found)
    assert any("m ≥ 1" in v for v in found)
    assert any("τ > 1" in v for v in found)
    # α is not judged against an invalid dimension
    assert len(found) == 6


def test_bad_types_are_named():
    found = violations("[grid]\nR = wide\n[balls]\ninclude_origin = maybe\n")
    assert any("R = 'wide'" in v for v in found)
    assert any("include_origin" in v for v in found)


def test_bad_weight_is_reported():
    assert any("weight spec" in v for v in violations("[params]\nweight = power\n"))


def test_empty_config_gives_defaults():
    assert parse_config("") == RunConfig()


def test_context_uses_configured_tuple():
    cfg = parse_config("[params]\nalpha = 0.25\np = 2\nkappa = 0.25\nweight = power:-0.25\nm = 2\n")
    ctx = context_from_config(cfg)
    assert len(ctx.tuples) == 1 and ctx.tuples[0].q(1) == pytest.approx(4.0)
    assert ctx.m_values == (1, 2) and ctx.alpha == 0.25


def test_threads_config_beats_environment():
    assert resolve_threads(RunConfig(threads=2), {"MLAB_THREADS": "8"}) == 2
    assert resolve_threads(RunConfig(), {"MLAB_THREADS": "8"}) == 8
    assert resolve_threads(RunConfig(), {}) == 1
    with pytest.raises(ConfigError):
        resolve_threads(RunConfig(), {"MLAB_THREADS": "many"})


# -- round trip ---------------------------------------------------------------

floats = st.floats(0.05, 0.95).map(lambda v: round(v, 6))
configs = st.builds(
    RunConfig,
    dim=st.just(1),
    half_width=st.sampled_from([1.0, 4.0, 8.0, 2.5]),
    resolutions=st.lists(st.integers(2, 600).map(lambda k: 2 * k), min_size=1, max_size=4, unique=True).map(
        lambda v: tuple(sorted(v))),
    policy=st.builds(BallPolicy, stride=st.integers(1, 8), include_origin=st.booleans(),
                     max_centers=st.one_of(st.none(), st.integers(1, 50))),
    alpha=st.one_of(st.none(), floats),
    m=st.one_of(st.none(), st.integers(1, 3)),
    r=st.floats(1.0, 5.0),
    tau=st.floats(1.01, 5.0),
    weight=st.sampled_from([None, "power:-0.5", "const:2", "loggrid"]),
    symbols=st.lists(st.sampled_from(["log", "sin", "ramp"]), min_size=1, max_size=3).map(tuple),
    seed=st.integers(0, 2**31),
    ids=st.lists(st.sampled_from(["CHK-SIGMA", "CHK-L7", "CHK-THM1"]), max_size=3).map(tuple),
    out_dir=st.sampled_from([None, "out", "/tmp/x y"]),
    threads=st.one_of(st.none(), st.integers(1, 16)),
)


@given(cfg=configs)
def test_config_round_trip_is_lossless(cfg):
    back = parse_config(cfg.to_text())
    assert back == cfg
    assert back.to_text() == cfg.to_text()


def test_hash_ignores_output_and_threads():
    a = RunConfig(out_dir="a", threads=1)
    b = RunConfig(out_dir="b", threads=7)
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != RunConfig(seed=3).config_hash()


# -- exit codes through the binary ----------------------------------------------


def test_check_sigma_exits_zero(tmp_path):
    proc = run_mlab("check", "CHK-SIGMA", "--out", "o", cwd=tmp_path)
    assert proc.returncode == EXIT_OK, proc.stderr
    assert proc.stdout.strip().startswith("CHK-SIGMA: PASS")
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["version"] and report["config_hash"]
    assert report["reports"][0]["config_hash"]
    assert (tmp_path / "o" / "summary.csv").read_text().startswith("id,N,value,trend,verdict,expected")


def test_unknown_check_exits_two_and_lists_ids(tmp_path):
    proc = run_mlab("check", "CHK-NOPE", cwd=tmp_path)
    assert proc.returncode == EXIT_CONFIG
    diag = json.loads(proc.stderr)
    assert diag["error"] == "unknown-check" and "CHK-SIGMA" in diag["known_ids"]


def test_config_error_exits_two(tmp_path):
    cfg = write(tmp_path, "[params]\nalpha = 0.5\np = 2\nkappa = 0.25\n")
    proc = run_mlab("check", "CHK-SIGMA", "--config", cfg, cwd=tmp_path)
    assert proc.returncode == EXIT_CONFIG
    assert len(json.loads(proc.stderr)["violations"]) == 2


def test_missing_config_file_exits_two(tmp_path):
    assert run_mlab("ap", "--config", "nowhere.ini", cwd=tmp_path).returncode == EXIT_CONFIG


def test_gated_sweep_exits_zero(tmp_path):
    cfg = write(tmp_path, "[params]\nweight = power:1\n")
    proc = run_mlab("sweep", "CHK-THM1", "--config", cfg, "--out", "o", cwd=tmp_path)
    assert proc.returncode == EXIT_OK, proc.stderr
    rep = json.loads((tmp_path / "o" / "report.json").read_text())["reports"][0]
    assert rep["verdict"] == "HYPOTHESIS-GATED"


def test_failing_check_exits_one(tmp_path):
    # the log-symbol cases of the commutator bound grow like |log h| (see README)
    proc = run_mlab("check", "CHK-THM1", "--out", "o", cwd=tmp_path)
    assert proc.returncode == EXIT_FAIL
    assert "FAIL (unexpected)" in proc.stdout


def test_internal_error_exits_three(tmp_path):
    cfg = write(tmp_path, "[grid]\nresolutions = 64\n[params]\nweight = csv:missing.csv\n")
    proc = run_mlab("ap", "--config", cfg, cwd=tmp_path)
    assert proc.returncode == EXIT_INTERNAL
    assert "error" in json.loads(proc.stderr)


@pytest.mark.parametrize("sub,extra", [("ap", ""), ("rh", ""), ("norm", "symbols = log,sin\n"),
                                       ("apply", "operator = commutator\nsymbols = log,sin\nm = 2\n")])
def test_other_subcommands_write_reports(tmp_path, sub, extra):
    cfg = write(tmp_path, f"[grid]\nresolutions = 128,256\n[params]\nweight = power:-0.5\n{extra}")
    proc = run_mlab(sub, "--config", cfg, "--out", "o", cwd=tmp_path)
    assert proc.returncode == EXIT_OK, proc.stderr
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["subcommand"] == sub and report["version"]
    if sub == "apply":
        assert (tmp_path / "o" / "commutator_gauss-0.5_N256.csv").exists()
        assert report["levels"][0]["quadrature"]["nodes"] == 96


def test_resolutions_flag_overrides(tmp_path):
    proc = run_mlab("ap", "--resolutions", "64,128", "--out", "o", cwd=tmp_path)
    assert proc.returncode == EXIT_OK
    levels = json.loads((tmp_path / "o" / "report.json").read_text())["levels"]
    assert [lv["N"] for lv in levels] == [64, 128]
    assert run_mlab("ap", "--resolutions", "64,63", cwd=tmp_path).returncode == EXIT_CONFIG


def test_reports_identical_across_thread_counts(tmp_path):
    cfg = write(tmp_path, "[grid]\nresolutions = 256,512\n")
    for threads in ("1", "3"):
        proc = run_mlab("sweep", "CHK-L15", "CHK-SIGMA", "--config", cfg, "--out", f"o{threads}", cwd=tmp_path,
                        env={"MLAB_THREADS": threads})
        assert proc.returncode == EXIT_OK, proc.stderr
    assert (tmp_path / "o1" / "report.json").read_bytes() == (tmp_path / "o3" / "report.json").read_bytes()
    timing = json.loads((tmp_path / "o3" / "timing.json").read_text())
    assert timing["threads"] == 3
