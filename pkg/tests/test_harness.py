import numpy as np
import pytest

from npdel.channels import sample_frames
from npdel.harness import (REPORT_COLUMNS, FerResult, pooled_sigma, read_report, run_fer,
                           run_speed, wilson_interval, write_report, write_speed_table)
from npdel.npd import NpdConfig, init_params
from npdel.polar import PolarCodeSpec

SPEC = PolarCodeSpec.from_frozen_set(16, range(8))


def oracle_decoder(spec, batch):
    return batch.u.copy()


def flipping_decoder(spec, batch):
    u = batch.u.copy()
    u[:, spec.info_set] ^= 1
    return u


def one_bit_decoder(spec, batch):
    u = batch.u.copy()
    u[:, spec.info_set[-1]] ^= 1
    return u


def frozen_only_decoder(spec, batch):
    # corrupt frozen positions only; not counted as frame errors
    u = batch.u.copy()
    u[:, spec.frozen] ^= 1
    return u


@pytest.fixture(scope="module")
def params():
    return init_params(NpdConfig(), np.random.default_rng(0))


def test_perfect_decoder_zero_fer():
    r = run_fer(SPEC, None, 0.1, 1, 300, seed=0, decoder=oracle_decoder)
    assert r.errors == 0 and r.fer == 0.0
    assert r.ci_low == 0.0 and 0 < r.ci_high < 0.02


@pytest.mark.parametrize("dec", [flipping_decoder, one_bit_decoder])
def test_wrong_info_bits_all_errors(dec):
    r = run_fer(SPEC, None, 0.1, 1, 300, seed=0, decoder=dec)
    assert r.fer == 1.0


def test_frozen_mismatch_not_counted():
    assert run_fer(SPEC, None, 0.1, 1, 100, seed=0, decoder=frozen_only_decoder).errors == 0


def test_result_fields():
    r = run_fer(SPEC, None, 0.05, 4, 50, seed=1, decoder=oracle_decoder)
    assert (r.n, r.N, r.L, r.frames, r.rate, r.delta) == (4, 16, 4, 50, 0.5, 0.05)
    assert r.blocks_per_sec > 0


def test_frames_must_be_positive():
    with pytest.raises(ValueError):
        run_fer(SPEC, None, 0.1, 1, 0, seed=0, decoder=oracle_decoder)


def test_fer_deterministic_and_worker_invariant(params):
    one_bit = PolarCodeSpec.from_info_set(16, [15])
    kw = dict(spec=one_bit, params=params, delta=0.1, L=1, frames=700, seed=3, chunk=100)
    a = run_fer(**kw)
    b = run_fer(**kw)
    c = run_fer(**kw, workers=3)
    assert a.errors == b.errors == c.errors
    assert 0 < a.errors < 700  # one info bit: an untrained decoder is a coin flip


def test_fer_chunking_invariant(params):
    a = run_fer(SPEC, params, 0.1, 2, 300, seed=4, chunk=300)
    b = run_fer(SPEC, params, 0.1, 2, 300, seed=4, chunk=64)
    assert a.errors == b.errors


def test_frames_counter_seeded():
    whole = sample_frames(SPEC, 0.1, 50, seed=5)
    part = sample_frames(SPEC, 0.1, 20, seed=5, start=30)
    np.testing.assert_array_equal(whole.u[30:], part.u)
    np.testing.assert_array_equal(whole.y_padded[30:], part.y_padded)


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0.0 and hi == pytest.approx(0.036994, abs=1e-5)
    lo, hi = wilson_interval(50, 100)
    assert (lo, hi) == pytest.approx((0.403832, 0.596168), abs=1e-5)
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_pooled_sigma():
    mk = lambda e, f: FerResult(5, 32, 0.01, 0.5, 1, f, e, e / f, 0, 1, 1.0, 1.0)
    assert pooled_sigma(mk(100, 2000), mk(60, 2000)) == pytest.approx(
        np.sqrt(0.04 * 0.96 * 2 / 2000))


@pytest.mark.parametrize("suffix", ["csv", "json"])
def test_report_round_trip(tmp_path, suffix):
    results = [run_fer(SPEC, None, 0.1, L, 40, seed=6, decoder=oracle_decoder) for L in (1, 8)]
    path = tmp_path / f"fer.{suffix}"
    write_report(results, path)
    assert read_report(path) == results
    if suffix == "csv":
        assert path.read_text().splitlines()[0].split(",") == REPORT_COLUMNS


def test_empty_report_rejected(tmp_path):
    with pytest.raises(ValueError):
        write_report([], tmp_path / "x.csv")


def test_speed_positive_and_decreasing(params, tmp_path):
    rows = run_speed(params, [16, 128, 1024], frames=10, backend="numba", repeats=3)
    rates = [r["blocks_per_sec"] for r in rows]
    assert all(r > 0 for r in rates)
    assert rates[0] > rates[1] > rates[2]
    write_speed_table(rows, tmp_path / "speed.csv")
    assert (tmp_path / "speed.csv").read_text().startswith("N,backend")
