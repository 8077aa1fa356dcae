import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sinkpit import (
    MixingMatrix,
    Waveform,
    brute_force_pit,
    hungarian,
    load_waveform,
    mix,
    pairwise_cost_matrix,
    random_mixing_gains,
    save_waveform,
    si_sdr,
)
from sinkpit.signals import RAW_F64LE, WAV_PCM16_MONO


def tone(freq, seconds=1.0, rate=8000, phase=0.0):
    t = np.arange(int(seconds * rate)) / rate
    return Waveform(np.sin(2 * np.pi * freq * t + phase), rate)


class TestWaveformTypes:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Waveform(np.array([]))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            Waveform(np.array([0.0, np.nan]))

    def test_mixing_matrix_rejects_negative_gain(self):
        with pytest.raises(ValueError):
            MixingMatrix(np.array([[1.0, -0.5], [1.0, 1.0]]))

    def test_mixing_matrix_rejects_silent_row(self):
        with pytest.raises(ValueError):
            MixingMatrix(np.array([[0.0, 0.0], [1.0, 1.0]]))


class TestSiSdr:
    def test_collinear_clamps_high(self):
        u = tone(440)
        assert si_sdr(u, Waveform(2.0 * u.samples, u.sample_rate)) == 60.0

    def test_orthogonal_clamps_low(self):
        rate = 8000
        t = np.arange(rate) / rate
        s = Waveform(np.sin(2 * np.pi * 100 * t), rate)
        c = Waveform(np.cos(2 * np.pi * 100 * t), rate)
        assert si_sdr(s, c) == -60.0

    def test_scale_invariance(self, rng):
        u = Waveform(rng.normal(size=4000))
        v = Waveform(rng.normal(size=4000))
        base = si_sdr(u, v)
        assert si_sdr(Waveform(-2.0 * u.samples), v) == base  # power-of-two: exact
        for alpha in (0.1, 3.0):
            assert si_sdr(Waveform(alpha * u.samples), v) == pytest.approx(base, abs=1e-12)

    def test_symmetry(self, rng):
        u = Waveform(rng.normal(size=1000))
        v = Waveform(rng.normal(size=1000))
        assert si_sdr(u, v) == pytest.approx(si_sdr(v, u), abs=1e-12)

    def test_invariant_under_simultaneous_circular_shift(self, rng):
        u = rng.normal(size=512)
        v = rng.normal(size=512)
        base = si_sdr(Waveform(u), Waveform(v))
        for shift in (1, 57, 300):
            rolled = si_sdr(Waveform(np.roll(u, shift)), Waveform(np.roll(v, shift)))
            assert rolled == pytest.approx(base, abs=1e-10)

    def test_rejects_length_mismatch(self):
        with pytest.raises(ValueError):
            si_sdr(Waveform(np.ones(4)), Waveform(np.ones(5)))

    def test_rejects_all_zero(self):
        with pytest.raises(ValueError):
            si_sdr(Waveform(np.zeros(8) + 0.0 * np.arange(8)), tone(100, seconds=0.001))

    def test_rejects_mixed_sample_rates(self):
        with pytest.raises(ValueError):
            si_sdr(tone(100, rate=8000), tone(100, rate=16000))

    def test_zero_mean_variant(self):
        u = np.array([1.0, 1.0, 1.0, 2.0])
        v = np.array([5.0, 5.0, 5.0, 6.0])
        centered = si_sdr(Waveform(u), Waveform(v), zero_mean=True)
        assert centered == 60.0  # identical shapes after centering

    @given(alpha=st.floats(min_value=0.01, max_value=100.0))
    def test_scale_invariance_property(self, alpha):
        rng = np.random.default_rng(5)
        u = rng.normal(size=256)
        v = rng.normal(size=256)
        assert si_sdr(Waveform(alpha * u), Waveform(v)) == pytest.approx(
            si_sdr(Waveform(u), Waveform(v)), abs=1e-10
        )


class TestPairwiseCostMatrix:
    def test_matched_order_recovers_identity(self):
        sources = [tone(200), tone(500), tone(900)]
        c = pairwise_cost_matrix(sources, sources)
        assert np.all(np.diag(c.entries) == -60.0)
        off = c.entries[~np.eye(3, dtype=bool)]
        assert (off > -60.0).all()
        assert hungarian(c).permutation.mapping == (0, 1, 2)

    def test_reversed_estimates_recover_reversal(self):
        sources = [tone(200), tone(500), tone(900)]
        c = pairwise_cost_matrix(sources, sources[::-1])
        assert hungarian(c).permutation.mapping == (2, 1, 0)

    def test_planted_permutation_under_noise(self, rng):
        # noisy copies at ~10 dB SNR; the planted pairing must win almost always
        sources = [tone(150), tone(450), tone(1100)]
        hits = 0
        for _ in range(100):
            perm = tuple(int(j) for j in rng.permutation(3))
            estimates = [None] * 3
            for i, j in enumerate(perm):
                s = sources[i].samples
                noise = rng.normal(size=s.size)
                noise *= np.linalg.norm(s) / (np.linalg.norm(noise) * 10**0.5)
                estimates[j] = Waveform(s + noise)
            c = pairwise_cost_matrix(sources, estimates)
            if brute_force_pit(c).permutation.mapping == perm:
                hits += 1
        assert hits >= 99

    def test_column_permutation_identity(self, rng):
        sources = [tone(150), tone(450), tone(1100)]
        estimates = [Waveform(rng.normal(size=8000)) for _ in range(3)]
        base = pairwise_cost_matrix(sources, estimates).entries
        reordered = pairwise_cost_matrix(sources, [estimates[2], estimates[0], estimates[1]]).entries
        assert np.array_equal(reordered, base[:, [2, 0, 1]])

    def test_rejects_count_mismatch(self):
        with pytest.raises(ValueError):
            pairwise_cost_matrix([tone(100)], [tone(100), tone(200)])


class TestMix:
    def test_identity_mixing(self):
        sources = [tone(200), tone(500)]
        out = mix(sources, MixingMatrix(np.eye(2)))
        assert np.array_equal(out[0].samples, sources[0].samples)
        assert np.array_equal(out[1].samples, sources[1].samples)

    def test_single_row_of_ones_is_plain_sum(self):
        sources = [tone(200), tone(500)]
        out = mix(sources, MixingMatrix(np.ones((1, 2))))
        assert len(out) == 1
        assert np.allclose(out[0].samples, sources[0].samples + sources[1].samples, atol=0)

    def test_unmix_round_trip(self, rng):
        sources = [Waveform(rng.normal(size=2000)) for _ in range(3)]
        a = random_mixing_gains(3, 3, 10.0, seed=4)
        mixed = mix(sources, a)
        inv = np.linalg.inv(a.gains)
        stacked = np.stack([w.samples for w in mixed])
        recovered = inv @ stacked
        for i in range(3):
            err = np.abs(recovered[i] - sources[i].samples).max()
            assert err < 1e-9 * max(1.0, np.abs(sources[i].samples).max())

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            mix([tone(100)], MixingMatrix(np.ones((2, 2))))


class TestRandomMixingGains:
    def test_zero_dynamic_range_is_all_ones(self):
        a = random_mixing_gains(3, 4, 0.0, seed=0)
        assert np.array_equal(a.gains, np.ones((3, 4)))

    def test_ten_db_bounds(self):
        a = random_mixing_gains(20, 20, 10.0, seed=1)
        lo, hi = 10 ** (-0.25), 10 ** (0.25)
        assert a.gains.min() >= lo and a.gains.max() <= hi
        assert lo == pytest.approx(0.5623413251903491, abs=1e-15)
        assert hi == pytest.approx(1.7782794100389228, abs=1e-15)

    def test_seed_determinism(self):
        a = random_mixing_gains(4, 4, 10.0, seed=77)
        b = random_mixing_gains(4, 4, 10.0, seed=77)
        assert np.array_equal(a.gains, b.gains)

    def test_rejects_negative_range(self):
        with pytest.raises(ValueError):
            random_mixing_gains(2, 2, -1.0, seed=0)


class TestWaveformIo:
    def test_raw_round_trip_bit_exact(self, rng, tmp_path):
        w = Waveform(rng.normal(size=333), 16000)
        path = tmp_path / "w.f64"
        save_waveform(w, path, RAW_F64LE)
        back = load_waveform(path, RAW_F64LE, sample_rate=16000)
        assert np.array_equal(back.samples, w.samples)
        assert back.sample_rate == 16000

    def test_wav_round_trip_within_quantization(self, rng, tmp_path):
        w = Waveform(np.clip(rng.normal(scale=0.2, size=4000), -0.99, 0.99), 8000)
        path = tmp_path / "w.wav"
        save_waveform(w, path, WAV_PCM16_MONO)
        back = load_waveform(path, WAV_PCM16_MONO)
        assert back.sample_rate == 8000
        assert np.abs(back.samples - w.samples).max() <= 1.0 / 32768

    def test_wav_file_size_one_second_silenceish(self, tmp_path):
        # 44-byte canonical header + 2 bytes per sample at 8 kHz
        w = Waveform(np.full(8000, 1e-9), 8000)
        path = tmp_path / "z.wav"
        save_waveform(w, path, WAV_PCM16_MONO)
        assert path.stat().st_size == 16044

    def test_stereo_rejected(self, tmp_path):
        import wave

        path = tmp_path / "stereo.wav"
        with wave.open(str(path), "wb") as f:
            f.setnchannels(2)
            f.setsampwidth(2)
            f.setframerate(8000)
            f.writeframes(b"\x00\x00" * 64)
        with pytest.raises(ValueError, match="channel"):
            load_waveform(path, WAV_PCM16_MONO)

    def test_malformed_header_rejected(self, tmp_path):
        path = tmp_path / "junk.wav"
        path.write_bytes(b"not a riff header at all")
        with pytest.raises(ValueError, match="malformed"):
            load_waveform(path, WAV_PCM16_MONO)

    def test_unknown_format_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="format"):
            save_waveform(tone(100), tmp_path / "x.bin", "pcm32")
