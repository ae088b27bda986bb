import struct

import numpy as np
import pytest
from hypothesis import given, strategies as st

from neurocine.errors import ConfigError, FormatError
from neurocine.ingest import (DEFAULT_CONFIG_PATH, ElectrodeMontage, Trial, TrialSet, decode_trials, default_config,
                              encode_trials, generate_synthetic, leave_subject_out_plans, load_montage,
                              load_synth_config, parse_class_profiles, parse_montage, parse_synth_config,
                              save_montage, split_leave_subject_out)
from neurocine.ingest.synth import format_class_profiles
from neurocine.spectral import trial_band_powers


def test_parse_montage_order():
    m = parse_montage("name,x,y,z\nCz,0,0,1\nFpz,0,0.95,0.31\n")
    assert m.names == ("Cz", "Fpz")
    np.testing.assert_array_equal(m.positions, [[0, 0, 1], [0, 0.95, 0.31]])


@pytest.mark.parametrize("text,message", [
    ("name,x,y,z\nCz,0,0,1\nCz,1,0,0\n", "line 3: duplicate electrode"),
    ("name,x,y,z\nCz,0,0,0\n", "line 2: zero position"),
    ("name,x,y,z\nCz,0,a,1\n", "line 2: malformed coordinate"),
    ("name,x,y,z\nCz,0,1\n", "line 2"),
    ("label,x,y,z\nCz,0,0,1\n", "line 1"),
])
def test_parse_montage_errors(text, message):
    with pytest.raises(FormatError, match=message):
        parse_montage(text)


def test_montage_roundtrip(tmp_path, small_dataset):
    _, montage = small_dataset
    path = tmp_path / "m.csv"
    save_montage(montage, path)
    again = load_montage(path)
    assert again.names == montage.names
    np.testing.assert_array_equal(again.positions, montage.positions)


def test_montage_invariants():
    with pytest.raises(ValueError):
        ElectrodeMontage(("a", "a"), np.eye(3)[:2])
    with pytest.raises(ValueError):
        ElectrodeMontage(("a",), np.zeros((1, 3)))


def _two_trials():
    rng = np.random.default_rng(0)
    trials = [Trial(rng.normal(size=(64, 1750)).astype(np.float32), label, subject)
              for label, subject in ((1, 4), (3, 9))]
    return TrialSet.from_trials(500.0, trials)


def test_eegt_roundtrip():
    ts = _two_trials()
    blob = encode_trials(ts)
    assert blob[:4] == b"EEGT"
    assert struct.unpack_from("<IIIIf", blob, 4) == (1, 2, 64, 1750, 500.0)
    back = decode_trials(blob)
    assert len(back) == 2 and back.sampling_rate == 500.0
    np.testing.assert_array_equal(back.samples, ts.samples)
    assert list(back.labels) == [1, 3] and list(back.subjects) == [4, 9]
    assert encode_trials(back) == blob


def test_eegt_errors():
    blob = encode_trials(_two_trials())
    with pytest.raises(FormatError, match="bad magic"):
        decode_trials(b"XXXX" + blob[4:])
    three = blob[:8] + struct.pack("<I", 3) + blob[12:]
    with pytest.raises(FormatError, match="truncated"):
        decode_trials(three)
    record = 3 + 64 * 1750 * 4
    bad_label = bytearray(blob)
    bad_label[24 + record] = 4
    with pytest.raises(FormatError, match="label 4"):
        decode_trials(bytes(bad_label))
    with pytest.raises(FormatError):
        decode_trials(blob + b"\0")


def test_trial_label_range():
    with pytest.raises(ValueError):
        Trial(np.zeros((2, 4)), 4, 0)


def test_synthetic_deterministic():
    cfg = default_config(n_subjects=2, trials_per_subject=6)
    a, ma = generate_synthetic(cfg, 7)
    b, mb = generate_synthetic(cfg, 7)
    assert encode_trials(a) == encode_trials(b)
    np.testing.assert_array_equal(ma.positions, mb.positions)
    c, _ = generate_synthetic(cfg, 8)
    assert encode_trials(a) != encode_trials(c)


def test_default_config_counts():
    cfg = default_config()
    assert cfg.n_subjects * cfg.trials_per_subject == 2600
    assert cfg.n_samples == 1750 and cfg.n_channels == 64 and cfg.fs == 500


def test_synthetic_layout(small_dataset):
    trials, montage = small_dataset
    assert trials.samples.shape == (24, 64, 1750) and trials.samples.dtype == np.float32
    assert len(montage) == 64
    assert np.all(montage.unit_positions()[:, 2] >= 0)  # upper hemisphere
    for s in range(3):
        assert np.bincount(trials.labels[trials.subjects == s], minlength=4).tolist() == [2, 2, 2, 2]


def test_noise_free_orthogonal_classes_separable():
    hdr = "class,band,frontal,parietal,left_temporal,right_temporal\n"
    rows = []
    for c in range(4):
        for b in ("theta", "alpha", "beta"):
            amps = [0.0] * 4
            if b == "alpha":
                amps[c] = 2.0
            rows.append(f"{c},{b}," + ",".join(map(str, amps)))
    prof = parse_class_profiles(hdr + "\n".join(rows) + "\n")
    cfg = default_config(n_subjects=2, trials_per_subject=12, noise_sigma=0.0, class_profiles=prof)
    trials, _ = generate_synthetic(cfg, 3)
    feats = trial_band_powers(trials.samples, trials.sampling_rate, 3.5).reshape(len(trials), -1)
    cents = np.stack([feats[trials.labels == c].mean(axis=0) for c in range(4)])
    pred = np.argmin(((feats[:, None] - cents[None]) ** 2).sum(axis=2), axis=1)
    assert np.all(pred == trials.labels)


def test_synth_config_parsing(tmp_path):
    (tmp_path / "p.csv").write_text(format_class_profiles(default_config().class_profiles))
    cfg = parse_synth_config("# comment\nn_subjects = 3\ntrials_per_subject=4\nclass_profiles = p.csv\n", tmp_path)
    assert cfg.n_subjects == 3 and cfg.trials_per_subject == 4
    for bad in ("n_subjects = 0\nclass_profiles = p.csv\n", "fs = -5\nclass_profiles = p.csv\n",
                "bogus = 1\nclass_profiles = p.csv\n", "n_subjects = x\nclass_profiles = p.csv\n"):
        with pytest.raises(ConfigError):
            parse_synth_config(bad, tmp_path)


def test_packaged_configs_load():
    assert load_synth_config(DEFAULT_CONFIG_PATH).class_profiles.n_segments == 1
    dyn = load_synth_config(DEFAULT_CONFIG_PATH.parent / "dynamics_synth.cfg").class_profiles.amplitudes
    assert dyn.shape[1] == 7
    # identical time-averaged amplitude and power for every class
    np.testing.assert_allclose(dyn.mean(axis=1), dyn.mean(axis=1)[:1].repeat(4, axis=0))
    np.testing.assert_allclose((dyn ** 2).mean(axis=1), (dyn[:1] ** 2).mean(axis=1).repeat(4, axis=0))


def test_class_profiles_roundtrip():
    prof = load_synth_config(DEFAULT_CONFIG_PATH.parent / "dynamics_synth.cfg").class_profiles
    again = parse_class_profiles(format_class_profiles(prof))
    assert again.regions == prof.regions
    np.testing.assert_array_equal(again.amplitudes, prof.amplitudes)


def test_split_sizes_and_determinism():
    subjects = np.repeat(np.arange(13), 200)
    plan = split_leave_subject_out(subjects, 5, seed=1)
    assert len(plan.test) == len(plan.validation) == 200
    assert np.all(subjects[plan.test] == 5)
    np.testing.assert_array_equal(plan.validation, split_leave_subject_out(subjects, 5, seed=1).validation)
    plans = leave_subject_out_plans(subjects, 0)
    assert sorted(p.held_out_subject for p in plans) == list(range(13))


@given(n_sub=st.integers(2, 6), per=st.integers(1, 12), held=st.integers(0, 5), seed=st.integers(0, 2**32 - 1))
def test_split_partition(n_sub, per, held, seed):
    held %= n_sub
    subjects = np.repeat(np.arange(n_sub), per)
    plan = split_leave_subject_out(subjects, held, seed)
    allidx = np.concatenate([plan.train, plan.validation, plan.test])
    assert sorted(allidx.tolist()) == list(range(len(subjects)))
    assert not np.any(subjects[plan.train] == held) and not np.any(subjects[plan.validation] == held)


def test_split_errors():
    subjects = np.array([0, 0, 0, 1])
    with pytest.raises(ValueError):
        split_leave_subject_out(subjects, 7, 0)
    with pytest.raises(ValueError):
        split_leave_subject_out(subjects, 0, 0)
