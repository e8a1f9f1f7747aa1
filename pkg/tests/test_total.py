"""Tercile bucketing, accuracy drops, and the extraneous scale factor."""

import pytest

from tigload._kernels import fill_uniform
from tigload.errors import DegenerateCalibration, EmptyBucket, TooFewTasks
from tigload.fitting import TrialRecord
from tigload.rng import derive_key
from tigload.simulate import generate_decay_trials
from tigload.total import (
    HIGH,
    LOW,
    MEDIUM,
    accuracy_drop,
    calibrate_omega,
    tercile_buckets,
    total_load,
)


def trials(*pairs):
    return [TrialRecord(tid, "a", bool(s)) for tid, s in pairs]


# ------------------------------------------------------------- bucketing

def test_three_loads_one_per_bucket():
    b = tercile_buckets([("t1", 1.0), ("t2", 2.0), ("t3", 3.0)])
    assert b.assignment == {"t1": LOW, "t2": MEDIUM, "t3": HIGH}


def test_all_ties_split_deterministically_by_id():
    loads = [(f"t{i}", 5.0) for i in range(6)]
    b = tercile_buckets(loads)
    assert b.ids_in(LOW) == ["t0", "t1"]
    assert b.ids_in(MEDIUM) == ["t2", "t3"]
    assert b.ids_in(HIGH) == ["t4", "t5"]


def test_five_hundred_loads_split_167_167_166():
    loads = [(f"t{i:03d}", float(i)) for i in range(500)]
    b = tercile_buckets(loads)
    sizes = [len(b.ids_in(name)) for name in (LOW, MEDIUM, HIGH)]
    assert sizes == [167, 167, 166]


def test_too_few_tasks():
    with pytest.raises(TooFewTasks):
        tercile_buckets([("t1", 1.0), ("t2", 2.0)])


def test_bucketing_invariant_under_affine_rescaling():
    base = [(f"t{i}", float(v)) for i, v in enumerate([9, 1, 7, 3, 5, 8, 2])]
    b1 = tercile_buckets(base)
    b2 = tercile_buckets([(tid, 4.0 * v + 11.0) for tid, v in base])
    assert b1.assignment == b2.assignment


def test_boundaries_are_cut_values():
    b = tercile_buckets([("a", 1.0), ("b", 2.0), ("c", 3.0), ("d", 4.0),
                         ("e", 5.0), ("f", 6.0)])
    assert b.boundaries == (2.0, 4.0)


# --------------------------------------------------------------- drops

def test_drop_is_low_minus_high():
    loads = [(f"t{i}", float(i)) for i in range(6)]
    b = tercile_buckets(loads)
    # low bucket 90% accurate, middle anything, high 60%
    outcome = trials(("t0", 1), ("t0", 1), ("t0", 1), ("t0", 1), ("t0", 1),
                     ("t0", 1), ("t0", 1), ("t0", 1), ("t0", 1), ("t1", 0),
                     ("t2", 1), ("t3", 0),
                     ("t4", 1), ("t4", 1), ("t4", 1), ("t5", 0), ("t5", 0))
    low = [t for t in outcome if b.assignment[t.task_id] == LOW]
    high = [t for t in outcome if b.assignment[t.task_id] == HIGH]
    expected = (sum(t.success for t in low) / len(low)
                - sum(t.success for t in high) / len(high))
    assert accuracy_drop(outcome, b) == pytest.approx(expected)
    assert expected == pytest.approx(0.9 - 0.6)


def test_identical_accuracy_gives_zero_drop():
    loads = [(f"t{i}", float(i)) for i in range(6)]
    b = tercile_buckets(loads)
    outcome = trials(*[(f"t{i}", 1) for i in range(6)])
    assert accuracy_drop(outcome, b) == 0.0


def test_empty_bucket_raises():
    loads = [(f"t{i}", float(i)) for i in range(6)]
    b = tercile_buckets(loads)
    outcome = trials(("t0", 1), ("t5", 0))  # middle bucket has no trials
    with pytest.raises(EmptyBucket):
        accuracy_drop(outcome, b)


def test_drop_grows_with_sensitivity():
    # Monte Carlo oracle: steeper decay means a larger low-to-high contrast
    loads = [(f"t{i:03d}", 30.0 * i / 299) for i in range(300)]
    b = tercile_buckets(loads)
    drops = []
    for k in (0.02, 0.08):
        outcome = generate_decay_trials(k, 0.1, loads, seed=0xD201, replications=20)
        drops.append(accuracy_drop(outcome, b))
    assert 0 < drops[0] < drops[1]


# ---------------------------------------------------------------- omega

def test_equal_drops_give_unit_omega():
    ids = [f"t{i}" for i in range(9)]
    cli = [(tid, float(i)) for i, tid in enumerate(ids)]
    cle = [(tid, float(i)) for i, tid in enumerate(ids)]
    outcome = trials(*[(tid, 1 if i < 5 else 0) for i, tid in enumerate(ids)])
    calib = calibrate_omega(outcome, cli, cle, agent_id="a")
    assert calib.omega_e == pytest.approx(1.0)
    assert calib.drop_cli == calib.drop_cle


def test_omega_is_drop_ratio():
    ids = [f"t{i}" for i in range(6)]
    cli = [(tid, float(i)) for i, tid in enumerate(ids)]
    # reversed extraneous ordering flips which tasks land in the high bucket
    cle = [(tid, float(5 - i)) for i, tid in enumerate(ids)]
    outcome = trials(("t0", 1), ("t1", 1), ("t2", 1), ("t3", 1), ("t4", 0), ("t5", 0))
    calib = calibrate_omega(outcome, cli, cle, agent_id="a")
    assert calib.drop_cli == pytest.approx(1.0)
    assert calib.drop_cle == pytest.approx(-1.0)
    assert calib.omega_e == pytest.approx(-1.0)


def test_omega_near_zero_when_only_intrinsic_matters():
    key = derive_key(0xAB, 4)
    cl_i = fill_uniform(key, 0, 500) * 20
    cl_e = fill_uniform(key, 10**6, 500) * 20
    ids = [f"t{i:03d}" for i in range(500)]
    cli = list(zip(ids, map(float, cl_i)))
    cle = list(zip(ids, map(float, cl_e)))
    outcome = generate_decay_trials(0.08, 0.1, cli, seed=derive_key(key, 1),
                                    agent_id="a", replications=5)
    calib = calibrate_omega(outcome, cli, cle, agent_id="a")
    assert abs(calib.omega_e) < 0.15


def test_degenerate_when_intrinsic_drop_not_positive():
    ids = [f"t{i}" for i in range(6)]
    cli = [(tid, float(i)) for i, tid in enumerate(ids)]
    cle = [(tid, float(i)) for i, tid in enumerate(ids)]
    outcome = trials(*[(tid, 1) for tid in ids])  # no drop anywhere
    with pytest.raises(DegenerateCalibration):
        calibrate_omega(outcome, cli, cle)


# ----------------------------------------------------------- total load

@pytest.mark.parametrize("cl_i,cl_e,omega,expected", [
    (3.0, 0.5, 1.0, 3.5),
    (3.0, 0.5, 0.0, 3.0),
    (10.0, 1.75, 0.5, 10.875),
])
def test_total_load_values(cl_i, cl_e, omega, expected):
    assert total_load(cl_i, cl_e, omega) == pytest.approx(expected)


def test_total_load_monotone_in_each_argument():
    base = total_load(4.0, 2.0, 0.7)
    assert total_load(5.0, 2.0, 0.7) > base
    assert total_load(4.0, 3.0, 0.7) > base
    assert total_load(4.0, 2.0, 0.7) >= 4.0  # never below the intrinsic part
