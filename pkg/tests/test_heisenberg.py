import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hamlearn.heisenberg import (
    export_traces,
    fault_bound_check,
    hhkt_learn,
    make_schedule,
    round_succeeded,
)
from hamlearn.models import transverse_chain
from hamlearn.oracle import OracleHandle
from hamlearn.pauli import HamiltonianModel

CHAIN_U = [0.3, -0.7, 0.5, 0.9, -0.2]


def z_oracle(u=0.3, seed=0):
    return OracleHandle(HamiltonianModel.from_strings(["Z"], [u]), seed=seed)


def test_schedule_examples():
    assert make_schedule(0.01).D == 7
    assert make_schedule(0.5).D == 1
    s = make_schedule(0.125, 1 / 24)
    assert s.D == 3
    assert s.delta(1) == pytest.approx(1 / 1536, rel=1e-15)
    for bad in (0.0, 1.0, 1.5):
        with pytest.raises(ValueError):
            make_schedule(bad)
    for bad_c in (0.0, 0.05):
        with pytest.raises(ValueError):
            make_schedule(0.1, bad_c)


@given(st.floats(1e-6, 0.999), st.floats(1e-4, 1 / 24))
def test_schedule_invariants(eps, c):
    s = make_schedule(eps, c)
    assert s.D >= 0 and 2.0**-s.D <= eps
    assert s.D == 0 or 2.0 ** -(s.D - 1) > eps
    assert s.deltas[s.D] == c
    for d in range(s.D):
        assert s.deltas[d] == pytest.approx(s.deltas[d + 1] / 8, rel=1e-15)


def test_single_qubit_learning():
    eps = 2.0**-6
    errs = []
    for seed in range(20):
        res = hhkt_learn(z_oracle(0.3, seed), eps)
        errs.append(abs(res.u_tilde[0] - 0.3))
        rep = fault_bound_check(res.traces, [0.3])
        if rep.first_failure is None:
            assert errs[-1] <= eps
            assert rep.round_bound_violations == ()
    assert math.sqrt(np.mean(np.square(errs))) <= eps


def test_zero_parameters():
    eps = 2.0**-5
    res = hhkt_learn(OracleHandle(transverse_chain(3, [0.0] * 5), seed=4), eps)
    assert np.max(np.abs(res.u_tilde)) <= eps


def test_chain_learning_traces():
    eps = 2.0**-4
    o = OracleHandle(transverse_chain(3, CHAIN_U), seed=2)
    res = hhkt_learn(o, eps)
    u = np.array(transverse_chain(3, CHAIN_U).params)
    assert np.max(np.abs(res.u_tilde - u)) <= eps
    assert len(res.traces) == res.schedule.D + 1
    assert res.control_settings == res.schedule.D + 1
    rep = fault_bound_check(res.traces, u)
    assert rep.bucket == "success" and rep.within_bound
    for tr in res.traces:
        assert round_succeeded(tr, u)
        assert np.max(np.abs(tr.u_tilde - u)) <= tr.scale
    # ledger bookkeeping per round
    assert res.traces[0].ledger_before == 0
    for a, b in zip(res.traces, res.traces[1:]):
        assert a.ledger_after == b.ledger_before
    assert res.traces[-1].ledger_after == o.total_time()


def test_tuple_unpacking():
    u, traces = hhkt_learn(z_oracle(), 0.25)
    assert u.shape == (1,) and len(traces) == 3


def test_corrupted_round_bound():
    u = np.array(transverse_chain(3, CHAIN_U).params)
    for seed in range(3):
        res = hhkt_learn(OracleHandle(transverse_chain(3, CHAIN_U), seed=seed), 2.0**-4, override={2: np.zeros(5)})
        assert np.max(np.abs(res.u_tilde - u)) <= 0.75
        rep = fault_bound_check(res.traces, u)
        assert rep.within_bound


def test_first_round_failure_bound_is_three():
    u = np.array([0.9])
    res = hhkt_learn(z_oracle(0.9), 0.25, override={0: [-1.0]})
    rep = fault_bound_check(res.traces, u)
    assert rep.first_failure == 0 and rep.bound == 3.0 and rep.bucket == "fail@0"
    assert rep.within_bound


def test_clamp_modes():
    res = hhkt_learn(z_oracle(), 0.25, override={0: [1.7], 1: [-0.2], 2: [0.1]})
    assert res.traces[0].g.tolist() == [1.0] and res.traces[0].clamped
    res = hhkt_learn(z_oracle(), 0.25, clamp="zero", override={0: [1.7], 1: [-0.2], 2: [0.1]})
    assert res.traces[0].g.tolist() == [0.0] and res.traces[0].clamped
    with pytest.raises(ValueError):
        hhkt_learn(z_oracle(), 0.25, clamp="nope")


def test_warm_start():
    res = hhkt_learn(z_oracle(), 0.25, u0=[0.25], override={0: [0.0], 1: [0.0], 2: [0.0]})
    assert res.u_tilde.tolist() == [0.25]


def test_trace_export(tmp_path):
    res = hhkt_learn(z_oracle(), 0.25)
    path = tmp_path / "traces.jsonl"
    export_traces(res.traces, path)
    recs = [json.loads(x) for x in path.read_text().splitlines()]
    assert [r["d"] for r in recs] == [0, 1, 2]
    assert set(recs[0]) == {"d", "delta_d", "ledger_before", "ledger_after", "clamped", "g_norm_inf"}


_g = st.lists(st.floats(-3, 3, allow_subnormal=False), min_size=2, max_size=2)


@given(st.integers(1, 8).flatmap(lambda D: st.lists(_g, min_size=D + 1, max_size=D + 1)), st.sampled_from(["clip", "zero"]))
def test_recursion_and_clamp_bound(gs, mode):
    eps = 2.0 ** -(len(gs) - 1)
    o = OracleHandle(HamiltonianModel.from_strings(["Z", "X"], [0.0, 0.0]), seed=0)
    res = hhkt_learn(o, eps, clamp=mode, override=dict(enumerate(gs)))
    assert len(res.traces) == len(gs)
    for tr in res.traces:
        acc = tr.u_tilde.copy()
        for later in res.traces[tr.d :]:
            acc = acc + np.ldexp(later.g, -later.d)
        assert np.array_equal(acc, res.u_tilde)
        assert np.max(np.abs(res.u_tilde - tr.u_tilde)) <= 2.0 ** (-tr.d + 1)
        assert np.max(np.abs(tr.g)) <= 1
    assert o.total_time() == 0
