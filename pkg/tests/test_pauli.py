import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hamlearn.models import chain_terms, transverse_chain
from hamlearn.pauli import (
    HamiltonianModel,
    PauliError,
    PauliString,
    StabilizerProductState,
    commutator,
    dual_degree,
    format_hamiltonian,
    parse_hamiltonian,
    pauli_mul,
    stabilizer_expect,
)

from strategies import pauli_pairs, pauli_strings

P = PauliString


@pytest.mark.parametrize(
    "p, q, phase, r",
    [("X", "X", 1, "I"), ("X", "Y", 1j, "Z"), ("XZ", "ZX", 1, "YY"), ("Y", "X", -1j, "Z")],
)
def test_pauli_mul_table(p, q, phase, r):
    out = pauli_mul(P(p), P(q))
    assert out.coefficient == phase
    assert out.string == P(r)


def test_commutator_examples():
    c = commutator(P("X"), P("Y"))
    assert (c.coefficient, c.string) == (2j, P("Z"))
    assert commutator(P("Z"), P("Z")).is_zero
    c = commutator(P("ZZ"), P("XI"))
    assert (c.coefficient, c.string) == (2j, P("YZ"))


def test_mismatched_lengths_rejected():
    with pytest.raises(PauliError):
        pauli_mul(P("X"), P("XX"))
    with pytest.raises(PauliError):
        commutator(P("XI"), P("Z"))
    with pytest.raises(PauliError):
        stabilizer_expect(P("ZZ"), StabilizerProductState.zeros(3))


def test_invalid_letters():
    with pytest.raises(PauliError):
        P("XQ")
    with pytest.raises(PauliError):
        P("")


def test_dual_degree_examples():
    assert dual_degree(HamiltonianModel.from_strings(["Z"])) == 0
    chain4 = HamiltonianModel(tuple(chain_terms(4)))
    assert dual_degree(chain4) == 4
    assert dual_degree(HamiltonianModel.from_strings(["XII", "IYI", "IIZ"])) == 0
    assert transverse_chain(3).dual_degree == 3


def test_dual_degree_achieved_by_middle_coupling():
    h = HamiltonianModel(tuple(chain_terms(4)))
    supports = [t.support for t in h.terms]
    a = h.index("IZZI")
    assert sum(1 for b, s in enumerate(supports) if b != a and s & supports[a]) == 4


@pytest.mark.parametrize(
    "r, state, value",
    [("ZZ", "+Z +Z", 1), ("Y", "+Z", 0), ("ZX", "+Z -X", -1), ("IX", "-Y +X", 1), ("XI", "+Z +Z", 0)],
)
def test_stabilizer_expect_examples(r, state, value):
    assert stabilizer_expect(P(r), StabilizerProductState.parse(state)) == value


def test_model_invariants():
    with pytest.raises(PauliError):
        HamiltonianModel.from_strings(["II", "ZZ"])
    with pytest.raises(PauliError):
        HamiltonianModel.from_strings(["ZZ", "ZZ"])
    with pytest.raises(PauliError):
        HamiltonianModel.from_strings(["Z"], [1.5])
    with pytest.raises(PauliError):
        HamiltonianModel.from_strings(["Z", "XX"])
    with pytest.raises(PauliError):
        HamiltonianModel.from_strings(["Z", "X"], [0.1])


def test_canonical_order_carries_params():
    h = HamiltonianModel.from_strings(["ZZI", "IZZ", "XII", "IXI", "IIX"], [0.1, 0.2, 0.3, 0.4, 0.5])
    assert [str(t) for t in h.terms] == ["IIX", "IXI", "IZZ", "XII", "ZZI"]
    assert h.params == (0.5, 0.4, 0.2, 0.3, 0.1)
    assert (h.n, h.n_params, h.degree) == (3, 5, 3)
    assert h.max_strength == 0.5


def test_hamiltonian_text_roundtrip():
    text = "# three-site chain\n0.30 ZZI\n-0.25 IZZ\n\n1 XII\n"
    h = parse_hamiltonian(text)
    assert parse_hamiltonian(format_hamiltonian(h)) == h
    assert h.params[h.index("ZZI")] == 0.30
    with pytest.raises(PauliError):
        parse_hamiltonian("0.3 ZZ extra")
    with pytest.raises(PauliError):
        parse_hamiltonian("abc ZZ")


@given(pauli_pairs())
def test_group_closure_exact(pq):
    p, q = pq
    out = pauli_mul(p, q)
    assert np.array_equal(p.to_matrix() @ q.to_matrix(), out.coefficient * out.string.to_matrix())


@given(pauli_pairs())
def test_commutator_antisymmetric(pq):
    p, q = pq
    a, b = commutator(p, q), commutator(q, p)
    assert a.coefficient == -b.coefficient
    if not a.is_zero:
        assert a.string == b.string
    dense = p.to_matrix() @ q.to_matrix() - q.to_matrix() @ p.to_matrix()
    assert np.array_equal(a.to_matrix(), dense)


@given(pauli_pairs(n_max=3, count=3))
def test_jacobi_identity(pqr):
    p, q, r = (x.to_matrix() for x in pqr)

    def br(a, b):
        return a @ b - b @ a

    total = br(p, br(q, r)) + br(q, br(r, p)) + br(r, br(p, q))
    assert np.max(np.abs(total)) <= 1e-12


@given(
    st.integers(1, 4).flatmap(
        lambda n: st.tuples(
            st.text("IXYZ", min_size=n, max_size=n),
            st.lists(st.tuples(st.sampled_from([1, -1]), st.sampled_from("XYZ")), min_size=n, max_size=n),
        )
    )
)
def test_stabilizer_expect_matches_dense(args):
    letters, stabs = args
    r, state = P(letters), StabilizerProductState(tuple(stabs))
    psi = state.to_vector()
    dense = np.vdot(psi, r.to_matrix() @ psi)
    assert abs(dense - stabilizer_expect(r, state)) <= 1e-12


@given(pauli_strings(), st.randoms(use_true_random=False))
def test_apply_matches_matrix(p, rnd):
    psi = np.array([complex(rnd.gauss(0, 1), rnd.gauss(0, 1)) for _ in range(1 << p.n)])
    assert np.allclose(p.apply(psi), p.to_matrix() @ psi, atol=1e-14)


@given(
    st.integers(2, 5).flatmap(
        lambda n: st.tuples(
            st.lists(st.text("IXYZ", min_size=n, max_size=n).filter(lambda s: set(s) != {"I"}), min_size=1, max_size=6, unique=True),
            st.permutations(range(n)),
        )
    )
)
def test_dual_degree_relabel_invariant(args):
    terms, perm = args
    h = HamiltonianModel.from_strings(terms)
    relabeled = ["".join(t[perm[q]] for q in range(len(t))) for t in terms]
    assert dual_degree(HamiltonianModel.from_strings(relabeled)) == dual_degree(h)
