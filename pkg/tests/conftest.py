import numpy as np
import pytest

from rmabkit import fixed_point, model


@pytest.fixture(scope="session")
def yan_arm():
    return model.counterexample_instance("yan", 1)


@pytest.fixture(scope="session")
def yan_fp(yan_arm):
    return fixed_point.solve_fixed_point(yan_arm)


@pytest.fixture(scope="session")
def hong_arm():
    return model.counterexample_instance("hong", 1)


def single_state_instance(alpha=1.0):
    """One arm, one state, reward 1 for pulling."""
    return model.make_instance(
        [(np.ones((2, 1, 1)), np.array([[0.0], [1.0]]))], alpha=alpha
    )


def random_lp(rng, n=8, m_eq=2, m_ineq=4):
    """A bounded feasible random LP in maximize form.

    Feasibility by construction: rhs evaluated at a random nonnegative point;
    boundedness via an extra simplex-style row capping the variables.
    """
    import scipy.sparse as sp

    from rmabkit import lp_core

    x0 = rng.uniform(0.0, 1.0, size=n)
    A_eq = rng.normal(size=(m_eq, n)) if m_eq else None
    b_eq = A_eq @ x0 if m_eq else None
    A_ineq = rng.normal(size=(m_ineq, n))
    b_ineq = A_ineq @ x0 + rng.uniform(0.1, 1.0, size=m_ineq)
    A_ineq = np.vstack([A_ineq, np.ones(n)])
    b_ineq = np.concatenate([b_ineq, [x0.sum() + rng.uniform(1.0, 3.0)]])
    c = rng.normal(size=n)
    return lp_core.LpProblem(c=c, A_eq=A_eq, b_eq=b_eq,
                             A_ineq=sp.csr_matrix(A_ineq), b_ineq=b_ineq)
