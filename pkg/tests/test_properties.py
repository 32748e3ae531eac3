import pytest

from checks import property_suite, suite_cases

CASES = suite_cases()
IDS = [c[0] for c in CASES]


@pytest.mark.parametrize("label,p,count,tol", CASES, ids=IDS)
def test_levels_match_oracle(label, p, count, tol):
    assert property_suite(label, p, count, tol)["oracle"] == 0


@pytest.mark.parametrize("label,p,count,tol", CASES, ids=IDS)
def test_riccati_residual(label, p, count, tol):
    assert property_suite(label, p, count, tol)["riccati"] == 0


@pytest.mark.parametrize("label,p,count,tol", CASES, ids=IDS)
def test_forbidden_phi_follows_riccati_sign(label, p, count, tol):
    # phi' carries the sign of kappa^2 - phi^2, which covers phi < -kappa as well.
    assert property_suite(label, p, count, tol)["monotonic"] == 0


@pytest.mark.parametrize("label,p,count,tol", CASES, ids=IDS)
def test_interleaving_in_allowed_regions(label, p, count, tol):
    assert property_suite(label, p, count, tol)["interleave_allowed"] == 0


@pytest.mark.parametrize("label,p,count,tol", CASES, ids=IDS)
def test_node_count_indexing(label, p, count, tol):
    assert property_suite(label, p, count, tol)["index"] == 0


@pytest.mark.parametrize("label,p,count,tol", CASES, ids=IDS)
def test_total_n_is_nodes_plus_one(label, p, count, tol):
    assert property_suite(label, p, count, tol)["total_n"] == 0
