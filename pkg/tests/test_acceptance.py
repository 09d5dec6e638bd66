"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
summary lines and timings.
"""

import math
import time

import numpy as np

from conftest import rng_for
from covertq.classical import (
    end_to_end_error,
    exact_warden_distribution,
    resolvability_oracle,
    sample_classical_codebook,
)
from covertq.config import DEFAULT
from covertq.divergences import (
    fidelity,
    purified_distance,
    relative_entropy,
    renyi_sandwich_power,
    sandwiched_renyi,
    trace_distance,
    von_neumann_entropy,
)
from covertq.linalg import eig_hermitian, eigvals_hermitian
from covertq.oneshot import ProtocolRates, decoding_test_bounds, resolvability_bound
from covertq.pinching import (
    distinct_eigenspaces,
    pinch_matrix,
    projector_test_values,
    tensor_power_eigencount,
)
from covertq.protocol import build_decoder, monte_carlo_verify, sample_codebook
from covertq.regions import (
    AuxiliaryPolicy,
    ClassicalProblem,
    cc_csk_region,
    classical_region_evaluate,
    csc_csk_region,
    fm_check,
    superposition_transform,
)
from covertq.sampling import (
    matched_ensemble,
    random_channel,
    random_cq,
    random_density,
    random_hermitian,
    random_problem_instance,
)
from covertq.states import CQState, DensityMatrix, ProblemInstance, QuantumChannel, apply_channel


def _report(num: int, label: str, t0: float, budget: float):
    elapsed = time.perf_counter() - t0
    print(f"\n[criterion {num:2d}] PASS  {label}  ({elapsed:.1f}s / budget {budget:.0f}s)")
    assert elapsed < budget


# ---------------------------------------------------------------------------
# Quantum Monte Carlo fixtures (criterion 3 and 10)

def fixture_generic():
    rng = rng_for(101)
    inst = random_problem_instance(rng)
    ens = matched_ensemble(rng, inst, num_labels=3, spread=0.9)
    return "generic", ens, inst, ProtocolRates(R=1.0, R_K=1.0, R_J=2.0, alpha=0.25)


def fixture_relay():
    ch = QuantumChannel([np.eye(4, dtype=complex)], in_factors=[("A", 2), ("S", 2)],
                        out_factors=[("B", 2), ("E", 2)])
    phi0 = DensityMatrix(np.eye(2, dtype=complex) / 2, [("A", 2)])
    rho_s = DensityMatrix(np.diag([0.7, 0.3]).astype(complex), [("S", 2)])
    inst = ProblemInstance(ch, phi0, rho_s)
    conds = [DensityMatrix(np.kron(np.diag([1.0, 0.0]), rho_s.matrix).astype(complex),
                           [("A", 2), ("S", 2)]),
             DensityMatrix(np.kron(np.diag([0.0, 1.0]), rho_s.matrix).astype(complex),
                           [("A", 2), ("S", 2)])]
    ens = CQState([0, 1], [0.5, 0.5], conds)
    return "relay", ens, inst, ProtocolRates(R=1.0, R_K=0.0, R_J=0.0, alpha=0.3)


def fixture_controlled_flip():
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]],
                    dtype=complex)
    ch = QuantumChannel([cnot], in_factors=[("A", 2), ("S", 2)],
                        out_factors=[("B", 2), ("E", 2)])
    phi0 = DensityMatrix(np.array([[0.6, 0.15 + 0.1j], [0.15 - 0.1j, 0.4]],
                                  dtype=complex), [("A", 2)])
    rho_s = DensityMatrix(np.diag([0.65, 0.35]).astype(complex), [("S", 2)])
    inst = ProblemInstance(ch, phi0, rho_s)
    ens = matched_ensemble(rng_for(77), inst, num_labels=4, spread=0.95)
    return "controlled-flip", ens, inst, ProtocolRates(R=1.0, R_K=0.0, R_J=1.0, alpha=0.2)


MC_FIXTURES = (fixture_generic, fixture_relay, fixture_controlled_flip)


# ---------------------------------------------------------------------------
# Classical fixtures (criteria 8 and 9)

def xor_problem(eps=0.03, q=0.25):
    w = np.zeros((2, 2, 2, 2))
    for a in range(2):
        for s in range(2):
            for b in range(2):
                pb = (1 - eps) if b == a else eps
                for e in range(2):
                    pe = (1 - q) if e == (a ^ s) else q
                    w[a, s, b, e] = pb * pe
    return ClassicalProblem([0.5, 0.5], w, x0=0)


def stacked_policy():
    p_u_s = np.zeros((2, 4))
    for s in range(2):
        for ut in range(2):
            p_u_s[s, 2 * ut + s] = 0.5
    p_a_us = np.zeros((4, 2, 2))
    for ut in range(2):
        for sp in range(2):
            for s in range(2):
                p_a_us[2 * ut + sp, s, ut ^ s] = 1.0
    return AuxiliaryPolicy(p_u_s, p_a_us)


# ---------------------------------------------------------------------------

def test_criterion_01_decoding_projector_bounds_exact():
    t0 = time.perf_counter()
    rng = rng_for(201)
    alphas = (0.1, 0.25, 0.4)
    rates = (0.0, 0.5, 1.0, 2.0)
    for i in range(200):
        d = int(rng.integers(2, 5))
        nu = int(rng.integers(2, 5))
        cq = random_cq(rng, nu, d)
        alpha = alphas[i % 3]
        total = rates[i % 4]
        pr = ProtocolRates(R=total, R_K=0.0, R_J=0.0, alpha=alpha)
        miss, alarm = projector_test_values(cq, total)
        miss_bound, alarm_bound = decoding_test_bounds(cq, pr)
        assert miss <= miss_bound + 1e-9, (i, miss, miss_bound)
        assert alarm <= alarm_bound + 1e-9, (i, alarm, alarm_bound)
    _report(1, "exact projector traces below both closed-form bounds (200 cases)",
            t0, 60.0)


def test_criterion_02_resolvability_monte_carlo():
    t0 = time.perf_counter()
    rng = rng_for(202)
    cq = random_cq(rng, 2, 2)
    rho_e = cq.average()
    conds = [c.matrix for c in cq.conditionals]
    trials = 2000
    for rate in (1.0, 2.0):
        size = int(2.0 ** rate)
        for alpha in (0.1, 0.25):
            order = 1.0 + alpha
            power = renyi_sandwich_power(rho_e, order)
            bound = resolvability_bound(cq, rate, alpha)
            vals = []
            child = np.random.SeedSequence(17).spawn(trials)
            for seq in child:
                gen = np.random.default_rng(seq)
                picks = gen.choice(2, size=size, p=cq.probs)
                tau = sum(conds[i] for i in picks) / size
                tau_dm = DensityMatrix(tau, validate=False)
                vals.append(sandwiched_renyi(tau_dm, rho_e, order,
                                             sigma_power=power).value)
            mean = math.fsum(vals) / trials
            se = math.sqrt(math.fsum((v - mean) ** 2 for v in vals)
                           / (trials - 1) / trials)
            assert mean + 3 * se <= bound, (rate, alpha, mean, se, bound)
    _report(2, "mixture divergence below the resolvability bound (4 configs x 2000)",
            t0, 120.0)


def test_criterion_03_one_shot_chain_endpoints():
    t0 = time.perf_counter()
    for make in MC_FIXTURES:
        name, ens, inst, rates = make()
        assert max(rates.sizes()) <= 4
        sim = monte_carlo_verify(ens, inst, rates, trials=200, seed=5)
        assert sim.verdicts["error_split"], name
        assert sim.verdicts["key_p2"], name
        assert sim.verdicts["message_key_p2"], name
    _report(3, "reliability split and both covertness endpoints (3 fixtures x 200)",
            t0, 300.0)


def test_criterion_04_pinching_inequality_and_eigencounts():
    t0 = time.perf_counter()
    rng = rng_for(204)
    for _ in range(500):
        d = int(rng.integers(2, 7))
        sigma = random_density(rng, d)
        rho = random_density(rng, d)
        basis = distinct_eigenspaces(sigma)
        low = eigvals_hermitian(basis.v * pinch_matrix(rho.matrix, basis)
                                - rho.matrix)[0]
        assert low >= -1e-9
    for d in (2, 3):
        for n in (1, 2, 3, 4):
            sigma = random_density(rng, d)
            assert tensor_power_eigencount(sigma, n) <= (n + 1) ** d
    _report(4, "blow-up inequality (500 pairs) and tensor-power eigencounts",
            t0, 30.0)


def test_criterion_05_divergence_correctness():
    t0 = time.perf_counter()
    rng = rng_for(205)

    # classical reduction, 100 cases per measure
    for _ in range(100):
        d = int(rng.integers(2, 5))
        p = rng.dirichlet(np.ones(d)) + 1e-3
        q = rng.dirichlet(np.ones(d)) + 1e-3
        p, q = p / p.sum(), q / q.sum()
        dp = DensityMatrix(np.diag(p).astype(complex))
        dq = DensityMatrix(np.diag(q).astype(complex))
        assert abs(trace_distance(dp, dq) - np.sum(np.abs(p - q))) <= 1e-9
        assert abs(fidelity(dp, dq) - np.sum(np.sqrt(p * q))) <= 1e-9
        assert abs(relative_entropy(dp, dq).value - np.sum(p * np.log2(p / q))) <= 1e-9
        alpha = float(rng.uniform(0.05, 0.45))
        ren = math.log2(float(np.sum(p ** (1 + alpha) * q ** (-alpha)))) / alpha
        assert abs(sandwiched_renyi(dp, dq, 1 + alpha).value - ren) <= 1e-9
        assert abs(von_neumann_entropy(dp) + np.sum(p * np.log2(p))) <= 1e-9

    # data processing, 200 cases
    for i in range(200):
        d = int(rng.integers(2, 4))
        rho = random_density(rng, d)
        sig = random_density(rng, d)
        ch = random_channel(rng, d, d)
        alpha = (0.1, 0.25, 0.4)[i % 3]
        before = sandwiched_renyi(rho, sig, 1 + alpha).value
        after = sandwiched_renyi(apply_channel(ch, rho, validate=False),
                                 apply_channel(ch, sig, validate=False),
                                 1 + alpha).value
        assert after <= before + 1e-9

    # half-order fidelity pairing on pure pairs, and the distance pairing
    for _ in range(100):
        v1 = rng.normal(size=2) + 1j * rng.normal(size=2)
        v2 = rng.normal(size=2) + 1j * rng.normal(size=2)
        v1, v2 = v1 / np.linalg.norm(v1), v2 / np.linalg.norm(v2)
        r1 = DensityMatrix(np.outer(v1, v1.conj()), validate=False)
        r2 = DensityMatrix(np.outer(v2, v2.conj()), validate=False)
        f2 = fidelity(r1, r2) ** 2
        assert abs(f2 - 2.0 ** (-sandwiched_renyi(r1, r2, 0.5).value)) <= 1e-8
        rho = random_density(rng, 3)
        sig = random_density(rng, 3)
        assert trace_distance(rho, sig) <= 2.0 * purified_distance(rho, sig) + 1e-12
    _report(5, "classical reductions, data processing, fidelity pairing",
            t0, 60.0)


def test_criterion_06_fourier_motzkin_equivalence():
    t0 = time.perf_counter()
    rng = rng_for(206)
    step = 0.02
    checked = 0
    while checked < 50:
        a = step * int(rng.integers(0, 40))
        b = step * int(rng.integers(0, 80))
        c = step * int(rng.integers(0, 40))
        assert fm_check(a, b, c, step), (a, b, c)
        checked += 1
    _report(6, "rate-system projection equals its closed form (50 triples)",
            t0, 30.0)


def test_criterion_07_region_nesting_and_superposition():
    t0 = time.perf_counter()
    rng = rng_for(207)
    for i in range(50):
        inst = random_problem_instance(rng)
        ens = matched_ensemble(rng, inst, int(rng.integers(2, 5)))
        cc = cc_csk_region(ens, inst.channel)
        csc = csc_csk_region(ens, inst.channel)
        for point in csc.boundary:
            assert cc.contains(*point, tol=1e-9), i

    for i in range(100):
        nu = int(rng.integers(2, 4))
        w = rng.dirichlet(np.ones(4), size=(2, 2)).reshape(2, 2, 2, 2)
        prob = ClassicalProblem(rng.dirichlet([2, 2]), w, x0=0)
        pol = AuxiliaryPolicy(rng.dirichlet(np.ones(nu), size=2),
                              rng.dirichlet(np.ones(2), size=(nu, 2)))
        res = superposition_transform(prob, pol)
        assert res["identity_deviation"] <= 1e-9, i
        # stacked-variable key value equals the direct conditional expression
        assert abs(res["key_capacity_value"] - res["key_capacity_direct"]) <= 1e-9, i
    _report(7, "region nesting (50) and stacking identities (100)", t0, 60.0)


def test_criterion_08_classical_resolvability_trend():
    t0 = time.perf_counter()
    q = 0.25
    p_u = np.array([0.5, 0.5])
    p_e_u = np.array([[1 - q, q], [q, 1 - q]])
    i_ue = 1.0 - (-(q * math.log2(q) + (1 - q) * math.log2(1 - q)))
    assert abs(i_ue - 0.18872) < 5e-4  # fixture leakage is about 0.2 bits
    estimates = []
    for rate in (0.25, 0.5, 1.0, 1.5, 2.0):
        res = resolvability_oracle(p_u, p_e_u, rate, n=4, mode="mc",
                                   trials=2000, seed=31)
        assert res["estimate"] <= res["bound"], rate
        estimates.append(res["estimate"])
    assert all(estimates[i] > estimates[i + 1] for i in range(len(estimates) - 1)), \
        estimates
    _report(8, "divergence strictly decreasing in rate and below the bound",
            t0, 120.0)


def test_criterion_09_classical_end_to_end():
    t0 = time.perf_counter()
    prob = xor_problem()
    pol = stacked_policy()
    p_u = prob.q_s @ pol.p_u_s
    region = classical_region_evaluate(prob, pol, "thm6")
    terms = region.meta
    bounds = {lab: b for lab, _, b in region.constraints}

    # the innocent symbol is redundant: the policy hits q0 exactly
    assert terms["covert_deviation_tv"] <= 1e-12

    # 70% of a boundary point on the sum edge; randomness 20% above the
    # warden-information proxy
    r0 = 0.25
    k0 = bounds["R+R_K"] - r0
    assert region.contains(r0, k0, tol=1e-9)
    rate_r, rate_k = 0.7 * r0, 0.7 * k0
    rate_j = 1.2 * terms["I(U;E)"]
    cfg = DEFAULT.replaced(codebook_cap=16384)

    errors = []
    for n in (6, 8, 10):
        sizes = (max(1, int(2 ** (n * rate_j))), max(1, int(2 ** (n * rate_k))),
                 max(1, int(2 ** (n * rate_r))))
        res = end_to_end_error(prob, pol, p_u, sizes, n, trials=500, seed=12,
                               receiver_csi=True, cfg=cfg)
        errors.append(res["error_rate"])
    assert errors[0] > errors[1] > errors[2], errors

    n = 6
    sizes = (max(1, int(2 ** (n * rate_j))), max(1, int(2 ** (n * rate_k))),
             max(1, int(2 ** (n * rate_r))))
    tvs = []
    for seed in range(20):
        cb = sample_classical_codebook(p_u, sizes, n, seed, cfg)
        tvs.append(exact_warden_distribution(cb, prob, pol, p_u, cfg=cfg)
                   ["tv_from_innocent"])
    mean_tv = float(np.mean(tvs))
    assert mean_tv < 0.2, mean_tv
    _report(9, f"error {errors[0]:.3f} > {errors[1]:.3f} > {errors[2]:.3f}, "
            f"exact TV {mean_tv:.3f} < 0.2", t0, 300.0)


def test_criterion_10_kernel_and_povm_integrity():
    t0 = time.perf_counter()
    rng = rng_for(210)
    for _ in range(500):
        d = int(rng.integers(2, 9))
        h = random_hermitian(rng, d)
        spec = eig_hermitian(h)
        rel = np.linalg.norm(spec.reconstruct() - h) / np.linalg.norm(h)
        assert rel < 1e-10
        v = spec.eigenvectors
        assert np.linalg.norm(v.conj().T @ v - np.eye(d)) < 1e-10
        assert np.all(np.diff(spec.eigenvalues) >= 0)

    # POVM completeness on decoders built for the Monte Carlo fixtures
    from covertq.oneshot import induced_states
    for make in MC_FIXTURES:
        name, ens, inst, rates = make()
        st = induced_states(ens, inst.channel)
        for seed in range(20):
            cb = sample_codebook(ens.probs, rates, seed=seed)
            povm = build_decoder(cb, st.cq_ub, rates)
            total = povm.fail.copy()
            labels, counts = np.unique(cb.entries, return_counts=True)
            for lab, cnt in zip(labels, counts):
                total = total + cnt * povm.elements_by_label[int(lab)]
            dev = float(np.max(np.abs(total - np.eye(total.shape[0]))))
            assert dev <= 1e-8, (name, seed, dev)
    _report(10, "eigensolver reconstruction (500) and POVM completeness (60)",
            t0, 120.0)
