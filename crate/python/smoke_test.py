"""Smoke test for the wegnerlab extension module."""

import json
import math

import wegnerlab as wl


def main():
    assert wl.free_ids_finite(1, 2, 1.0) == 0.5
    assert abs(wl.free_ids_infinite(1, math.sqrt(2.0)) - 0.75) < 1e-12
    assert abs(wl.free_ids_infinite(2, 0.0) - 0.5) < 1e-6

    a = [[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]]
    assert wl.count_below(a, 0.0) == 2
    assert [round(v, 12) for v in wl.eigenvalues(a)] == [-1.0, -1.0, 2.0]

    spec = wl.laplacian_spectrum(1, 3)
    assert [round(v, 12) for v in spec] == [-1.0, 1.0, 2.0]
    assert wl.decoupling_defect_rank(2, 4, 2) == 7

    rho = wl.Density.uniform(0.0, 1.0)
    field = rho.sample(1, 16, 7, 0)
    assert len(field) == 16 and all(0.0 <= w <= 1.0 for w in field)
    assert field == rho.sample(1, 16, 7, 0)

    energies = [-2.5 + 0.05 * k for k in range(121)]
    values, stderr = wl.empirical_ids(1, 200, rho, energies, 8, 1, workers=2)
    assert values[0] == 0.0 and values[-1] == 1.0
    assert all(x <= y for x, y in zip(values, values[1:]))
    _, dos, dos_se = wl.empirical_dos(energies, values, stderr, 0.1)
    assert all(v <= 1.0 + 3.0 * s + 1e-12 for v, s in zip(dos, dos_se))

    cert = json.loads(wl.lower_bound_certificate(1, 0.0, 1.0, 1.0, 0.1))
    assert math.isfinite(cert["log_c_delta"])
    assert all(c["k_limit"] > 0.0 for c in cert["centers"])
    assert wl.recheck_certificate(json.dumps(cert))

    try:
        wl.k_ell(1, 2, 0.5, 0.5, 0.0, 1.0, 0.3)
    except ValueError:
        pass
    else:
        raise AssertionError("delta out of range was accepted")

    positions, intensity, ks = wl.spacing_statistics(1, 400, wl.Density.uniform(0.0, 10.0), 5.0, 100.0, 4, 3)
    assert len(positions) == 4 and intensity > 0.0

    print(f"wegnerlab {wl.__version__}: smoke test passed, C_delta = {cert['c_delta']}")


if __name__ == "__main__":
    main()
