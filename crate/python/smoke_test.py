"""Smoke test of the Python bindings: run the shipped scenarios, validate
the built-in model and drive a single relay."""

import sys

import hysteresis_rd as hrd


def main() -> int:
    model = hrd.Model.bacteria()
    assert model.dims == (2, 1, 1), model.dims

    summary = model.validate(sigma=0.0, samples=500)
    statuses = {c["condition"]: c["status"] for c in summary["conditions"]}
    assert statuses["thresholds"] == "pass", statuses

    trace = hrd.Model.parse(
        """
[model]
name = "scalar"
k = 1
l = 1
m = 1

[diffusion]
D = [1.0]

[reaction]
f = ["0"]
g = ["0"]

[hysteresis]
gamma_alpha = "1 - u1"
gamma_beta = "u1"
w_plus = ["1"]
w_minus = ["0"]
"""
    ).relay_trace([(0.0, [0.5]), (1.0, [1.5]), (2.0, [-0.5]), (3.0, [1.5])])
    assert [z for _, z, _ in trace] == [-1, 1, -1, 1], trace

    ref = hrd.Scenario.reference()
    ref.t_end = 0.1
    res = ref.run()
    assert res.status == "completed", res.status
    b = res.b
    assert all(b2 >= b1 for b1, b2 in zip(b, b[1:]))
    assert max(res.max_abs_drift) < 1e-4
    assert len(res.x) == ref.n + 1

    tan = hrd.Scenario.tangency()
    res = tan.run()
    assert res.status == "transversality_lost" and res.exit_code == 2, res
    print(f"tangency t* = {res.t_star:.4f}")

    table = hrd.Scenario.smooth().converge(3)
    print("smooth ratios", table["ratios"])
    print("ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
