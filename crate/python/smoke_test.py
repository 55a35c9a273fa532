"""Smoke test of the Python bindings.

Build and install first:
    maturin build --release -m crates/fpsi-py/Cargo.toml -o dist
    pip install dist/fpsi_py-*.whl
then run with pytest or plain python.
"""

import fpsi_py

SMALL = """
nx = 2
ny = 2
dt = 0.05
T = 0.2
delta = 0.2
"""


def test_config_round_trip():
    cfg = fpsi_py.Config(SMALL)
    assert (cfg.nx, cfg.ny, cfg.dt, cfg.t_end, cfg.delta) == (2, 2, 0.05, 0.2, 0.2)
    again = fpsi_py.Config(cfg.serialize())
    assert again.serialize() == cfg.serialize()
    assert cfg.params()["mu_v"] == 0.1


def test_config_errors():
    for bad, needle in [(SMALL + "mu_v = -1\n", "μ_v, λ_v ≥ 0"), (SMALL.replace("delta = 0.2", "delta = 2.0"), "δ < min(L,R)")]:
        try:
            fpsi_py.Config(bad)
        except fpsi_py.ConfigError as e:
            assert needle in str(e), str(e)
        else:
            raise AssertionError("accepted " + bad)


def test_smooth_run_dissipates():
    res = fpsi_py.run(fpsi_py.Config(SMALL))
    assert res.termination == "ok"
    assert len(res.ledger) == 4
    assert res.energy_bound_holds
    assert 0.0 < res.final_energy < res.initial_energy
    assert res.ledger_csv().splitlines()[0] == "n,t,E_half,E_full,D,res_eq1,res_eq2,min_det,min_gap_R,verdict"


def test_plate_drop_terminates():
    cfg = fpsi_py.Config(SMALL).with_value("initial", "plate_drop").with_value("initial_speed", "100").with_value("dt", "0.001")
    res = fpsi_py.run(cfg)
    assert res.termination == "plate_touches_boundary"
    assert res.termination in fpsi_py.VERDICTS


def test_reference_and_rates():
    assert fpsi_py.check_reference("separable", points=20, seed=1)["max"] <= 1e-8
    rates = fpsi_py.mollifier_rates([0.2, 0.1, 0.05])
    assert rates["order_h1"] > 1.4


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_"):
            fn()
            print("ok", name)
