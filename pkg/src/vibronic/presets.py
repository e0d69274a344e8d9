"""Scenario presets for the figure protocols and the THz design scenarios.

Every value a preset fixes is one stated for that protocol.  Values the
protocol leaves open are listed under ``required`` and must be supplied in
the user's config (the runner refuses to start otherwise).
"""

from __future__ import annotations

import copy

_COMMON = dict(gamma0=0.04, gamma_v=10.0, eta=0.3)

_FIG5_MODEL = dict(_COMMON, delta0=0.0, delta_v=4.0, g_s=20.0, g_as=20.0, n_cutoff=50)

PRESETS: dict[str, dict] = {
    "fig2b": dict(
        description="ZPL saturation: Stokes-detected rate vs ZPL Rabi frequency",
        config=dict(
            task="sweep",
            model=dict(_COMMON, n_cutoff=4),
            drives=dict(zpl=True),
            p_click=0.05,
            sweep=dict(axis="omega_zpl_rabi", start=1e-3, stop=10.0, points=41, spacing="log"),
        ),
        required=[],
    ),
    "fig2b_incoherent": dict(
        description="incoherent anti-Stokes pumping: ZPL-detected rate vs g_AS",
        config=dict(
            task="sweep",
            model=dict(_COMMON, n_cutoff=8),
            drives=dict(anti_stokes=True),
            p_click=0.05,
            sweep=dict(axis="g_as", start=0.01, stop=10.0, points=31, spacing="log"),
        ),
        required=[],
    ),
    "fig3a": dict(
        description="Stokes + strong ZPL drive, sweep of D0 = Dv",
        config=dict(
            task="sweep",
            model=dict(_COMMON, omega_zpl_rabi=4.0, n_cutoff=10),
            drives=dict(zpl=True, stokes=True),
            p_click=0.05,
            sweep=dict(axis="delta0_locked", start=-30.0, stop=30.0, points=121),
        ),
        required=["model.g_s"],
    ),
    "fig3b": dict(
        description="Stokes + weak ZPL drive, sweep of D0 = Dv",
        config=dict(
            task="sweep",
            model=dict(_COMMON, n_cutoff=10),
            drives=dict(zpl=True, stokes=True),
            p_click=0.05,
            sweep=dict(axis="delta0_locked", start=-30.0, stop=30.0, points=121),
        ),
        required=["model.g_s", "model.omega_zpl_rabi"],
    ),
    "fig3c": dict(
        description="Stokes + strong ZPL drive at D0 = 0, sweep of Dv",
        config=dict(
            task="sweep",
            model=dict(_COMMON, omega_zpl_rabi=4.0, delta0=0.0, n_cutoff=10),
            drives=dict(zpl=True, stokes=True),
            p_click=0.05,
            sweep=dict(axis="delta_v_only", start=-30.0, stop=30.0, points=121),
        ),
        required=["model.g_s"],
    ),
    "fig3d": dict(
        description="Stokes + weak ZPL drive at D0 = 0, sweep of Dv",
        config=dict(
            task="sweep",
            model=dict(_COMMON, delta0=0.0, n_cutoff=10),
            drives=dict(zpl=True, stokes=True),
            p_click=0.05,
            sweep=dict(axis="delta_v_only", start=-30.0, stop=30.0, points=121),
        ),
        required=["model.g_s", "model.omega_zpl_rabi"],
    ),
    "fig4a": dict(
        description="generalized Rabi model, fluorescence vs D0 = Dv",
        config=dict(
            task="sweep",
            model=dict(_COMMON, g_as=15.0, n_cutoff=50),
            drives=dict(stokes=True, anti_stokes=True),
            p_click=0.05,
            sweep=dict(axis="delta0_locked", start=-40.0, stop=40.0, points=81),
        ),
        required=["model.g_s"],
    ),
    "fig4b": dict(
        description="generalized Rabi model, vibrational Wigner function at D0 = Dv = 0",
        config=dict(
            task="wigner",
            model=dict(_COMMON, g_as=15.0, delta0=0.0, delta_v=0.0, n_cutoff=50),
            drives=dict(stokes=True, anti_stokes=True),
            wigner=dict(q=[-6.0, 6.0, 121], p=[-6.0, 6.0, 121]),
        ),
        required=["model.g_s"],
    ),
    "fig5": dict(
        description="symmetric Rabi model: parity telegraph along one trajectory",
        config=dict(
            task="traj",
            model=dict(_FIG5_MODEL),
            drives=dict(stokes=True, anti_stokes=True),
            trajectory=dict(n_traj=1, t_final=4.0, dt_max=0.002, record_stride=1,
                            observables=["parity", "n_vib", "n_zpl"], initial="ground"),
        ),
        required=[],
    ),
    "fig6": dict(
        description="biased Rabi model: ZPL and anti-Stokes photon-number histograms",
        config=dict(
            task="traj",
            model=dict(_FIG5_MODEL, g_as2=1.5),
            drives=dict(stokes=True, anti_stokes=True, anti_stokes2=True),
            trajectory=dict(n_traj=1000, t_final=10.0, dt_max=0.003, record_stride=50,
                            observables=["n_zpl", "n_as", "x_sigma"], initial="low_energy",
                            histograms=[dict(observable="n_zpl", bins=20),
                                        dict(observable="n_as", bins=20)]),
        ),
        required=[],
    ),
    "fig7": dict(
        description="biased Rabi model: histogram of <s + s^+>",
        config=dict(
            task="traj",
            model=dict(_FIG5_MODEL, g_as2=1.5),
            drives=dict(stokes=True, anti_stokes=True, anti_stokes2=True),
            trajectory=dict(n_traj=1000, t_final=10.0, dt_max=0.003, record_stride=50,
                            observables=["x_sigma", "n_zpl"], initial="low_energy",
                            histograms=[dict(observable="x_sigma", bins=20)]),
        ),
        required=[],
    ),
    "fig8": dict(
        description="transducer susceptibility map over g_S/gamma0 and gamma_v/gamma0",
        config=dict(
            task="design",
            model=dict(_COMMON),
            design=dict(mode="chi_map", g_over_gamma0=[0.1, 1000.0, 61],
                        gv_over_gamma0=[1.0, 1e5, 61]),
        ),
        required=[],
    ),
    "fig1": dict(
        description="multi-mode emission spectrum (mode list must be supplied)",
        config=dict(
            task="spectrum",
            model=dict(_COMMON),
            spectrum=dict(freq=[-8000.0, 8000.0, 16001]),
        ),
        required=["spectrum.modes"],
    ),
    "design_free_space": dict(
        description="free-space THz drive estimate",
        config=dict(task="design", model=dict(_COMMON),
                    design=dict(mode="scenario", scenario="free_space", p_click=0.05)),
        required=[],
    ),
    "design_patch": dict(
        description="patch-antenna near-field THz drive estimate",
        config=dict(task="design", model=dict(_COMMON),
                    design=dict(mode="scenario", scenario="patch", p_click=0.05)),
        required=[],
    ),
    "design_metamaterial": dict(
        description="metamaterial-enhanced THz drive estimate",
        config=dict(task="design", model=dict(_COMMON),
                    design=dict(mode="scenario", scenario="metamaterial", p_click=0.05)),
        required=[],
    ),
}


def preset_config(name: str) -> tuple[dict, list[str]]:
    if name not in PRESETS:
        raise KeyError(name)
    entry = PRESETS[name]
    return copy.deepcopy(entry["config"]), list(entry["required"])
